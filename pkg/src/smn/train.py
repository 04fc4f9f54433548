"""Full-batch MSE fitting with Adam and a plateau-halving learning rate."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .models import Model
from .signal import psnr
from .tensor import DimensionError, Node, Tape


class DivergenceError(FloatingPointError):
    """Loss or gradients stopped being finite."""


@dataclass
class TrainConfig:
    lr0: float = 2e-2
    max_iters: int = 5000
    patience: int = 100
    lr_factor: float = 0.5
    plateau_rel_threshold: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    eval_every: int = 50
    min_lr: float = 1e-6
    chunk_size: int = 2048  # columns per forward/backward pass; gradients are summed

    def __post_init__(self):
        bad = []
        if not 0.0 < self.lr_factor < 1.0:
            bad.append(f"lr_factor={self.lr_factor} (must be in (0, 1))")
        if self.patience < 1:
            bad.append(f"patience={self.patience} (must be >= 1)")
        if self.lr0 <= 0:
            bad.append(f"lr0={self.lr0} (must be > 0)")
        if self.max_iters < 0:
            bad.append(f"max_iters={self.max_iters} (must be >= 0)")
        if self.chunk_size < 1:
            bad.append(f"chunk_size={self.chunk_size} (must be >= 1)")
        if self.eval_every < 1:
            bad.append(f"eval_every={self.eval_every} (must be >= 1)")
        if bad:
            raise ValueError("invalid TrainConfig: " + "; ".join(bad))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown TrainConfig fields: {', '.join(unknown)}")
        return cls(**d)


def mse_loss(pred: Node, target, n: int | None = None) -> Node:
    """Mean over samples (columns) of the squared L2 residual norm.

    ``n`` overrides the sample count in the denominator, so losses of column
    chunks sum to the loss of the whole batch.
    """
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss: prediction {pred.shape} vs target {target.shape}")
    n = pred.shape[1] if n is None else n
    diff = pred.value - target
    value = np.array([[np.vdot(diff, diff) / n]])
    return pred.tape.record(value, (pred,), lambda g: (diff * (2.0 * g[0, 0] / n),))


# -- Adam -----------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls({k: np.zeros_like(p) for k, p in params.items()}, {k: np.zeros_like(p) for k, p in params.items()})


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name!r} at step {state.t + 1}")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


# -- plateau schedule ---------------------------------------------------------------


def plateau_scheduler(
    best_loss: float,
    current_loss: float,
    counter: int,
    lr: float,
    *,
    patience: int = 100,
    factor: float = 0.5,
    rel_threshold: float = 1e-4,
    min_lr: float = 1e-6,
) -> tuple[float, int, float]:
    """One step of reduce-on-plateau; returns ``(lr, counter, best_loss)``.

    A loss counts as an improvement when it beats ``best * (1 - rel_threshold)``.
    After ``patience`` consecutive non-improving steps the rate is multiplied
    by ``factor`` (floored at ``min_lr``) and the counter restarts.
    """
    if current_loss < best_loss * (1.0 - rel_threshold):
        return lr, 0, current_loss
    counter += 1
    if counter >= patience:
        return max(lr * factor, min_lr), 0, best_loss
    return lr, counter, best_loss


# -- fitting --------------------------------------------------------------------


@dataclass
class FitReport:
    losses: list[float] = field(default_factory=list)
    psnr_history: list[tuple[int, float]] = field(default_factory=list)
    lr_events: list[tuple[int, float, float]] = field(default_factory=list)
    final_loss: float = math.nan
    final_psnr: float = math.nan
    parameter_count: int = 0
    wall_seconds: float = 0.0
    seed: int = 0
    status: str = "completed"
    message: str = ""
    model_config: dict = field(default_factory=dict)
    train_config: dict = field(default_factory=dict)
    reconstruction: np.ndarray | None = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.losses)

    @property
    def best_psnr(self) -> float:
        return max((p for _, p in self.psnr_history), default=math.nan)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("reconstruction")
        d["iterations"] = self.iterations
        d["psnr_history"] = [list(x) for x in self.psnr_history]
        d["lr_events"] = [list(x) for x in self.lr_events]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


def _loss_and_grads(model, coords, target, spans):
    """Full-batch loss and gradients, accumulated over column chunks."""
    n = coords.shape[1]
    total = 0.0
    grads: dict[str, np.ndarray] = {}
    preds = []
    for a, b in spans:
        tape = Tape()
        try:
            out = model.forward(tape, coords[:, a:b])
            loss = mse_loss(out, target[:, a:b], n=n)
            total += float(loss.value[0, 0])
            preds.append(out.value)
            for name, g in tape.backward(loss).items():
                if name in grads:
                    grads[name] += g
                else:
                    grads[name] = g.copy()
        finally:
            tape.release()
    return total, grads, np.hstack(preds)


StepCallback = Callable[[int, float, float | None, float], bool | None]


def fit(
    model: Model,
    coords: np.ndarray,
    target: np.ndarray,
    cfg: TrainConfig | None = None,
    callback: StepCallback | None = None,
) -> FitReport:
    """Fit ``model`` to ``target`` (out_dim x N) at ``coords`` (in_dim x N).

    Every iteration uses all N samples. The loss is logged every iteration
    and PSNR (on [0, 1]-clamped predictions) every ``eval_every`` and at the
    last iteration. ``callback(it, loss, psnr_or_None, lr)`` runs after each
    logged iteration; returning True ends the run with status ``stopped``.

    A non-finite loss or gradient ends the run with status ``diverged``; the
    partial trajectory is kept.
    """
    cfg = cfg or TrainConfig()
    coords = np.asarray(coords, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    report = FitReport(
        parameter_count=model.parameter_count(),
        seed=cfg.seed,
        model_config=model.config.to_dict(),
        train_config=cfg.to_dict(),
    )
    params = model.params
    state = AdamState.zeros_like(params)
    lr, counter, best = cfg.lr0, 0, math.inf
    start = time.perf_counter()
    n = coords.shape[1]
    spans = [(s, min(s + cfg.chunk_size, n)) for s in range(0, n, cfg.chunk_size)]
    for it in range(cfg.max_iters):
        lval, grads, pred = _loss_and_grads(model, coords, target, spans)
        report.losses.append(lval)
        if not math.isfinite(lval):
            report.status, report.message = "diverged", f"non-finite loss at iteration {it}"
            break
        p = None
        if it % cfg.eval_every == 0 or it == cfg.max_iters - 1:
            p = psnr(pred, target)
            report.psnr_history.append((it, p))
        try:
            adam_step(params, grads, state, lr, cfg.beta1, cfg.beta2, cfg.eps)
        except DivergenceError as exc:
            report.status, report.message = "diverged", f"iteration {it}: {exc}"
            break
        new_lr, counter, best = plateau_scheduler(
            best, lval, counter, lr,
            patience=cfg.patience, factor=cfg.lr_factor,
            rel_threshold=cfg.plateau_rel_threshold, min_lr=cfg.min_lr,
        )
        if new_lr != lr:
            report.lr_events.append((it, lr, new_lr))
            lr = new_lr
        if callback is not None and callback(it, lval, p, lr):
            report.status = "stopped"
            break
    pred = None
    if report.status != "diverged":
        pred = np.hstack([model.predict(coords[:, a:b]) for a, b in spans]) if spans else None
    report.wall_seconds = time.perf_counter() - start
    if pred is not None:
        report.reconstruction = np.clip(pred, 0.0, 1.0)
        report.final_psnr = psnr(pred, target)
        diff = pred - target
        report.final_loss = float(np.vdot(diff, diff) / target.shape[1])
    return report
