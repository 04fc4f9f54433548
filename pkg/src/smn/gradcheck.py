"""Reverse-mode gradients against central finite differences, per architecture."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models import BaselineConfig, Model, ModelConfig, SmnConfig, build_model
from .rng import Rng
from .tensor import Tape, finite_diff_grad
from .train import mse_loss

THRESHOLD = 1e-5


def tensor_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``max|a - n| / max(max|a|, max|n|)`` over one parameter array."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


@dataclass
class ParamCheck:
    name: str
    rel_error: float
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float


@dataclass
class GradCheckResult:
    label: str
    checks: list[ParamCheck] = field(default_factory=list)
    threshold: float = THRESHOLD

    @property
    def max_rel_error(self) -> float:
        return max((c.rel_error for c in self.checks), default=0.0)

    @property
    def worst(self) -> ParamCheck | None:
        return max(self.checks, key=lambda c: c.rel_error, default=None)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.threshold

    def summary(self) -> str:
        w = self.worst
        status = "PASS" if self.passed else "FAIL"
        where = f"worst {w.name}{list(w.worst_index)}" if w else "no parameters"
        return f"{status} {self.label}: max rel err {self.max_rel_error:.2e} ({where})"


def model_loss(model: Model, coords: np.ndarray, target: np.ndarray):
    tape = Tape()
    loss = mse_loss(model.forward(tape, coords), target)
    return tape, loss


def grad_check(
    model: Model,
    coords: np.ndarray,
    target: np.ndarray,
    h: float = 1e-5,
    label: str = "",
    tamper: Callable[[dict[str, np.ndarray]], dict[str, np.ndarray]] | None = None,
    richardson: bool = False,
) -> GradCheckResult:
    """Compare tape gradients with central differences for every trainable array.

    ``tamper`` may rewrite the analytic gradients before comparison; it is a
    hook for negative controls. With ``richardson`` the numeric gradient is
    ``(4 D(h/2) - D(h)) / 3``, which cancels the h**2 truncation term of the
    central difference ``D``.
    """
    tape, loss = model_loss(model, coords, target)
    grads = tape.backward(loss)
    tape.release()
    if tamper is not None:
        grads = tamper({k: v.copy() for k, v in grads.items()})
    result = GradCheckResult(label or model.kind)
    for name in model.trainable:
        original = model.state[name]

        def f(theta, name=name):
            model.state[name] = theta
            tape, loss = model_loss(model, coords, target)
            tape.release()
            return loss.value[0, 0]

        try:
            numeric = finite_diff_grad(f, original, h)
            if richardson:
                numeric = (4.0 * finite_diff_grad(f, original, h / 2) - numeric) / 3.0
        finally:
            model.state[name] = original
        a = grads[name]
        idx = np.unravel_index(int(np.argmax(np.abs(a - numeric))), a.shape)
        result.checks.append(
            ParamCheck(name, tensor_relative_error(a, numeric), tuple(int(i) for i in idx), float(a[idx]), float(numeric[idx]))
        )
    return result


def reference_configs(hidden: int = 16, seed: int = 0) -> dict[str, ModelConfig]:
    return {
        "smn": SmnConfig(hidden=hidden, seed=seed),
        "smn-add": SmnConfig(hidden=hidden, combine=("add", "add"), seed=seed),
        "mlp": BaselineConfig("mlp", hidden=hidden, seed=seed),
        "siren": BaselineConfig("siren", hidden=hidden, seed=seed),
        "gauss": BaselineConfig("gauss", hidden=hidden, seed=seed),
    }


def check_architectures(
    hidden: int = 16,
    seed: int = 0,
    samples: int = 32,
    h: float = 1e-5,
    archs=None,
    tamper=None,
    richardson: bool = False,
) -> list[GradCheckResult]:
    """Grad-check every reference architecture (or the named subset) on random data."""
    rng = Rng(seed).fork(0xC0FFEE)
    coords = rng.uniform(-1.0, 1.0, (2, samples))
    target = rng.random((3, samples))
    return [
        grad_check(build_model(cfg), coords, target, h=h, label=label, tamper=tamper, richardson=richardson)
        for label, cfg in reference_configs(hidden, seed).items()
        if not archs or label in archs
    ]
