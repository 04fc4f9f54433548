"""Learnable sine oscillator: an affine map followed by a mixture of sines.

For pre-activation ``v = W0 @ x + b0`` the layer emits
``sum_i a[i] * sin(omega[i] * v)`` elementwise. The frequencies are fixed;
the K amplitudes are global scalars that may be trained or frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import sincos
from .rng import Rng
from .tensor import DimensionError, Node, Tape, affine, as_grid

DEFAULT_OMEGAS = (8.0, 40.0, 120.0)


@dataclass
class OscillatorParams:
    W0: Node
    b0: Node
    amplitudes: Node  # K x 1; a constant node when frozen
    omegas: tuple[float, ...]

    def __post_init__(self):
        k = len(self.omegas)
        if k < 1:
            raise ValueError("oscillator needs at least one frequency")
        if self.amplitudes.shape != (k, 1):
            raise DimensionError(
                f"amplitudes shape {self.amplitudes.shape} does not match {k} frequencies"
            )
        if any(w <= 0 for w in self.omegas):
            raise ValueError(f"frequencies must be positive, got {self.omegas}")


def init_oscillator(rng: Rng, in_dim: int, hidden: int, k: int) -> dict[str, np.ndarray]:
    """Initial W0, b0 uniform on +-1/in_dim and amplitudes 1/k."""
    bound = 1.0 / in_dim
    return {
        "W0": rng.uniform(-bound, bound, (hidden, in_dim)),
        "b0": rng.uniform(-bound, bound, (hidden, 1)),
        "a": np.full((k, 1), 1.0 / k),
    }


def amplitude_gradients(v: np.ndarray, omegas, upstream: np.ndarray) -> np.ndarray:
    """Gradient of the loss for each amplitude: ``<sin(omega_i v), upstream>``."""
    return np.array([[np.vdot(np.sin(w * v), upstream)] for w in omegas])


def sine_mixture(v: Node, amplitudes: Node, omegas) -> Node:
    """``sum_i a[i] * sin(omega[i] * v)`` as one tape primitive."""
    omegas = tuple(float(w) for w in omegas)
    a = amplitudes.value[:, 0]
    pairs = [sincos(w * v.value) for w in omegas]
    out = a[0] * pairs[0][0]
    for ai, (s, _) in zip(a[1:], pairs[1:]):
        out += ai * s
    want_a = amplitudes.requires_grad

    def vjp(g):
        gv = None
        if v.requires_grad:
            gv = (a[0] * omegas[0]) * pairs[0][1]
            for ai, w, (_, c) in zip(a[1:], omegas[1:], pairs[1:]):
                gv += (ai * w) * c
            gv *= g
        ga = np.array([[np.vdot(s, g)] for s, _ in pairs]) if want_a else None
        return gv, ga

    return v.tape.record(out, (v, amplitudes), vjp)


def oscillator_forward(p: OscillatorParams, x: Node) -> Node:
    """Map coordinates ``in_dim x N`` to oscillator features ``hidden x N``."""
    if x.shape[0] != p.W0.shape[1]:
        raise DimensionError(
            f"oscillator: input shape {x.shape} does not match W0 shape {p.W0.shape}"
        )
    return sine_mixture(affine(p.W0, x, p.b0), p.amplitudes, p.omegas)


def bind_oscillator(tape: Tape, params: dict, omegas, learnable: bool, prefix: str = "osc.") -> OscillatorParams:
    """Put oscillator arrays on ``tape``; amplitudes become constants if frozen."""
    a = params[prefix + "a"]
    return OscillatorParams(
        W0=tape.param(params[prefix + "W0"], prefix + "W0"),
        b0=tape.param(params[prefix + "b0"], prefix + "b0"),
        amplitudes=tape.param(a, prefix + "a") if learnable else tape.const(as_grid(a)),
        omegas=tuple(float(w) for w in omegas),
    )
