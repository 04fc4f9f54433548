"""Modulative mask filter stack and the self-mask amplifier.

Two pathways run side by side. The mask pathway is seeded once from the
oscillator output and afterwards evolves only from its own previous value;
each module perturbs the main pathway additively before its main layer and
gates it after, by multiplication (or addition, for the SMN-Add variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .rng import Rng
from .signal import Spectrum, spectrum_1d
from .tensor import DimensionError, Node, Tape, add, affine, mul, sin, square

COMBINES = ("multiply", "add")


@dataclass
class MaskSeedParams:
    W_mask: Node
    b_mask: Node


@dataclass
class FilterModuleParams:
    W_main: Node
    b_main: Node
    W_mod: Node
    b_mod: Node
    combine: str = "multiply"

    def __post_init__(self):
        if self.combine not in COMBINES:
            raise ValueError(f"combine must be one of {COMBINES}, got {self.combine!r}")


@dataclass
class FilterStackConfig:
    hidden: int
    num_modules: int = 2
    self_mask: bool = True
    combine: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.combine:
            self.combine = ("multiply",) * self.num_modules
        self.combine = tuple(self.combine)
        if len(self.combine) != self.num_modules:
            raise ValueError(
                f"combine has {len(self.combine)} entries for {self.num_modules} modules"
            )


def filter_parameter_count(hidden: int, num_modules: int) -> int:
    """Seed layer plus a main and a mod layer per module, all hidden x hidden + bias.

    An empty stack has no seed layer either.
    """
    if num_modules == 0:
        return 0
    return hidden * (hidden + 1) * (1 + 2 * num_modules)


def init_filter(rng: Rng, hidden: int, num_modules: int) -> dict[str, np.ndarray]:
    bound = math.sqrt(6.0 / hidden)
    out = {}
    if num_modules == 0:
        return out
    names = ["seed"] + [f"{i}.{path}" for i in range(num_modules) for path in ("main", "mod")]
    for name in names:
        out[f"{name}.W"] = rng.uniform(-bound, bound, (hidden, hidden))
        out[f"{name}.b"] = rng.uniform(-bound, bound, (hidden, 1))
    return out


def bind_filter(tape: Tape, params: dict, cfg: FilterStackConfig, prefix: str = "filter."):
    """Register filter arrays on ``tape``; returns ``(seed, modules)``."""
    def p(name):
        return tape.param(params[prefix + name], prefix + name)

    seed = MaskSeedParams(p("seed.W"), p("seed.b"))
    modules = [
        FilterModuleParams(p(f"{i}.main.W"), p(f"{i}.main.b"), p(f"{i}.mod.W"), p(f"{i}.mod.b"), c)
        for i, c in enumerate(cfg.combine)
    ]
    return seed, modules


def combine(z: Node, m: Node, mode: str) -> Node:
    if mode == "multiply":
        return mul(z, m)
    if mode == "add":
        return add(z, m)
    raise ValueError(f"unknown combine mode {mode!r}")


def filter_forward(
    seed: MaskSeedParams | None,
    modules: Sequence[FilterModuleParams],
    cfg: FilterStackConfig,
    z_osc: Node,
) -> Node:
    """Run the dual-pathway stack on oscillator features (hidden x N).

    With no modules the stack reduces to the optional self-mask.
    """
    if z_osc.shape[0] != cfg.hidden:
        raise DimensionError(
            f"filter: features of shape {z_osc.shape} do not match hidden={cfg.hidden}"
        )
    z = z_osc
    if modules:
        m = sin(affine(seed.W_mask, z, seed.b_mask))
        for mod in modules:
            z_hat = add(z, m)
            z = sin(affine(mod.W_main, z_hat, mod.b_main))
            m = sin(affine(mod.W_mod, m, mod.b_mod))
            z = combine(z, m, mod.combine)
    if cfg.self_mask:
        z = square(z)
    return z


def make_smn_add_variant(modules: Sequence[FilterModuleParams]) -> list[FilterModuleParams]:
    """Same parameters, additive combine in every module."""
    return [replace(m, combine="add") for m in modules]


def harmonic_probe(omega: float, depth: int, n: int = 1024) -> Spectrum:
    """Spectrum of ``sin`` composed ``depth`` times on ``sin(omega * t)``.

    ``t`` spans one period window ``[0, 2*pi)`` with ``n`` samples, so an
    integer ``omega`` lands on an exact bin and harmonics show up at
    angular frequencies ``omega, 3*omega, ...``.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    t = np.arange(n) * (2 * np.pi / n)
    y = np.sin(omega * t)
    for _ in range(depth - 1):
        y = np.sin(y)
    return spectrum_1d(y, 2 * np.pi / n)


def squaring_probe(omega: float, n: int = 1024) -> Spectrum:
    """Spectrum of ``sin(omega * t) ** 2`` over the same window as :func:`harmonic_probe`."""
    t = np.arange(n) * (2 * np.pi / n)
    return spectrum_1d(np.sin(omega * t) ** 2, 2 * np.pi / n)
