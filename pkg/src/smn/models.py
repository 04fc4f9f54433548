"""SMN and baseline coordinate networks behind a single model interface."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .filters import COMBINES, FilterStackConfig, bind_filter, filter_forward, filter_parameter_count, init_filter
from .oscillator import DEFAULT_OMEGAS, bind_oscillator, init_oscillator, oscillator_forward
from .rng import Rng
from .tensor import DimensionError, Node, Tape, affine, as_grid, relu, scale, sin

ARCHS = ("smn", "mlp", "siren", "gauss")


class ConfigError(ValueError):
    """One or more configuration fields are invalid."""


class NonFiniteParameterError(FloatingPointError):
    pass


# -- configs ------------------------------------------------------------------


@dataclass
class SmnConfig:
    in_dim: int = 2
    out_dim: int = 3
    hidden: int = 256
    k: int = 3
    omegas: tuple[float, ...] = DEFAULT_OMEGAS
    amplitudes_learnable: bool = True
    num_modules: int = 2
    self_mask: bool = True
    combine: tuple[str, ...] = ()
    seed: int = 0
    arch: str = field(default="smn", init=False)

    def __post_init__(self):
        self.omegas = tuple(float(w) for w in self.omegas)
        if not self.combine:
            self.combine = ("multiply",) * self.num_modules
        self.combine = tuple(self.combine)
        bad = []
        for name in ("in_dim", "out_dim", "hidden", "k"):
            if int(getattr(self, name)) < 1:
                bad.append(f"{name}={getattr(self, name)} (must be >= 1)")
        if not 1 <= self.k <= 8:
            bad.append(f"k={self.k} (must be in 1..8)")
        if len(self.omegas) != self.k:
            bad.append(f"omegas has {len(self.omegas)} entries but k={self.k}")
        if any(w <= 0 for w in self.omegas):
            bad.append(f"omegas={self.omegas} (must be positive)")
        if self.num_modules < 0:
            bad.append(f"num_modules={self.num_modules} (must be >= 0)")
        if len(self.combine) != self.num_modules:
            bad.append(f"combine has {len(self.combine)} entries for num_modules={self.num_modules}")
        if any(c not in COMBINES for c in self.combine):
            bad.append(f"combine={self.combine} (entries must be in {COMBINES})")
        if bad:
            raise ConfigError("invalid SmnConfig: " + "; ".join(bad))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["omegas"] = list(self.omegas)
        d["combine"] = list(self.combine)
        return d


@dataclass
class BaselineConfig:
    """ReLU MLP, SIREN or Gauss network with ``layers`` hidden layers.

    ``pe_freqs > 0`` prepends a fixed positional encoding with that many
    octave-spaced frequencies per input dimension.
    """

    arch: str = "mlp"
    in_dim: int = 2
    out_dim: int = 3
    hidden: int = 256
    layers: int = 4
    omega0: float = 40.0
    s0: float = 30.0
    pe_freqs: int = 0
    seed: int = 0

    def __post_init__(self):
        bad = []
        if self.arch not in ARCHS[1:]:
            bad.append(f"arch={self.arch!r} (must be one of {ARCHS[1:]})")
        for name in ("in_dim", "out_dim", "hidden", "layers"):
            if int(getattr(self, name)) < 1:
                bad.append(f"{name}={getattr(self, name)} (must be >= 1)")
        if self.pe_freqs < 0:
            bad.append(f"pe_freqs={self.pe_freqs} (must be >= 0)")
        if self.omega0 <= 0 or self.s0 <= 0:
            bad.append("omega0 and s0 must be positive")
        if bad:
            raise ConfigError("invalid BaselineConfig: " + "; ".join(bad))

    def to_dict(self) -> dict:
        return asdict(self)


ModelConfig = SmnConfig | BaselineConfig


def config_from_dict(d: dict) -> ModelConfig:
    d = dict(d)
    arch = d.pop("arch", "smn")
    if arch == "smn":
        cls = SmnConfig
    else:
        cls = BaselineConfig
        d["arch"] = arch
    known = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {', '.join(unknown)}")
    return cls(**d)


# -- positional encoding ----------------------------------------------------------


@dataclass
class PositionalEncoding:
    B: np.ndarray  # num_freqs x in_dim, never trained

    @classmethod
    def log_spaced(cls, in_dim: int, octaves: int) -> "PositionalEncoding":
        """Axis-aligned frequencies ``2**j * pi`` for ``j < octaves`` on every input dim."""
        freqs = np.pi * 2.0 ** np.arange(octaves)
        return cls(np.kron(np.eye(in_dim), freqs[:, None]))

    @property
    def out_dim(self) -> int:
        return 2 * self.B.shape[0]


def positional_encode(pe: PositionalEncoding, coords: Node) -> Node:
    """Stack ``sin(B x)`` over ``cos(B x)``; gradients do not reach ``B``."""
    if coords.shape[0] != pe.B.shape[1]:
        raise DimensionError(f"positional encoding: B shape {pe.B.shape} vs coords shape {coords.shape}")
    proj = pe.B @ coords.value
    s, c = np.sin(proj), np.cos(proj)
    B = pe.B
    nf = B.shape[0]

    def vjp(g):
        return (B.T @ (g[:nf] * c - g[nf:] * s),)

    return coords.tape.record(np.vstack([s, c]), (coords,), vjp)


# -- activations ----------------------------------------------------------------


def siren_act(x: Node, omega0: float) -> Node:
    return sin(scale(x, omega0))


def gauss_act(x: Node, s0: float) -> Node:
    """``exp(-(s0 x)^2)`` as a single primitive."""
    v = x.value
    y = np.exp(-((s0 * v) ** 2))
    return x.tape.record(y, (x,), lambda g: (g * (-2.0 * s0 * s0) * v * y,))


# -- models ---------------------------------------------------------------------


class Model:
    """A coordinate network: ``in_dim x N`` coordinates to ``out_dim x N`` values.

    ``state`` holds every array by name; ``trainable`` lists the subset the
    optimizer updates and the parameter count includes.
    """

    kind: str = ""

    def __init__(self, config: ModelConfig, state: dict[str, np.ndarray], trainable: list[str]):
        self.config = config
        self.state = state
        self.trainable = list(trainable)

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {k: self.state[k] for k in self.trainable}

    def parameter_count(self) -> int:
        return int(sum(self.state[k].size for k in self.trainable))

    def forward(self, tape: Tape, coords) -> Node:
        self.check_finite()
        x = coords if isinstance(coords, Node) else tape.const(coords)
        return self._forward(tape, x)

    def predict(self, coords: np.ndarray) -> np.ndarray:
        tape = Tape()
        try:
            return self.forward(tape, as_grid(coords)).value
        finally:
            tape.release()

    def check_finite(self):
        for name, arr in self.state.items():
            if not np.all(np.isfinite(arr)):
                raise NonFiniteParameterError(f"non-finite values in parameter {name!r}")

    def _forward(self, tape: Tape, x: Node) -> Node:
        raise NotImplementedError

    def _head(self, tape: Tape, z: Node) -> Node:
        return affine(tape.param(self.state["head.W"], "head.W"), z, tape.param(self.state["head.b"], "head.b"))


class SMN(Model):
    kind = "smn"

    def filter_config(self) -> FilterStackConfig:
        c = self.config
        return FilterStackConfig(c.hidden, c.num_modules, c.self_mask, c.combine)

    def _forward(self, tape, x):
        c = self.config
        osc = bind_oscillator(tape, self.state, c.omegas, c.amplitudes_learnable)
        z = oscillator_forward(osc, x)
        fcfg = self.filter_config()
        seed, modules = bind_filter(tape, self.state, fcfg) if c.num_modules else (None, [])
        z = filter_forward(seed, modules, fcfg, z)
        return self._head(tape, z)


class MLP(Model):
    kind = "mlp"

    def _activation(self, x: Node, layer: int) -> Node:
        return relu(x)

    def _forward(self, tape, x):
        c = self.config
        if c.pe_freqs:
            x = positional_encode(self.encoding(), x)
        z = x
        for i in range(c.layers):
            W = tape.param(self.state[f"layer{i}.W"], f"layer{i}.W")
            b = tape.param(self.state[f"layer{i}.b"], f"layer{i}.b")
            z = self._activation(affine(W, z, b), i)
        return self._head(tape, z)

    def encoding(self) -> PositionalEncoding:
        return PositionalEncoding(self.state["pe.B"])


class Siren(MLP):
    kind = "siren"

    def _activation(self, x, layer):
        return siren_act(x, self.config.omega0)


class Gauss(MLP):
    kind = "gauss"

    def _activation(self, x, layer):
        return gauss_act(x, self.config.s0)


_CLASSES = {"smn": SMN, "mlp": MLP, "siren": Siren, "gauss": Gauss}


def _head_init(rng: Rng, hidden: int, out_dim: int, bound: float) -> dict[str, np.ndarray]:
    return {
        "head.W": rng.uniform(-bound, bound, (out_dim, hidden)),
        "head.b": rng.uniform(-bound, bound, (out_dim, 1)),
    }


def build_model(cfg: ModelConfig) -> Model:
    """Construct a model with deterministic initial parameters from ``cfg.seed``."""
    rng = Rng(cfg.seed)
    if isinstance(cfg, SmnConfig):
        state = {f"osc.{k}": v for k, v in init_oscillator(rng.fork(1), cfg.in_dim, cfg.hidden, cfg.k).items()}
        state.update({f"filter.{k}": v for k, v in init_filter(rng.fork(2), cfg.hidden, cfg.num_modules).items()})
        state.update(_head_init(rng.fork(3), cfg.hidden, cfg.out_dim, math.sqrt(6.0 / cfg.hidden)))
        trainable = [k for k in state if k != "osc.a" or cfg.amplitudes_learnable]
        return SMN(cfg, state, trainable)

    state: dict[str, np.ndarray] = {}
    in_dim = cfg.in_dim
    if cfg.pe_freqs:
        pe = PositionalEncoding.log_spaced(cfg.in_dim, cfg.pe_freqs)
        state["pe.B"] = pe.B
        in_dim = pe.out_dim
    layer_rng = rng.fork(1)
    fan_in = in_dim
    for i in range(cfg.layers):
        if cfg.arch == "siren":
            bound = 1.0 / fan_in if i == 0 else math.sqrt(6.0 / fan_in) / cfg.omega0
        else:
            bound = 1.0 / math.sqrt(fan_in)
        state[f"layer{i}.W"] = layer_rng.uniform(-bound, bound, (cfg.hidden, fan_in))
        state[f"layer{i}.b"] = layer_rng.uniform(-bound, bound, (cfg.hidden, 1))
        fan_in = cfg.hidden
    if cfg.arch == "siren":
        head_bound = math.sqrt(6.0 / cfg.hidden) / cfg.omega0
    else:
        head_bound = 1.0 / math.sqrt(cfg.hidden)
    state.update(_head_init(rng.fork(2), cfg.hidden, cfg.out_dim, head_bound))
    trainable = [k for k in state if k != "pe.B"]
    return _CLASSES[cfg.arch](cfg, state, trainable)


def expected_parameter_count(cfg: ModelConfig) -> int:
    """Closed-form trainable parameter count."""
    h, o = cfg.hidden, cfg.out_dim
    head = o * h + o
    if isinstance(cfg, SmnConfig):
        osc = h * cfg.in_dim + h + (cfg.k if cfg.amplitudes_learnable else 0)
        return osc + filter_parameter_count(h, cfg.num_modules) + head
    d = 2 * cfg.in_dim * cfg.pe_freqs if cfg.pe_freqs else cfg.in_dim
    return (d * h + h) + (cfg.layers - 1) * (h * h + h) + head


def match_width(cfg: ModelConfig, target: int) -> ModelConfig:
    """Copy of ``cfg`` whose hidden width gives the count closest to ``target``."""
    best = min(
        range(1, 4097),
        key=lambda h: (abs(expected_parameter_count(replace(cfg, hidden=h)) - target), h),
    )
    return replace(cfg, hidden=best)
