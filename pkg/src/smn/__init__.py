"""Subtractive modulative networks: a sine oscillator feeding multiplicative mask filters.

The package carries its own reverse-mode differentiation (:mod:`smn.tensor`),
the SMN model and baselines (:mod:`smn.models`), a full-batch trainer
(:mod:`smn.train`) and image/spectrum utilities (:mod:`smn.signal`).
"""

from .models import BaselineConfig, SmnConfig, build_model, expected_parameter_count, match_width
from .rng import Rng
from .signal import ImageSignal, load_image, make_grid, psnr, sample_image, save_image
from .tensor import Node, Tape
from .train import FitReport, TrainConfig, fit

__all__ = [
    "BaselineConfig",
    "FitReport",
    "ImageSignal",
    "Node",
    "Rng",
    "SmnConfig",
    "Tape",
    "TrainConfig",
    "build_model",
    "expected_parameter_count",
    "fit",
    "load_image",
    "make_grid",
    "match_width",
    "psnr",
    "sample_image",
    "save_image",
]

__version__ = "0.1.0"
