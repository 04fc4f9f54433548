"""Images, coordinate grids, PSNR and a radix-2 FFT spectral probe."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

PSNR_CAP_DB = 99.0


class ImageFormatError(ValueError):
    """The file is not an 8-bit grayscale or RGB image."""


# -- images ------------------------------------------------------------------


@dataclass
class ImageSignal:
    """Pixels in [0, 1] stored as a ``(height, width, channels)`` array.

    The underlying memory is row-major and channel-interleaved.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (height, width, 1|3) pixels, got shape {px.shape}")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        self.pixels = np.ascontiguousarray(px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def targets(self) -> np.ndarray:
        """Pixels as a ``channels x (width * height)`` grid in grid order."""
        return self.pixels.reshape(-1, self.channels).T.copy()

    @classmethod
    def from_targets(cls, values: np.ndarray, width: int, height: int) -> "ImageSignal":
        """Inverse of :meth:`targets`; values are clamped into [0, 1]."""
        values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
        return cls(values.T.reshape(height, width, -1))

    def center_crop(self, width: int, height: int) -> "ImageSignal":
        if width > self.width or height > self.height:
            raise ValueError(
                f"crop {width}x{height} larger than image {self.width}x{self.height}"
            )
        top = (self.height - height) // 2
        left = (self.width - width) // 2
        return ImageSignal(self.pixels[top : top + height, left : left + width])


def load_image(path) -> ImageSignal:
    """Read an 8-bit grayscale or RGB PNG/PPM; each value p maps to p / 255."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in ("L", "RGB"):
                raise ImageFormatError(f"{path}: unsupported mode {mode!r}; need 8-bit L or RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot read image {path}: {exc}") from exc
    return ImageSignal(arr.astype(np.float64) / 255.0)


def save_image(img: ImageSignal, path) -> None:
    """Write 8-bit PNG or PPM (by extension), rounding to the nearest level."""
    q = np.rint(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    if img.channels == 1:
        q = q[:, :, 0]
    Image.fromarray(q).save(path)


def sample_image() -> ImageSignal:
    """Bundled 256x256 natural photograph (RGB)."""
    ref = resources.files("smn") / "data" / "astronaut_256.png"
    with resources.as_file(ref) as p:
        return load_image(p)


def test_card(kind: str, width: int, height: int, channels: int = 3, period: int = 16) -> ImageSignal:
    """Procedural targets: ``gray``, ``checkerboard`` or ``grating``."""
    yy, xx = np.mgrid[0:height, 0:width]
    if kind == "gray":
        base = np.full((height, width), 0.5)
    elif kind == "checkerboard":
        base = (((xx // period) + (yy // period)) % 2).astype(np.float64) * 0.8 + 0.1
    elif kind == "grating":
        base = 0.5 + 0.4 * np.sin(2 * np.pi * xx / period) * np.cos(2 * np.pi * yy / (2 * period))
    else:
        raise ValueError(f"unknown test card {kind!r}")
    px = np.repeat(base[:, :, None], channels, axis=2)
    if channels == 3 and kind != "gray":
        px[:, :, 1] = 1.0 - px[:, :, 1]
    return ImageSignal(px)


# Pytest would otherwise collect ``test_card`` from modules importing it.
test_card.__test__ = False


# -- coordinates ----------------------------------------------------------------


@dataclass
class CoordinateGrid:
    coords: np.ndarray  # 2 x (width * height): rows are x then y
    width: int
    height: int


def make_grid(width: int, height: int) -> CoordinateGrid:
    """Pixel-center coordinates in [-1, 1]^2, corners at exactly +-1.

    Column ``j`` of the result is pixel ``j`` in row-major order.
    """
    if width < 2 or height < 2:
        raise ValueError(f"grid needs width, height >= 2, got {width}x{height}")
    xs = np.linspace(-1.0, 1.0, width)
    ys = np.linspace(-1.0, 1.0, height)
    gx, gy = np.meshgrid(xs, ys)
    return CoordinateGrid(np.stack([gx.ravel(), gy.ravel()]), width, height)


# -- metrics ------------------------------------------------------------------


def psnr(pred, target) -> float:
    """PSNR in dB with peak 1.0 on [0, 1]-clamped values, capped at 99 dB."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"psnr: shapes {pred.shape} and {target.shape} differ")
    diff = np.clip(pred, 0.0, 1.0) - np.clip(target, 0.0, 1.0)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(1.0 / mse), PSNR_CAP_DB)


# -- spectra ------------------------------------------------------------------


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft_radix2(x) -> np.ndarray:
    """Iterative decimation-in-time FFT; length must be a power of two."""
    a = np.asarray(x, dtype=np.complex128).ravel()
    n = a.size
    if n == 0 or n & (n - 1):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {n}")
    a = a[_bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(-1, size)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * twiddle
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        size *= 2
    return a


@dataclass
class Spectrum:
    """One-sided RMS magnitude spectrum.

    Magnitudes are scaled so that ``sum(magnitudes**2)`` equals the mean
    power of the (zero-padded) signal; a tone of amplitude A reads A/sqrt(2).
    """

    frequencies: np.ndarray  # cycles per unit
    magnitudes: np.ndarray
    n_fft: int

    @property
    def angular_frequencies(self) -> np.ndarray:
        return 2 * np.pi * self.frequencies

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if self.frequencies.size > 1 else 0.0

    def magnitude_at(self, freq: float) -> float:
        k = int(np.argmin(np.abs(self.frequencies - freq)))
        return float(self.magnitudes[k])

    def to_text(self) -> str:
        lines = ["# frequency magnitude"]
        lines += [f"{f:.10g} {m:.10g}" for f, m in zip(self.frequencies, self.magnitudes)]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def spectrum_1d(samples, sample_spacing: float) -> Spectrum:
    """Magnitude spectrum of uniformly spaced real samples.

    Samples are zero-padded up to the next power of two; no window is applied.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("spectrum of an empty signal")
    n = max(2, next_pow2(x.size))
    padded = np.zeros(n)
    padded[: x.size] = x
    X = fft_radix2(padded)[: n // 2 + 1]
    mags = np.abs(X) / n
    mags[1 : n // 2] *= math.sqrt(2.0)
    freqs = np.arange(n // 2 + 1) / (n * sample_spacing)
    return Spectrum(freqs, mags, n)


def peak_frequencies(s: Spectrum, floor_db: float = -60.0) -> list[float]:
    """Local maxima within ``floor_db`` of the largest magnitude.

    Maxima closer than two bins apart are merged into the stronger one.
    """
    if floor_db >= 0:
        raise ValueError(f"floor_db must be negative, got {floor_db}")
    m = s.magnitudes
    if m.size == 0 or m.max() == 0.0:
        return []
    thresh = m.max() * 10.0 ** (floor_db / 20.0)
    left = np.concatenate([[-np.inf], m[:-1]])
    right = np.concatenate([m[1:], [-np.inf]])
    cand = np.flatnonzero((m >= left) & (m >= right) & (m >= thresh))
    kept: list[int] = []
    for k in cand:
        if kept and k - kept[-1] <= 1:
            if m[k] > m[kept[-1]]:
                kept[-1] = k
            continue
        kept.append(int(k))
    return [float(s.frequencies[k]) for k in kept]
