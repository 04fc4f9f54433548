"""Spectral property checks for harmonic generation by composition, products and squaring."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filters import harmonic_probe, squaring_probe
from .signal import Spectrum, peak_frequencies, spectrum_1d

N_SAMPLES = 1024
# 5*omega of sin(sin(.)) sits near -65 dB below the fundamental and 7*omega near -109 dB.
COMPOSITION_FLOOR_DB = -80.0
TONE_FLOOR_DB = -60.0
EVEN_ENERGY_RATIO = 1e-4


@dataclass
class ProbeResult:
    name: str
    passed: bool
    detail: str
    spectrum: Spectrum | None = None

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _angular_peaks(s: Spectrum, floor_db: float) -> list[int]:
    return [int(round(2 * np.pi * f)) for f in peak_frequencies(s, floor_db)]


def check_composition(omega: int = 8, depth: int = 2) -> ProbeResult:
    s = harmonic_probe(omega, depth, N_SAMPLES)
    peaks = _angular_peaks(s, COMPOSITION_FLOOR_DB)
    if depth == 1:
        expected = [omega]
        ok = peaks == expected
        return ProbeResult(f"composition depth=1 omega={omega}", ok, f"peaks {peaks}, expected {expected}", s)
    expected = [omega, 3 * omega, 5 * omega]
    power = s.magnitudes**2
    ang = np.rint(s.angular_frequencies).astype(int)
    fundamental = power[ang == omega].sum()
    even = power[(ang > 0) & (ang % (2 * omega) == 0)].sum()
    ratio = even / fundamental
    ok = peaks == expected and ratio < EVEN_ENERGY_RATIO
    return ProbeResult(
        f"composition depth={depth} omega={omega}",
        ok,
        f"peaks {peaks} (expected {expected}), even/fundamental energy {ratio:.2e}",
        s,
    )


def _tones(f1: float, f2: float, op) -> Spectrum:
    t = np.arange(N_SAMPLES) / N_SAMPLES
    return spectrum_1d(op(np.sin(2 * np.pi * f1 * t), np.sin(2 * np.pi * f2 * t)), 1.0 / N_SAMPLES)


def check_product(f1: int = 3, f2: int = 10) -> ProbeResult:
    s = _tones(f1, f2, np.multiply)
    peaks = peak_frequencies(s, TONE_FLOOR_DB)
    expected = [abs(f1 - f2), f1 + f2]
    ok = len(peaks) == 2 and all(abs(p - e) <= s.bin_width for p, e in zip(peaks, expected))
    return ProbeResult(f"product of tones {f1},{f2}", ok, f"peaks {peaks}, expected {expected}", s)


def check_sum(f1: int = 3, f2: int = 10) -> ProbeResult:
    s = _tones(f1, f2, np.add)
    peaks = peak_frequencies(s, TONE_FLOOR_DB)
    expected = [float(f1), float(f2)]
    ok = peaks == expected
    return ProbeResult(f"sum of tones {f1},{f2}", ok, f"peaks {peaks}, expected {expected}", s)


def check_square(omega: int = 5) -> ProbeResult:
    s = squaring_probe(omega, N_SAMPLES)
    peaks = _angular_peaks(s, TONE_FLOOR_DB)
    expected = [0, 2 * omega]
    return ProbeResult(f"square of tone omega={omega}", peaks == expected, f"peaks {peaks}, expected {expected}", s)


def run_checks(omega: int = 8, depth: int = 2) -> list[ProbeResult]:
    checks = [check_composition(omega, depth), check_product(), check_sum(), check_square()]
    if depth != 1:
        checks.insert(0, check_composition(omega, 1))
    return checks


def write_spectra(results: list[ProbeResult], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in results:
        if r.spectrum is None:
            continue
        slug = "".join(ch if ch.isalnum() else "_" for ch in r.name).strip("_")
        path = out / f"spectrum_{slug}.txt"
        r.spectrum.save(path)
        paths.append(path)
    return paths
