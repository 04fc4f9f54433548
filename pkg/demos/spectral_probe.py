"""What nested sines and products do to a spectrum.

A sine of a sine only adds odd harmonics. Multiplying two tones moves energy
to their sum and difference, while adding them leaves the spectrum unchanged.
Squaring a tone doubles its frequency and leaves a DC offset.
"""

import numpy as np

from smn.filters import harmonic_probe, squaring_probe
from smn.probe import run_checks
from smn.signal import peak_frequencies, spectrum_1d


def show(title, s, floor=-80.0):
    peaks = peak_frequencies(s, floor)
    ang = [round(2 * np.pi * f) for f in peaks]
    print(f"{title:<28} peaks (rad/unit) {ang}")


# %% Composition depth. One layer is a pure tone; each extra layer adds 3w, 5w, ...

for depth in (1, 2, 3):
    show(f"sin composed {depth}x, w=8", harmonic_probe(8, depth))

# %% Squaring.

show("sin(5t)^2", squaring_probe(5), floor=-60.0)

# %% Product versus sum of two tones, in cycles per unit.

t = np.arange(1024) / 1024
a, b = np.sin(2 * np.pi * 3 * t), np.sin(2 * np.pi * 10 * t)
print("product peaks", peak_frequencies(spectrum_1d(a * b, 1 / 1024)))
print("sum peaks    ", peak_frequencies(spectrum_1d(a + b, 1 / 1024)))

# %% The same properties, as pass/fail checks.

for r in run_checks():
    print(r.line())
