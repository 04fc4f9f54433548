import numpy as np
import pytest

from smn.rng import Rng


@pytest.fixture
def rng():
    return Rng(20240611)


@pytest.fixture
def small_batch(rng):
    """Random coordinates in [-1, 1] and RGB targets for 24 samples."""
    return rng.uniform(-1.0, 1.0, (2, 24)), rng.random((3, 24))


def max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.abs(a).max(), np.abs(b).max())
    return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)


# Acceptance checks append "N name: PASS|FAIL detail" lines here; they are
# echoed in the terminal summary so they survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0])):
            terminalreporter.write_line(line)
