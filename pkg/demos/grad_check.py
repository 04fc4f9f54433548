"""Check every model's tape gradients against central finite differences.

The Gaussian-activation MLP is the interesting case: with s0=30 its second
derivative is large, so the plain central difference at h=1e-5 carries a
truncation error near 4e-4. Richardson extrapolation removes that term and the
agreement drops below 1e-7, which points at the finite difference rather than
the tape.
"""

import numpy as np

from smn.gradcheck import check_architectures

# %%

for r in check_architectures(hidden=16):
    print(r.summary())

# %% Same check, Richardson-extrapolated.

for r in check_architectures(hidden=16, archs=["gauss"], richardson=True):
    print(r.summary())

# %% Halving h should shrink the Gaussian error about fourfold if it is truncation error.

for h in (4e-5, 2e-5, 1e-5):
    (r,) = check_architectures(hidden=16, archs=["gauss"], h=h)
    print(f"h={h:.0e}  max rel err {r.max_rel_error:.2e}")

# %% A corrupted gradient is caught and located.


def corrupt(grads):
    grads["layer2.W"][0, 0] += 1e-3
    return grads


(r,) = check_architectures(hidden=16, archs=["mlp"], tamper=corrupt)
print(r.summary())
print("analytic", r.worst.analytic, "numeric", r.worst.numeric, np.isclose(r.worst.analytic, r.worst.numeric))
