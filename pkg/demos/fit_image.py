"""Fit an SMN to a small photograph crop and compare it with a ReLU MLP of the same size.

Run with ``python demos/fit_image.py``. Takes a few minutes on one core.
"""

import numpy as np

from smn import (
    BaselineConfig, SmnConfig, TrainConfig, build_model, expected_parameter_count,
    fit, make_grid, match_width, sample_image, save_image,
)
from smn.signal import ImageSignal

# %% The signal: a 64x64 RGB crop, viewed as a function from (x, y) in [-1, 1]^2 to colour.

img = sample_image().center_crop(64, 64)
grid = make_grid(img.width, img.height)
target = img.targets()
print("coords", grid.coords.shape, "targets", target.shape)

# %% The network. Each hidden unit starts as a mix of sines at 8, 40 and 120 rad per unit.

smn_cfg = SmnConfig(hidden=48, seed=0)
smn = build_model(smn_cfg)
budget = smn.parameter_count()
print("SMN parameters:", budget, "(formula says", expected_parameter_count(smn_cfg), ")")

# A ReLU MLP gets whatever width brings it closest to the same budget.
mlp_cfg = match_width(BaselineConfig("mlp", seed=0), budget)
mlp = build_model(mlp_cfg)
print(f"MLP width {mlp_cfg.hidden}: {mlp.parameter_count()} parameters")

# %% Train both with the same recipe.

cfg = TrainConfig(max_iters=600, eval_every=100)


def progress(name):
    def cb(it, loss, p, lr):
        if p is not None:
            print(f"  {name} iter {it:4d}  loss {loss:.2e}  psnr {p:5.2f} dB  lr {lr:g}")
    return cb


reports = {}
for name, model in (("smn", smn), ("mlp", mlp)):
    print(name)
    reports[name] = fit(model, grid.coords, target, cfg, callback=progress(name))

for name, r in reports.items():
    print(f"{name}: final {r.final_psnr:.2f} dB, best {r.best_psnr:.2f} dB, {r.wall_seconds:.0f} s")

# %% The learned amplitudes drift away from 1/3 as the fit favours some bands.

print("amplitudes", np.round(smn.state["osc.a"].ravel(), 4))

# %% Save the reconstructions next to the crop.

for name, r in reports.items():
    save_image(ImageSignal.from_targets(r.reconstruction, img.width, img.height), f"demo_{name}.png")
save_image(img, "demo_target.png")
