"""A tiny ablation grid: combine mode, oscillator basis and filter depth.

The full grid (24 cells, 128x128 crop) is ``smn ablate``; this version uses a
32x32 crop and 300 iterations so it finishes in a few minutes.
"""

from smn import TrainConfig, sample_image
from smn.ablation import format_table, grid_cells, run_grid, summary_rows

img = sample_image().center_crop(32, 32)
cells = grid_cells(depths=(2, 3))
print(len(cells), "cells")

results = run_grid(
    img,
    cells,
    TrainConfig(max_iters=300),
    hidden=32,
    on_cell=lambda r: print(f"  {r.cell.label:<22} {r.mean_psnr:6.2f} dB {r.error}"),
)

# %% Deltas are against multiply / K=3 / M=2. The last two columns are the published numbers.

print(format_table(summary_rows(results)))
