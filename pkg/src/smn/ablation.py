"""Ablation grid over combine mode, oscillator basis and filter depth."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .models import SmnConfig, build_model
from .signal import ImageSignal, make_grid
from .train import FitReport, TrainConfig, fit

# Frequencies for each oscillator variant; "fixed" keeps the full basis with frozen amplitudes.
OSCILLATOR_VARIANTS: dict[str, tuple[tuple[float, ...], bool]] = {
    "K=1": ((40.0,), True),
    "K=2": ((8.0, 40.0), True),
    "K=3": ((8.0, 40.0, 120.0), True),
    "fixed": ((8.0, 40.0, 120.0), False),
}
COMBINE_VARIANTS = ("smn", "smn-add")
DEPTHS = (2, 3, 4)
CANONICAL = ("smn", "K=3", 2)

# Published average PSNR (dB, Kodak) for the single-factor ablations.
PUBLISHED_DB = {
    ("smn", "K=3", 2): 41.40,
    ("smn-add", "K=3", 2): 40.25,
    ("smn", "K=3", 3): 39.63,
    ("smn", "K=3", 4): 40.76,
}
# Oscillator ablations were run at hidden width 312.
PUBLISHED_OSCILLATOR_DB = {"fixed": 35.08, "K=1": 42.87, "K=2": 43.09, "K=3": 43.68}
PUBLISHED_OSCILLATOR_HIDDEN = 312


@dataclass
class AblationCell:
    combine: str
    oscillator: str
    depth: int

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.combine, self.oscillator, self.depth)

    @property
    def label(self) -> str:
        return f"{self.combine}/{self.oscillator}/M={self.depth}"

    def config(self, hidden: int, seed: int = 0, out_dim: int = 3) -> SmnConfig:
        omegas, learnable = OSCILLATOR_VARIANTS[self.oscillator]
        mode = "multiply" if self.combine == "smn" else "add"
        return SmnConfig(
            out_dim=out_dim,
            hidden=hidden,
            k=len(omegas),
            omegas=omegas,
            amplitudes_learnable=learnable,
            num_modules=self.depth,
            combine=(mode,) * self.depth,
            seed=seed,
        )

    @property
    def varies_oscillator(self) -> bool:
        return self.oscillator != CANONICAL[1]

    def published_psnr(self) -> float | None:
        if self.key in PUBLISHED_DB:
            return PUBLISHED_DB[self.key]
        if self.combine == "smn" and self.depth == 2:
            return PUBLISHED_OSCILLATOR_DB.get(self.oscillator)
        return None


def grid_cells(combines=COMBINE_VARIANTS, oscillators=tuple(OSCILLATOR_VARIANTS), depths=DEPTHS) -> list[AblationCell]:
    for o in oscillators:
        if o not in OSCILLATOR_VARIANTS:
            raise ValueError(f"unknown oscillator variant {o!r}")
    for c in combines:
        if c not in COMBINE_VARIANTS:
            raise ValueError(f"unknown combine variant {c!r}")
    return [AblationCell(c, o, d) for c, o, d in itertools.product(combines, oscillators, depths)]


@dataclass
class CellResult:
    cell: AblationCell
    reports: list[FitReport] = field(default_factory=list)
    error: str = ""

    @property
    def mean_psnr(self) -> float:
        vals = [r.final_psnr for r in self.reports if r.status != "diverged"]
        return float(np.mean(vals)) if vals else float("nan")


def run_grid(
    image: ImageSignal,
    cells: list[AblationCell],
    train_cfg: TrainConfig,
    hidden: int,
    seeds=(0,),
    reference_width: bool = False,
    on_cell=None,
) -> list[CellResult]:
    """Fit every cell; a failing cell is recorded and the grid continues."""
    grid = make_grid(image.width, image.height)
    target = image.targets()
    results = []
    for cell in cells:
        width = PUBLISHED_OSCILLATOR_HIDDEN if reference_width and cell.varies_oscillator else hidden
        res = CellResult(cell)
        try:
            for seed in seeds:
                model = build_model(cell.config(width, seed, image.channels))
                res.reports.append(fit(model, grid.coords, target, replace(train_cfg, seed=seed)))
        except Exception as exc:  # noqa: BLE001 - recorded per cell by contract
            res.error = f"{type(exc).__name__}: {exc}"
        results.append(res)
        if on_cell is not None:
            on_cell(res)
    return results


def summary_rows(results: list[CellResult]) -> list[dict]:
    by_key = {r.cell.key: r for r in results}
    canon = by_key.get(CANONICAL)
    base = canon.mean_psnr if canon else float("nan")
    rows = []
    for r in results:
        ref = r.cell.published_psnr()
        if r.cell.varies_oscillator:
            published_canon = PUBLISHED_OSCILLATOR_DB[CANONICAL[1]]
        else:
            published_canon = PUBLISHED_DB[CANONICAL]
        rows.append(
            {
                "cell": r.cell.label,
                "params": r.reports[0].parameter_count if r.reports else None,
                "psnr": r.mean_psnr,
                "delta_vs_canonical": r.mean_psnr - base,
                "published_psnr": ref,
                "published_delta": None if ref is None else round(ref - published_canon, 2),
                "error": r.error,
            }
        )
    return rows


def format_table(rows: list[dict]) -> str:
    head = f"{'cell':<26}{'params':>9}{'PSNR':>9}{'delta':>9}{'publ.':>9}{'p.delta':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        publ = "" if r["published_psnr"] is None else f"{r['published_psnr']:.2f}"
        pdelta = "" if r["published_delta"] is None else f"{r['published_delta']:+.2f}"
        params = "" if r["params"] is None else str(r["params"])
        line = f"{r['cell']:<26}{params:>9}{r['psnr']:>9.2f}{r['delta_vs_canonical']:>+9.2f}{publ:>9}{pdelta:>9}"
        if r["error"]:
            line += f"  ERROR {r['error']}"
        lines.append(line)
    return "\n".join(lines)


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2, allow_nan=True)
