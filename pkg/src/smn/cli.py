"""Command-line interface: fit, eval, ablate, probe and grad-check."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ablation, gradcheck, probe
from .models import ARCHS, BaselineConfig, ConfigError, ModelConfig, SmnConfig, build_model, match_width
from .oscillator import DEFAULT_OMEGAS
from .signal import ImageFormatError, ImageSignal, load_image, make_grid, psnr, sample_image, save_image, test_card
from .storage import SchemaError, load_checkpoint, load_model_config, load_train_config, save_checkpoint, save_config
from .train import FitReport, TrainConfig, fit

ARCH_CHOICES = ("smn", "smn-add") + ARCHS[1:]
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    """A user-facing failure; the message is printed and the exit code is nonzero."""


# -- argument plumbing -----------------------------------------------------------


def parse_crop(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"crop must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"crop must be positive, got {text!r}")
    return w, h


def resolve_image(spec: str, crop: tuple[int, int] | None) -> ImageSignal:
    """``sample``, ``card:<kind>[:WxH]`` or a PNG/PPM path, optionally center-cropped."""
    if spec == "sample":
        img = sample_image()
    elif spec.startswith("card:"):
        parts = spec.split(":")
        w, h = parse_crop(parts[2]) if len(parts) > 2 else (crop or (128, 128))
        try:
            img = test_card(parts[1], w, h)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        path = Path(spec)
        if not path.is_file():
            raise CliError(f"image not found: {spec}")
        try:
            img = load_image(path)
        except ImageFormatError as exc:
            raise CliError(str(exc)) from None
    if crop is not None:
        try:
            img = img.center_crop(*crop)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    return img


def omegas_for_k(k: int) -> tuple[float, ...]:
    key = f"K={k}"
    if key not in ablation.OSCILLATOR_VARIANTS:
        raise CliError(f"--k {k} has no default frequency set; give omegas in a model config")
    return ablation.OSCILLATOR_VARIANTS[key][0]


def model_config_from_args(args, out_dim: int) -> ModelConfig:
    """Start from ``--model-config`` (if any) and apply explicit flags on top."""
    try:
        base = load_model_config(args.model_config) if args.model_config else None
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load model config: {exc}") from None
    arch = args.arch or (("smn" if base.arch == "smn" else base.arch) if base else "smn")
    try:
        if arch in ("smn", "smn-add"):
            cfg = base if isinstance(base, SmnConfig) else SmnConfig(out_dim=out_dim)
            fields = {"out_dim": out_dim}
            if args.hidden is not None:
                fields["hidden"] = args.hidden
            if args.k is not None:
                fields["k"] = args.k
                fields["omegas"] = omegas_for_k(args.k)
            if args.fixed_amplitudes:
                fields["amplitudes_learnable"] = False
            depth = args.modules if args.modules is not None else cfg.num_modules
            mode = "add" if arch == "smn-add" or args.combine == "add" else None
            if args.combine == "mul":
                mode = "multiply"
            if depth != cfg.num_modules or mode:
                fields["num_modules"] = depth
                fields["combine"] = (mode or "multiply",) * depth
            if args.seed is not None:
                fields["seed"] = args.seed
            cfg = replace(cfg, **fields)
        else:
            cfg = base if isinstance(base, BaselineConfig) and base.arch == arch else BaselineConfig(arch)
            fields = {"out_dim": out_dim}
            if args.hidden is not None:
                fields["hidden"] = args.hidden
            if args.pe_freqs is not None:
                fields["pe_freqs"] = args.pe_freqs
            if args.seed is not None:
                fields["seed"] = args.seed
            cfg = replace(cfg, **fields)
            if args.param_budget:
                cfg = match_width(cfg, args.param_budget)
    except ConfigError as exc:
        raise CliError(str(exc)) from None
    return cfg


def train_config_from_args(args) -> TrainConfig:
    try:
        cfg = load_train_config(args.train_config) if args.train_config else TrainConfig()
        fields = {}
        if args.iters is not None:
            fields["max_iters"] = args.iters
        if args.lr is not None:
            fields["lr0"] = args.lr
        if args.seed is not None:
            fields["seed"] = args.seed
        return replace(cfg, **fields)
    except (OSError, ValueError) as exc:
        raise CliError(f"invalid train config: {exc}") from None


def format_report(report: FitReport) -> str:
    lines = [
        f"status          {report.status}" + (f" ({report.message})" if report.message else ""),
        f"architecture    {report.model_config.get('arch')}",
        f"parameters      {report.parameter_count}",
        f"iterations      {report.iterations}",
        f"final loss      {report.final_loss:.6e}",
        f"final PSNR      {report.final_psnr:.2f} dB",
        f"best PSNR       {report.best_psnr:.2f} dB",
        f"wall time       {report.wall_seconds:.1f} s",
        f"lr reductions   {len(report.lr_events)}",
    ]
    for it, old, new in report.lr_events:
        lines.append(f"  iter {it:>6}  {old:.3g} -> {new:.3g}")
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------------


def cmd_fit(args) -> int:
    img = resolve_image(args.image, args.crop)
    model_cfg = model_config_from_args(args, img.channels)
    train_cfg = train_config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(model_cfg, out / "model_config.json")
    save_config(train_cfg, out / "train_config.json")

    model = build_model(model_cfg)
    grid = make_grid(img.width, img.height)
    print(f"fitting {model.kind} ({model.parameter_count()} parameters) to {img.width}x{img.height}x{img.channels}")
    with open(out / "metrics.jsonl", "w") as metrics:

        def log(it, loss, p, lr):
            rec = {"iter": it, "loss": loss, "lr": lr}
            if p is not None:
                rec["psnr"] = p
                if not args.quiet:
                    print(f"iter {it:>6}  loss {loss:.4e}  psnr {p:6.2f}  lr {lr:.3g}", flush=True)
            metrics.write(json.dumps(rec) + "\n")
            return args.target_psnr is not None and p is not None and p >= args.target_psnr

        report = fit(model, grid.coords, img.targets(), train_cfg, callback=log)

    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.txt").write_text(format_report(report))
    print(format_report(report), end="")
    if report.status == "diverged":
        print(f"error: training diverged: {report.message}", file=sys.stderr)
        return EXIT_FAIL
    save_checkpoint(model, out / "checkpoint.npz")
    save_image(ImageSignal.from_targets(report.reconstruction, img.width, img.height), out / "reconstruction.png")
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        model = load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load checkpoint: {exc}") from None
    img = resolve_image(args.image, args.crop)
    if img.channels != model.config.out_dim:
        raise CliError(f"model outputs {model.config.out_dim} channels, image has {img.channels}")
    grid = make_grid(img.width, img.height)
    pred = np.hstack([model.predict(grid.coords[:, a : a + 4096]) for a in range(0, grid.coords.shape[1], 4096)])
    value = psnr(pred, img.targets())
    print(f"PSNR {value:.2f} dB ({model.kind}, {model.parameter_count()} parameters)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_image(ImageSignal.from_targets(pred, img.width, img.height), out / "reconstruction.png")
        (out / "eval.json").write_text(json.dumps({"psnr": value, "checkpoint": str(args.checkpoint)}, indent=2) + "\n")
    return EXIT_OK


def _run_cell(payload):
    img, cell, train_cfg, hidden, seeds, parity = payload
    return ablation.run_grid(img, [cell], train_cfg, hidden, seeds, parity)[0]


def cmd_ablate(args) -> int:
    img = resolve_image(args.image, args.crop)
    train_cfg = train_config_from_args(args)
    try:
        cells = ablation.grid_cells(args.combines, args.oscillators, args.depths)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    hidden = args.hidden if args.hidden is not None else 64
    seeds = tuple(range(args.seed or 0, (args.seed or 0) + args.seeds))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def announce(res):
        status = f"ERROR {res.error}" if res.error else f"{res.mean_psnr:.2f} dB"
        print(f"{res.cell.label:<26} {status}", flush=True)

    if args.jobs > 1:
        payloads = [(img, c, train_cfg, hidden, seeds, args.reference_width) for c in cells]
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_cell, payloads))
        for r in results:
            announce(r)
    else:
        results = ablation.run_grid(img, cells, train_cfg, hidden, seeds, args.reference_width, on_cell=announce)

    cells_dir = out / "cells"
    cells_dir.mkdir(exist_ok=True)
    for r in results:
        slug = r.cell.label.replace("/", "_").replace("=", "")
        for rep in r.reports:
            (cells_dir / f"{slug}_seed{rep.seed}.json").write_text(rep.to_json() + "\n")
    rows = ablation.summary_rows(results)
    table = ablation.format_table(rows)
    (out / "summary.txt").write_text(table + "\n")
    (out / "summary.json").write_text(ablation.rows_to_json(rows) + "\n")
    print(table)
    return EXIT_FAIL if any(r.error for r in results) else EXIT_OK


def cmd_probe(args) -> int:
    results = probe.run_checks(args.omega, args.depth)
    for r in results:
        print(r.line())
    if args.out:
        for p in probe.write_spectra(results, args.out):
            print(f"wrote {p}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _scale_gradients(factor: float):
    def tamper(grads):
        return {k: v * factor for k, v in grads.items()}

    return tamper


def cmd_grad_check(args) -> int:
    tamper = _scale_gradients(1.0 + args.perturb_gradients) if args.perturb_gradients else None
    seed = args.seed or 0
    results = gradcheck.check_architectures(
        args.hidden or 16, seed, args.samples, args.step, args.arch, tamper, args.richardson
    )
    for r in results:
        print(r.summary())
        if args.verbose:
            for c in r.checks:
                print(f"    {c.name:<20} {c.rel_error:.2e}  at {list(c.worst_index)}  {c.analytic:+.6e} vs {c.numeric:+.6e}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# -- parser ------------------------------------------------------------------------


def _add_model_flags(p):
    p.add_argument("--arch", choices=ARCH_CHOICES, help="architecture (default smn)")
    p.add_argument("--hidden", type=int, help="hidden width")
    p.add_argument("--modules", type=int, help="number of filter modules (SMN)")
    p.add_argument("--k", type=int, help=f"oscillator frequencies: 1, 2 or 3 (default {len(DEFAULT_OMEGAS)})")
    p.add_argument("--fixed-amplitudes", action="store_true", help="freeze oscillator amplitudes at 1/K")
    p.add_argument("--combine", choices=("mul", "add"), help="how the mask merges into the main path")
    p.add_argument("--pe-freqs", type=int, help="positional-encoding octaves for baselines")
    p.add_argument("--param-budget", type=int, help="pick a baseline width matching this parameter count")
    p.add_argument("--model-config", help="JSON model config; flags override its fields")


def _add_train_flags(p):
    p.add_argument("--iters", type=int, help="training iterations")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--train-config", help="JSON train config; flags override its fields")


def _add_image_flags(p, required=True):
    p.add_argument("--image", required=required, default="sample",
                   help="image path, 'sample' (bundled photo) or 'card:<gray|checkerboard|grating>[:WxH]'")
    p.add_argument("--crop", type=parse_crop, help="center crop WxH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smn", description="Fit and analyse coordinate networks on images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to one image")
    _add_image_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="runs/fit", help="output directory")
    p.add_argument("--target-psnr", type=float, help="stop once this PSNR is logged")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="PSNR of a checkpoint on an image")
    p.add_argument("--checkpoint", required=True)
    _add_image_flags(p)
    p.add_argument("--out", help="write the reconstruction here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the ablation grid")
    _add_image_flags(p, required=False)
    _add_train_flags(p)
    p.add_argument("--hidden", type=int, help="width for every cell (default 64)")
    p.add_argument("--seed", type=int, help="first seed")
    p.add_argument("--seeds", type=int, default=1, help="seeds per cell")
    p.add_argument("--combines", nargs="+", default=list(ablation.COMBINE_VARIANTS), choices=ablation.COMBINE_VARIANTS)
    p.add_argument("--oscillators", nargs="+", default=list(ablation.OSCILLATOR_VARIANTS),
                   choices=list(ablation.OSCILLATOR_VARIANTS))
    p.add_argument("--depths", nargs="+", type=int, default=list(ablation.DEPTHS))
    p.add_argument("--reference-width", action="store_true",
                   help=f"oscillator cells use width {ablation.PUBLISHED_OSCILLATOR_HIDDEN}")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="runs/ablate")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("probe", help="check harmonic generation with an FFT")
    p.add_argument("--omega", type=int, default=8)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--out", help="directory for two-column spectrum files")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("grad-check", help="compare reverse-mode gradients with finite differences")
    p.add_argument("--arch", nargs="+", choices=list(gradcheck.reference_configs()))
    p.add_argument("--hidden", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--step", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--richardson", action="store_true", help="extrapolate the numeric gradient from steps h and h/2")
    p.add_argument("--verbose", "-v", action="store_true", help="print every parameter array")
    # negative control: scale analytic gradients by (1 + x) before comparing
    p.add_argument("--perturb-gradients", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
