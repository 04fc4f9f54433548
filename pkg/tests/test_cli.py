import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from smn.cli import main, parse_crop
from smn.storage import load_checkpoint, save_config
from smn.models import SmnConfig
from smn.train import TrainConfig

SMALL = ["--image", "card:checkerboard:24x24", "--hidden", "8", "--iters", "12", "--quiet"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_writes_all_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(["fit", *SMALL, "--out", str(out)], capsys)
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert names == {
        "checkpoint.npz", "report.json", "report.txt", "metrics.jsonl",
        "reconstruction.png", "model_config.json", "train_config.json",
    }
    report = json.loads((out / "report.json").read_text())
    assert report["iterations"] == 12 and report["status"] == "completed"
    assert np.isfinite(report["final_psnr"])
    assert "final PSNR" in stdout
    records = [json.loads(line) for line in (out / "metrics.jsonl").read_text().splitlines()]
    assert [r["iter"] for r in records] == list(range(12))
    assert {"iter", "loss", "lr", "psnr"} == set(records[0])
    assert Image.open(out / "reconstruction.png").size == (24, 24)


def test_fit_comparison_rows(tmp_path, capsys):
    psnrs = {}
    for arch in ("smn", "mlp"):
        code, _, _ = run(["fit", *SMALL, "--arch", arch, "--out", str(tmp_path / arch)], capsys)
        assert code == 0
        psnrs[arch] = json.loads((tmp_path / arch / "report.json").read_text())["final_psnr"]
    assert all(np.isfinite(v) for v in psnrs.values())


def test_missing_image_leaves_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    code, _, err = run(["fit", "--image", str(tmp_path / "nope.png"), "--out", str(out)], capsys)
    assert code != 0 and "not found" in err
    assert not out.exists()


def test_bad_config_leaves_nothing(tmp_path, capsys):
    out = tmp_path / "never"
    code, _, err = run(["fit", "--image", "card:gray:8x8", "--hidden", "0", "--out", str(out)], capsys)
    assert code != 0 and "hidden" in err and not out.exists()


def test_crop_parsing(tmp_path, capsys):
    assert parse_crop("128x64") == (128, 64)
    with pytest.raises(SystemExit):
        main(["fit", "--image", "sample", "--crop", "big"])
    code, _, err = run(["fit", "--image", "card:gray:8x8", "--crop", "16x16", "--out", str(tmp_path / "x")], capsys)
    assert code != 0 and "crop" in err


def test_png_input_and_crop(tmp_path, capsys):
    arr = (np.arange(40 * 30 * 3) % 251).astype(np.uint8).reshape(30, 40, 3)
    Image.fromarray(arr).save(tmp_path / "in.png")
    out = tmp_path / "run"
    code, _, _ = run(
        ["fit", "--image", str(tmp_path / "in.png"), "--crop", "16x12", "--hidden", "6", "--iters", "3",
         "--quiet", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert Image.open(out / "reconstruction.png").size == (16, 12)


def test_config_files_and_flag_overrides(tmp_path, capsys):
    save_config(SmnConfig(hidden=6, num_modules=3), tmp_path / "m.json")
    save_config(TrainConfig(max_iters=4, lr0=0.01), tmp_path / "t.json")
    out = tmp_path / "run"
    code, _, _ = run(
        ["fit", "--image", "card:grating:16x16", "--model-config", str(tmp_path / "m.json"),
         "--train-config", str(tmp_path / "t.json"), "--combine", "add", "--iters", "6", "--seed", "3",
         "--quiet", "--out", str(out)],
        capsys,
    )
    assert code == 0
    model = json.loads((out / "model_config.json").read_text())
    train = json.loads((out / "train_config.json").read_text())
    assert model["hidden"] == 6 and model["combine"] == ["add"] * 3 and model["seed"] == 3
    assert train["max_iters"] == 6 and train["lr0"] == 0.01 and train["seed"] == 3


def test_variant_flags(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["fit", *SMALL, "--k", "2", "--fixed-amplitudes", "--modules", "1", "--out", str(out)], capsys)
    assert code == 0
    model = json.loads((out / "model_config.json").read_text())
    assert model["omegas"] == [8.0, 40.0] and not model["amplitudes_learnable"] and model["combine"] == ["multiply"]
    code, _, err = run(["fit", *SMALL, "--k", "7", "--out", str(tmp_path / "k7")], capsys)
    assert code != 0 and "--k 7" in err


def test_smn_add_arch(tmp_path, capsys):
    out = tmp_path / "run"
    assert run(["fit", *SMALL, "--arch", "smn-add", "--out", str(out)], capsys)[0] == 0
    assert json.loads((out / "model_config.json").read_text())["combine"] == ["add", "add"]


def test_param_budget_for_baselines(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["fit", *SMALL, "--arch", "mlp", "--param-budget", "21190", "--out", str(out)], capsys)
    assert code == 0
    assert json.loads((out / "model_config.json").read_text())["hidden"] == 83


def test_identical_runs_identical_metrics(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(["fit", *SMALL, "--seed", "5", "--out", str(tmp_path / name)], capsys)[0] == 0
    assert (tmp_path / "a" / "metrics.jsonl").read_bytes() == (tmp_path / "b" / "metrics.jsonl").read_bytes()


def test_eval_reproduces_final_psnr(tmp_path, capsys):
    out = tmp_path / "run"
    run(["fit", *SMALL, "--out", str(out)], capsys)
    report = json.loads((out / "report.json").read_text())
    code, stdout, _ = run(
        ["eval", "--checkpoint", str(out / "checkpoint.npz"), "--image", "card:checkerboard:24x24",
         "--out", str(tmp_path / "ev")],
        capsys,
    )
    assert code == 0 and f"PSNR {report['final_psnr']:.2f} dB" in stdout
    assert json.loads((tmp_path / "ev" / "eval.json").read_text())["psnr"] == pytest.approx(report["final_psnr"])
    assert load_checkpoint(out / "checkpoint.npz").parameter_count() == report["parameter_count"]


def test_eval_errors(tmp_path, capsys):
    code, _, err = run(["eval", "--checkpoint", str(tmp_path / "none.npz"), "--image", "card:gray:8x8"], capsys)
    assert code != 0 and "checkpoint" in err


def test_target_psnr_stops_early(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(
        ["fit", "--image", "card:gray:8x8", "--hidden", "8", "--iters", "500", "--target-psnr", "5", "--quiet",
         "--out", str(out)],
        capsys,
    )
    report = json.loads((out / "report.json").read_text())
    assert code == 0 and report["status"] == "stopped" and report["iterations"] == 1


def test_ablate(tmp_path, capsys):
    out = tmp_path / "ab"
    code, stdout, _ = run(
        ["ablate", "--image", "card:grating:12x12", "--hidden", "6", "--iters", "5", "--oscillators", "K=3",
         "--depths", "2", "3", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert "delta" in stdout and "smn-add/K=3/M=2" in stdout
    assert len(list((out / "cells").glob("*.json"))) == 4
    rows = json.loads((out / "summary.json").read_text())
    assert {r["cell"] for r in rows} == {"smn/K=3/M=2", "smn/K=3/M=3", "smn-add/K=3/M=2", "smn-add/K=3/M=3"}


def test_ablate_parallel_matches_serial(tmp_path, capsys):
    args = ["ablate", "--image", "card:grating:10x10", "--hidden", "5", "--iters", "4", "--oscillators", "fixed",
            "--depths", "2", "--combines", "smn"]
    run([*args, "--out", str(tmp_path / "s")], capsys)
    run([*args, "--jobs", "2", "--out", str(tmp_path / "p")], capsys)
    a = json.loads((tmp_path / "s" / "summary.json").read_text())
    b = json.loads((tmp_path / "p" / "summary.json").read_text())
    assert a == b


def test_probe(tmp_path, capsys):
    code, stdout, _ = run(["probe", "--out", str(tmp_path / "sp")], capsys)
    assert code == 0
    assert stdout.count("PASS") == 5 and "FAIL" not in stdout
    files = list((tmp_path / "sp").glob("spectrum_*.txt"))
    assert len(files) == 5 and np.loadtxt(files[0]).shape[1] == 2


def test_probe_depth_one(capsys):
    code, stdout, _ = run(["probe", "--depth", "1"], capsys)
    assert code == 0 and "composition depth=1" in stdout


def test_grad_check_reports_worst_array(capsys):
    code, stdout, _ = run(["grad-check", "--arch", "smn", "mlp", "--hidden", "6", "-v"], capsys)
    assert code == 0
    assert stdout.count("PASS") == 2 and "worst" in stdout and "filter.0.main.W" in stdout


def test_grad_check_negative_control(capsys):
    code, stdout, _ = run(["grad-check", "--arch", "siren", "--hidden", "6", "--perturb-gradients", "1e-3"], capsys)
    assert code == 1 and stdout.startswith("FAIL siren")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "smn", "probe", "--depth", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
