import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from lozenge.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TINY = str(CONFIGS / "tiny.json")
HEX = str(CONFIGS / "hexagon_limit.json")


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def test_validate_ok(capsys):
    assert main(["validate", "--config", TINY]) == 0
    assert capsys.readouterr().out.strip() == "valid"


def test_validate_bad_order(capsys):
    assert main(["validate", "--config", str(CONFIGS / "bad_order.json")]) == 1
    assert "invalid" in capsys.readouterr().out


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{N: 2")
    assert main(["validate", "--config", str(bad)]) == 2


def test_missing_file():
    assert main(["kernel", "--config", "nope.json", "--x1", "1", "--n1", "1", "--x2", "1", "--n2", "1"]) == 2


def test_unknown_flag():
    assert main(["kernel", "--bogus"]) == 2


def test_kernel_single(capsys):
    assert main(["kernel", "--config", TINY, "--x1", "1", "--n1", "1", "--x2", "1", "--n2", "1"]) == 0
    frac, dec = capsys.readouterr().out.split()
    assert frac == "1/2" and float(dec) == 0.5


def test_kernel_out_of_range():
    assert main(["kernel", "--config", TINY, "--x1", "1", "--n1", "0", "--x2", "1", "--n2", "1"]) == 2


def test_kernel_batch(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("x1,n1,x2,n2\n1,1,1,1\n1,1,2,1\n")
    out = tmp_path / "k.csv"
    assert main(["kernel", "--config", TINY, "--points", str(pts), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["x1", "n1", "x2", "n2", "value_num", "value_den", "value_f64"]
    assert (rows[0]["value_num"], rows[0]["value_den"]) == ("1", "2")
    manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert manifest["command"] == "kernel"
    assert manifest["outputs"] == [str(out)]
    assert len(manifest["config_sha256"]) == 64


def test_kernel_shipped_points(tmp_path):
    out = tmp_path / "k.csv"
    cfg = str(CONFIGS / "hexagon16.json")
    assert main(["kernel", "--config", cfg, "--points", str(CONFIGS / "kernel_points.csv"), "--out", str(out)]) == 0
    assert len(list(csv.DictReader(out.open()))) == 4


def test_sample_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["sample", "--config", TINY, "--n", "20", "--seed", "4", "--out", str(a)]) == 0
    assert main(["sample", "--config", TINY, "--n", "20", "--seed", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(Path(str(a) + ".manifest.json").read_text())["seed"] == 4
    assert len(a.read_text().splitlines()) == 20


def test_sample_records_random_seed(tmp_path):
    out = tmp_path / "s.jsonl"
    assert main(["sample", "--config", TINY, "--out", str(out)]) == 0
    assert isinstance(json.loads(Path(str(out) + ".manifest.json").read_text())["seed"], int)


def test_sample_svg_and_render(tmp_path):
    arrays = tmp_path / "a.jsonl"
    assert main(["sample", "--config", TINY, "--n", "2", "--seed", "1", "--out", str(arrays), "--svg", str(tmp_path / "svg")]) == 0
    assert len(list((tmp_path / "svg").glob("*.svg"))) == 2
    out = tmp_path / "t.svg"
    assert main(["render", "--config", TINY, "--array", str(arrays), "--index", "1", "--out", str(out)]) == 0
    assert out.read_text().startswith("<svg")


def test_render_bad_array(tmp_path):
    arrays = tmp_path / "a.jsonl"
    arrays.write_text("[[7], [2, 0]]\n")
    assert main(["render", "--config", TINY, "--array", str(arrays)]) == 1


def test_moments_csv_and_figure(tmp_path):
    out, fig = tmp_path / "m.csv", tmp_path / "m.png"
    args = ["moments", "--limit-config", HEX, "--points", "0.1,0.5;0.3,0.5", "--N-list", "8,16", "--out", str(out), "--figure", str(fig)]
    assert main(args) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["N"] for r in rows] == ["8", "16"]
    assert "/" in rows[0]["moment"] and rows[0]["status"] == "ok"
    assert fig.stat().st_size > 1000
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_moments_frozen_point():
    assert main(["moments", "--limit-config", HEX, "--points", "0.95,0.03;0.2,0.5", "--N-list", "8"]) == 1


def test_limit_shape_point(capsys):
    assert main(["limit-shape", "--limit-config", HEX, "--point", "0.25,0.5", "--check-burgers"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["region"] == "liquid" and res["w"][1] > 0 and res["burgers_residual"] < 1e-4


def test_limit_shape_nothing_to_do():
    assert main(["limit-shape", "--limit-config", HEX]) == 2


def test_frozen_boundary_outputs(tmp_path):
    svg, table, fig = tmp_path / "fb.svg", tmp_path / "fb.csv", tmp_path / "fb.png"
    args = ["frozen-boundary", "--limit-config", HEX, "--samples", "100", "--out", str(svg), "--csv", str(table), "--figure", str(fig)]
    assert main(args) == 0
    assert "frozen-boundary" in svg.read_text()
    assert len(table.read_text().splitlines()) > 90
    assert fig.exists()


def test_default_manifest_location(tmp_path):
    assert main(["validate", "--config", TINY]) == 0
    assert (tmp_path / "lozenge-run.manifest.json").exists()


def test_verify_small_configs(tmp_path):
    out = tmp_path / "v.json"
    cfgs = [TINY, str(CONFIGS / "small_k3.json")]
    assert main(["verify", "--config", *cfgs, "--no-bulk", "--out", str(out)]) == 0
    assert {r["status"] for r in json.loads(out.read_text())} == {"pass"}


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lozenge", "validate", "--config", TINY], capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and proc.stdout.strip() == "valid"
