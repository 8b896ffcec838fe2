import csv
import hashlib
import json
from pathlib import Path

import pytest

from levyflow.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_verify_exit_zero(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path / "v")]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "[PASS]" in out
    rows = read_rows(tmp_path / "v" / "verify_report.csv")
    assert len(rows) >= 20


def test_noise_paths_slope_column(tmp_path):
    out = tmp_path / "n"
    assert main(["noise_paths", "--config", str(CONFIGS / "stable_noise.yaml"), "--out", str(out)]) == 0
    rows = read_rows(out / "moment_curve.csv")
    slopes = {float(r["fitted_slope"]) for r in rows}
    assert len(slopes) == 1
    assert slopes.pop() == pytest.approx(2 / 3, abs=0.03)


def test_manifest_checksums(tmp_path):
    out = tmp_path / "n"
    assert main(["noise_paths", "--config", str(CONFIGS / "stable_noise.yaml"), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["experiment"] == "noise_paths" and man["status"] == 0
    listed = {f["name"] for f in man["files"]}
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == on_disk
    for f in man["files"]:
        data = (out / f["name"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == f["sha256"]
        assert len(data) == f["bytes"]


def test_reruns_are_byte_identical(tmp_path):
    cfg = tmp_path / "small.yaml"
    text = (CONFIGS / "truncated_transport.yaml").read_text()
    cfg.write_text(text.replace("horizon: 1.0", "horizon: 1.0\n  n_particles: 64"))
    args = ["transport", "--config", str(cfg), "--seed", "5"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a), "--workers", "1"]) == 0
    assert main(args + ["--out", str(b), "--workers", "3"]) == 0
    names = sorted(p.name for p in a.iterdir() if p.name != "manifest.json")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "manifest.json")
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_invalid_config_exit_two_and_no_outputs(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text((CONFIGS / "stable_transport.yaml").read_text().replace("horizon: 1.0", "horizon: 1.0\n  n_particles: 0"))
    out = tmp_path / "never"
    assert main(["transport", "--config", str(cfg), "--out", str(out)]) == 2
    assert "n_particles" in capsys.readouterr().err
    assert not out.exists()
    assert not any(p.name.startswith(".levyflow") for p in tmp_path.iterdir())


def test_missing_config(tmp_path):
    assert main(["transport", "--out", str(tmp_path / "x")]) == 2
    assert main(["transport", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_refuses_to_clobber_foreign_files(tmp_path):
    out = tmp_path / "busy"
    out.mkdir()
    (out / "moment_curve.csv").write_text("mine\n")
    assert main(["noise_paths", "--config", str(CONFIGS / "stable_noise.yaml"), "--out", str(out)]) == 2
    assert (out / "moment_curve.csv").read_text() == "mine\n"


def test_rerun_over_own_output(tmp_path):
    out = tmp_path / "n"
    args = ["noise_paths", "--config", str(CONFIGS / "stable_noise.yaml"), "--out", str(out)]
    assert main(args) == 0
    first = (out / "moment_curve.csv").read_bytes()
    assert main(args) == 0
    assert (out / "moment_curve.csv").read_bytes() == first
