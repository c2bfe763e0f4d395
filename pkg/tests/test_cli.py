import json

import numpy as np
import pytest

from walklab.cli import main
from walklab.green import GreenOperator


def run_cli(*argv):
    return main(list(argv))


def test_domain_build_json(tmp_path, capsys):
    out = tmp_path / "dom.json"
    assert run_cli("domain", "build", "--N", "12", "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["N"] == 12
    assert len(doc["vertices"]) == 81


def test_green_compute_binary(tmp_path):
    out = tmp_path / "g.bin"
    assert run_cli("green", "compute", "--N", "8", "--out", str(out)) == 0
    g = GreenOperator.load(out)
    assert g.n == 25
    assert g.symmetry_defect() <= 1e-10


def test_field_sample_csv_and_figure(tmp_path):
    out = tmp_path / "f.csv"
    assert run_cli("field", "sample", "--N", "10", "--reps", "2",
                   "--seed", "5", "--out", str(out), "--plot") == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# walklab ")
    assert "seed=5" in lines[0]
    assert "config=" in lines[0]
    assert lines[1] == "x_i,x_j,value,replicate"
    assert out.with_suffix(".svg").exists()


def test_walk_run_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli("walk", "run", "--N", "16", "--mode", "boundary",
                       "--horizon", "2", "--reps", "4", "--seed", "9",
                       "--out", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[1]
    assert header == ("replicate,mode,horizon,steps,tau_rho,U,T,"
                      "max_local_time,min_local_time,covered")


def test_walk_run_cover_mode(tmp_path):
    out = tmp_path / "c.csv"
    assert run_cli("walk", "run", "--N", "10", "--mode", "cover",
                   "--start", "0", "--reps", "3", "--seed", "2",
                   "--out", str(out)) == 0
    rows = out.read_text().splitlines()[2:]
    assert len(rows) == 3
    assert all(row.split(",")[-1] == "1" for row in rows)


def test_levelsets_extract_outputs(tmp_path):
    out = tmp_path / "lv.csv"
    assert run_cli("levelsets", "extract", "--N", "24", "--kind", "avoided",
                   "--theta", "0.3", "--reps", "5", "--seed", "6",
                   "--out", str(out)) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["kind"] == "avoided"
    assert len(summary["mass_quartiles"]) == 3
    assert out.with_name("lv_atoms.csv").exists()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('N = 10\nseed = 3\nkind = "avoided"\ntheta = 0.3\n')
    out = tmp_path / "dom.json"
    assert run_cli("domain", "build", "--config", str(cfg),
                   "--N", "14", "--out", str(out)) == 0
    assert json.loads(out.read_text())["N"] == 14


def test_invalid_kind_parameter_rejected(tmp_path, capsys):
    out = tmp_path / "x.csv"
    code = run_cli("levelsets", "extract", "--N", "24", "--kind", "thick",
                   "--theta", "1.0", "--lambda", "1.2", "--reps", "1",
                   "--seed", "1", "--out", str(out))
    assert code == 2
    assert "lambda" in capsys.readouterr().err


def test_verify_single_check(capsys):
    assert run_cli("verify", "q-sequence") == 0
    out = capsys.readouterr().out
    assert "[PASS] q-sequence" in out


def test_verify_unknown_check():
    assert run_cli("verify", "does-not-exist") == 2


def test_verify_tolerance_override_fails_deliberately(capsys):
    code = run_cli("verify", "q-sequence", "--override", "genfn=1e-16")
    assert code == 1
    assert "[FAIL] q-sequence" in capsys.readouterr().out
