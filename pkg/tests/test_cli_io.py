import json
from pathlib import Path

import numpy as np
import pytest

from ocplab.cli import main, run_experiment
from ocplab.io import (
    SpecCompletenessError,
    SpecConstraintError,
    SpecKeyError,
    SpecTypeError,
    parse_spec,
    read_csv,
    read_snapshots,
    verify_run,
    write_csv,
    write_snapshots,
)

MINIMAL = """\
[experiment]
kind = sample
n = 16
beta = 2
seed = 1
steps = 2000
thinning = 32
n_samples = 5
"""


def test_parse_minimal_spec():
    spec = parse_spec(MINIMAL)
    assert spec.kind == "sample"
    assert spec.seed == 1
    assert spec.params["n"] == 16
    assert spec.params["burn_in"] == 2000
    assert "steps" not in spec.params
    assert len(spec.spec_hash) == 64


def test_parse_spec_errors():
    with pytest.raises(SpecConstraintError):
        parse_spec(MINIMAL.replace("beta = 2", "beta = -1"))
    with pytest.raises(SpecCompletenessError):
        parse_spec(MINIMAL.replace("n = 16\n", ""))
    with pytest.raises(SpecKeyError):
        parse_spec(MINIMAL + "bogus = 1\n")
    with pytest.raises(SpecTypeError):
        parse_spec(MINIMAL.replace("n = 16", "n = sixteen"))
    with pytest.raises(SpecConstraintError):
        parse_spec(MINIMAL.replace("kind = sample", "kind = dance"))
    with pytest.raises(SpecCompletenessError):
        parse_spec("[other]\nx = 1\n")


def test_kind_section_merge():
    text = """\
[experiment]
kind = dlr
n = 32
beta = 0
seed = 3
[dlr]
p = 2
lam_radius = 1.0
"""
    spec = parse_spec(text)
    assert spec.params["p"] == 2
    assert spec.params["lam_radius"] == 1.0
    assert spec.params["delta"] == 0.1  # default


def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(16, 2))
    rec = {"n": 16, "beta": 2.0, "seed": 7, "step": 123, "points": pts}
    path = tmp_path / "snap.ndjson"
    write_snapshots(path, [rec])
    back = read_snapshots(path)
    assert len(back) == 1
    assert np.array_equal(back[0]["points"], pts)
    assert back[0]["step"] == 123 and back[0]["beta"] == 2.0


def test_csv_round_trip(tmp_path):
    rows = [{"a": 1, "b": 0.125, "c": "x"}, {"a": 2, "b": -3.5e-8, "c": "y"}]
    path = tmp_path / "t.csv"
    write_csv(path, rows, "f" * 64, meta={"note": "hello"})
    back, meta = read_csv(path)
    assert meta["spec_hash"] == "f" * 64
    assert meta["note"] == "hello"
    assert float(back[1]["b"]) == -3.5e-8
    assert back[0]["c"] == "x"


def _run(tmp_path, text, command, name="run"):
    spec_path = tmp_path / "cfg.ini"
    spec_path.write_text(text)
    out = tmp_path / name
    code = main([command, "--spec", str(spec_path), "--out", str(out)])
    return code, out


def test_sample_run_and_verify(tmp_path):
    code, out = _run(tmp_path, MINIMAL, "sample")
    assert code == 0
    records = read_snapshots(out / "snapshots.ndjson")
    assert len(records) == 5
    assert all(np.asarray(r["points"]).shape == (16, 2) for r in records)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "sample"
    assert verify_run(out)["ok"]
    assert main(["verify", "--out", str(out)]) == 0


def test_sample_rerun_is_byte_identical(tmp_path):
    _, out1 = _run(tmp_path, MINIMAL, "sample", "run1")
    _, out2 = _run(tmp_path, MINIMAL, "sample", "run2")
    for rel in ("snapshots.ndjson", "results/sample.json"):
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes()


def test_verify_detects_tampering(tmp_path):
    code, out = _run(tmp_path, MINIMAL, "sample")
    assert code == 0
    target = out / "results" / "sample.json"
    target.write_text(target.read_text().replace("acceptance", "acceptanse"))
    report = verify_run(out)
    assert not report["ok"]
    assert main(["verify", "--out", str(out)]) == 2


def test_command_kind_mismatch(tmp_path):
    spec_path = tmp_path / "cfg.ini"
    spec_path.write_text(MINIMAL)
    assert main(["dlr", "--spec", str(spec_path), "--out", str(tmp_path / "o")]) == 1


def test_bad_spec_exit_code(tmp_path):
    spec_path = tmp_path / "cfg.ini"
    spec_path.write_text(MINIMAL.replace("beta = 2", "beta = -1"))
    assert main(["sample", "--spec", str(spec_path), "--out", str(tmp_path / "o")]) == 1


DLR_SPEC = """\
[experiment]
kind = dlr
n = 64
beta = 0
seed = 5
burn_in = 500
thinning = 64
n_samples = 24
[dlr]
p = 2
k_max = 3
n_inner = 12
inner_burn = 60
inner_thin = 4
"""


def test_dlr_run_writes_report(tmp_path):
    code, out = _run(tmp_path, DLR_SPEC, "dlr")
    assert code == 0
    report = json.loads((out / "results" / "dlr.json").read_text())
    assert report["all_pass"] is True
    rows, meta = read_csv(out / "results" / "dlr_z.csv")
    assert len(rows) == len(report["observables"])
    assert verify_run(out)["ok"]


LOCTRANS_SPEC = """\
[experiment]
kind = loctrans
n = 16
beta = 0
seed = 2
[loctrans]
l_list = 8
grid_n = 16
"""


def test_loctrans_run_certifies(tmp_path):
    code, out = _run(tmp_path, LOCTRANS_SPEC, "loctrans")
    assert code == 0
    rows, meta = read_csv(out / "results" / "loctrans_constants.csv")
    assert len(rows) == 1 and float(rows[0]["L"]) == 8.0
    payload = json.loads((out / "results" / "loctrans.json").read_text())
    assert payload["certified"] is True


MOVEFN_SPEC = """\
[experiment]
kind = movefn
n = 64
beta = 0
seed = 4
burn_in = 500
thinning = 64
n_samples = 3
[movefn]
p_max = 3
n_pairs = 2
tolerance = 0.5
"""


def test_movefn_run(tmp_path):
    code, out = _run(tmp_path, MOVEFN_SPEC, "movefn")
    assert code in (0, 2)
    rows, meta = read_csv(out / "results" / "movefn.csv")
    assert {int(r["p"]) for r in rows} == {0, 1, 2, 3}
    assert "converged_fraction" in meta


def test_run_experiment_api(tmp_path):
    spec = parse_spec(MINIMAL)
    status = run_experiment(spec, out_dir=tmp_path / "direct")
    assert status == 0
    assert (tmp_path / "direct" / "manifest.json").exists()
