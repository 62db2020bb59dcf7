import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shakenlattice.cli import main
from shakenlattice.errors import ConfigValidationError
from shakenlattice.harness import SIParams, load_config, si_calculator
from shakenlattice.harness.artifacts import csv_bytes, read_csv, sha256, write_csv
from shakenlattice.harness.figures import run_figure


def small_config(tmp_path, **kw):
    base = dict(out=str(tmp_path), tiers=["4L"], T_values=[50.0, 100.0], V0_values=[3.0], render=False)
    base.update(kw)
    return load_config(**base)


def test_defaults_load_and_hash_is_stable():
    a, b = load_config(), load_config()
    assert a.hash() == b.hash()
    assert load_config(out="elsewhere", workers=4).hash() == a.hash()
    assert load_config(T=301.0).hash() != a.hash()


@pytest.mark.parametrize("bad", [dict(tiers=[]), dict(schemes=[]), dict(tiers=["5L"]), dict(T=-1.0),
                                 dict(t_S_fraction=1.0), dict(wells=4), dict(V0_values=[0.0]),
                                 dict(detuning_values=[])])
def test_config_validation(bad):
    with pytest.raises(ConfigValidationError):
        load_config(**bad)


def test_config_file_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"T": 100, "colour": "red"}))
    with pytest.raises(ConfigValidationError):
        load_config(p)
    p.write_text(json.dumps({"T": 100}))
    assert load_config(p).T == 100


@given(st.lists(st.floats(allow_nan=False), min_size=1, max_size=20))
def test_csv_round_trip_exact(values):
    cols = {"a": np.array(values), "b": np.arange(len(values), dtype=float)}
    blob = csv_bytes(cols)
    assert csv_bytes(cols) == blob
    lines = blob.decode().splitlines()
    assert lines[0] == "a,b" and len(lines) == len(values) + 1
    assert [float(r.split(",")[0]) for r in lines[1:]] == list(cols["a"])


def test_csv_column_lengths_checked(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", {"a": [1, 2], "b": [1]})


def test_si_calculator_reference_point():
    r = si_calculator(SIParams())
    assert r["depth_hbar_omega"] == pytest.approx(3.0)
    assert r["omega_d_over_2pi_Hz"] == pytest.approx(14e3, abs=1e3)
    assert r["T_s"] == pytest.approx(3e-3, abs=0.5e-3)
    assert r["hbar_over_J0_s"] == pytest.approx(0.589, abs=0.01)
    assert r["mott_ok"]


@given(st.floats(10, 100))
def test_si_depth_identity(depth):
    # hbar omega = 2 sqrt(V0 E_r)
    r = si_calculator(SIParams(depth_recoil=depth, omega_T=100))
    assert r["depth_hbar_omega"] == pytest.approx(np.sqrt(depth) / 2)
    assert r["omega_rad_s"] * 1.054571817e-34 == pytest.approx(2 * np.sqrt(depth) * r["E_r_J"], rel=1e-8)


def test_figure_outputs_deterministic_and_listed(tmp_path):
    cfg = small_config(tmp_path / "a")
    m1 = run_figure(cfg, "fidelity_vs_T")
    cfg2 = small_config(tmp_path / "b")
    m2 = run_figure(cfg2, "fidelity_vs_T")
    csv1 = {k: v for k, v in m1.files.items() if k.endswith(".csv")}
    csv2 = {k: v for k, v in m2.files.items() if k.endswith(".csv")}
    assert csv1 and csv1 == csv2
    assert m1.files.keys() == m2.files.keys()
    man = json.loads((m1.out_dir / "manifest.json").read_text())
    listed = {f["path"] for f in man["files"]}
    on_disk = {str(p.relative_to(m1.out_dir)) for p in m1.out_dir.rglob("*") if p.is_file()}
    assert on_disk - {"manifest.json"} == listed
    for f in man["files"]:
        assert sha256(m1.out_dir / f["path"]) == f["sha256"]
    assert man["config_hash"] == cfg.hash()
    rows = read_csv(m1.out_dir / "fidelity_vs_T.csv")
    assert np.all(rows["fidelity"] > 1 - 1e-6)


def test_sweep_resumes_from_point_files(tmp_path, monkeypatch):
    cfg = small_config(tmp_path)
    run_figure(cfg, "fidelity_vs_T")
    import shakenlattice.harness.figures as figures

    def boom(**kw):
        raise AssertionError("point recomputed")

    monkeypatch.setattr(figures, "run_point", boom)
    m = run_figure(cfg, "fidelity_vs_T")
    assert not m.failures


def test_point_failure_recorded_not_raised(tmp_path):
    # T = 0.5 needs a polarisation beyond what V0 = 3 can supply
    cfg = small_config(tmp_path, T=0.5, schemes=["piecewise"])
    m = run_figure(cfg, "controls")
    assert [p["status"] for p in m.failures] == ["error"]
    assert "ControlInfeasibleError" in m.failures[0]["error"] or "V_rho" in m.failures[0]["error"]


def test_render_writes_png(tmp_path):
    cfg = small_config(tmp_path, render=True)
    m = run_figure(cfg, "couplings")
    assert (m.out_dir / "couplings.png").read_bytes()[:4] == b"\x89PNG"


def test_cli_si_calc(capsys):
    assert main(["si-calc"]) == 0
    assert json.loads(capsys.readouterr().out)["depth_hbar_omega"] == pytest.approx(3.0)


def test_cli_synthesize_and_simulate(tmp_path, capsys):
    assert main(["synthesize", "--out", str(tmp_path), "--T", "100"]) == 0
    assert (tmp_path / "synthesize" / "couplings_piecewise.csv").exists()
    assert main(["simulate", "--out", str(tmp_path), "--tier", "4L", "--T", "100"]) == 0
    assert "fidelity=1.000000" in capsys.readouterr().out


def test_cli_validate_subset(tmp_path, capsys):
    assert main(["validate", "--out", str(tmp_path), "--only", "C3", "C11"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] C3" in out and "2/2 criteria passed" in out
    report = json.loads((tmp_path / "validate" / "report.json").read_text())
    assert [c["key"] for c in report["criteria"]] == ["C3", "C11"]


def test_cli_bad_config_exits_nonzero(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--tier", "4L", "--T", "-5"]) == 2
    assert "ConfigValidationError" in capsys.readouterr().err
