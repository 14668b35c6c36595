"""Command-line driver: config handling, emitted tables, and exit codes."""

import json

import numpy as np
import pytest
import yaml

from tddstring.cli import main

ZERO_MATERIAL = {"regions": [
    {"x_min": -1.0e9, "x_max": 1.0e9, "model": {"kind": "zero"}}]}

BASE = {
    "gamma": 1.0,
    "grid": {"x_min": -5.0, "x_max": 5.0, "n_x": 51, "boundary": "dirichlet"},
    "material": {"regions": [
        {"x_min": -1.0e9, "x_max": 1.0e9,
         "model": {"kind": "debye", "amplitude": 0.5, "rate": 1.0}},
    ]},
    "force": {"kind": "gaussian_pulse", "amplitude": 1.0, "x_center": 0.0,
              "x_width": 0.5, "t_center": 1.0, "t_width": 0.2},
    "run": {"t_final": 2.0, "dt": 0.04, "snapshot_stride": 10},
    "hidden": {"half_width": 8.0, "ds": 0.1},
}


def _write_config(tmp_path, name="scen.yaml", **overrides):
    cfg = json.loads(json.dumps(BASE))  # deep copy
    for key, value in overrides.items():
        if value is None:
            cfg[key] = None
        elif isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return path


def _read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _columns(path):
    with open(path) as fh:
        return fh.readline().strip().split(",")


# ---------------------------------------------------------------------------
# simulate


def test_simulate_both_zero_model_engines_agree_exactly(tmp_path):
    cfg = _write_config(tmp_path, material=ZERO_MATERIAL)
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--engine", "both"])
    assert rc == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["both"]["phi_diff_rel_l2"] <= 1e-12
    assert max(summary["both"]["phi_diff_norm_per_snapshot"]) <= 1e-12


def test_simulate_zero_force_outputs_all_zero(tmp_path):
    cfg = _write_config(tmp_path, force=None)
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    table = _read_csv(tmp_path / "out" / "snapshots_tdd.csv")
    assert _columns(tmp_path / "out" / "snapshots_tdd.csv") == [
        "t", "x", "phi", "pi", "f_pi", "e0_density", "flux"]
    # every field column identically zero
    assert np.abs(table[:, 2:]).max() == 0.0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["tdd"]["final_energy"] == 0.0


def test_simulate_rejects_unstable_step(tmp_path, capsys):
    cfg = _write_config(tmp_path, run={"t_final": 2.0, "dt": 0.5})
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "run.dt" in capsys.readouterr().err


def test_simulate_unknown_engine_named(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0  # default engine works
    cfg2 = _write_config(tmp_path, name="scen2.yaml",
                         run={"t_final": 2.0, "dt": 0.04, "engine": "warp"})
    rc = main(["simulate", "--config", str(cfg2), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "run.engine" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# scatter


def test_scatter_zero_model_is_transparent(tmp_path):
    cfg = _write_config(tmp_path, material=ZERO_MATERIAL)
    rc = main(["scatter", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--n-omega", "7"])
    assert rc == 0
    table = _read_csv(tmp_path / "out" / "scattering.csv")
    cols = _columns(tmp_path / "out" / "scattering.csv")
    assert cols == ["omega", "re_chi_hat", "im_chi_hat", "re_rho", "im_rho",
                    "re_r", "im_r", "re_v", "im_v", "one_minus_abs_r_sq"]
    r = table[:, 5] + 1j * table[:, 6]
    assert np.abs(r).max() == 0.0
    assert np.abs(table[:, 9] - 1.0).max() == 0.0


def test_scatter_identity_column_consistent(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["scatter", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--n-omega", "25"])
    assert rc == 0
    t = _read_csv(tmp_path / "out" / "scattering.csv")
    r2 = t[:, 5] ** 2 + t[:, 6] ** 2
    v2 = t[:, 7] ** 2 + t[:, 8] ** 2
    assert np.abs(1.0 - r2 - v2 * t[:, 3]).max() < 1e-12
    assert np.abs(t[:, 9] - (1.0 - r2)).max() < 1e-15


def test_scatter_negative_frequency_row_is_conjugate(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["scatter", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--omega", "1.0", "--omega", "-1.0"])
    assert rc == 0
    t = _read_csv(tmp_path / "out" / "scattering.csv")
    assert t.shape[0] == 2
    assert t[1, 5] == pytest.approx(t[0, 5], abs=1e-15)   # Re r even
    assert t[1, 6] == pytest.approx(-t[0, 6], abs=1e-15)  # Im r odd


def test_scatter_deterministic_bytes(tmp_path):
    cfg = _write_config(tmp_path)
    for sub in ("a", "b"):
        rc = main(["scatter", "--config", str(cfg),
                   "--out", str(tmp_path / sub), "--n-omega", "11"])
        assert rc == 0
    assert ((tmp_path / "a" / "scattering.csv").read_bytes()
            == (tmp_path / "b" / "scattering.csv").read_bytes())


# ---------------------------------------------------------------------------
# eigen


def test_eigen_causal_profile_table(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["eigen", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--kind", "causal", "--omega", "1.0"])
    assert rc == 0
    assert _columns(tmp_path / "out" / "mode_causal.csv") == [
        "x", "re_phi", "im_phi", "flux", "neg_dflux_dx"]
    meta = json.loads((tmp_path / "out" / "mode_causal.json").read_text())
    assert meta["grid_residual"] < 1e-10
    assert meta["im_k"] > 0.0
    table = _read_csv(tmp_path / "out" / "mode_causal.csv")
    assert table.shape[0] == BASE["grid"]["n_x"]


def test_eigen_plane_documents_both_energy_conventions(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["eigen", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--kind", "plane", "--omega", "1.0", "--mixing", "1.0"])
    assert rc == 0
    meta = json.loads((tmp_path / "out" / "mode_plane.json").read_text())
    assert meta["e0_doubled_convention"] == pytest.approx(
        2.0 * meta["e0_half_convention"], rel=1e-15)
    assert meta["stress_visible"] + meta["stress_hidden"] == pytest.approx(
        meta["stress_total"], abs=1e-12)


def test_eigen_plane_needs_exactly_one_parameter(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = main(["eigen", "--config", str(cfg), "--out", str(tmp_path / "out"),
               "--kind", "plane", "--omega", "1.0"])
    assert rc == 1
    assert "exactly one" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# coupling


def test_coupling_emits_table_and_round_trip(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["coupling", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    summary = json.loads((tmp_path / "out" / "coupling_summary.json").read_text())
    # Debye(0.5, 1): saturated friction spectrum 0.5 gives weight sqrt(1)
    assert summary["delta_weight"] == pytest.approx(1.0, abs=1e-3)
    assert summary["round_trip_max_rel_error"] < 1e-2
    assert (tmp_path / "out" / "coupling.csv").exists()


# ---------------------------------------------------------------------------
# check


def test_check_debye_all_pass(tmp_path):
    cfg = _write_config(tmp_path)
    rc = main(["check", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["passed"] is True
    assert report["pdc"]["passed"] is True
    assert report["kramers_kronig"]["residual_fine"] <= report["kramers_kronig"]["residual_coarse"]
    assert report["coupling_round_trip"]["passed"] is True
    assert report["scenario"]["reentry"]["passed"] is True


def test_check_zero_model_trivial_pass(tmp_path):
    cfg = _write_config(tmp_path, material=ZERO_MATERIAL)
    rc = main(["check", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["pdc"]["passed"] is True
    assert report["coupling_round_trip"]["max_rel_error"] == 0.0


def test_check_negative_kernel_fails_pdc(tmp_path):
    taus = np.linspace(0.0, 6.0, 61)
    rows = "\n".join(f"{t:.12e},{-np.exp(-t):.12e}" for t in taus)
    (tmp_path / "neg.csv").write_text("tau,chi\n" + rows + "\n")
    cfg = _write_config(tmp_path, material={"regions": [
        {"x_min": -1.0e9, "x_max": 1.0e9,
         "model": {"kind": "tabulated", "file": "neg.csv"}},
    ]})
    rc = main(["check", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc != 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["pdc"]["passed"] is False
    assert report["pdc"]["min_value"] < 0.0
    assert report["passed"] is False


def test_check_reports_cfl_violation(tmp_path):
    cfg = _write_config(tmp_path, run={"t_final": 2.0, "dt": 0.5})
    rc = main(["check", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc != 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["scenario"]["passed"] is False
    assert "run.dt" in report["scenario"]["error"]


# ---------------------------------------------------------------------------
# config errors surface with names


def test_missing_config_file(tmp_path, capsys):
    rc = main(["check", "--config", str(tmp_path / "absent.yaml")])
    assert rc == 1
    assert "absent.yaml" in capsys.readouterr().err


def test_bad_material_kind_named(tmp_path, capsys):
    cfg = _write_config(tmp_path, material={"regions": [
        {"x_min": 0.0, "x_max": 1.0, "model": {"kind": "magic"}}]})
    rc = main(["scatter", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "kind" in capsys.readouterr().err
