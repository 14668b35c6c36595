"""Grids, forces, scenario assembly and config validation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from tddstring.scenario import (
    BoxForce,
    ConfigError,
    GaussianPulseForce,
    Grid1D,
    HiddenGrid,
    Scenario,
    TabulatedForce,
    ToneBurstForce,
    force_from_config,
    load_scenario,
    scenario_from_config,
)
from tddstring.susceptibility import SusceptibilityProfile, ZeroSusceptibility


def _plain_scenario(**overrides):
    base = dict(
        grid=Grid1D(x_min=-5.0, x_max=5.0, n_x=101, boundary="dirichlet"),
        profile=SusceptibilityProfile(regions=[]),
        gamma=1.0,
        force=None,
        t_final=1.0,
        dt=0.02,
    )
    base.update(overrides)
    return Scenario(**base)


# ---------------------------------------------------------------------------
# grids


def test_grid_nodes_and_spacing():
    g = Grid1D(x_min=0.0, x_max=1.0, n_x=11)
    assert g.dx == pytest.approx(0.1)
    assert np.allclose(g.x, np.linspace(0.0, 1.0, 11))


def test_periodic_grid_excludes_duplicate_endpoint():
    g = Grid1D(x_min=0.0, x_max=1.0, n_x=10, boundary="periodic")
    assert g.dx == pytest.approx(0.1)
    assert g.x[-1] == pytest.approx(0.9)


def test_hidden_grid_origin_node():
    h = HiddenGrid(half_width=2.0, ds=0.5)
    assert h.n_s == 9
    assert h.s[h.origin_index] == 0.0
    assert h.s[0] == -2.0 and h.s[-1] == 2.0


def test_hidden_grid_rejects_tiny_width():
    with pytest.raises(ConfigError):
        HiddenGrid(half_width=0.5, ds=0.5)


# ---------------------------------------------------------------------------
# forces


def test_gaussian_pulse_x_integral_matches_quadrature():
    f = GaussianPulseForce(amplitude=2.0, x_center=0.3, x_width=0.4, t_center=1.0, t_width=0.2)
    val = f.x_integral(-0.5, 1.2)
    ref, _ = quad(lambda x: 2.0 * math.exp(-0.5 * ((x - 0.3) / 0.4) ** 2), -0.5, 1.2)
    assert val == pytest.approx(ref, rel=1e-12)


def test_box_force_supports_and_integral():
    f = BoxForce(amplitude=1.5, x_lo=-1.0, x_hi=1.0, t_on=0.0, t_off=2.0)
    assert f.x_integral(-3.0, 0.0) == pytest.approx(1.5)
    assert f.time_factor(1.0) == 1.0
    assert f.time_factor(2.5) == 0.0
    assert f(np.array([-2.0, 0.0]), 1.0) == pytest.approx([0.0, 1.5])


def test_tone_burst_ramps_smoothly():
    f = ToneBurstForce(amplitude=1.0, x_center=0.0, x_width=1.0,
                       omega=3.0, t_on=0.0, t_ramp=2.0, t_off=10.0)
    assert f.time_factor(-0.1) == 0.0
    assert abs(f.time_factor(0.05)) < 0.2
    # past the ramp: pure sine
    assert f.time_factor(5.0) == pytest.approx(math.sin(3.0 * 5.0), rel=1e-12)
    # the ramp knee is a quadrature breakpoint
    assert 2.0 in f.time_breakpoints()


def test_tabulated_force_interpolates():
    x = np.linspace(-1.0, 1.0, 21)
    t = np.linspace(0.0, 1.0, 11)
    table = np.outer(np.ones(11), x)
    f = TabulatedForce(t_grid=t, x_grid=x, values=table)
    assert f(np.array([0.5]), 0.37)[0] == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# scenario invariants


def test_cfl_bound_enforced_and_named():
    with pytest.raises(ConfigError, match="run.dt"):
        _plain_scenario(dt=0.2)


def test_cfl_bound_scales_with_wave_speed():
    # speed sqrt(gamma): gamma = 4 halves the allowed step
    _plain_scenario(gamma=1.0, dt=0.05)
    with pytest.raises(ConfigError, match="run.dt"):
        _plain_scenario(gamma=4.0, dt=0.05)
    assert _plain_scenario(gamma=4.0, dt=0.025).wave_speed == 2.0


def test_hidden_spacing_joins_stability_bound():
    with pytest.raises(ConfigError, match="run.dt"):
        _plain_scenario(hidden=HiddenGrid(half_width=2.0, ds=0.05), dt=0.04)


def test_t_start_precedes_force_support():
    f = GaussianPulseForce(amplitude=1.0, x_center=0.0, x_width=0.5, t_center=2.0, t_width=0.3)
    s = _plain_scenario(force=f, t_final=4.0)
    assert s.t_start < 2.0 - 3.0 * 0.3
    assert s.n_steps * s.dt + s.t_start >= 4.0 - 1e-12


# ---------------------------------------------------------------------------
# config parsing


BASE_CFG = {
    "grid": {"x_min": -5.0, "x_max": 5.0, "n_x": 101},
    "material": {"regions": [{"x_min": -1.0, "x_max": 1.0,
                              "model": {"kind": "debye", "amplitude": 0.5, "rate": 1.0}}]},
    "force": {"kind": "gaussian_pulse", "amplitude": 1.0, "x_center": 0.0,
              "x_width": 0.5, "t_center": 1.0, "t_width": 0.2},
    "run": {"t_final": 2.0, "dt": 0.02},
}


def test_scenario_from_config_roundtrip():
    s = scenario_from_config(BASE_CFG)
    assert s.grid.n_x == 101
    assert s.gamma == 1.0
    assert s.force is not None
    assert s.hidden is None


def test_config_missing_section_named():
    cfg = {k: v for k, v in BASE_CFG.items() if k != "run"}
    with pytest.raises(ConfigError, match="run"):
        scenario_from_config(cfg)


def test_config_missing_force_key_named():
    cfg = dict(BASE_CFG)
    cfg["force"] = {"kind": "gaussian_pulse", "amplitude": 1.0}
    with pytest.raises(ConfigError, match="force"):
        scenario_from_config(cfg)


def test_config_unknown_force_kind_named():
    with pytest.raises(ConfigError, match="force.kind"):
        force_from_config({"kind": "comb"})


def test_config_hidden_section():
    cfg = dict(BASE_CFG)
    cfg["hidden"] = {"half_width": 4.0, "ds": 0.05}
    s = scenario_from_config(cfg)
    assert s.hidden.n_s == 161


def test_load_scenario_yaml(tmp_path):
    import yaml

    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(BASE_CFG))
    s = load_scenario(path)
    assert s.t_final == 2.0
