"""Hidden-string engine: reduction to the memoryless limit, conservation
bookkeeping, and the convolution oracle for the hidden response."""

import numpy as np
import pytest

from tddstring.coupling import CouplingFunction
from tddstring.extended_dynamics import (
    ExtendedSystem,
    dissipated_energy,
    energy_report,
    hidden_response_oracle,
    local_energy_residual,
    run_extended,
)
from tddstring.scenario import GaussianPulseForce, Grid1D, HiddenGrid, Scenario
from tddstring.susceptibility import DebyeSusceptibility, SusceptibilityProfile
from tddstring.tdd_dynamics import run_tdd

PULSE = GaussianPulseForce(amplitude=1.0, x_center=0.0, x_width=0.5,
                           t_center=2.0, t_width=0.3)
DEBYE = DebyeSusceptibility(amplitude=0.5, rate=1.0)


def _scenario(profile, n_x=400, dt=0.04, x_lim=20.0, t_final=12.0,
              half_width=20.0, ds=0.1, boundary="periodic", **kw):
    return Scenario(
        grid=Grid1D(x_min=-x_lim, x_max=x_lim, n_x=n_x, boundary=boundary),
        profile=profile,
        gamma=1.0,
        force=PULSE,
        t_final=t_final,
        dt=dt,
        hidden=HiddenGrid(half_width=half_width, ds=ds),
        **kw,
    )


def _debye_profile():
    return SusceptibilityProfile(regions=[(-1e9, 1e9, DEBYE)])


@pytest.fixture(scope="module")
def debye_pair():
    """One forced Debye run through both engines, shared by the module."""
    scen = _scenario(_debye_profile())
    ext = run_extended(scen, store_f_pi_series=False)
    tdd = run_tdd(scen, store_history=True)
    return scen, ext, tdd


# ---------------------------------------------------------------------------
# the two engines


def test_zero_coupling_reduces_to_memoryless_engine_bitwise():
    # with no coupled region the hidden rows never move and the visible
    # update degenerates to the same leapfrog the memory-kernel engine runs
    scen = _scenario(SusceptibilityProfile(regions=[]), n_x=201,
                     t_final=6.0, boundary="dirichlet")
    ext = run_extended(scen, store_f_pi_series=False)
    tdd = run_tdd(scen, store_history=False)
    assert np.array_equal(ext.phi, tdd.phi)
    assert np.array_equal(ext.pi, tdd.pi)
    assert np.abs(ext.final_state.psi).max() == 0.0


def test_extended_matches_memory_kernel_for_debye(debye_pair):
    _, ext, tdd = debye_pair
    num = np.linalg.norm(ext.phi - tdd.phi)
    den = np.linalg.norm(tdd.phi)
    assert num / den < 5e-3


# ---------------------------------------------------------------------------
# conserved quantities


def test_hamiltonian_tracks_injected_work(debye_pair):
    _, ext, _ = debye_pair
    gap = ext.h_total - ext.work
    drift = np.abs(gap - gap[0]).max() / max(ext.h_total.max(), 1.0)
    assert drift < 1e-3


def test_momentum_stays_zero_by_parity(debye_pair):
    # even force on a symmetric periodic grid: momentum is roundoff forever
    _, ext, _ = debye_pair
    assert np.abs(ext.p_total).max() < 1e-14


def test_local_energy_balance_residual(debye_pair):
    _, ext, _ = debye_pair
    mid = ext.times.size // 2
    assert local_energy_residual(ext, mid) < 1e-3


def test_energy_density_integrates_to_totals(debye_pair):
    scen, ext, _ = debye_pair
    mid = ext.times.size // 2
    dens = ext.e_density[mid].sum() * scen.grid.dx
    tot = ext.e0_total[mid] + ext.ehs_total[mid]
    # densities use centered differences, totals the link sums: O(h^2) apart
    assert abs(dens - tot) / tot < 2e-2
    rep = energy_report(ext.final_state, ext.system)
    assert rep.e0_total == pytest.approx(ext.e0_total[-1], rel=1e-12)
    assert rep.ehs_total == pytest.approx(ext.ehs_total[-1], rel=1e-12)


# ---------------------------------------------------------------------------
# where the lost energy sits


def test_dissipated_energy_three_routes_agree(debye_pair):
    scen, ext, tdd = debye_pair
    per_length = dissipated_energy(tdd, DEBYE)
    assert per_length.min() > -1e-12
    integral = per_length.sum() * scen.grid.dx
    d_tdd = tdd.dissipated_series[-1]
    e_hidden = ext.ehs_total[-1]
    assert abs(integral - d_tdd) / d_tdd < 1e-2
    assert abs(e_hidden - d_tdd) / d_tdd < 1e-2


# ---------------------------------------------------------------------------
# hidden response against the direct convolution


def test_hidden_profile_matches_convolution_oracle():
    scen = _scenario(_debye_profile(), n_x=201, x_lim=10.0, t_final=8.0,
                     half_width=12.0)
    traj = run_extended(scen, store_f_pi_series=True)
    ix = 100  # force center
    coupling = traj.system.regions[0].coupling
    s = traj.s
    # end reflections contaminate |s| > half_width - t_final; stay inside
    mask = np.abs(s) <= 3.5
    predicted = hidden_response_oracle(
        coupling, traj.t_series, traj.f_pi_series[:, ix], s[mask])
    got = traj.final_state.psi[ix, mask]
    assert np.abs(predicted - got).max() / np.abs(got).max() < 5e-3


def test_oracle_delta_only_closed_form():
    # pure delta coupling, linear velocity history: every quadrature in the
    # oracle is exact, so the closed form 1/4 c0 (t - |s|)^2 comes out to
    # machine precision
    s_grid = np.linspace(-5.0, 5.0, 101)
    c = CouplingFunction(delta_weight=np.sqrt(2.0), s_grid=s_grid,
                         regular=np.zeros(101))
    t_final = 4.0
    times = np.linspace(0.0, t_final, 801)
    s_values = np.linspace(-6.0, 6.0, 41)
    predicted = hidden_response_oracle(c, times, times.copy(), s_values)
    closed = np.where(np.abs(s_values) <= t_final,
                      np.sqrt(2.0) / 4.0 * (t_final - np.abs(s_values)) ** 2,
                      0.0)
    assert np.abs(predicted - closed).max() < 1e-12


def test_oracle_step_split_keeps_second_order():
    # the kink of the step part at tau = |s| is split exactly, so a smooth
    # history still converges at O(h^2)
    s_grid = np.linspace(-5.0, 5.0, 101)
    c = CouplingFunction(delta_weight=np.sqrt(2.0), s_grid=s_grid,
                         regular=np.zeros(101))
    t_final, om = 4.0, 1.3
    s_values = np.linspace(-6.0, 6.0, 41)
    closed = np.where(
        np.abs(s_values) <= t_final,
        np.sqrt(2.0) * (1.0 - np.cos(om * (t_final - np.abs(s_values)))) / (2.0 * om),
        0.0)
    errs = []
    for n in (401, 801):
        times = np.linspace(0.0, t_final, n)
        predicted = hidden_response_oracle(c, times, np.sin(om * times), s_values)
        errs.append(np.abs(predicted - closed).max())
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] > 3.5


def test_oracle_rejects_ragged_history():
    s_grid = np.linspace(-2.0, 2.0, 41)
    c = CouplingFunction(delta_weight=1.0, s_grid=s_grid, regular=np.zeros(41))
    times = np.array([0.0, 0.1, 0.25, 0.3])
    with pytest.raises(ValueError, match="uniform"):
        hidden_response_oracle(c, times, np.ones_like(times), np.array([0.0]))


# ---------------------------------------------------------------------------
# hidden-end bookkeeping


def test_reentry_radius_and_horizon(debye_pair):
    scen, ext, _ = debye_pair
    system = ext.system
    r = system.reentry_radius
    assert 4.0 < r < 6.5
    assert system.reentry_horizon == pytest.approx(
        2.0 * (scen.hidden.half_width - r))
    # run length above: the shared run (t_final = 12) sits inside the horizon
    assert scen.t_final < system.reentry_horizon


def test_zero_profile_has_full_horizon():
    scen = _scenario(SusceptibilityProfile(regions=[]), n_x=101, t_final=4.0)
    system = ExtendedSystem(scen)
    assert system.reentry_radius == 0.0
    assert system.reentry_horizon == pytest.approx(2.0 * scen.hidden.half_width)
