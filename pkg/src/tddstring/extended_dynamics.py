"""Conservative extension: the string coupled to a hidden string at every
point, integrated symplectically.

Each grid point x in a region with memory carries a hidden field
psi(x, s) on the auxiliary coordinate s.  The visible velocity is

    f_pi = pi - sum_j a_j psi_j,

with read weights a_j built from the coupling function (delta weight at
s = 0 plus the trapezoid-weighted regular part), and the hidden momentum
theta is driven back through the deposit weights b_j = a_j / ds.  The
kinetic part

    H1 = 1/2 (pi - a.psi)^2 + 1/2 ds |theta|^2

is not separable in (positions, momenta), but its flow is a one-mode
harmonic rotation per grid point (frequency kappa = sqrt(a.b)) and is
integrated in closed form; the remaining H2 (both Laplacians and the
force) is a pure kick.  Strang-composing the two gives an explicit,
exactly symplectic, time-reversible second-order step that reduces
bitwise to the memoryless leapfrog where the coupling vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .coupling import CouplingFunction, build_coupling
from .lattice import centered_derivative, gradient_energy, laplacian, laplacian_s
from .scenario import ConfigError, Scenario
from .susceptibility import SusceptibilityModel, ZeroSusceptibility

__all__ = [
    "ExtendedState",
    "ExtendedSystem",
    "ExtendedTrajectory",
    "EnergyReport",
    "MomentumReport",
    "run_extended",
    "f_pi",
    "step_extended",
    "hamiltonian",
    "energy_report",
    "momentum_report",
    "local_energy_residual",
    "hidden_response_oracle",
    "dissipated_energy",
]

# a region's hidden tail counts as re-entrant once the regular coupling
# exceeds this fraction of its peak scale
_REENTRY_FRACTION = 1e-2


@dataclass
class ExtendedState:
    """Canonical fields of the extended system at one instant.

    psi/theta have shape (n_x, n_s); rows outside coupled regions stay
    identically zero and are never touched by the stepper.
    """

    t: float
    phi: np.ndarray
    pi: np.ndarray
    psi: np.ndarray
    theta: np.ndarray

    def copy(self) -> "ExtendedState":
        return ExtendedState(
            t=self.t,
            phi=self.phi.copy(),
            pi=self.pi.copy(),
            psi=self.psi.copy(),
            theta=self.theta.copy(),
        )


@dataclass(frozen=True)
class _CoupledRegion:
    sl: slice
    kernel: SusceptibilityModel
    coupling: CouplingFunction
    read: np.ndarray       # a_j, includes the delta weight at s = 0
    deposit: np.ndarray    # b_j = a_j / ds
    kappa2: float
    reentry_radius: float


def _region_reentry_radius(coupling: CouplingFunction) -> float:
    reg = np.abs(coupling.regular)
    scale = abs(coupling.delta_weight) + float(reg.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    hot = np.abs(coupling.s_grid)[reg >= _REENTRY_FRACTION * scale]
    return float(hot.max(initial=0.0))


def _trig_coeffs(kappa2: float, h: float):
    """Closed-form coefficients of the one-mode rotation over a step h:
    U = S*u0 - Cc*w0, V = Cc*u0 + W*w0 with S = sin(kh)/k,
    Cc = (1-cos(kh))/k^2, W = (sin(kh) - kh)/k^3, all in their k -> 0
    limits when the coupling is tiny."""
    if kappa2 <= 0.0:
        return h, 0.5 * h * h, -h**3 / 6.0
    kappa = math.sqrt(kappa2)
    z = kappa * h
    if z < 1e-3:
        z2 = z * z
        s_co = h * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0))
        cc = 0.5 * h * h * (1.0 - z2 / 12.0 * (1.0 - z2 / 30.0))
        w = -(h**3) / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
        return s_co, cc, w
    s_co = math.sin(z) / kappa
    half = math.sin(0.5 * z) / kappa
    cc = 2.0 * half * half
    w = (math.sin(z) - z) / (kappa2 * kappa)
    return s_co, cc, w


class ExtendedSystem:
    """Lattice realization of the extended dynamics for one scenario:
    grids, per-region coupling weights, and the symplectic stepper."""

    def __init__(self, scenario: Scenario):
        if scenario.hidden is None:
            raise ConfigError("hidden: section required for the extended engine")
        self.scenario = scenario
        self.grid = scenario.grid
        self.hidden = scenario.hidden
        self.gamma = scenario.gamma
        self.force = scenario.force
        self.x = self.grid.x
        self.dx = self.grid.dx
        self.s = self.hidden.s
        self.ds = self.hidden.ds
        self.n_x = self.x.size
        self.n_s = self.s.size

        ds = self.ds
        origin = self.hidden.origin_index
        built: dict[int, CouplingFunction] = {}
        regions = []
        for sl, kernel in scenario.profile.region_slices(self.x):
            if isinstance(kernel, ZeroSusceptibility):
                continue
            if id(kernel) not in built:
                built[id(kernel)] = build_coupling(
                    kernel,
                    n_sigma=scenario.coupling_n_sigma,
                    sigma_max=scenario.coupling_sigma_max,
                )
            coupling = built[id(kernel)]
            read = ds * coupling.regular_at(self.s)
            read[0] *= 0.5
            read[-1] *= 0.5
            read[origin] += coupling.delta_weight
            deposit = read / ds
            regions.append(
                _CoupledRegion(
                    sl=sl,
                    kernel=kernel,
                    coupling=coupling,
                    read=read,
                    deposit=deposit,
                    kappa2=float(read @ deposit),
                    reentry_radius=_region_reentry_radius(coupling),
                )
            )
        self.regions = regions
        self._damping = self.grid.damping_profile()
        # per-region scratch keeps the stepper free of large temporaries
        self._scratch = [
            np.empty((r.sl.stop - r.sl.start, self.n_s)) for r in regions
        ]

    # -- validation --------------------------------------------------------

    @property
    def reentry_radius(self) -> float:
        return max((r.reentry_radius for r in self.regions), default=0.0)

    @property
    def reentry_horizon(self) -> float:
        """Run length below which nothing reflected off the hidden ends
        can couple back into the visible string: 2 (S - R)."""
        return 2.0 * (self.hidden.half_width - self.reentry_radius)

    # -- canonical operations ----------------------------------------------

    def initial_state(self) -> ExtendedState:
        return ExtendedState(
            t=self.scenario.t_start,
            phi=np.zeros(self.n_x),
            pi=np.zeros(self.n_x),
            psi=np.zeros((self.n_x, self.n_s)),
            theta=np.zeros((self.n_x, self.n_s)),
        )

    def f_pi(self, state: ExtendedState) -> np.ndarray:
        out = state.pi.copy()
        for r in self.regions:
            out[r.sl] -= state.psi[r.sl] @ r.read
        return out

    def _force_at(self, t: float) -> np.ndarray | None:
        if self.force is None:
            return None
        return self.force(self.x, t)

    def _hidden_kick(self, state: ExtendedState, h: float) -> None:
        for r, scr in zip(self.regions, self._scratch):
            laplacian_s(state.psi[r.sl], self.ds, out=scr)
            scr *= h
            state.theta[r.sl] += scr

    def step(self, state: ExtendedState, dt: float) -> float:
        """Advance one Strang step in place; returns the work done by the
        force over the step (midpoint force times displacement change)."""
        phi, pi, psi, theta = state.phi, state.pi, state.psi, state.theta
        dx = self.dx
        boundary = self.grid.boundary

        f0 = self._force_at(state.t)
        lap = laplacian(phi, dx, boundary)
        if f0 is not None:
            pi += (0.5 * dt) * (self.gamma * lap + f0)
        else:
            pi += (0.5 * dt) * (self.gamma * lap)
        self._hidden_kick(state, 0.5 * dt)

        # closed-form kinetic flow over the full step
        work = 0.0
        if self.force is not None:
            f_mid = self.force(self.x, state.t + 0.5 * dt)
        covered = np.zeros(self.n_x, dtype=bool)
        for r, scr in zip(self.regions, self._scratch):
            psl = psi[r.sl]
            tsl = theta[r.sl]
            u0 = pi[r.sl] - psl @ r.read
            w0 = tsl @ r.read
            s_co, cc, w_co = _trig_coeffs(r.kappa2, dt)
            u_int = s_co * u0 - cc * w0
            v_int = cc * u0 + w_co * w0
            np.multiply(tsl, dt, out=scr)
            psl += scr
            np.multiply.outer(v_int, r.deposit, out=scr)
            psl += scr
            np.multiply.outer(u_int, r.deposit, out=scr)
            tsl += scr
            phi[r.sl] += u_int
            covered[r.sl] = True
            if self.force is not None:
                work += dx * float(np.dot(f_mid[r.sl], u_int))
        rest = ~covered
        if rest.any():
            if rest.all():
                phi += dt * pi
                if self.force is not None:
                    work += dt * dx * float(np.dot(f_mid, pi))
            else:
                phi[rest] += dt * pi[rest]
                if self.force is not None:
                    work += dt * dx * float(np.dot(f_mid[rest], pi[rest]))

        f1 = self._force_at(state.t + dt)
        lap = laplacian(phi, dx, boundary)
        if f1 is not None:
            pi += (0.5 * dt) * (self.gamma * lap + f1)
        else:
            pi += (0.5 * dt) * (self.gamma * lap)
        self._hidden_kick(state, 0.5 * dt)

        if self._damping is not None:
            decay = np.exp(-self._damping * dt)
            phi *= decay
            pi *= decay

        state.t += dt
        return work

    # -- energies -----------------------------------------------------------

    def _energy_totals(self, state: ExtendedState) -> tuple[float, float]:
        fp = self.f_pi(state)
        e0 = 0.5 * self.dx * float(np.dot(fp, fp))
        e0 += self.gamma * gradient_energy(state.phi, self.dx, self.grid.boundary)
        ehs = 0.0
        for r in self.regions:
            tsl = state.theta[r.sl]
            ehs += 0.5 * self.dx * self.ds * float(np.sum(tsl * tsl))
            ehs += self.dx * gradient_energy(state.psi[r.sl], self.ds, "dirichlet")
        return e0, ehs

    def hamiltonian(self, state: ExtendedState, include_force: bool = True) -> float:
        e0, ehs = self._energy_totals(state)
        total = e0 + ehs
        if include_force and self.force is not None:
            total -= self.dx * float(np.dot(self.force(self.x, state.t), state.phi))
        return total

    def energy_report(self, state: ExtendedState) -> "EnergyReport":
        fp = self.f_pi(state)
        dphi = centered_derivative(state.phi, self.dx, self.grid.boundary)
        e0_density = 0.5 * (fp * fp + self.gamma * dphi * dphi)
        ehs_density = np.zeros(self.n_x)
        origin = self.hidden.origin_index
        for r in self.regions:
            tsl = state.theta[r.sl]
            dpsi = centered_derivative(state.psi[r.sl], self.ds, "dirichlet", axis=-1)
            total = np.sum(tsl * tsl + dpsi * dpsi, axis=-1)
            # the delta coupling kinks psi at s = 0 with slope jump
            # -c0 f_pi; the centered difference there sees only the mean
            # slope, so the node is short by the half-jump squared
            jump_half = 0.5 * r.coupling.delta_weight * fp[r.sl]
            total += jump_half * jump_half
            ehs_density[r.sl] = 0.5 * self.ds * total
        flux = -self.gamma * fp * dphi
        e0_total, ehs_total = self._energy_totals(state)
        return EnergyReport(
            t=state.t,
            x=self.x,
            e0_density=e0_density,
            ehs_density=ehs_density,
            flux=flux,
            f_pi=fp,
            e0_total=e0_total,
            ehs_total=ehs_total,
        )

    def momentum_report(self, state: ExtendedState) -> "MomentumReport":
        fp = self.f_pi(state)
        dphi = centered_derivative(state.phi, self.dx, self.grid.boundary)
        p0_density = -state.pi * dphi
        phs_density = np.zeros(self.n_x)
        ths_density = np.zeros(self.n_x)
        for r in self.regions:
            psl = state.psi[r.sl]
            tsl = state.theta[r.sl]
            whole = r.sl.start in (0, None) and r.sl.stop in (self.n_x, None)
            bnd = self.grid.boundary if whole else "dirichlet"
            dpsi_x = centered_derivative(psl, self.dx, bnd, axis=0)
            phs_density[r.sl] = -self.ds * np.sum(tsl * dpsi_x, axis=-1)
            dpsi_s = centered_derivative(psl, self.ds, "dirichlet", axis=-1)
            stress = np.sum(tsl * tsl - dpsi_s * dpsi_s, axis=-1)
            # same origin-kink bookkeeping as the energy density
            jump_half = 0.5 * r.coupling.delta_weight * fp[r.sl]
            stress -= jump_half * jump_half
            ths_density[r.sl] = 0.5 * self.ds * stress
        delta = state.pi - fp
        e0_density = 0.5 * (fp * fp + self.gamma * dphi * dphi)
        t0_density = e0_density + delta * fp
        return MomentumReport(
            t=state.t,
            x=self.x,
            p0_density=p0_density,
            phs_density=phs_density,
            t0_density=t0_density,
            ths_density=ths_density,
            p0_total=self.dx * float(np.sum(p0_density)),
            phs_total=self.dx * float(np.sum(phs_density)),
        )

    def momentum_total(self, state: ExtendedState) -> float:
        rep = self.momentum_report(state)
        return rep.p0_total + rep.phs_total


@dataclass
class EnergyReport:
    """Pointwise energy split and flux at one instant.  Totals come from
    the link-based lattice sums (the conserved quadrature); densities use
    centered differences and integrate to the totals only to O(h^2)."""

    t: float
    x: np.ndarray
    e0_density: np.ndarray
    ehs_density: np.ndarray
    flux: np.ndarray
    f_pi: np.ndarray
    e0_total: float
    ehs_total: float

    @property
    def total(self) -> float:
        return self.e0_total + self.ehs_total


@dataclass
class MomentumReport:
    """Momentum densities and the stress (momentum-flux) split."""

    t: float
    x: np.ndarray
    p0_density: np.ndarray
    phs_density: np.ndarray
    t0_density: np.ndarray
    ths_density: np.ndarray
    p0_total: float
    phs_total: float

    @property
    def total(self) -> float:
        return self.p0_total + self.phs_total


@dataclass
class ExtendedTrajectory:
    """Snapshots, conserved-quantity series, and the final canonical state
    of a hidden-string run."""

    x: np.ndarray
    s: np.ndarray
    dt: float
    t_start: float
    times: np.ndarray
    snapshot_steps: np.ndarray
    phi: np.ndarray             # (n_snap, n_x)
    pi: np.ndarray
    f_pi: np.ndarray
    e_density: np.ndarray       # visible + hidden energy density snapshots
    flux: np.ndarray
    e0_total: np.ndarray        # series at snapshot times
    ehs_total: np.ndarray
    p_total: np.ndarray
    work: np.ndarray            # cumulative force work at snapshot times
    f_pi_series: np.ndarray | None   # (n_steps + 1, n_x), every step
    t_series: np.ndarray
    final_state: ExtendedState
    system: ExtendedSystem = field(repr=False)

    @property
    def h_total(self) -> np.ndarray:
        return self.e0_total + self.ehs_total


def run_extended(
    scenario: Scenario,
    initial_state: ExtendedState | None = None,
    store_f_pi_series: bool = True,
) -> ExtendedTrajectory:
    system = ExtendedSystem(scenario)
    state = initial_state.copy() if initial_state is not None else system.initial_state()
    n_steps = scenario.n_steps
    dt = scenario.dt

    stride = scenario.snapshot_stride
    snap_steps = list(range(0, n_steps + 1, stride))
    if snap_steps[-1] != n_steps:
        snap_steps.append(n_steps)
    snap_set = set(snap_steps)

    phi_s, pi_s, fp_s, ed_s, flux_s = [], [], [], [], []
    e0_s, ehs_s, p_s, work_s = [], [], [], []
    f_pi_series = np.zeros((n_steps + 1, system.n_x)) if store_f_pi_series else None
    t_series = state.t + dt * np.arange(n_steps + 1)

    work = 0.0

    def record():
        rep = system.energy_report(state)
        phi_s.append(state.phi.copy())
        pi_s.append(state.pi.copy())
        fp_s.append(rep.f_pi)
        ed_s.append(rep.e0_density + rep.ehs_density)
        flux_s.append(rep.flux)
        e0_s.append(rep.e0_total)
        ehs_s.append(rep.ehs_total)
        p_s.append(system.momentum_total(state))
        work_s.append(work)

    if 0 in snap_set:
        record()
    if store_f_pi_series:
        f_pi_series[0] = system.f_pi(state)

    for n in range(n_steps):
        work += system.step(state, dt)
        # keep the clock free of accumulated rounding so force evaluation
        # times agree exactly with the memory-kernel engine's
        state.t = float(t_series[n + 1])
        if store_f_pi_series:
            f_pi_series[n + 1] = system.f_pi(state)
        if (n + 1) in snap_set:
            record()

    return ExtendedTrajectory(
        x=system.x,
        s=system.s,
        dt=dt,
        t_start=scenario.t_start,
        times=t_series[np.array(snap_steps)],
        snapshot_steps=np.array(snap_steps, dtype=int),
        phi=np.array(phi_s),
        pi=np.array(pi_s),
        f_pi=np.array(fp_s),
        e_density=np.array(ed_s),
        flux=np.array(flux_s),
        e0_total=np.array(e0_s),
        ehs_total=np.array(ehs_s),
        p_total=np.array(p_s),
        work=np.array(work_s),
        f_pi_series=f_pi_series,
        t_series=t_series,
        final_state=state,
        system=system,
    )


# ---------------------------------------------------------------------------
# spec-level operation wrappers


def f_pi(state: ExtendedState, system: ExtendedSystem) -> np.ndarray:
    return system.f_pi(state)


def step_extended(state: ExtendedState, system: ExtendedSystem, dt: float) -> float:
    return system.step(state, dt)


def hamiltonian(state: ExtendedState, system: ExtendedSystem, include_force: bool = True) -> float:
    return system.hamiltonian(state, include_force=include_force)


def energy_report(state: ExtendedState, system: ExtendedSystem) -> EnergyReport:
    return system.energy_report(state)


def momentum_report(state: ExtendedState, system: ExtendedSystem) -> MomentumReport:
    return system.momentum_report(state)


def local_energy_residual(trajectory: ExtendedTrajectory, index: int, margin: int = 2) -> float:
    """Max-norm residual of the discrete energy balance
    dE/dt + dJ/dx = f * f_pi at snapshot `index`, using the two adjacent
    snapshots for the time derivative.  O(dt_snap^2 + dx^2) for smooth
    fields; `margin` end nodes are excluded (one-sided differences)."""
    if not 1 <= index < len(trajectory.times) - 1:
        raise ValueError("index must have snapshot neighbours on both sides")
    steps = trajectory.snapshot_steps
    if steps[index + 1] - steps[index] != steps[index] - steps[index - 1]:
        raise ValueError("snapshots around index are not equally spaced in time")
    dt_snap = trajectory.times[index + 1] - trajectory.times[index]
    system = trajectory.system
    dedt = (trajectory.e_density[index + 1] - trajectory.e_density[index - 1]) / (2.0 * dt_snap)
    djdx = centered_derivative(trajectory.flux[index], system.dx, system.grid.boundary)
    resid = dedt + djdx
    if system.force is not None:
        resid -= system.force(system.x, trajectory.times[index]) * trajectory.f_pi[index]
    inner = slice(margin, None) if system.grid.boundary == "periodic" else slice(margin, -margin)
    return float(np.abs(resid[inner]).max())


def hidden_response_oracle(
    coupling: CouplingFunction,
    t_series: np.ndarray,
    v_series: np.ndarray,
    s_values: np.ndarray,
) -> np.ndarray:
    """Hidden displacement psi(s) at time t_series[-1], predicted from the
    visible velocity history alone:

        psi(s, t) = 1/2 * integral_0^t g_s(tau) v(t - tau) dtau,
        g_s(tau) = c0 * 1[tau >= |s|] + A(s + tau) - A(s - tau),

    with A the antiderivative of the regular coupling part.  The history
    must be uniformly sampled and start from rest.  The step part is
    integrated with an exact partial-cell split so the kink at
    tau = |s| costs no accuracy order.
    """
    t_series = np.asarray(t_series, dtype=float)
    v = np.asarray(v_series, dtype=float)
    if t_series.ndim != 1 or v.shape != t_series.shape:
        raise ValueError("t_series and v_series must be matching 1d arrays")
    h = float(t_series[1] - t_series[0])
    if not np.allclose(np.diff(t_series), h, rtol=0.0, atol=1e-9 * max(h, 1.0)):
        raise ValueError("history must be uniformly sampled")
    n = v.size - 1
    horizon = n * h
    # v(t - tau) on the tau grid
    v_back = v[::-1]
    taus = h * np.arange(n + 1)

    # trapezoid cumulative of v_back from 0 to each node
    tw = np.ones(n + 1)
    tw[0] = tw[-1] = 0.5
    cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (v_back[1:] + v_back[:-1]))))

    def step_integral(a: float) -> float:
        """integral_a^horizon v(t - tau) dtau with linear interpolation."""
        if a >= horizon:
            return 0.0
        if a <= 0.0:
            return float(cum[-1])
        j = min(int(a / h), n - 1)
        frac = a - j * h
        y0, y1 = v_back[j], v_back[j + 1]
        ya = y0 + (y1 - y0) * frac / h
        partial = 0.5 * ((j + 1) * h - a) * (ya + y1)
        return float(partial + cum[-1] - cum[j + 1])

    c0 = coupling.delta_weight
    anti_samples = coupling.regular_antiderivative()

    def anti(y):
        # saturates beyond the grid: the regular part vanishes out there
        return np.interp(y, coupling.s_grid, anti_samples)

    s_arr = np.asarray(s_values, dtype=float)
    s_flat = np.atleast_1d(s_arr)
    out_flat = np.empty(s_flat.shape)
    for i, s in enumerate(s_flat):
        reg_kernel = anti(s + taus) - anti(s - taus)
        smooth = h * float(np.dot(tw, reg_kernel * v_back))
        out_flat[i] = 0.5 * (c0 * step_integral(abs(s)) + smooth)
    if s_arr.ndim == 0:
        return float(out_flat[0])
    return out_flat.reshape(s_arr.shape)


def dissipated_energy(trajectory, model: SusceptibilityModel) -> np.ndarray:
    """Energy handed to the material per unit length by the final time,
    evaluated from the stored velocity history as

        E(x) = chi(0) * int v^2 dt
             + 1/2 * double-int v(t1) chi'(|t1 - t2|) v(t2) dt1 dt2.

    `trajectory` must carry a full midpoint-time history (a memory-kernel
    run with store_history=True); midpoint samples make both quadratures
    second order.  Matches the hidden-string energy of the equivalent
    extended run up to discretization and coupling-truncation error.
    """
    if getattr(trajectory, "history", None) is None:
        raise ValueError("trajectory must store its velocity history")
    v = trajectory.history
    h = trajectory.dt
    n_t = v.shape[0]
    chi0 = float(model.chi(0.0))
    delta_part = chi0 * h * np.sum(v * v, axis=0)

    taus = h * np.arange(n_t + 1)
    chi_vals = model.chi(taus)
    dchi = np.empty(n_t)
    dchi[1:] = (chi_vals[2:] - chi_vals[:-2]) / (2.0 * h)
    dchi[0] = (-3.0 * chi_vals[0] + 4.0 * chi_vals[1] - chi_vals[2]) / (2.0 * h)
    kmat = toeplitz(dchi)
    reg_part = 0.5 * h * h * np.sum(v * (kmat @ v), axis=0)
    return delta_part + reg_part
