"""Direct integration of the string with a memory term in its momentum
relation, plus the closed-form driven solution of the memoryless string
used as a reference.

Time stepping is kick-drift-kick.  The material relation

    f + integral_0^t chi(tau) f(t - tau) dtau = pi

is marched on the staggered (midpoint) time grid with trapezoid
quadrature in tau; only the newest sample sits under the implicit
1 + chi(0) dt / 2 factor, so each step stays explicit apart from that
scalar division.  The convolution window per region is capped by the
kernel's declared memory window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import gradient_energy, laplacian
from .scenario import DrivingForce, Scenario
from .susceptibility import ZeroSusceptibility

__all__ = ["dalembert", "dalembert_field", "TddTrajectory", "run_tdd"]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(64)


def dalembert(force: DrivingForce, gamma: float, x: float, t: float) -> float:
    """Driven solution of the memoryless string at rest before the force:
    phi(x, t) = (1 / 2v) * double integral of the force over the past cone
    |y - x| <= v (t - t'), with v = sqrt(gamma) the propagation speed.

    Separable forces use their closed-form spatial integral and per-panel
    Gauss-Legendre in t'; panels are split at the cone's crossings of the
    spatial support edges and at the force's time breakpoints, so each
    panel integrand is smooth.
    """
    v = math.sqrt(gamma)
    t_lo, t_hi = force.t_support
    t_hi = min(t_hi, t)
    if t_hi <= t_lo:
        return 0.0
    if not force.separable:
        return _dalembert_generic(force, v, x, t, t_lo, t_hi)
    cuts = {t_lo, t_hi}
    for edge in force.x_support:
        t_cross = t - abs(x - edge) / v
        if t_lo < t_cross < t_hi:
            cuts.add(t_cross)
    for t_break in force.time_breakpoints():
        if t_lo < t_break < t_hi:
            cuts.add(float(t_break))
    edges = sorted(cuts)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        tp = mid + half * _GAUSS_NODES
        reach = v * (t - tp)
        inner = force.x_integral(x - reach, x + reach)
        tf = np.array([force.time_factor(s) for s in tp])
        total += half * float(np.dot(_GAUSS_WEIGHTS, tf * inner))
    return total / (2.0 * v)


def _dalembert_generic(force, v, x, t, t_lo, t_hi):
    from scipy.integrate import quad

    def outer(tp):
        reach = v * (t - tp)
        lo = max(x - reach, force.x_support[0])
        hi = min(x + reach, force.x_support[1])
        if hi <= lo:
            return 0.0
        val, _ = quad(lambda y: force(np.array([y]), tp)[0], lo, hi, limit=100)
        return val

    pts = [tb for tb in force.time_breakpoints() if t_lo < tb < t_hi]
    val, _ = quad(outer, t_lo, t_hi, points=pts or None, limit=200)
    return val / (2.0 * v)


def dalembert_field(force: DrivingForce, gamma: float, x: np.ndarray, t: float) -> np.ndarray:
    """`dalembert` evaluated on an array of positions."""
    return np.array([dalembert(force, gamma, float(xi), t) for xi in np.asarray(x, dtype=float)])


@dataclass
class TddTrajectory:
    """Snapshots and time series from a memory-kernel run.

    `history` holds the midpoint-time velocity field (rate of change of
    the displacement) for every step; `f_pi` snapshots are averages of
    the two adjacent midpoints, so they are second-order values at the
    snapshot times.
    """

    x: np.ndarray
    dt: float
    t_start: float
    times: np.ndarray          # snapshot times
    phi: np.ndarray            # (n_snap, n_x)
    pi: np.ndarray             # (n_snap, n_x)
    f_pi: np.ndarray           # (n_snap, n_x)
    t_series: np.ndarray       # every integer step time
    e0_series: np.ndarray      # visible energy at integer steps
    work_series: np.ndarray    # cumulative work done by the force
    gamma: float
    history: np.ndarray | None = None        # (n_steps, n_x) midpoint velocities
    history_times: np.ndarray | None = None
    snapshot_steps: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def dissipated_series(self) -> np.ndarray:
        """Work put in minus visible energy: the running dissipation
        balance, nonnegative for a passive material."""
        return self.work_series - self.e0_series


def _region_weights(kernel, dt: float, n_steps: int, tol: float):
    """Trapezoid tau-weights dt*chi(j dt), j = 1..M, with the half end
    weight when the window is capped by the kernel's decay rather than by
    the start of the run."""
    window = kernel.memory_window(tol)
    if math.isfinite(window):
        m = min(n_steps, max(1, int(math.ceil(window / dt))))
        capped = m < n_steps
    else:
        m = n_steps
        capped = False
    w = dt * kernel.chi(dt * np.arange(1, m + 1))
    if capped and m >= 1:
        w[-1] *= 0.5
    return w


def run_tdd(scenario: Scenario, store_history: bool = True) -> TddTrajectory:
    grid = scenario.grid
    x = grid.x
    dx = grid.dx
    n_x = x.size
    dt = scenario.dt
    gamma = scenario.gamma
    n_steps = scenario.n_steps
    t_start = scenario.t_start
    force = scenario.force

    regions = []
    for sl, kernel in scenario.profile.region_slices(x):
        if isinstance(kernel, ZeroSusceptibility):
            regions.append((sl, None, None, 1.0))
        else:
            w = _region_weights(kernel, dt, n_steps, scenario.memory_tol)
            diag = 1.0 + 0.5 * dt * float(kernel.chi(0.0))
            regions.append((sl, kernel, w, diag))

    phi = np.zeros(n_x)
    pi = np.zeros(n_x)
    history = np.zeros((n_steps, n_x))
    fp_mid = np.zeros(n_x)
    damping = grid.damping_profile()
    decay = np.exp(-damping * dt) if damping is not None else None

    stride = scenario.snapshot_stride
    snap_steps = list(range(0, n_steps + 1, stride))
    if snap_steps[-1] != n_steps:
        snap_steps.append(n_steps)
    snap_steps_arr = np.array(snap_steps, dtype=int)
    snap_set = set(snap_steps)
    phi_snaps, pi_snaps = [], []

    t_series = t_start + dt * np.arange(n_steps + 1)
    work_series = np.zeros(n_steps + 1)
    grad_series = np.zeros(n_steps + 1)
    work = 0.0

    if 0 in snap_set:
        phi_snaps.append(phi.copy())
        pi_snaps.append(pi.copy())

    no_force = np.zeros(n_x)

    def force_at(t: float) -> np.ndarray:
        return force(x, t) if force is not None else no_force

    lap = np.empty(n_x)
    for n in range(n_steps):
        t_n = t_start + n * dt
        laplacian(phi, dx, grid.boundary, out=lap)
        pi += (0.5 * dt) * (gamma * lap + force_at(t_n))

        for sl, kernel, w, diag in regions:
            if kernel is None:
                fp_mid[sl] = pi[sl]
            else:
                m = min(n, w.size)
                if m:
                    conv = w[:m] @ history[n - m:n][::-1, sl]
                    fp_mid[sl] = (pi[sl] - conv) / diag
                else:
                    fp_mid[sl] = pi[sl] / diag
        history[n] = fp_mid

        phi += dt * fp_mid

        if force is not None:
            f_mid = force(x, t_n + 0.5 * dt)
            work += dt * dx * float(np.dot(f_mid, fp_mid))

        laplacian(phi, dx, grid.boundary, out=lap)
        pi += (0.5 * dt) * (gamma * lap + force_at(t_n + dt))

        if decay is not None:
            phi *= decay
            pi *= decay

        work_series[n + 1] = work
        grad_series[n + 1] = gamma * gradient_energy(phi, dx, grid.boundary)
        if (n + 1) in snap_set:
            phi_snaps.append(phi.copy())
            pi_snaps.append(pi.copy())

    # velocity at integer times: average of adjacent midpoints
    f_pi_int = np.zeros((n_steps + 1, n_x))
    if n_steps >= 1:
        f_pi_int[1:-1] = 0.5 * (history[:-1] + history[1:])
        f_pi_int[-1] = 1.5 * history[-1] - (0.5 * history[-2] if n_steps >= 2 else 0.0)
    e0_series = 0.5 * dx * np.sum(f_pi_int * f_pi_int, axis=1) + grad_series

    traj = TddTrajectory(
        x=x,
        dt=dt,
        t_start=t_start,
        times=t_start + dt * snap_steps_arr,
        phi=np.array(phi_snaps),
        pi=np.array(pi_snaps),
        f_pi=f_pi_int[snap_steps_arr],
        t_series=t_series,
        e0_series=e0_series,
        work_series=work_series,
        gamma=gamma,
        history=history if store_history else None,
        history_times=t_start + dt * (np.arange(n_steps) + 0.5) if store_history else None,
        snapshot_steps=snap_steps_arr,
    )
    return traj
