"""Steady-state analysis: eigenmode families of the string with memory,
their hidden-string profiles, fluxes, plane waves with momentum/stress
bookkeeping, and reflection off a lossy half-line.

Frequency conventions: time dependence e^{-i omega t}; chi_hat is the
half-line transform of the memory kernel evaluated on the real axis from
above, so passive kernels have omega * Im chi_hat >= 0.  The undamped
dispersion is gamma k^2 = omega^2 (phase speed sqrt(gamma)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .coupling import CouplingFunction, coupling_hat
from .lattice import centered_derivative
from .susceptibility import SusceptibilityModel

__all__ = [
    "causal_wavenumber",
    "SpectralEigenmode",
    "spectral_mode",
    "hidden_profile",
    "mode_flux_and_dissipation",
    "PlaneWave",
    "plane_wave",
    "StressExtrapolation",
    "plane_wave_stress_regularized",
    "ScatteringSolution",
    "scatter_half_line",
    "verify_fourier_laplace",
    "mode_in_dynamics",
]


def _chi_hat_at(model, x: float, omega: complex) -> complex:
    from .susceptibility import chi_hat

    return complex(chi_hat(model, x, omega))


def causal_wavenumber(model, gamma: float, omega: float, x: float = 0.0) -> complex:
    """Principal upper-half-plane root of gamma k^2 = omega^2 (1 + chi_hat).

    For a lossless value (chi_hat real, 1 + chi_hat > 0) this is the
    positive real root, the limit from within the upper half-plane.
    """
    ch = _chi_hat_at(model, x, omega)
    one = 1.0 + ch
    if one == 0.0:
        raise ValueError("degenerate medium: 1 + chi_hat(omega) = 0")
    k = np.sqrt(complex(omega * omega * one / gamma))
    if k.imag < 0.0:
        k = -k
    return complex(k)


# ---------------------------------------------------------------------------
# spectral / causal eigenfunctions on a grid


@dataclass
class SpectralEigenmode:
    """A frequency-omega eigenfunction on a spatial grid.

    `phi` satisfies the three-point form of
        gamma phi'' + omega^2 (1 + Re chi_hat) phi + i omega^2 Im chi_hat g = 0
    to machine precision (`grid_residual`); causal/anti-causal kinds take
    g = phi with the full complex (resp. conjugated) susceptibility.  `a`
    is the even hidden-tail coefficient g * sigma_hat / 2; spectral modes
    carry no odd tail (b = 0).
    """

    omega: float
    gamma: float
    x: np.ndarray
    phi: np.ndarray
    g: np.ndarray
    kind: str
    chi_hat_x: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def grid_residual(self) -> float:
        dx = self.x[1] - self.x[0]
        lap = (self.phi[2:] - 2.0 * self.phi[1:-1] + self.phi[:-2]) / (dx * dx)
        ch = self.chi_hat_x[1:-1]
        if self.kind == "spectral":
            body = (
                self.omega**2 * (1.0 + ch.real) * self.phi[1:-1]
                + 1j * self.omega**2 * ch.imag * self.g[1:-1]
            )
        elif self.kind == "causal":
            body = self.omega**2 * (1.0 + ch) * self.phi[1:-1]
        else:
            body = self.omega**2 * (1.0 + np.conj(ch)) * self.phi[1:-1]
        resid = self.gamma * lap + body
        return float(np.abs(resid).max())


def _sigma_hat_from_kernel(model, x, omega: float) -> np.ndarray:
    """sqrt(2 omega Im chi_hat(x, omega)): the coupling strength squared
    root entering the hidden tail coefficients."""
    from .susceptibility import friction_spectrum

    d = np.array([friction_spectrum(model, float(xi), omega) for xi in np.atleast_1d(x)])
    return np.sqrt(2.0 * np.clip(d, 0.0, None))


def spectral_mode(
    omega: float,
    profile,
    gamma: float,
    x_grid: np.ndarray,
    boundary: tuple[complex, complex] | None = None,
    g=None,
    kind: str = "spectral",
    target_phi: np.ndarray | None = None,
    source_tol: float = 1e-9,
) -> SpectralEigenmode:
    """March the mode ODE on a uniform grid, or invert it for the source.

    Forward: `boundary` fixes the first two grid values and the
    three-point recurrence produces the rest; `g` (array or callable, or
    None for g = 0) is the hidden-excitation source of a spectral mode;
    causal/anti-causal kinds ignore `g` and close the equation with
    g = phi.

    Inverse (`target_phi` given): returns the mode whose source g
    realizes the given displacement profile.  Wherever the lossless
    operator's residual is nonzero the medium must absorb
    (Im chi_hat != 0); otherwise the target is rejected.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size < 3:
        raise ValueError("x_grid must be 1d with at least 3 nodes")
    dx = float(x_grid[1] - x_grid[0])
    if not np.allclose(np.diff(x_grid), dx, rtol=0.0, atol=1e-12 * max(abs(dx), 1.0)):
        raise ValueError("x_grid must be uniform")
    if kind not in ("spectral", "causal", "anticausal"):
        raise ValueError(f"unknown mode kind {kind!r}")
    ch = np.array([_chi_hat_at(profile, float(xi), omega) for xi in x_grid])
    n = x_grid.size
    w2 = omega * omega

    if target_phi is not None:
        phi = np.asarray(target_phi, dtype=complex)
        if phi.shape != x_grid.shape:
            raise ValueError("target_phi must match x_grid")
        if kind != "spectral":
            raise ValueError("inverse construction applies to spectral modes")
        lap = np.zeros(n, dtype=complex)
        lap[1:-1] = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / (dx * dx)
        lossless = gamma * lap + w2 * (1.0 + ch.real) * phi
        g_arr = np.zeros(n, dtype=complex)
        interior = slice(1, n - 1)
        absorbing = ch.imag != 0.0
        scale = max(float(np.abs(lossless[interior]).max()), 1e-300)
        bad = (~absorbing[interior]) & (
            np.abs(lossless[interior]) > source_tol * max(scale, float(np.abs(phi).max()) * w2)
        )
        if bad.any():
            raise ValueError(
                "target mode needs absorption outside the dissipative set "
                f"({int(bad.sum())} grid points with Im chi_hat = 0)"
            )
        mask = absorbing.copy()
        mask[0] = mask[-1] = False
        g_arr[mask] = -lossless[mask] / (1j * w2 * ch.imag[mask])
        sig = _sigma_hat_from_kernel(profile, x_grid, omega)
        return SpectralEigenmode(
            omega=omega, gamma=gamma, x=x_grid, phi=phi, g=g_arr, kind="spectral",
            chi_hat_x=ch, a=0.5 * sig * g_arr, b=np.zeros(n, dtype=complex),
        )

    if boundary is None:
        raise ValueError("boundary: first two grid values required for marching")
    phi = np.zeros(n, dtype=complex)
    phi[0], phi[1] = complex(boundary[0]), complex(boundary[1])

    if kind == "spectral":
        if g is None:
            g_arr = np.zeros(n, dtype=complex)
        elif callable(g):
            g_arr = np.asarray(g(x_grid), dtype=complex)
        else:
            g_arr = np.asarray(g, dtype=complex)
            if g_arr.shape != x_grid.shape:
                raise ValueError("g must match x_grid")
        coef = w2 * (1.0 + ch.real)
        for i in range(1, n - 1):
            phi[i + 1] = (
                2.0 * phi[i]
                - phi[i - 1]
                - (dx * dx / gamma) * (coef[i] * phi[i] + 1j * w2 * ch.imag[i] * g_arr[i])
            )
    else:
        eff = 1.0 + (ch if kind == "causal" else np.conj(ch))
        coef = w2 * eff
        for i in range(1, n - 1):
            phi[i + 1] = 2.0 * phi[i] - phi[i - 1] - (dx * dx / gamma) * coef[i] * phi[i]
        # spectral-form source closing the complex equation: +phi for the
        # causal branch, -phi for the anti-causal one
        g_arr = phi.copy() if kind == "causal" else -phi

    sig = _sigma_hat_from_kernel(profile, x_grid, omega)
    a_src = g_arr if kind != "anticausal" else phi
    return SpectralEigenmode(
        omega=omega, gamma=gamma, x=x_grid, phi=phi, g=g_arr, kind=kind,
        chi_hat_x=ch, a=0.5 * sig * a_src, b=np.zeros(n, dtype=complex),
    )


def mode_flux_and_dissipation(mode: SpectralEigenmode) -> tuple[np.ndarray, np.ndarray]:
    """Energy flux J = gamma omega Im(conj(phi) phi') and the local
    dissipation rate -dJ/dx = omega^3 Im chi_hat Re(conj(phi) g)."""
    dx = float(mode.x[1] - mode.x[0])
    dphi = centered_derivative(mode.phi, dx, "dirichlet")
    flux = mode.gamma * mode.omega * np.imag(np.conj(mode.phi) * dphi)
    dissipation = mode.omega**3 * mode.chi_hat_x.imag * np.real(np.conj(mode.phi) * mode.g)
    return flux, dissipation


# ---------------------------------------------------------------------------
# hidden-string profiles


class _CouplingQuadrature:
    """Prefix-sum evaluator of the oscillatory integrals over the regular
    coupling part used by every hidden-profile formula."""

    def __init__(self, coupling: CouplingFunction, omega: float):
        self.c = coupling
        self.omega = float(omega)
        s = coupling.s_grid
        reg = coupling.regular
        self.cos_cum = cumulative_trapezoid(reg * np.cos(omega * s), s, initial=0.0)
        self.sin_cum = cumulative_trapezoid(reg * np.sin(omega * s), s, initial=0.0)
        self.cos_tot = float(self.cos_cum[-1])
        self.sin_tot = float(self.sin_cum[-1])
        self._s = s

    def _below(self, cum, s):
        return np.interp(s, self._s, cum, left=0.0, right=cum[-1])

    def sin_kernel(self, s):
        """int sin(omega |s - s'|) regular(s') ds' and its s-derivative."""
        w = self.omega
        a_le = self._below(self.cos_cum, s)
        b_le = self._below(self.sin_cum, s)
        a_diff = 2.0 * a_le - self.cos_tot
        b_diff = self.sin_tot - 2.0 * b_le
        sn, cs = np.sin(w * s), np.cos(w * s)
        val = sn * a_diff + cs * b_diff
        der = w * (cs * a_diff - sn * b_diff)
        return val, der

    def cos_kernel(self, s):
        """int cos(omega (s - s')) regular(s') ds' and its s-derivative."""
        w = self.omega
        sn, cs = np.sin(w * s), np.cos(w * s)
        val = cs * self.cos_tot + sn * self.sin_tot
        der = w * (cs * self.sin_tot - sn * self.cos_tot)
        return val, der


def _hidden_profile_terms(coupling, omega, s, kind, with_derivative=False):
    s = np.asarray(s, dtype=float)
    quad = _CouplingQuadrature(coupling, omega)
    c0 = coupling.delta_weight
    w = omega
    sgn = np.sign(s)
    w_reg, dw_reg = quad.sin_kernel(s)
    if kind == "spectral":
        even = c0 * np.sin(w * np.abs(s)) + w_reg
        d_even = c0 * w * sgn * np.cos(w * s) + dw_reg
        return even, d_even
    c_reg, dc_reg = quad.cos_kernel(s)
    exp_abs = np.exp(1j * w * np.abs(s))
    if kind == "causal":
        val = c0 * exp_abs + c_reg + 1j * w_reg
        der = 1j * w * sgn * c0 * exp_abs + dc_reg + 1j * dw_reg
    else:  # anticausal
        val = c0 * np.conj(exp_abs) + c_reg - 1j * w_reg
        der = -1j * w * sgn * c0 * np.conj(exp_abs) + dc_reg - 1j * dw_reg
    return val, der


def hidden_profile(
    coupling: CouplingFunction,
    omega: float,
    s,
    phi_value: complex = 1.0,
    g_value: complex | None = None,
    kind: str = "spectral",
):
    """Hidden-string displacement of a frequency-omega mode.

    spectral: psi = (i phi/2) int sin(omega|s'-s|) sigma(s') ds'
                  + (g/2) cos(omega s) sigma_hat(omega),
    causal / anti-causal: psi = (phi/2) int e^{+-i omega|s'-s|} sigma,
    with the delta part of sigma handled in closed form.
    """
    if kind not in ("spectral", "causal", "anticausal"):
        raise ValueError(f"unknown mode kind {kind!r}")
    s_arr = np.asarray(s, dtype=float)
    if kind == "spectral":
        even, _ = _hidden_profile_terms(coupling, omega, s_arr, "spectral")
        g = phi_value if g_value is None else g_value
        sig_hat = coupling_hat(coupling, omega)
        out = 0.5j * phi_value * even + 0.5 * g * np.cos(omega * s_arr) * sig_hat
    else:
        val, _ = _hidden_profile_terms(coupling, omega, s_arr, kind)
        out = 0.5 * phi_value * val
    return out if s_arr.ndim else complex(out)


# ---------------------------------------------------------------------------
# plane waves


@dataclass(frozen=True)
class PlaneWave:
    """Homogeneous real-(omega, k) plane wave of the extended system.

    The mixing parameter fixes the hidden excitation g0 = i*mixing*phi0;
    the dispersion gamma k^2 = omega^2 (1 + Re chi_hat - mixing*Im chi_hat)
    closes the visible equation with everything real.

    Energy/momentum use the complex-modulus convention (densities are
    |field|^2-based, constant in x and t): the factor 1/2 in e0 pairs
    with |phi0|^2 exactly as the quadratic forms of the real theory pair
    with their real fields.
    """

    omega: float
    k: float
    mixing: float
    phi0: complex
    gamma: float
    chi_hat: complex

    @property
    def g0(self) -> complex:
        return 1j * self.mixing * self.phi0

    @property
    def amp2(self) -> float:
        return float(abs(self.phi0) ** 2)

    @property
    def e0(self) -> float:
        return 0.5 * (self.omega**2 + self.gamma * self.k**2) * self.amp2

    @property
    def p0(self) -> float:
        return self.gamma * self.k**3 / self.omega * self.amp2

    @property
    def flux(self) -> float:
        return self.gamma * self.omega * self.k * self.amp2

    @property
    def stress_total(self) -> float:
        return self.gamma * self.k**2 * self.amp2

    @property
    def delta0(self) -> complex:
        return 1j * self.omega * self.phi0 * (
            self.mixing * self.chi_hat.imag - self.chi_hat.real
        )

    @property
    def stress_hidden(self) -> float:
        return -0.5 * self.omega * float(np.imag(np.conj(self.delta0) * self.phi0))

    @property
    def stress_visible(self) -> float:
        """Visible momentum flux 1/2|v|^2 + gamma/2 |phi'|^2 + Re(conj(Delta) v)
        with v = -i omega phi0 and Delta = pi - v the memory part of the
        momentum.  Together with the hidden stress this must assemble to
        gamma k^2 |phi0|^2 — the undamped-string value."""
        v0 = -1j * self.omega * self.phi0
        quad = 0.5 * (self.omega**2 + self.gamma * self.k**2) * self.amp2
        cross = float(np.real(np.conj(self.delta0) * v0))
        return quad + cross


def plane_wave(
    omega: float,
    model: SusceptibilityModel,
    gamma: float,
    k: float | None = None,
    mixing: float | None = None,
    phi0: complex = 1.0,
) -> PlaneWave:
    """Construct a plane wave at real omega, solving for whichever of
    (k, mixing) is not given.

    A lossless frequency (Im chi_hat = 0) leaves no free mixing: k must
    sit on the undamped dispersion gamma k^2 = omega^2 (1 + Re chi_hat).
    """
    if omega <= 0.0:
        raise ValueError("omega must be > 0")
    if (k is None) == (mixing is None):
        raise ValueError("give exactly one of k, mixing")
    ch = _chi_hat_at(model, 0.0, omega)
    if ch.imag == 0.0:
        k_sq = omega * omega * (1.0 + ch.real) / gamma
        if k_sq < 0.0:
            raise ValueError("evanescent: 1 + Re chi_hat < 0 at this omega")
        k_disp = math.sqrt(k_sq)
        if k is None:
            k = k_disp
        elif not math.isclose(k, k_disp, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(
                "lossless frequency: k is constrained to the dispersion "
                f"relation (expected {k_disp:.12g}, got {k:g})"
            )
        return PlaneWave(omega=omega, k=float(k), mixing=0.0 if mixing is None else float(mixing),
                         phi0=complex(phi0), gamma=gamma, chi_hat=ch)
    if k is None:
        rhs = 1.0 + ch.real - mixing * ch.imag
        if rhs < 0.0:
            raise ValueError(
                "no propagating wave: 1 + Re chi_hat - mixing*Im chi_hat < 0"
            )
        k = omega * math.sqrt(rhs / gamma)
    else:
        mixing = (1.0 + ch.real - gamma * k * k / (omega * omega)) / ch.imag
    return PlaneWave(omega=omega, k=float(k), mixing=float(mixing),
                     phi0=complex(phi0), gamma=gamma, chi_hat=ch)


@dataclass
class StressExtrapolation:
    """delta -> 0 extrapolation record for the regularized hidden stress."""

    deltas: np.ndarray
    values: np.ndarray
    limit: float
    slope: float
    fit_residual: float


def plane_wave_stress_regularized(
    pw: PlaneWave,
    coupling: CouplingFunction,
    deltas=(0.1, 0.05, 0.025),
) -> StressExtrapolation:
    """Hidden stress of a plane wave via the damped lattice sum

        T_hs(delta) = 1/2 int e^{-delta |s|} (|theta|^2 - |d_s psi|^2) ds

    on the coupling's s-grid, extrapolated linearly in delta to 0.  The
    integrand is an undamped oscillation at large |s| (the integral is
    only conditionally convergent), so the limit — not any single
    delta — is the defined stress; it must land on
    -omega/2 * Im(conj(Delta0) phi0).
    """
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    if deltas.size < 2 or np.any(deltas <= 0.0):
        raise ValueError("need at least two positive deltas")
    w = pw.omega
    s = coupling.s_grid
    even, d_even = _hidden_profile_terms(coupling, w, s, "spectral")
    # psi per unit phi0: (i/2)(even part) + (i*mixing/2) sigma_hat cos(omega s)
    sig_hat = coupling_hat(coupling, w)
    psi = pw.phi0 * (0.5j * even + 0.5j * pw.mixing * sig_hat * np.cos(w * s))
    dpsi = pw.phi0 * (0.5j * d_even - 0.5j * pw.mixing * sig_hat * w * np.sin(w * s))
    integrand = (w * w) * np.abs(psi) ** 2 - np.abs(dpsi) ** 2
    # The delta part of the coupling kinks psi at the origin, so psi'
    # jumps there; the node must carry the mean of the one-sided
    # |psi'|^2 limits or the quadrature is biased by O(ds) * (c0 w/2)^2.
    i0 = int(np.argmin(np.abs(s)))
    jump_half = pw.phi0 * 0.5j * coupling.delta_weight * w
    sided = 0.5 * (np.abs(dpsi[i0] + jump_half) ** 2 + np.abs(dpsi[i0] - jump_half) ** 2)
    integrand[i0] = (w * w) * np.abs(psi[i0]) ** 2 - sided

    # Past the coupling support psi is the pure even oscillation
    # A e^{i w s} + B e^{-i w s}; both tails summed in closed form, so
    # small delta is not polluted by truncating the conditionally
    # convergent part at the grid edge.
    mag = np.abs(coupling.regular)
    nz = np.nonzero(mag > 1e-10 * max(float(mag.max()), 1e-300))[0]
    s_reg = float(np.abs(s[nz]).max()) if nz.size else 0.0
    i_cut = int(np.searchsorted(s, min(s_reg + 4.0 * np.pi / w, float(s[-1]))))
    i_cut = min(i_cut, s.size - 1)
    s_cut = float(s[i_cut])
    core = slice(s.size - 1 - i_cut, i_cut + 1)
    a_coef = sig_hat * (pw.phi0 + pw.g0) / 4.0
    b_coef = sig_hat * (pw.g0 - pw.phi0) / 4.0
    tail_num = np.conj(a_coef) * b_coef

    values = np.empty(deltas.size)
    for i, d in enumerate(deltas):
        damped = integrand[core] * np.exp(-d * np.abs(s[core]))
        lam = d + 2j * w
        tail_one = 4.0 * w * w * float(np.real(tail_num * np.exp(-lam * s_cut) / lam))
        values[i] = 0.5 * float(np.trapezoid(damped, s[core])) + tail_one
    coeffs, res, *_ = np.polyfit(deltas, values, 1, full=True)
    limit = float(coeffs[1])
    resid = float(np.sqrt(res[0])) if res.size else 0.0
    return StressExtrapolation(
        deltas=deltas, values=values, limit=limit,
        slope=float(coeffs[0]), fit_residual=resid,
    )


# ---------------------------------------------------------------------------
# reflection off a lossy half-line


@dataclass(frozen=True)
class ScatteringSolution:
    """Causal solution with a unit wave incident from the lossless side
    (x < 0) onto the dispersive half-line x > 0.

    phi(x) = e^{i k_less x} + r e^{-i k_less x}   (x <= 0)
           = v_trans e^{i k_greater x}            (x >= 0)
    """

    omega: float
    gamma: float
    chi_hat: complex
    k_less: float
    k_greater: complex
    rho: complex
    r: complex
    v_trans: complex

    def phi(self, x):
        x_arr = np.asarray(x, dtype=float)
        left = np.exp(1j * self.k_less * x_arr) + self.r * np.exp(-1j * self.k_less * x_arr)
        right = self.v_trans * np.exp(1j * self.k_greater * x_arr)
        out = np.where(x_arr < 0.0, left, right)
        return out if x_arr.ndim else complex(out)

    def flux(self, x):
        """Energy flux J(x): constant on the lossless side, decaying at
        rate 2 Im k_greater inside the absorber."""
        x_arr = np.asarray(x, dtype=float)
        j0 = math.sqrt(self.gamma) * self.omega**2 * (1.0 - abs(self.r) ** 2)
        out = j0 * np.where(
            x_arr < 0.0, 1.0, np.exp(-2.0 * self.k_greater.imag * x_arr)
        )
        return out if x_arr.ndim else float(out)

    def dissipation_density(self, x):
        """-dJ/dx: nonnegative, supported on the absorbing side."""
        x_arr = np.asarray(x, dtype=float)
        j0 = math.sqrt(self.gamma) * self.omega**2 * (1.0 - abs(self.r) ** 2)
        rate = 2.0 * self.k_greater.imag
        out = np.where(x_arr < 0.0, 0.0, j0 * rate * np.exp(-rate * x_arr))
        return out if x_arr.ndim else float(out)

    @property
    def total_dissipation(self) -> float:
        return math.sqrt(self.gamma) * self.omega**2 * (1.0 - abs(self.r) ** 2)


def scatter_half_line(
    omega: float, model: SusceptibilityModel, gamma: float
) -> ScatteringSolution:
    """Reflection/transmission coefficients at the interface x = 0,
    from continuity of phi and phi': r = (1-rho)/(1+rho),
    v_trans = 2/(1+rho), rho = k_greater/k_less."""
    if omega == 0.0:
        raise ValueError("omega must be nonzero")
    ch = _chi_hat_at(model, 0.0, omega)
    if 1.0 + ch == 0.0:
        raise ValueError("degenerate medium: 1 + chi_hat(omega) = 0")
    k_less = omega / math.sqrt(gamma)
    k_greater = causal_wavenumber(model, gamma, omega)
    # k_greater stays in the upper half-plane for either sign of omega
    # (decay at x -> +inf), while k_less carries the sign of omega, so
    # the quotient is negated for omega < 0 and Re rho stays >= 0.
    rho = k_greater / k_less
    r = (1.0 - rho) / (1.0 + rho)
    v_trans = 2.0 / (1.0 + rho)
    return ScatteringSolution(
        omega=omega, gamma=gamma, chi_hat=ch, k_less=k_less,
        k_greater=k_greater, rho=rho, r=r, v_trans=v_trans,
    )


# ---------------------------------------------------------------------------
# dynamic cross-checks


def verify_fourier_laplace(trajectory, scenario, zeta: complex) -> float:
    """Max interior residual of the transformed equation of motion

        gamma phi~'' + zeta^2 (1 + chi_hat(zeta)) phi~ + f~ = 0

    with phi~(x) = int phi(x,t) e^{i zeta t} dt taken over the stored
    snapshots (trapezoid) and f~ the same transform of the force.  Needs
    Im zeta > 0 and a run long enough that the damped tail is negligible.
    """
    if zeta.imag <= 0.0:
        raise ValueError("zeta must lie in the open upper half-plane")
    times = trajectory.times
    phi = trajectory.phi
    if times.size < 8:
        raise ValueError("trajectory too short for the transform")
    decay = math.exp(-zeta.imag * float(times[-1] - times[0]))
    tail_amp = float(np.abs(phi[-1]).max()) * decay
    scale_amp = float(np.abs(phi).max())
    if tail_amp > 1e-8 * max(scale_amp, 1e-300):
        raise ValueError(
            "trajectory too short: transform tail "
            f"{tail_amp:.2e} not negligible at Im zeta = {zeta.imag:g}"
        )
    weights = np.gradient(times)  # trapezoid on a possibly ragged final step
    kernel = np.exp(1j * zeta * times) * weights
    phi_t = kernel @ phi

    x = trajectory.x
    force = scenario.force
    f_rows = np.array([force(x, float(t)) for t in times]) if force is not None else np.zeros((times.size, x.size))
    f_t = kernel @ f_rows

    dx = float(x[1] - x[0])
    lap = (phi_t[2:] - 2.0 * phi_t[1:-1] + phi_t[:-2]) / (dx * dx)
    ch = _chi_hat_at(scenario.profile, float(x[x.size // 2]), zeta)
    resid = scenario.gamma * lap + zeta * zeta * (1.0 + ch) * phi_t[1:-1] + f_t[1:-1]
    return float(np.abs(resid).max())


def mode_in_dynamics(
    scenario,
    omega: float,
    phi_mode: np.ndarray,
    psi_mode: np.ndarray,
    window=None,
) -> float:
    """Seed the hidden-string integrator with a complex eigenmode (as two
    real runs), evolve to t_final, and return the relative interior
    deviation of phi(T) e^{i omega T} from phi(0).

    psi_mode has shape (n_x, n_s); the lattice momentum profile is built
    self-consistently: pi = -i omega phi + psi @ read-weights, and
    theta = -i omega psi.
    """
    from .extended_dynamics import ExtendedState, ExtendedSystem, run_extended

    system = ExtendedSystem(scenario)
    phi_mode = np.asarray(phi_mode, dtype=complex)
    psi_mode = np.asarray(psi_mode, dtype=complex)
    if phi_mode.shape != (system.n_x,) or psi_mode.shape != (system.n_x, system.n_s):
        raise ValueError("mode arrays must match the scenario grids")
    pi_mode = -1j * omega * phi_mode
    for reg in system.regions:
        pi_mode[reg.sl] += psi_mode[reg.sl] @ reg.read
    theta_mode = -1j * omega * psi_mode

    results = []
    for part in (np.real, np.imag):
        state = ExtendedState(
            t=scenario.t_start,
            phi=np.ascontiguousarray(part(phi_mode)),
            pi=np.ascontiguousarray(part(pi_mode)),
            psi=np.ascontiguousarray(part(psi_mode)),
            theta=np.ascontiguousarray(part(theta_mode)),
        )
        results.append(run_extended(scenario, initial_state=state, store_f_pi_series=False))
    t_end = float(results[0].t_series[-1])
    phi_c = results[0].final_state.phi + 1j * results[1].final_state.phi
    unwound = phi_c * np.exp(1j * omega * (t_end - scenario.t_start))
    dev = np.abs(unwound - phi_mode)
    if window is not None:
        dev = dev[window]
    return float(dev.max() / max(np.abs(phi_mode).max(), 1e-300))
