"""Susceptibility kernels for a string with time-dispersive dissipation.

The material memory enters the wave equation through a causal kernel
``chi(x, tau)`` acting on the velocity history.  Its half-plane transform

    chi_hat(zeta) = int_0^inf exp(i zeta tau) chi(tau) dtau,   Im zeta >= 0,

is analytic in the upper half-plane.  On the real axis the power
dissipation condition (PDC) requires the friction spectrum

    D(omega) = omega * Im chi_hat(omega) >= 0,

which is the model-independent statement that the medium absorbs energy
at every frequency.  D is even in omega and tends to chi(0+) as
omega -> inf (integrate by parts and use Riemann-Lebesgue), a limit the
Kramers-Kronig tail estimate below relies on.

Spatial dependence is piecewise constant: a profile is a table of
non-overlapping regions, each carrying one homogeneous kernel; points
not covered by any region carry the zero kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "SusceptibilityModel",
    "ZeroSusceptibility",
    "ConstantSusceptibility",
    "DebyeSusceptibility",
    "TabulatedSusceptibility",
    "SusceptibilityProfile",
    "PdcReport",
    "chi_time",
    "chi_hat",
    "friction_spectrum",
    "check_pdc",
    "kramers_kronig_residual",
    "kernel_from_config",
    "profile_from_config",
    "tabulated_from_csv",
]

# Relative offset used when a quadrature grid needs the friction spectrum
# "just above" omega = 0 (the spectrum is a density; its pointwise value at
# exactly 0 is 0 by the omega factor and must not poison quadrature nodes).
_ZERO_NODE_OFFSET = 1e-9


def _restore_shape(values: np.ndarray, scalar: bool):
    if scalar:
        return values[()] if values.ndim == 0 else values.reshape(())[()]
    return values


class SusceptibilityModel:
    """Base class for homogeneous causal memory kernels."""

    def chi(self, tau):
        """Kernel value chi(tau) for tau >= 0 (vectorized)."""
        raise NotImplementedError

    def chi_hat(self, zeta):
        """Half-plane transform at zeta with Im zeta >= 0 (vectorized)."""
        raise NotImplementedError

    def friction_limit(self) -> float:
        """High-frequency limit of the friction spectrum, equal to chi(0+)."""
        raise NotImplementedError

    def memory_window(self, tol: float) -> float:
        """Length of history beyond which the kernel is below tol * scale.

        Returns inf for kernels without decay.
        """
        raise NotImplementedError

    def friction_spectrum(self, omega):
        """Friction spectrum D(omega) = omega * Im chi_hat(omega).

        Shares the chi_hat code path; D(0) = 0 exactly by the omega factor.
        """
        omega_arr = np.asarray(omega, dtype=float)
        scalar = omega_arr.ndim == 0
        omega_arr = np.atleast_1d(omega_arr)
        out = np.zeros(omega_arr.shape)
        nz = omega_arr != 0.0
        if np.any(nz):
            out[nz] = omega_arr[nz] * np.imag(self.chi_hat(omega_arr[nz]))
        return _restore_shape(out, scalar)

    def friction_density(self, omega):
        """Friction spectrum as a spectral density, regular across omega = 0.

        Identical to friction_spectrum away from 0; the omega = 0 node is
        evaluated in the limit from above so that quadratures over the
        density (coupling construction, dispersion-relation integrals) see
        the measure's density rather than the removable pointwise zero.
        """
        omega_arr = np.atleast_1d(np.asarray(omega, dtype=float)).copy()
        scalar = np.ndim(omega) == 0
        scale = np.max(np.abs(omega_arr)) if omega_arr.size else 1.0
        if scale == 0.0:
            scale = 1.0
        floor = _ZERO_NODE_OFFSET * scale
        omega_arr[omega_arr == 0.0] = floor
        out = np.asarray(self.friction_spectrum(omega_arr))
        return _restore_shape(out, scalar)

    def _check_tau(self, tau_arr: np.ndarray) -> None:
        if np.any(tau_arr < 0.0):
            raise ValueError("chi(tau) is a causal kernel; tau must be >= 0")

    def _check_zeta(self, zeta_arr: np.ndarray) -> None:
        if np.any(np.imag(zeta_arr) < 0.0):
            raise ValueError(
                "chi_hat is defined on the closed upper half-plane; "
                "Im zeta must be >= 0"
            )


@dataclass(frozen=True)
class ZeroSusceptibility(SusceptibilityModel):
    """No memory: the string is a plain undamped wave medium."""

    def chi(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        self._check_tau(tau_arr)
        return _restore_shape(np.zeros_like(tau_arr), tau_arr.ndim == 0)

    def chi_hat(self, zeta):
        zeta_arr = np.asarray(zeta, dtype=complex)
        self._check_zeta(zeta_arr)
        out = np.zeros_like(zeta_arr)
        return _restore_shape(out, zeta_arr.ndim == 0)

    def friction_limit(self) -> float:
        return 0.0

    def memory_window(self, tol: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantSusceptibility(SusceptibilityModel):
    """Flat kernel chi(tau) = amplitude: instantaneous viscous friction.

    chi_hat(zeta) = i * amplitude / zeta, understood as the limit from
    within the upper half-plane; zeta = 0 is a pole and is rejected.
    The friction spectrum is flat (= amplitude) for omega != 0.
    """

    amplitude: float

    def chi(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        self._check_tau(tau_arr)
        out = np.full(tau_arr.shape, float(self.amplitude))
        return _restore_shape(out, tau_arr.ndim == 0)

    def chi_hat(self, zeta):
        zeta_arr = np.asarray(zeta, dtype=complex)
        self._check_zeta(zeta_arr)
        if np.any(zeta_arr == 0.0):
            raise ValueError("constant kernel: chi_hat has a pole at zeta = 0")
        out = 1j * self.amplitude / zeta_arr
        return _restore_shape(out, zeta_arr.ndim == 0)

    def friction_limit(self) -> float:
        return float(self.amplitude)

    def memory_window(self, tol: float) -> float:
        return math.inf if self.amplitude != 0.0 else 0.0


@dataclass(frozen=True)
class DebyeSusceptibility(SusceptibilityModel):
    """Exponential relaxation chi(tau) = amplitude * exp(-rate * tau).

    chi_hat(zeta) = amplitude / (rate - i zeta), analytic for
    Im zeta > -rate, so the whole closed upper half-plane is safe.
    Friction spectrum amplitude * omega^2 / (rate^2 + omega^2).
    """

    amplitude: float
    rate: float

    def __post_init__(self):
        if self.rate <= 0.0:
            raise ValueError("debye kernel: rate must be > 0")

    def chi(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        self._check_tau(tau_arr)
        out = self.amplitude * np.exp(-self.rate * tau_arr)
        return _restore_shape(out, tau_arr.ndim == 0)

    def chi_hat(self, zeta):
        zeta_arr = np.asarray(zeta, dtype=complex)
        self._check_zeta(zeta_arr)
        out = self.amplitude / (self.rate - 1j * zeta_arr)
        return _restore_shape(out, zeta_arr.ndim == 0)

    def friction_limit(self) -> float:
        return float(self.amplitude)

    def memory_window(self, tol: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        return math.log(1.0 / tol) / self.rate


@dataclass(frozen=True)
class TabulatedSusceptibility(SusceptibilityModel):
    """Kernel given by samples on a tau-grid, linearly interpolated.

    The kernel is taken to vanish beyond the last sample.  tail_coef and
    tail_rate declare the exponential bound |chi(tau)| <= tail_coef *
    exp(-tail_rate * tau) satisfied by the underlying kernel; the bound
    feeds the transform truncation estimate, not the interpolant itself.
    """

    tau_grid: np.ndarray
    samples: np.ndarray
    tail_coef: float = 0.0
    tail_rate: float = 1.0

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        val = np.asarray(self.samples, dtype=float)
        if tau.ndim != 1 or tau.size < 2:
            raise ValueError("tabulated kernel: need at least two tau samples")
        if val.shape != tau.shape:
            raise ValueError("tabulated kernel: samples must match tau grid")
        if tau[0] != 0.0:
            raise ValueError("tabulated kernel: tau grid must start at 0")
        if np.any(np.diff(tau) <= 0.0):
            raise ValueError("tabulated kernel: tau grid must increase")
        if self.tail_rate <= 0.0:
            raise ValueError("tabulated kernel: tail_rate must be > 0")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "samples", val)

    def chi(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        self._check_tau(tau_arr)
        out = np.interp(tau_arr, self.tau_grid, self.samples, right=0.0)
        return _restore_shape(np.asarray(out), tau_arr.ndim == 0)

    def chi_hat(self, zeta):
        zeta_arr = np.asarray(zeta, dtype=complex)
        self._check_zeta(zeta_arr)
        flat = np.atleast_1d(zeta_arr).ravel()
        vals = np.empty(flat.size, dtype=complex)
        # block the outer product so huge frequency grids stay in cache
        block = max(1, 2**21 // self.tau_grid.size)
        for start in range(0, flat.size, block):
            piece = flat[start:start + block]
            phase = np.exp(1j * np.multiply.outer(piece, self.tau_grid))
            vals[start:start + block] = simpson(phase * self.samples, x=self.tau_grid, axis=-1)
        out = vals.reshape(np.atleast_1d(zeta_arr).shape)
        if zeta_arr.ndim == 0:
            return out[()] if out.ndim == 0 else out.reshape(())[()]
        return out

    def truncation_bound(self) -> float:
        """Bound on the transform mass ignored beyond the tau grid."""
        t_end = float(self.tau_grid[-1])
        return self.tail_coef * math.exp(-self.tail_rate * t_end) / self.tail_rate

    def friction_limit(self) -> float:
        return float(self.samples[0])

    def memory_window(self, tol: float) -> float:
        return float(self.tau_grid[-1])


@dataclass(frozen=True)
class SusceptibilityProfile:
    """Piecewise-constant-in-x susceptibility given by a region table.

    Regions are (x_min, x_max, kernel) with half-open extent [x_min, x_max);
    they must not overlap.  x outside every region carries the zero kernel.
    """

    regions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        regs = []
        for x_min, x_max, kern in self.regions:
            if not x_max > x_min:
                raise ValueError("profile region: x_max must exceed x_min")
            if not isinstance(kern, SusceptibilityModel):
                raise TypeError("profile region: kernel must be a SusceptibilityModel")
            regs.append((float(x_min), float(x_max), kern))
        regs.sort(key=lambda r: r[0])
        for (_, hi, _), (lo, _, _) in zip(regs, regs[1:]):
            if lo < hi:
                raise ValueError("profile regions overlap")
        object.__setattr__(self, "regions", tuple(regs))

    def at(self, x: float) -> SusceptibilityModel:
        for x_min, x_max, kern in self.regions:
            if x_min <= x < x_max:
                return kern
        return _ZERO_KERNEL

    def region_slices(self, x_grid: np.ndarray):
        """Yield (slice, kernel) pairs partitioning a sorted x grid.

        Consecutive grid points governed by the same kernel object share a
        slice; zero-kernel stretches are included so callers can skip them.
        """
        x_grid = np.asarray(x_grid, dtype=float)
        kernels = [self.at(float(x)) for x in x_grid]
        start = 0
        for i in range(1, len(kernels) + 1):
            if i == len(kernels) or kernels[i] is not kernels[start]:
                yield slice(start, i), kernels[start]
                start = i


_ZERO_KERNEL = ZeroSusceptibility()


def _kernel_at(model, x: float) -> SusceptibilityModel:
    if isinstance(model, SusceptibilityProfile):
        return model.at(x)
    if isinstance(model, SusceptibilityModel):
        return model
    raise TypeError(f"not a susceptibility model or profile: {model!r}")


def chi_time(model, x: float, tau):
    """Memory kernel chi(x, tau) of a model or profile, for tau >= 0."""
    return _kernel_at(model, x).chi(tau)


def chi_hat(model, x: float, zeta):
    """Half-plane transform chi_hat(x, zeta), Im zeta >= 0."""
    return _kernel_at(model, x).chi_hat(zeta)


def friction_spectrum(model, x: float, omega):
    """Friction spectrum D(x, omega) = omega * Im chi_hat(x, omega)."""
    return _kernel_at(model, x).friction_spectrum(omega)


@dataclass(frozen=True)
class PdcReport:
    """Result of a power-dissipation-condition scan over a frequency grid."""

    passed: bool
    min_value: float
    worst_omega: float
    scale: float
    tol: float

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"PDC {verdict}: min friction spectrum {self.min_value:.3e} "
            f"at omega = {self.worst_omega:g} (scale {self.scale:.3e})"
        )


def check_pdc(model, omega_grid, x: float = 0.0, rel_tol: float = 1e-12) -> PdcReport:
    """Scan the friction spectrum for negativity on a frequency grid.

    Passes when min D >= -rel_tol * max|D| over the grid; an identically
    zero spectrum passes.  The report carries the worst point either way.
    """
    kern = _kernel_at(model, x)
    omega_arr = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if omega_arr.size == 0:
        raise ValueError("check_pdc: empty frequency grid")
    values = np.asarray(kern.friction_spectrum(omega_arr))
    i_min = int(np.argmin(values))
    scale = float(np.max(np.abs(values)))
    passed = bool(values[i_min] >= -rel_tol * scale)
    return PdcReport(
        passed=passed,
        min_value=float(values[i_min]),
        worst_omega=float(omega_arr[i_min]),
        scale=scale,
        tol=rel_tol,
    )


def kramers_kronig_residual(model, omega_grid, cutoff: float, x: float = 0.0) -> float:
    """Max residual of the dispersion relation linking Re chi_hat to the
    friction spectrum on the real axis:

        omega Re chi_hat(omega) = (1/pi) PV int sigma Im chi_hat(sigma)
                                               / (sigma - omega) dsigma.

    The principal value is taken on a uniform sigma grid sharing the
    omega grid's spacing: plain two-sided trapezoid outside the cell
    [omega - h, omega + h], plus the odd-part cancellation estimate
    f(omega + h) - f(omega - h) for the excluded cell.  Beyond the cutoff
    the integrand is closed analytically with the high-frequency limit
    f -> chi(0+):  tail = chi(0+) * log((cutoff + omega)/(cutoff - omega)).

    Requires a uniform omega grid symmetric about 0 and a cutoff beyond
    its extent; returns the max abs residual over interior grid points.
    """
    kern = _kernel_at(model, x)
    omega_arr = np.asarray(omega_grid, dtype=float)
    if omega_arr.ndim != 1 or omega_arr.size < 3:
        raise ValueError("kramers_kronig_residual: need a 1d grid of >= 3 points")
    steps = np.diff(omega_arr)
    h = float(steps[0])
    if h <= 0.0 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise ValueError("kramers_kronig_residual: omega grid must be uniform")
    if not np.allclose(omega_arr, -omega_arr[::-1], rtol=0.0, atol=1e-9 * h):
        raise ValueError("kramers_kronig_residual: omega grid must be symmetric about 0")
    w_max = float(omega_arr[-1])
    if cutoff <= w_max + 2.0 * h:
        raise ValueError("kramers_kronig_residual: cutoff must lie beyond the grid")

    # sigma grid: same spacing, symmetric, reaching the cutoff; grid
    # commensurability puts every omega on a sigma node.
    n_half = int(round(cutoff / h))
    big_omega = n_half * h
    sigma = h * np.arange(-n_half, n_half + 1)
    f_sigma = np.asarray(kern.friction_density(sigma))
    f_inf = kern.friction_limit()

    worst = 0.0
    for omega in omega_arr[1:-1]:
        j = int(round(omega / h)) + n_half
        lhs = float(omega * np.real(kern.chi_hat(omega))) if omega != 0.0 else 0.0
        denom = sigma - omega
        weights = np.ones(sigma.size)
        weights[[0, -1]] = 0.5
        weights[j - 1] = 0.5
        weights[j + 1] = 0.5
        weights[j] = 0.0
        denom_safe = np.where(denom == 0.0, 1.0, denom)
        pv = h * float(np.sum(weights * f_sigma / denom_safe))
        pv += float(f_sigma[j + 1] - f_sigma[j - 1])
        tail = f_inf * math.log((big_omega + omega) / (big_omega - omega))
        residual = abs(lhs - (pv + tail) / math.pi)
        worst = max(worst, residual)
    return worst


# ---------------------------------------------------------------------------
# configuration and file loading

_KERNEL_KINDS = ("zero", "constant", "debye", "tabulated")


def tabulated_from_csv(path, tail_coef: float = 0.0, tail_rate: float = 1.0) -> TabulatedSusceptibility:
    """Load a tabulated kernel from a two-column (tau, chi) CSV file.

    Lines starting with '#' are comments; a non-numeric first row is
    treated as a column header.
    """
    data = np.genfromtxt(path, delimiter=",", comments="#", skip_header=0)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    if np.isnan(data[0]).any():
        data = data[1:]
    if data.ndim != 2 or data.shape[1] < 2 or data.shape[0] < 2:
        raise ValueError(f"tabulated kernel csv {path}: need two columns (tau, chi)")
    return TabulatedSusceptibility(
        tau_grid=data[:, 0], samples=data[:, 1],
        tail_coef=tail_coef, tail_rate=tail_rate,
    )


def kernel_from_config(cfg, base_dir=None) -> SusceptibilityModel:
    """Build a homogeneous kernel from a config mapping.

    Expected keys: kind (zero | constant | debye | tabulated) plus the
    kind's parameters (amplitude; rate; file with optional tail_coef /
    tail_rate).  Raises ValueError naming the offending key.
    """
    if not isinstance(cfg, dict):
        raise ValueError(f"material model: expected a mapping, got {type(cfg).__name__}")
    kind = cfg.get("kind")
    if kind not in _KERNEL_KINDS:
        raise ValueError(
            f"material model: kind must be one of {_KERNEL_KINDS}, got {kind!r}"
        )
    known = {
        "zero": set(),
        "constant": {"amplitude"},
        "debye": {"amplitude", "rate"},
        "tabulated": {"file", "tail_coef", "tail_rate"},
    }[kind]
    extra = set(cfg) - known - {"kind"}
    if extra:
        raise ValueError(f"material model: unknown keys for kind {kind}: {sorted(extra)}")
    if kind == "zero":
        return ZeroSusceptibility()
    if kind == "constant":
        if "amplitude" not in cfg:
            raise ValueError("material model: constant kernel needs amplitude")
        return ConstantSusceptibility(amplitude=float(cfg["amplitude"]))
    if kind == "debye":
        missing = {"amplitude", "rate"} - set(cfg)
        if missing:
            raise ValueError(f"material model: debye kernel needs {sorted(missing)}")
        return DebyeSusceptibility(amplitude=float(cfg["amplitude"]), rate=float(cfg["rate"]))
    if "file" not in cfg:
        raise ValueError("material model: tabulated kernel needs file")
    path = cfg["file"]
    if base_dir is not None:
        import os

        path = os.path.join(base_dir, path) if not os.path.isabs(path) else path
    return tabulated_from_csv(
        path,
        tail_coef=float(cfg.get("tail_coef", 0.0)),
        tail_rate=float(cfg.get("tail_rate", 1.0)),
    )


def profile_from_config(cfg, base_dir=None) -> SusceptibilityProfile:
    """Build a spatial profile from a config mapping.

    Accepts either a bare model mapping (one kernel everywhere, i.e. a
    single region spanning all simulated x; realized as a half-unbounded
    region pair) or {"regions": [{x_min, x_max, model}, ...]}.
    """
    if not isinstance(cfg, dict):
        raise ValueError("material: expected a mapping")
    if "regions" not in cfg:
        kern = kernel_from_config(cfg, base_dir=base_dir)
        return SusceptibilityProfile(regions=((-math.inf, math.inf, kern),))
    entries = cfg["regions"]
    if not isinstance(entries, (list, tuple)) or not entries:
        raise ValueError("material.regions: expected a non-empty list")
    regions = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ValueError(f"material.regions[{i}]: expected a mapping")
        missing = {"x_min", "x_max", "model"} - set(entry)
        if missing:
            raise ValueError(f"material.regions[{i}]: missing {sorted(missing)}")
        kern = kernel_from_config(entry["model"], base_dir=base_dir)
        regions.append((float(entry["x_min"]), float(entry["x_max"]), kern))
    return SusceptibilityProfile(regions=tuple(regions))
