"""Hidden-string coupling built from the friction spectrum.

The conservative extension attaches an auxiliary string (coordinate s) to
every point of the physical string; its coupling profile is fixed by the
requirement that integrating the hidden strings out reproduces the memory
kernel.  In frequency the condition reads

    coupling_hat(sigma)^2 = 2 * friction_spectrum(sigma),

and the profile itself is the inverse cosine transform

    coupling(s) = (1/pi) int_0^inf sqrt(2 D(sigma)) cos(sigma s) dsigma.

Since sqrt(2 D) tends to a constant c0 = sqrt(2 chi(0+)) at high
frequency, the transform splits into a Dirac delta of weight c0 at s = 0
plus a regular even part, the transform of sqrt(2 D) - c0.  The regular
part is produced by a type-I DCT on conjugate grids (sigma spacing
Sigma/N, s spacing pi/Sigma), which makes the evaluation of
coupling_hat back on the construction nodes an exact inverse.

Reconstruction of the memory kernel from a coupling uses

    chi(tau) = (1/2) int coupling(s) int_{s-tau}^{s+tau} coupling(r) dr ds

expanded over the delta/regular sectors, with the regular antiderivative
held as a cumulative trapezoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct
from scipy.integrate import cumulative_trapezoid

from .susceptibility import SusceptibilityModel, _kernel_at, check_pdc

__all__ = [
    "CouplingFunction",
    "build_coupling",
    "coupling_hat",
    "reconstruct_chi",
]


@dataclass(frozen=True)
class CouplingFunction:
    """Delta weight plus regular samples of a hidden-string coupling.

    The regular part lives on a uniform symmetric s-grid and is even by
    construction; beyond the grid it is treated as zero.
    """

    delta_weight: float
    s_grid: np.ndarray
    regular: np.ndarray
    sigma_max: float = 0.0
    n_sigma: int = 0
    tail_gap: float = 0.0
    limit_gap: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        reg = np.asarray(self.regular, dtype=float)
        if s.ndim != 1 or s.size < 3 or s.size % 2 == 0:
            raise ValueError("coupling: s grid must be 1d with odd length (symmetric)")
        if reg.shape != s.shape:
            raise ValueError("coupling: regular samples must match the s grid")
        steps = np.diff(s)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("coupling: s grid must be uniform")
        mid = s.size // 2
        if abs(s[mid]) > 1e-12 * max(abs(s[-1]), 1.0):
            raise ValueError("coupling: s grid must be centered on 0")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "regular", reg)

    @property
    def ds(self) -> float:
        return float(self.s_grid[1] - self.s_grid[0])

    @property
    def half_width(self) -> float:
        return float(self.s_grid[-1])

    def regular_at(self, s):
        """Regular part at arbitrary s (linear interpolation, even, 0 outside)."""
        s_arr = np.abs(np.asarray(s, dtype=float))
        mid = self.s_grid.size // 2
        return np.interp(s_arr, self.s_grid[mid:], self.regular[mid:], right=0.0)

    def regular_antiderivative(self):
        """Sampled antiderivative R(y) = int_0^y regular(r) dr on the s grid."""
        cum = cumulative_trapezoid(self.regular, self.s_grid, initial=0.0)
        mid = self.s_grid.size // 2
        return cum - cum[mid]

    def to_csv(self, path) -> None:
        """Write the coupling to CSV: header comments with the delta weight
        and grid spec, then (s, regular) rows at full precision."""
        with open(path, "w") as fh:
            fh.write(f"# delta_weight = {self.delta_weight!r}\n")
            fh.write(f"# ds = {self.ds!r}\n")
            fh.write(f"# half_width = {self.half_width!r}\n")
            fh.write(f"# sigma_max = {self.sigma_max!r}\n")
            fh.write(f"# n_sigma = {self.n_sigma}\n")
            fh.write("s,regular\n")
            for s, r in zip(self.s_grid, self.regular):
                fh.write(f"{float(s)!r},{float(r)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "CouplingFunction":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "=" in line:
                        key, _, val = line.lstrip("#").partition("=")
                        meta[key.strip()] = val.strip()
                    continue
                if line[0].isalpha() or line[0] == "s":
                    continue
                a, _, b = line.partition(",")
                rows.append((float(a), float(b)))
        if "delta_weight" not in meta:
            raise ValueError(f"coupling csv {path}: missing delta_weight header")
        data = np.asarray(rows)
        return cls(
            delta_weight=float(meta["delta_weight"]),
            s_grid=data[:, 0],
            regular=data[:, 1],
            sigma_max=float(meta.get("sigma_max", 0.0)),
            n_sigma=int(meta.get("n_sigma", 0)),
        )


def build_coupling(
    model,
    x: float = 0.0,
    n_sigma: int = 2**15,
    sigma_max: float = 200.0,
    pdc_tol: float = 1e-12,
    tail_tol: float = 1e-2,
) -> CouplingFunction:
    """Construct the hidden-string coupling of a susceptibility model.

    Samples sqrt(2 * friction spectrum) on n_sigma + 1 nodes of
    [0, sigma_max], takes the high-frequency node as the delta weight c0,
    and obtains the regular part by DCT-I of the remainder, landing on the
    conjugate s grid of spacing pi / sigma_max.

    Refuses models whose friction spectrum is negative beyond pdc_tol
    (no real coupling exists) and models whose sqrt(2 D) has not leveled
    off by sigma_max (measured tail gap > tail_tol); friction values in
    the roundoff band [-pdc_tol * scale, 0) are clamped to zero.
    """
    kern = _kernel_at(model, x)
    if n_sigma < 16:
        raise ValueError("build_coupling: n_sigma too small")
    if sigma_max <= 0.0:
        raise ValueError("build_coupling: sigma_max must be > 0")
    sigma = sigma_max * np.arange(n_sigma + 1) / n_sigma

    report = check_pdc(kern, sigma[1:], rel_tol=pdc_tol)
    if not report.passed:
        raise ValueError(
            "build_coupling: friction spectrum is negative "
            f"(min {report.min_value:.3e} at sigma = {report.worst_omega:g}); "
            "no real coupling exists for a PDC-violating model"
        )

    density = np.asarray(kern.friction_density(sigma), dtype=float)
    density = np.maximum(density, 0.0)
    root = np.sqrt(2.0 * density)

    c0 = float(root[-1])
    j_probe = int(round(0.9 * n_sigma))
    tail_gap = abs(c0 - float(root[j_probe]))
    scale = max(float(np.max(root)), 1.0e-300)
    if tail_gap > tail_tol * scale:
        raise ValueError(
            "build_coupling: sqrt(2 D) has not converged by sigma_max "
            f"(gap {tail_gap:.3e} between 0.9*sigma_max and sigma_max, "
            f"tolerance {tail_tol * scale:.3e}); increase sigma_max"
        )
    limit = max(kern.friction_limit(), 0.0)
    limit_gap = abs(c0 - math.sqrt(2.0 * limit))

    remainder = root - c0
    # trapezoid-in-sigma inverse cosine transform on conjugate grids:
    # (1/pi) int_0^Sigma remainder * cos(sigma s_k) dsigma
    #   = (Sigma / (2 pi N)) * DCT1(remainder)_k,  s_k = k pi / Sigma
    half = (sigma_max / (2.0 * math.pi * n_sigma)) * dct(remainder, type=1)
    ds = math.pi / sigma_max
    s_half = ds * np.arange(n_sigma + 1)
    s_full = np.concatenate([-s_half[:0:-1], s_half])
    reg_full = np.concatenate([half[:0:-1], half])
    return CouplingFunction(
        delta_weight=c0,
        s_grid=s_full,
        regular=reg_full,
        sigma_max=float(sigma_max),
        n_sigma=int(n_sigma),
        tail_gap=tail_gap,
        limit_gap=limit_gap,
    )


def coupling_hat(c: CouplingFunction, sigma):
    """Cosine transform of the coupling: c0 + int regular(s) cos(sigma s) ds.

    Trapezoid on the stored s grid, vectorized over sigma.  On the
    construction nodes this inverts the build DCT exactly (up to roundoff),
    returning sqrt(2 * friction spectrum).
    """
    sigma_arr = np.asarray(sigma, dtype=float)
    scalar = sigma_arr.ndim == 0
    flat = np.atleast_1d(sigma_arr).ravel()
    mid = c.s_grid.size // 2
    s_half = c.s_grid[mid:]
    reg_half = c.regular[mid:]
    weights = np.full(s_half.size, c.ds)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    wreg = weights * reg_half
    vals = np.empty(flat.size)
    # even integrand: full-line integral = 2 * half-line integral;
    # blocked so large sigma grids stay in cache
    block = max(1, 2**21 // s_half.size)
    for start in range(0, flat.size, block):
        piece = flat[start:start + block]
        vals[start:start + block] = 2.0 * np.cos(np.multiply.outer(piece, s_half)) @ wreg
    vals = (c.delta_weight + vals).reshape(np.atleast_1d(sigma_arr).shape)
    if scalar:
        return float(vals.reshape(())[()])
    return vals


def reconstruct_chi(c: CouplingFunction, tau_grid):
    """Memory kernel reproduced by a coupling, on a grid of lags tau >= 0.

    Expands the double integral over the delta/regular sectors:

        chi(tau) = c0^2/2
                 + c0 * (R(tau) - R(-tau))
                 + (1/2) int regular(s) * (R(s+tau) - R(s-tau)) ds

    with R the antiderivative of the regular part.  Values are the causal
    right limit, so chi(0) = c0^2 / 2.

    Requires the coupling grid to extend at least max(tau) beyond the
    origin so the shifted antiderivatives stay on known ground.
    """
    tau_arr = np.asarray(tau_grid, dtype=float)
    scalar = tau_arr.ndim == 0
    tau_flat = np.atleast_1d(tau_arr).ravel()
    if np.any(tau_flat < 0.0):
        raise ValueError("reconstruct_chi: tau must be >= 0")
    tau_max = float(tau_flat.max()) if tau_flat.size else 0.0
    if tau_max > c.half_width:
        raise ValueError(
            "reconstruct_chi: coupling s grid (half width "
            f"{c.half_width:g}) does not cover tau up to {tau_max:g}"
        )

    cum = c.regular_antiderivative()
    s = c.s_grid

    def anti(y):
        # saturates beyond the grid: the regular part is zero out there
        return np.interp(y, s, cum)

    c0 = c.delta_weight
    base = 0.5 * c0 * c0
    cross = c0 * (anti(tau_flat) - anti(-tau_flat))

    weights = np.full(s.size, c.ds)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    wreg = weights * c.regular
    self_term = np.empty(tau_flat.size)
    for i, tau in enumerate(tau_flat):
        self_term[i] = 0.5 * np.dot(anti(s + tau) - anti(s - tau), wreg)

    out = base + cross + self_term
    out = out.reshape(np.atleast_1d(tau_arr).shape)
    if scalar:
        return float(out.reshape(())[()])
    return out
