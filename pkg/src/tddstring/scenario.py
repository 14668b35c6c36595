"""Grids, driving forces, and scenario configuration shared by both engines.

A scenario bundles everything a run needs: the spatial grid, the material
profile, the stiffness gamma, the driving force, the time-stepping plan,
and (for the extended engine) the hidden-string grid and coupling build
parameters.  The same scenario drives the memory-kernel engine and the
hidden-string engine so their outputs are directly comparable.

Forces carry a declared compact support and evaluate to exactly zero
outside it; causality checks and the closed-form reference solution lean
on that hard truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .susceptibility import (
    SusceptibilityProfile,
    ZeroSusceptibility,
    profile_from_config,
)

__all__ = [
    "Grid1D",
    "HiddenGrid",
    "DrivingForce",
    "GaussianPulseForce",
    "BoxForce",
    "ToneBurstForce",
    "TabulatedForce",
    "Scenario",
    "ConfigError",
    "force_from_config",
    "scenario_from_config",
    "load_scenario",
]

# width of the hard truncation window, in units of the gaussian width
_SUPPORT_WIDTHS = 6.0


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key and
    the violated constraint."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid.

    Dirichlet and sponge grids include both endpoints (n_x nodes, spacing
    (x_max - x_min)/(n_x - 1)); periodic grids cover [x_min, x_max) with
    n_x nodes and identify x_max with x_min.  The sponge boundary is
    Dirichlet plus a graded absorbing layer of the given width at both
    ends.
    """

    x_min: float
    x_max: float
    n_x: int
    boundary: str = "dirichlet"
    sponge_width: float = 0.0
    sponge_strength: float = 0.0

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise ConfigError("grid.x_max: must exceed grid.x_min")
        if self.n_x < 4:
            raise ConfigError("grid.n_x: need at least 4 nodes")
        if self.boundary not in ("dirichlet", "periodic", "sponge"):
            raise ConfigError(
                f"grid.boundary: must be dirichlet, periodic or sponge, got {self.boundary!r}"
            )
        if self.boundary == "sponge":
            if not 0.0 < self.sponge_width < 0.5 * (self.x_max - self.x_min):
                raise ConfigError(
                    "grid.sponge_width: must be positive and fit inside the domain"
                )
            if self.sponge_strength <= 0.0:
                raise ConfigError("grid.sponge_strength: must be > 0")

    @property
    def dx(self) -> float:
        if self.boundary == "periodic":
            return (self.x_max - self.x_min) / self.n_x
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    def damping_profile(self) -> np.ndarray | None:
        """Graded cubic absorption rate inside the sponge layers, else None."""
        if self.boundary != "sponge":
            return None
        x = self.x
        d = self.sponge_width
        left = np.clip((self.x_min + d - x) / d, 0.0, 1.0)
        right = np.clip((x - (self.x_max - d)) / d, 0.0, 1.0)
        return self.sponge_strength * (left**3 + right**3)


@dataclass(frozen=True)
class HiddenGrid:
    """Uniform symmetric grid for the hidden-string coordinate s.

    Spans [-half_width, half_width] with Dirichlet ends; n_s is odd so
    s = 0 is a node (the delta coupling lives there).
    """

    half_width: float
    ds: float

    def __post_init__(self):
        if self.half_width <= 0.0 or self.ds <= 0.0:
            raise ConfigError("hidden grid: half_width and ds must be > 0")
        if self.half_width < 2.0 * self.ds:
            raise ConfigError("hidden.half_width: too small for the spacing")

    @property
    def n_half(self) -> int:
        return int(round(self.half_width / self.ds))

    @property
    def n_s(self) -> int:
        return 2 * self.n_half + 1

    @property
    def s(self) -> np.ndarray:
        return self.ds * (np.arange(self.n_s) - self.n_half)

    @property
    def origin_index(self) -> int:
        return self.n_half


class DrivingForce:
    """Base class: space-time force with declared compact support."""

    #: (t_on, t_off) outside which the force is exactly zero
    t_support: tuple
    #: (x_lo, x_hi) outside which the force is exactly zero
    x_support: tuple

    def __call__(self, x, t: float):
        raise NotImplementedError

    def time_breakpoints(self) -> tuple:
        """Interior times where the time factor is non-smooth."""
        return ()

    # Separable forces (value = profile(x) * time_factor(t)) additionally
    # provide x_integral and time_factor; the closed-form reference
    # solution requires them.
    separable = False


class _SeparableForce(DrivingForce):
    separable = True

    def profile(self, x):
        raise NotImplementedError

    def x_integral(self, a, b):
        """int_a^b profile(y) dy with the support truncation applied."""
        raise NotImplementedError

    def time_factor(self, t):
        raise NotImplementedError

    def __call__(self, x, t: float):
        x_arr = np.asarray(x, dtype=float)
        lo, hi = self.t_support
        if not lo <= t <= hi:
            return np.zeros_like(x_arr)
        return self.profile(x_arr) * self.time_factor(t)


@dataclass(frozen=True)
class GaussianPulseForce(_SeparableForce):
    """Separable gaussian pulse, hard-truncated at +-6 widths."""

    amplitude: float
    x_center: float
    x_width: float
    t_center: float
    t_width: float

    def __post_init__(self):
        if self.x_width <= 0.0 or self.t_width <= 0.0:
            raise ConfigError("force: gaussian widths must be > 0")
        object.__setattr__(
            self,
            "t_support",
            (self.t_center - _SUPPORT_WIDTHS * self.t_width,
             self.t_center + _SUPPORT_WIDTHS * self.t_width),
        )
        object.__setattr__(
            self,
            "x_support",
            (self.x_center - _SUPPORT_WIDTHS * self.x_width,
             self.x_center + _SUPPORT_WIDTHS * self.x_width),
        )

    def profile(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = self.amplitude * np.exp(-((x_arr - self.x_center) ** 2) / (2.0 * self.x_width**2))
        lo, hi = self.x_support
        return np.where((x_arr >= lo) & (x_arr <= hi), out, 0.0)

    def x_integral(self, a, b):
        lo, hi = self.x_support
        a_c = np.clip(np.asarray(a, dtype=float), lo, hi)
        b_c = np.clip(np.asarray(b, dtype=float), lo, hi)
        w = self.x_width * math.sqrt(2.0)
        val = erf((b_c - self.x_center) / w) - erf((a_c - self.x_center) / w)
        return self.amplitude * self.x_width * math.sqrt(math.pi / 2.0) * val

    def time_factor(self, t):
        lo, hi = self.t_support
        if not lo <= t <= hi:
            return 0.0
        return math.exp(-((t - self.t_center) ** 2) / (2.0 * self.t_width**2))


@dataclass(frozen=True)
class BoxForce(_SeparableForce):
    """Constant amplitude on a rectangle of space-time."""

    amplitude: float
    x_lo: float
    x_hi: float
    t_on: float
    t_off: float

    def __post_init__(self):
        if self.x_hi <= self.x_lo or self.t_off <= self.t_on:
            raise ConfigError("force: box extents must be increasing")
        object.__setattr__(self, "t_support", (self.t_on, self.t_off))
        object.__setattr__(self, "x_support", (self.x_lo, self.x_hi))

    def profile(self, x):
        x_arr = np.asarray(x, dtype=float)
        return np.where((x_arr >= self.x_lo) & (x_arr <= self.x_hi), self.amplitude, 0.0)

    def x_integral(self, a, b):
        a_c = np.clip(np.asarray(a, dtype=float), self.x_lo, self.x_hi)
        b_c = np.clip(np.asarray(b, dtype=float), self.x_lo, self.x_hi)
        return self.amplitude * np.maximum(b_c - a_c, 0.0)

    def time_factor(self, t):
        return 1.0 if self.t_on <= t <= self.t_off else 0.0


@dataclass(frozen=True)
class ToneBurstForce(_SeparableForce):
    """Gaussian-in-x profile driven by a smoothly ramped sine of fixed
    frequency; used to reach scattering steady states."""

    amplitude: float
    x_center: float
    x_width: float
    omega: float
    t_on: float
    t_ramp: float
    t_off: float

    def __post_init__(self):
        if self.x_width <= 0.0:
            raise ConfigError("force: tone x_width must be > 0")
        if self.omega == 0.0:
            raise ConfigError("force: tone omega must be nonzero")
        if not self.t_on < self.t_on + self.t_ramp < self.t_off:
            raise ConfigError("force: tone needs t_on < t_on + t_ramp < t_off")
        object.__setattr__(self, "t_support", (self.t_on, self.t_off))
        object.__setattr__(
            self,
            "x_support",
            (self.x_center - _SUPPORT_WIDTHS * self.x_width,
             self.x_center + _SUPPORT_WIDTHS * self.x_width),
        )

    def profile(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = self.amplitude * np.exp(-((x_arr - self.x_center) ** 2) / (2.0 * self.x_width**2))
        lo, hi = self.x_support
        return np.where((x_arr >= lo) & (x_arr <= hi), out, 0.0)

    def x_integral(self, a, b):
        lo, hi = self.x_support
        a_c = np.clip(np.asarray(a, dtype=float), lo, hi)
        b_c = np.clip(np.asarray(b, dtype=float), lo, hi)
        w = self.x_width * math.sqrt(2.0)
        val = erf((b_c - self.x_center) / w) - erf((a_c - self.x_center) / w)
        return self.amplitude * self.x_width * math.sqrt(math.pi / 2.0) * val

    def time_factor(self, t):
        if not self.t_on <= t <= self.t_off:
            return 0.0
        u = (t - self.t_on) / self.t_ramp
        ramp = 1.0 if u >= 1.0 else u * u * (3.0 - 2.0 * u)
        return ramp * math.sin(self.omega * (t - self.t_on))

    def time_breakpoints(self):
        return (self.t_on + self.t_ramp,)


@dataclass(frozen=True)
class TabulatedForce(DrivingForce):
    """Force sampled on a (t, x) grid, bilinearly interpolated inside the
    grid extent and zero outside."""

    t_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray  # shape (n_t, n_x)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        x = np.asarray(self.x_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (t.size, x.size):
            raise ConfigError("force: tabulated values must have shape (n_t, n_x)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(x) <= 0):
            raise ConfigError("force: tabulated grids must increase")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "t_support", (float(t[0]), float(t[-1])))
        object.__setattr__(self, "x_support", (float(x[0]), float(x[-1])))

    def __call__(self, x, t: float):
        x_arr = np.asarray(x, dtype=float)
        lo, hi = self.t_support
        if not lo <= t <= hi:
            return np.zeros_like(x_arr)
        i = np.searchsorted(self.t_grid, t, side="right") - 1
        i = min(max(i, 0), self.t_grid.size - 2)
        w = (t - self.t_grid[i]) / (self.t_grid[i + 1] - self.t_grid[i])
        row = (1.0 - w) * self.values[i] + w * self.values[i + 1]
        out = np.interp(x_arr, self.x_grid, row, left=0.0, right=0.0)
        xlo, xhi = self.x_support
        return np.where((x_arr >= xlo) & (x_arr <= xhi), out, 0.0)


@dataclass(frozen=True)
class Scenario:
    """One fully specified simulation setup, shared by both engines."""

    grid: Grid1D
    profile: SusceptibilityProfile
    gamma: float
    force: DrivingForce | None
    t_final: float
    dt: float
    snapshot_stride: int = 1
    hidden: HiddenGrid | None = None
    coupling_sigma_max: float = 200.0
    coupling_n_sigma: int = 2**15
    memory_tol: float = 1e-10

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ConfigError("gamma: must be > 0")
        if self.dt <= 0.0:
            raise ConfigError("run.dt: must be > 0")
        if self.t_final <= 0.0:
            raise ConfigError("run.t_final: must be > 0")
        if self.snapshot_stride < 1:
            raise ConfigError("run.snapshot_stride: must be >= 1")
        v = math.sqrt(self.gamma)
        limit = 0.5 * self.grid.dx / v
        if self.hidden is not None:
            limit = min(limit, 0.5 * self.hidden.ds)
        if self.dt > limit * (1.0 + 1e-12):
            raise ConfigError(
                f"run.dt: time step {self.dt:g} violates the stability bound "
                f"0.5 * min(dx / sqrt(gamma), ds) = {limit:g}"
            )

    @property
    def wave_speed(self) -> float:
        # gamma k^2 = omega^2 for the undamped string, so phase speed sqrt(gamma)
        return math.sqrt(self.gamma)

    @property
    def t_start(self) -> float:
        # rest start two steps before the force can act
        if self.force is None:
            return 0.0
        return self.force.t_support[0] - 2.0 * self.dt

    @property
    def n_steps(self) -> int:
        return int(math.ceil((self.t_final - self.t_start) / self.dt - 1e-9))


# ---------------------------------------------------------------------------
# configuration parsing


def _require(cfg: dict, section: str, keys) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{section}: missing required keys {missing}")


def force_from_config(cfg) -> DrivingForce:
    if not isinstance(cfg, dict):
        raise ConfigError("force: expected a mapping")
    kind = cfg.get("kind")
    if kind == "gaussian_pulse":
        _require(cfg, "force", ("amplitude", "x_center", "x_width", "t_center", "t_width"))
        return GaussianPulseForce(
            amplitude=float(cfg["amplitude"]),
            x_center=float(cfg["x_center"]),
            x_width=float(cfg["x_width"]),
            t_center=float(cfg["t_center"]),
            t_width=float(cfg["t_width"]),
        )
    if kind == "box":
        _require(cfg, "force", ("amplitude", "x_lo", "x_hi", "t_on", "t_off"))
        return BoxForce(
            amplitude=float(cfg["amplitude"]),
            x_lo=float(cfg["x_lo"]),
            x_hi=float(cfg["x_hi"]),
            t_on=float(cfg["t_on"]),
            t_off=float(cfg["t_off"]),
        )
    if kind == "tone":
        _require(cfg, "force", ("amplitude", "x_center", "x_width", "omega", "t_on", "t_ramp", "t_off"))
        return ToneBurstForce(
            amplitude=float(cfg["amplitude"]),
            x_center=float(cfg["x_center"]),
            x_width=float(cfg["x_width"]),
            omega=float(cfg["omega"]),
            t_on=float(cfg["t_on"]),
            t_ramp=float(cfg["t_ramp"]),
            t_off=float(cfg["t_off"]),
        )
    if kind == "none":
        raise ConfigError("force.kind: use force: null for an unforced run")
    raise ConfigError(
        f"force.kind: must be gaussian_pulse, box or tone, got {kind!r}"
    )


def scenario_from_config(cfg: dict, base_dir=None) -> Scenario:
    """Build a scenario from a parsed config mapping.

    Sections: grid, material, force (or null), run, and optionally hidden
    (required by the extended engine) and gamma (default 1).  Raises
    ConfigError naming the violated key.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("scenario: expected a mapping at top level")
    for section in ("grid", "material", "run"):
        if section not in cfg:
            raise ConfigError(f"scenario: missing section {section!r}")

    gcfg = cfg["grid"]
    _require(gcfg, "grid", ("x_min", "x_max", "n_x"))
    grid = Grid1D(
        x_min=float(gcfg["x_min"]),
        x_max=float(gcfg["x_max"]),
        n_x=int(gcfg["n_x"]),
        boundary=str(gcfg.get("boundary", "dirichlet")),
        sponge_width=float(gcfg.get("sponge_width", 0.0)),
        sponge_strength=float(gcfg.get("sponge_strength", 0.0)),
    )

    profile = profile_from_config(cfg["material"], base_dir=base_dir)

    fcfg = cfg.get("force")
    force = None if fcfg is None else force_from_config(fcfg)

    rcfg = cfg["run"]
    _require(rcfg, "run", ("t_final", "dt"))

    hidden = None
    if "hidden" in cfg and cfg["hidden"] is not None:
        hcfg = cfg["hidden"]
        _require(hcfg, "hidden", ("half_width", "ds"))
        hidden = HiddenGrid(half_width=float(hcfg["half_width"]), ds=float(hcfg["ds"]))

    ccfg = cfg.get("coupling", {}) or {}
    return Scenario(
        grid=grid,
        profile=profile,
        gamma=float(cfg.get("gamma", 1.0)),
        force=force,
        t_final=float(rcfg["t_final"]),
        dt=float(rcfg["dt"]),
        snapshot_stride=int(rcfg.get("snapshot_stride", 1)),
        hidden=hidden,
        coupling_sigma_max=float(ccfg.get("sigma_max", 200.0)),
        coupling_n_sigma=int(ccfg.get("n_sigma", 2**15)),
        memory_tol=float(rcfg.get("memory_tol", 1e-10)),
    )


def load_scenario(path) -> Scenario:
    """Load a scenario from a YAML file."""
    import os

    import yaml

    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    return scenario_from_config(cfg, base_dir=os.path.dirname(os.path.abspath(path)))
