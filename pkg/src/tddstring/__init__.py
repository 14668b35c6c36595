"""Simulation and analysis of a 1D string with time-dispersive dissipation.

Two equivalent dynamical routes are provided: direct integration of the
memory-kernel wave equation (`run_tdd`) and the conservative extension
that couples every point of the string to a hidden elastic string
(`run_extended`).  Steady-state analysis lives in `eigenmodes`: mode
families, plane waves, half-line scattering, and energy/momentum
observables.  `cli` exposes the same machinery as a command-line tool.
"""

from .coupling import CouplingFunction, build_coupling, coupling_hat, reconstruct_chi
from .eigenmodes import (
    PlaneWave,
    ScatteringSolution,
    SpectralEigenmode,
    causal_wavenumber,
    hidden_profile,
    mode_flux_and_dissipation,
    mode_in_dynamics,
    plane_wave,
    plane_wave_stress_regularized,
    scatter_half_line,
    spectral_mode,
    verify_fourier_laplace,
)
from .extended_dynamics import (
    ExtendedState,
    ExtendedSystem,
    ExtendedTrajectory,
    dissipated_energy,
    hidden_response_oracle,
    run_extended,
)
from .scenario import (
    ConfigError,
    Grid1D,
    HiddenGrid,
    Scenario,
    load_scenario,
    scenario_from_config,
)
from .susceptibility import (
    ConstantSusceptibility,
    DebyeSusceptibility,
    SusceptibilityModel,
    SusceptibilityProfile,
    TabulatedSusceptibility,
    ZeroSusceptibility,
    check_pdc,
    kramers_kronig_residual,
)
from .tdd_dynamics import TddTrajectory, dalembert, dalembert_field, run_tdd

__version__ = "0.1.0"

__all__ = [
    "CouplingFunction",
    "build_coupling",
    "coupling_hat",
    "reconstruct_chi",
    "PlaneWave",
    "ScatteringSolution",
    "SpectralEigenmode",
    "causal_wavenumber",
    "hidden_profile",
    "mode_flux_and_dissipation",
    "mode_in_dynamics",
    "plane_wave",
    "plane_wave_stress_regularized",
    "scatter_half_line",
    "spectral_mode",
    "verify_fourier_laplace",
    "ExtendedState",
    "ExtendedSystem",
    "ExtendedTrajectory",
    "dissipated_energy",
    "hidden_response_oracle",
    "run_extended",
    "ConfigError",
    "Grid1D",
    "HiddenGrid",
    "Scenario",
    "load_scenario",
    "scenario_from_config",
    "ConstantSusceptibility",
    "DebyeSusceptibility",
    "SusceptibilityModel",
    "SusceptibilityProfile",
    "TabulatedSusceptibility",
    "ZeroSusceptibility",
    "check_pdc",
    "kramers_kronig_residual",
    "TddTrajectory",
    "dalembert",
    "dalembert_field",
    "run_tdd",
    "__version__",
]
