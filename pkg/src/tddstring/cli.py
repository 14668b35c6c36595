"""Command-line surface: run scenarios, sweep scattering coefficients, emit
mode and coupling tables, and preflight configs.

Every command reads one YAML config (--config), writes plot-ready files
into --out, and exits nonzero on any failed validation or failed check.
Numeric output is full-precision scientific notation so identical inputs
give bitwise-identical files.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .coupling import build_coupling, reconstruct_chi
from .eigenmodes import (
    causal_wavenumber,
    mode_flux_and_dissipation,
    plane_wave,
    scatter_half_line,
    spectral_mode,
)
from .extended_dynamics import ExtendedSystem, run_extended
from .lattice import centered_derivative
from .scenario import ConfigError, Grid1D, scenario_from_config
from .susceptibility import (
    ZeroSusceptibility,
    check_pdc,
    kramers_kronig_residual,
    profile_from_config,
)
from .tdd_dynamics import run_tdd

__all__ = ["main"]


def _fmt(value) -> str:
    return f"{float(value):.17e}"


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(path) -> dict:
    import yaml

    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return cfg


def _model_from_config(cfg, base_dir, x: float):
    """Material model at position x; zero kernel outside every region."""
    if "material" not in cfg:
        raise ConfigError("scenario: missing section 'material'")
    profile = profile_from_config(cfg["material"], base_dir=base_dir)
    return profile.at(x)


def _out_dir(args, cfg) -> str:
    out = args.out
    if out is None:
        out = (cfg.get("output") or {}).get("directory", ".")
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# simulate


def _snapshot_rows_tdd(traj, boundary):
    dx = float(traj.x[1] - traj.x[0])
    for i, t in enumerate(traj.times):
        dphi = centered_derivative(traj.phi[i], dx, boundary)
        e0 = 0.5 * (traj.f_pi[i] ** 2 + traj.gamma * dphi**2)
        flux = -traj.gamma * traj.f_pi[i] * dphi
        for j, xj in enumerate(traj.x):
            yield (t, xj, traj.phi[i, j], traj.pi[i, j], traj.f_pi[i, j],
                   e0[j], flux[j])


def _snapshot_rows_extended(traj):
    for i, t in enumerate(traj.times):
        for j, xj in enumerate(traj.x):
            yield (t, xj, traj.phi[i, j], traj.pi[i, j], traj.f_pi[i, j],
                   traj.e_density[i, j], traj.flux[i, j])


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    scenario = scenario_from_config(cfg, base_dir=base_dir)
    engine = args.engine or str((cfg.get("run") or {}).get("engine", "tdd"))
    if engine not in ("tdd", "extended", "both"):
        raise ConfigError(f"run.engine: must be tdd, extended or both, got {engine!r}")
    out = _out_dir(args, cfg)

    summary = {
        "engine": engine,
        "gamma": scenario.gamma,
        "n_x": scenario.grid.n_x,
        "dt": scenario.dt,
        "t_final": scenario.t_final,
        "n_steps": scenario.n_steps,
        "boundary": scenario.grid.boundary,
    }
    written = []

    tdd_traj = ext_traj = None
    if engine in ("tdd", "both"):
        tdd_traj = run_tdd(scenario, store_history=False)
        if args.format == "csv":
            path = os.path.join(out, "snapshots_tdd.csv")
            _write_csv(path, ("t", "x", "phi", "pi", "f_pi", "e0_density", "flux"),
                       _snapshot_rows_tdd(tdd_traj, scenario.grid.boundary))
            written.append(path)
        summary["tdd"] = {
            "n_snapshots": int(tdd_traj.times.size),
            "final_energy": float(tdd_traj.e0_series[-1]),
            "final_work": float(tdd_traj.work_series[-1]),
            "final_dissipated": float(tdd_traj.dissipated_series[-1]),
        }
    if engine in ("extended", "both"):
        ext_traj = run_extended(scenario, store_f_pi_series=False)
        if args.format == "csv":
            path = os.path.join(out, "snapshots_extended.csv")
            _write_csv(path, ("t", "x", "phi", "pi", "f_pi", "e_density", "flux"),
                       _snapshot_rows_extended(ext_traj))
            written.append(path)
        summary["extended"] = {
            "n_snapshots": int(ext_traj.times.size),
            "final_energy_visible": float(ext_traj.e0_total[-1]),
            "final_energy_hidden": float(ext_traj.ehs_total[-1]),
            "final_hamiltonian": float(ext_traj.h_total[-1]),
            "final_work": float(ext_traj.work[-1]),
            "reentry_horizon": float(ext_traj.system.reentry_horizon),
        }
    if engine == "both":
        if not np.allclose(tdd_traj.times, ext_traj.times):
            raise ConfigError("run: engines disagree on snapshot times")
        diff = tdd_traj.phi - ext_traj.phi
        per_snap = np.sqrt((diff**2).sum(axis=1))
        scale = math.sqrt(float((tdd_traj.phi**2).sum()))
        summary["both"] = {
            "phi_diff_norm_per_snapshot": [float(v) for v in per_snap],
            "phi_diff_rel_l2": float(np.linalg.norm(diff) / scale) if scale else 0.0,
        }

    path = os.path.join(out, "summary.json")
    _write_json(path, summary)
    written.append(path)
    for p in written:
        print(f"wrote {p}")
    if engine == "both":
        print(f"cross-engine rel L2: {summary['both']['phi_diff_rel_l2']:.3e}")
    return 0


# ---------------------------------------------------------------------------
# scatter


def cmd_scatter(args) -> int:
    cfg = _load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    model = _model_from_config(cfg, base_dir, args.x)
    gamma = float(cfg.get("gamma", 1.0))
    if args.omega:
        omegas = [float(w) for w in args.omega]
    else:
        omegas = np.linspace(args.omega_min, args.omega_max, args.n_omega)
    out = _out_dir(args, cfg)

    rows = []
    for w in omegas:
        sol = scatter_half_line(float(w), model, gamma)
        rows.append((
            w, sol.chi_hat.real, sol.chi_hat.imag,
            sol.rho.real, sol.rho.imag,
            sol.r.real, sol.r.imag,
            sol.v_trans.real, sol.v_trans.imag,
            1.0 - abs(sol.r) ** 2,
        ))
    header = ("omega", "re_chi_hat", "im_chi_hat", "re_rho", "im_rho",
              "re_r", "im_r", "re_v", "im_v", "one_minus_abs_r_sq")
    if args.format == "json":
        path = os.path.join(out, "scattering.json")
        _write_json(path, [dict(zip(header, map(float, row))) for row in rows])
    else:
        path = os.path.join(out, "scattering.csv")
        _write_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} frequencies)")
    return 0


# ---------------------------------------------------------------------------
# eigen


def cmd_eigen(args) -> int:
    cfg = _load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    model = _model_from_config(cfg, base_dir, args.x)
    gamma = float(cfg.get("gamma", 1.0))
    gcfg = cfg.get("grid")
    if gcfg is None:
        raise ConfigError("scenario: missing section 'grid'")
    grid = Grid1D(
        x_min=float(gcfg["x_min"]), x_max=float(gcfg["x_max"]),
        n_x=int(gcfg["n_x"]), boundary=str(gcfg.get("boundary", "dirichlet")),
    )
    x = grid.x
    out = _out_dir(args, cfg)
    omega = args.omega

    meta = {"kind": args.kind, "omega": omega, "gamma": gamma}
    if args.kind == "plane":
        if (args.wavenumber is None) == (args.mixing is None):
            raise ConfigError("eigen: give exactly one of --wavenumber, --mixing")
        pw = plane_wave(omega, model, gamma, k=args.wavenumber, mixing=args.mixing)
        phi = pw.phi0 * np.exp(1j * pw.k * x)
        flux = np.full(x.size, pw.flux)
        neg_dj = np.zeros(x.size)
        meta.update({
            "k": pw.k,
            "mixing": pw.mixing,
            "re_g0": pw.g0.real, "im_g0": pw.g0.imag,
            # half-convention density is primary; the doubled normalization
            # is reported alongside, never silently substituted
            "e0_half_convention": pw.e0,
            "e0_doubled_convention": 2.0 * pw.e0,
            "p0": pw.p0,
            "flux": pw.flux,
            "stress_total": pw.stress_total,
            "stress_visible": pw.stress_visible,
            "stress_hidden": pw.stress_hidden,
        })
    else:
        k = causal_wavenumber(model, gamma, omega)
        k_seed = k if args.kind == "causal" else -np.conj(k)
        boundary = (np.exp(1j * k_seed * x[0]), np.exp(1j * k_seed * x[1]))
        mode = spectral_mode(omega, model, gamma, x, boundary=boundary,
                             kind=args.kind)
        phi = mode.phi
        flux, dissipation = mode_flux_and_dissipation(mode)
        neg_dj = -np.gradient(flux, x)
        meta.update({
            "re_k": float(k_seed.real), "im_k": float(k_seed.imag),
            "grid_residual": mode.grid_residual(),
            "flux_balance_gap": float(np.abs(neg_dj[2:-2] - dissipation[2:-2]).max()),
        })

    path = os.path.join(out, f"mode_{args.kind}.csv")
    rows = zip(x, phi.real, phi.imag, flux, neg_dj)
    _write_csv(path, ("x", "re_phi", "im_phi", "flux", "neg_dflux_dx"), rows)
    meta_path = os.path.join(out, f"mode_{args.kind}.json")
    _write_json(meta_path, meta)
    print(f"wrote {path}")
    print(f"wrote {meta_path}")
    return 0


# ---------------------------------------------------------------------------
# coupling


def cmd_coupling(args) -> int:
    cfg = _load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    model = _model_from_config(cfg, base_dir, args.x)
    ccfg = cfg.get("coupling", {}) or {}
    n_sigma = int(ccfg.get("n_sigma", 2**15))
    sigma_max = float(ccfg.get("sigma_max", 200.0))
    out = _out_dir(args, cfg)

    coupling = build_coupling(model, n_sigma=n_sigma, sigma_max=sigma_max)
    path = os.path.join(out, "coupling.csv")
    coupling.to_csv(path)

    taus = np.linspace(0.0, args.tau_max, 201)
    recovered = reconstruct_chi(coupling, taus)
    target = np.asarray(model.chi(taus), dtype=float)
    scale = max(float(np.abs(target).max()), 1e-300)
    round_trip = float(np.abs(recovered - target).max() / scale)

    summary = {
        "delta_weight": float(coupling.delta_weight),
        "n_sigma": n_sigma,
        "sigma_max": sigma_max,
        "s_half_width": float(coupling.half_width),
        "round_trip_max_rel_error": round_trip,
        "tau_max": float(args.tau_max),
    }
    meta_path = os.path.join(out, "coupling_summary.json")
    _write_json(meta_path, summary)
    print(f"wrote {path}")
    print(f"wrote {meta_path}")
    print(f"round trip max rel error on [0, {args.tau_max:g}]: {round_trip:.3e}")
    return 0


# ---------------------------------------------------------------------------
# check


def _check_scenario_sections(cfg, base_dir, report) -> None:
    """Preflight the run sections when present: CFL, memory window, and
    the hidden-end reentry horizon."""
    try:
        scenario = scenario_from_config(cfg, base_dir=base_dir)
    except ConfigError as exc:
        report["scenario"] = {"passed": False, "error": str(exc)}
        return
    entry = {"passed": True}
    v = scenario.wave_speed
    limit = 0.5 * scenario.grid.dx / v
    if scenario.hidden is not None:
        limit = min(limit, 0.5 * scenario.hidden.ds)
    entry["cfl"] = {"dt": scenario.dt, "limit": limit,
                    "margin": limit / scenario.dt}
    span = scenario.t_final - scenario.t_start
    windows = []
    for _, _, kernel in scenario.profile.regions:
        w = kernel.memory_window(scenario.memory_tol)
        windows.append(None if math.isinf(w) else float(w))
    entry["memory_windows"] = windows
    if scenario.hidden is not None:
        try:
            system = ExtendedSystem(scenario)
        except ValueError as exc:
            entry["reentry"] = {"passed": False, "error": str(exc)}
            entry["passed"] = False
        else:
            horizon = system.reentry_horizon
            entry["reentry"] = {
                "radius": float(system.reentry_radius),
                "horizon": float(horizon),
                "run_span": float(span),
                "passed": bool(span <= horizon),
            }
            if not entry["reentry"]["passed"]:
                entry["passed"] = False
    report["scenario"] = entry


def cmd_check(args) -> int:
    cfg = _load_config(args.config)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    model = _model_from_config(cfg, base_dir, args.x)
    out = _out_dir(args, cfg)
    report = {}

    # passivity: the friction spectrum must stay nonnegative
    omega_grid = np.linspace(0.0, args.omega_max, 2001)
    pdc = check_pdc(model, omega_grid)
    report["pdc"] = {
        "passed": pdc.passed,
        "min_value": pdc.min_value,
        "worst_omega": pdc.worst_omega,
        "scale": pdc.scale,
    }

    # dispersion relation between the real part and the friction spectrum,
    # checked to tighten under grid refinement
    kk = {}
    try:
        coarse = kramers_kronig_residual(
            model, np.linspace(-20.0, 20.0, 401), cutoff=args.kk_cutoff)
        fine = kramers_kronig_residual(
            model, np.linspace(-20.0, 20.0, 801), cutoff=args.kk_cutoff)
        kk = {"residual_coarse": coarse, "residual_fine": fine,
              "passed": bool(fine <= coarse * 1.1 + 1e-12)}
    except ValueError as exc:
        kk = {"passed": False, "error": str(exc)}
    report["kramers_kronig"] = kk

    # coupling round trip: kernel -> coupling -> kernel; a PDC-violating
    # model has no real coupling, which is itself a reportable failure
    ccfg = cfg.get("coupling", {}) or {}
    try:
        coupling = build_coupling(
            model,
            n_sigma=int(ccfg.get("n_sigma", 2**15)),
            sigma_max=float(ccfg.get("sigma_max", 200.0)),
        )
        taus = np.linspace(0.0, 5.0, 201)
        recovered = reconstruct_chi(coupling, taus)
        target = np.asarray(model.chi(taus), dtype=float)
        scale = max(float(np.abs(target).max()), 1e-300)
        err = float(np.abs(recovered - target).max() / scale) if scale > 1e-200 else 0.0
        report["coupling_round_trip"] = {
            "max_rel_error": err,
            "tol": args.round_trip_tol,
            "passed": bool(err <= args.round_trip_tol),
        }
    except ValueError as exc:
        report["coupling_round_trip"] = {"passed": False, "error": str(exc)}

    if "grid" in cfg and "run" in cfg:
        _check_scenario_sections(cfg, base_dir, report)

    overall = all(section.get("passed", True) for section in report.values())
    report["passed"] = overall
    path = os.path.join(out, "check_report.json")
    _write_json(path, report)

    for name in ("pdc", "kramers_kronig", "coupling_round_trip", "scenario"):
        if name in report:
            verdict = "pass" if report[name].get("passed", True) else "FAIL"
            print(f"{name}: {verdict}")
    print(f"wrote {path}")
    return 0 if overall else 1


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(sub) -> None:
    sub.add_argument("--config", required=True, help="YAML scenario config")
    sub.add_argument("--out", default=None,
                     help="output directory (default: config output.directory or '.')")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--x", type=float, default=0.0,
                     help="position whose material model is used")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tddstring",
        description="Dispersive-string simulation and analysis toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run a scenario through the engines")
    _add_common(sim)
    sim.add_argument("--engine", choices=("tdd", "extended", "both"), default=None,
                     help="override the config's run.engine (default tdd)")
    sim.set_defaults(func=cmd_simulate)

    sca = subs.add_parser("scatter", help="half-line scattering sweep")
    _add_common(sca)
    sca.add_argument("--omega", action="append", type=float, default=None,
                     help="explicit frequency (repeatable); overrides the range")
    sca.add_argument("--omega-min", type=float, default=0.1)
    sca.add_argument("--omega-max", type=float, default=10.0)
    sca.add_argument("--n-omega", type=int, default=100)
    sca.set_defaults(func=cmd_scatter)

    eig = subs.add_parser("eigen", help="emit one mode profile")
    _add_common(eig)
    eig.add_argument("--kind", choices=("causal", "anticausal", "plane"),
                     default="causal")
    eig.add_argument("--omega", type=float, required=True)
    eig.add_argument("--wavenumber", type=float, default=None,
                     help="plane-wave wavenumber (plane kind)")
    eig.add_argument("--mixing", type=float, default=None,
                     help="plane-wave mixing ratio (plane kind)")
    eig.set_defaults(func=cmd_eigen)

    cpl = subs.add_parser("coupling", help="build and audit the hidden coupling")
    _add_common(cpl)
    cpl.add_argument("--tau-max", type=float, default=5.0)
    cpl.set_defaults(func=cmd_coupling)

    chk = subs.add_parser("check", help="verification report for a config")
    _add_common(chk)
    chk.add_argument("--omega-max", type=float, default=50.0)
    chk.add_argument("--kk-cutoff", type=float, default=100.0)
    chk.add_argument("--round-trip-tol", type=float, default=1e-2)
    chk.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
