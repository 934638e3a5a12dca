"""Command-line entry point.

    teleswim density  --preset paper-classical --out run/
    teleswim simulate --preset light-switch --paths 100000 --seed 7
    teleswim msd      --preset power-law-0.5
    teleswim pde      --config run.json
    teleswim charfun  --config frac.json
    teleswim classify -- -0.5

A run is described by a JSON object; a preset supplies defaults, ``--config``
overrides them key by key, and ``--seed``/``--paths`` override both.  Exit
codes: 0 ok, 1 runtime error, 2 config error, 3 quality error.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import analytic, fractional, montecarlo, pde, stats
from ._version import __version__
from .errors import ConfigError, DomainError, QualityError, TeleswimError
from .export import export_charfun, export_density, export_ensemble, write_csv, write_json
from .profiles import ExponentialDecay, PowerLaw, profile_from_config, rate_from_config

__all__ = ["main", "resolve_config", "PRESETS", "EXIT_OK", "EXIT_RUNTIME", "EXIT_CONFIG", "EXIT_QUALITY"]

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_QUALITY = 0, 1, 2, 3

_BASE = {
    "params": {"c0": 1.0, "lambda0": 1.0, "x0": 0.0},
    "profile": {"kind": "constant"},
    "rate": {"mode": "proportional"},
    "times": [1.0],
    "t_end": 1.0,
    "n_paths": 100_000,
    "base_seed": 0,
    "workers": None,
    "density_points": 4001,
    "grid": {"n_cells": 2000, "cfl": 0.9},
    "msd": {"times": [0.5, 1.0, 2.0, 5.0], "fit_window": None, "empirical": False, "n_paths": 100_000},
    "alpha": 1.0,
    "k_max": None,
    "n_k": 1 << 14,
    "mollifier_cells": 2.0,
}

PRESETS = {
    "paper-classical": {},
    "light-switch": {
        "profile": {"kind": "exponential_decay", "gamma": 1.0},
        "rate": {"mode": "constant"},
        "t_end": 5.0,
        "times": [5.0],
        "msd": {"times": [0.5, 1, 2, 5, 10, 20, 40], "fit_window": None, "empirical": False, "n_paths": 100_000},
    },
}


def _power_law_preset(beta: float) -> dict:
    times = np.geomspace(1e2, 1e4, 21).tolist()
    return {
        "profile": {"kind": "power_law", "beta": beta, "t_ref": 1.0},
        "t_end": 1e2,
        "times": [1e2],
        "msd": {"times": times, "fit_window": [1e2, 1e4], "empirical": False, "n_paths": 20_000},
    }


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _preset(name: str) -> dict:
    if name in PRESETS:
        return PRESETS[name]
    if name.startswith("power-law-"):
        try:
            return _power_law_preset(float(name[len("power-law-"):]))
        except ValueError:
            pass
    raise ConfigError(f"unknown preset {name!r}; known: paper-classical, light-switch, power-law-<beta>")


def resolve_config(preset=None, config=None, seed=None, paths=None) -> dict:
    """Merge base defaults, a preset, a user config and flag overrides, then validate."""
    cfg = _merge(_BASE, _preset(preset) if preset else {})
    if config:
        cfg = _merge(cfg, config)
    if seed is not None:
        cfg["base_seed"] = seed
    if paths is not None:
        cfg["n_paths"] = paths
    cfg["rate"].setdefault("lambda0", cfg["params"]["lambda0"])
    if preset:
        cfg["preset"] = preset
    _build(cfg)
    return cfg


def _build(cfg: dict):
    """Objects for a config; every failure becomes a ConfigError."""
    try:
        params = analytic.TelegraphParams(
            float(cfg["params"]["c0"]), float(cfg["params"]["lambda0"]), float(cfg["params"].get("x0", 0.0))
        )
        profile = profile_from_config(cfg["profile"])
        rate = rate_from_config(cfg["rate"])
        if getattr(rate, "lambda0", params.lambda0) != params.lambda0:
            raise ConfigError("rate.lambda0 must equal params.lambda0")
        if int(cfg["n_paths"]) < 1:
            raise ConfigError("n_paths must be >= 1")
        times = [float(t) for t in cfg["times"]]
        if not times or any(not (t > 0 and math.isfinite(t)) for t in times):
            raise ConfigError("times must be positive (the law at t = 0 is a point mass)")
        if not (float(cfg["t_end"]) > 0):
            raise ConfigError("t_end must be positive")
        alpha = float(cfg["alpha"])
        fp = fractional.FractionalParams(alpha, params)
    except ConfigError:
        raise
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    return params, profile, rate, fp


def _out(args, name) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _fmt_t(t: float) -> str:
    return f"{t:g}".replace("+", "")


def _density_nodes(params, tau, n_points):
    """Nodes on [x0 - c0 tau, x0 + c0 tau]; the end nodes sit just inside the fronts."""
    front = params.c0 * tau
    x = params.x0 + np.linspace(-front, front, n_points)
    x[0] = params.x0 - front * (1 - 4 * analytic.FRONT_RTOL)
    x[-1] = params.x0 + front * (1 - 4 * analytic.FRONT_RTOL)
    return x


def cmd_density(cfg, args):
    params, profile, rate, _ = _build(cfg)
    if not rate.proportional:
        raise ConfigError("the closed-form density needs rate mode 'proportional'; use the 'pde' command instead")
    if params.lambda0 == 0:
        raise ConfigError("lambda0 = 0: the law is two atoms, there is no density")
    report = []
    for t in cfg["times"]:
        law = analytic.law_at_time(params, profile, t)
        n_points = max(int(cfg["density_points"]), int(64 * math.sqrt(params.lambda0 * law.tau)) + 1)
        x = _density_nodes(params, law.tau, n_points)
        p = analytic.density_ac(params, profile, x, t)
        trap = float(trapezoid(p, x))
        total = trap + 2 * law.atom_mass
        path = _out(args, f"density_t{_fmt_t(t)}.csv")
        write_csv(path, ["x", "density"], zip(x, p), cfg)
        atoms = analytic.boundary_atoms(params, profile, t)
        write_json(
            path.with_suffix(".json"),
            {
                "t": t,
                "tau": law.tau,
                "atoms": [list(a) for a in atoms],
                "ac_mass_exact": law.ac_mass,
                "ac_mass_trapezoid": trap,
                "normalization": total,
                "normalization_error": abs(total - 1.0),
            },
            cfg,
        )
        report.append((t, total))
    for t, total in report:
        print(f"t={t:g}  mass(ac, trapezoid) + atoms = {total:.9f}")


def _reference_cdf(params, profile, rate, t):
    if rate.proportional:
        tau = float(profile.tau(t))
        return lambda x: analytic.cdf_tau(params, tau, x)
    return None


def cmd_simulate(cfg, args):
    params, profile, rate, _ = _build(cfg)
    t_end = float(cfg["t_end"])
    ens = montecarlo.simulate_ensemble(
        params, profile, rate, t_end, int(cfg["n_paths"]), int(cfg["base_seed"]), workers=cfg.get("workers")
    )
    mom = ens.moments()
    lam_int = float(rate.integrated(profile, t_end))
    summary = {
        "expected_zero_tumble_fraction": math.exp(-lam_int),
        "zero_tumble_sigma": math.sqrt(math.exp(-lam_int) * (1 - math.exp(-lam_int)) / ens.n_paths),
    }
    ref = _reference_cdf(params, profile, rate, t_end)
    if ref is not None:
        summary["ks_vs_analytic"] = stats.ks_distance(ens.final_positions, ref)
        summary["msd_exact"] = analytic.msd(params, profile, t_end)
    else:
        summary["msd_moment_ode"] = float(analytic.msd_moment_ode(params, profile, rate, [t_end])[-1])
    limit = analytic.msd_limit(params, profile, rate)
    confined = math.isfinite(limit)
    summary["confined"] = confined
    if confined:
        summary["msd_limit"] = limit
        summary["msd_over_limit"] = mom["msd"] / limit
    csv_path, _ = export_ensemble(ens, _out(args, "paths.csv"), cfg, summary)
    print(f"paths={ens.n_paths} t_end={t_end:g} msd={mom['msd']:.6g} +- {mom['msd_stderr']:.2g}")
    print(f"zero-tumble fraction {ens.zero_tumble_fraction():.5f} (expected {summary['expected_zero_tumble_fraction']:.5f})")
    if "ks_vs_analytic" in summary:
        print(f"KS vs exact law {summary['ks_vs_analytic']:.5f}")
    if confined:
        print(f"confined: MSD plateau {limit:.6g}, MSD/plateau = {summary['msd_over_limit']:.4f}")
    print(f"wrote {csv_path}")


def _prediction(profile):
    if isinstance(profile, PowerLaw):
        return analytic.classify_regime(profile.beta)
    if isinstance(profile, ExponentialDecay):
        return analytic.RegimeReport(math.nan, analytic.Regime.CONFINED, None)
    if profile.kind == "constant":
        return analytic.classify_regime(0.0)
    return None


def cmd_msd(cfg, args):
    params, profile, rate, _ = _build(cfg)
    mcfg = cfg["msd"]
    times = np.asarray(sorted(float(t) for t in mcfg["times"]))
    if times.size == 0 or np.any(times <= 0):
        raise ConfigError("msd.times must be positive")
    if rate.proportional:
        values = np.asarray(analytic.msd(params, profile, times))
        method = "closed_form"
    else:
        values = analytic.msd_moment_ode(params, profile, rate, times)
        method = "moment_ode"
    path = _out(args, "msd.csv")
    write_csv(path, ["t", "msd", "stderr"], zip(times, values, np.zeros_like(values)), cfg)
    summary = {"method": method, "msd": values}
    window = mcfg.get("fit_window") or [float(times[0]), float(times[-1])]
    sel = (times >= window[0]) & (times <= window[1])
    if np.count_nonzero(sel) >= 3:
        fit = stats.fit_exponent(np.column_stack([times[sel], values[sel]]))
        summary["fit"] = {"window": window, **fit.__dict__}
        print(f"fitted exponent {fit.exponent:.4f} (r^2 {fit.r_squared:.6f}) over t in [{window[0]:g}, {window[1]:g}]")
    pred = _prediction(profile)
    if pred is not None:
        summary["prediction"] = str(pred)
        print(f"predicted regime: {pred}")
    limit = analytic.msd_limit(params, profile, rate)
    if math.isfinite(limit):
        summary["msd_limit"] = limit
        print(f"MSD plateau {limit:.6g}")
    if mcfg.get("empirical"):
        emp = montecarlo.empirical_msd(
            params, profile, rate, times, int(mcfg["n_paths"]), int(cfg["base_seed"]), workers=cfg.get("workers")
        )
        write_csv(_out(args, "msd_empirical.csv"), ["t", "msd", "stderr"], emp, cfg)
        summary["empirical"] = emp
    write_json(path.with_suffix(".json"), summary, cfg)


def cmd_pde(cfg, args):
    params, profile, rate, _ = _build(cfg)
    t_end = float(cfg["t_end"])
    g = cfg["grid"]
    if "x_min" in g and "x_max" in g:
        grid = pde.GridSpec(float(g["x_min"]), float(g["x_max"]), int(g["n_cells"]), float(g.get("cfl", 0.9)))
    else:
        grid = pde.GridSpec.around(params, profile, t_end, int(g["n_cells"]), cfl=float(g.get("cfl", 0.9)))
    sol = pde.solve_ab_system(params, profile, rate, grid, t_end)
    extra = {}
    if rate.proportional and params.lambda0 > 0:
        ref = pde.analytic_grid(params, profile, grid, t_end)
        front = params.c0 * float(profile.tau(t_end))
        l1 = pde.front_collapsed_l1(sol, ref, [params.x0 - front, params.x0 + front])
        extra["l1_vs_analytic"] = {"density": l1.density, "atoms": l1.atoms, "total": l1.total}
    csv_path, _ = export_density(sol, _out(args, f"pde_t{_fmt_t(t_end)}.csv"), cfg, extra)
    print(f"n_cells={grid.n_cells} steps={sol.meta['n_steps']} mass={sol.mass():.15f}")
    if extra:
        print(f"L1 vs exact law {extra['l1_vs_analytic']['total']:.3e}")
    print(f"wrote {csv_path}")


def cmd_charfun(cfg, args):
    params, profile, rate, fp = _build(cfg)
    if not rate.proportional:
        raise ConfigError("the characteristic function is available for rate mode 'proportional' only")
    t = float(cfg["t_end"])
    n_k = int(cfg["n_k"])
    k_max = cfg.get("k_max") or fractional.choose_k_max(fp, profile, t, n_k)
    try:
        grid = fractional.charfun_grid(fp, profile, t, float(k_max), n_k)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    export_charfun(grid, _out(args, f"charfun_t{_fmt_t(t)}.csv"), cfg)
    dens = fractional.invert_charfun(grid, float(cfg["mollifier_cells"]), check=False)
    csv_path, _ = export_density(dens, _out(args, f"charfun_density_t{_fmt_t(t)}.csv"), cfg)
    m = dens.meta
    print(
        f"alpha={fp.alpha:g} k_max={float(k_max):.6g} n_k={n_k} mass defect {m['mass_defect']:.2e} "
        f"negativity {m['negativity_defect']:.2e} heavy-tailed={m['heavy_tailed']}"
    )
    if m["mass_defect"] > fractional.DEFECT_TOL or m["negativity_defect"] > fractional.DEFECT_TOL:
        raise QualityError("aliasing detected in the inverted density; increase n_k or lower k_max")
    print(f"wrote {csv_path}")


def cmd_classify(args):
    try:
        beta = float(args.beta)
        report = analytic.classify_regime(beta)
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"beta must be a finite number: {exc}") from None
    print(report)


COMMANDS = {"density": cmd_density, "simulate": cmd_simulate, "msd": cmd_msd, "pde": cmd_pde, "charfun": cmd_charfun}
_HELP = {
    "density": "exact law on a grid at each of 'times'",
    "simulate": "Monte Carlo ensemble up to t_end",
    "msd": "mean-square displacement, exponent fit, regime",
    "pde": "finite-volume solution at t_end",
    "charfun": "fractional characteristic function at t_end and its inversion",
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", help="paper-classical | light-switch | power-law-<beta>")
    common.add_argument("--seed", type=int, help="base seed for Monte Carlo")
    common.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    common.add_argument("--out", default=".", help="output directory")
    parser = argparse.ArgumentParser(prog="teleswim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"teleswim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    cl = sub.add_parser("classify", help="long-time MSD regime for w ~ t^-beta")
    cl.add_argument("beta")
    return parser


def _error(code: int, exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "classify":
            cmd_classify(args)
            return EXIT_OK
        user = None
        if args.config:
            try:
                user = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = resolve_config(args.preset, user, args.seed, args.paths)
        COMMANDS[args.command](cfg, args)
        return EXIT_OK
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except QualityError as exc:
        return _error(EXIT_QUALITY, exc)
    except (TeleswimError, ValueError, ArithmeticError) as exc:
        return _error(EXIT_RUNTIME, exc)


if __name__ == "__main__":
    sys.exit(main())
