"""Command-line interface: ``enzyme-rd {simulate,rates,verify,fig1,sweep}``.

Each run writes ``trajectory.csv`` (one row per snapshot), ``fields_t{T}.csv``
for the configured field times, ``manifest.json`` and, for ``verify``,
``checks.json``.  A manifest can be passed back as ``--config`` to repeat
a run.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, RunConfig, load_config, preset
from .core import Regime, conserved_masses
from .dynamics import PositivityError, Trajectory, check_min_enzyme, equilibrium, simulate
from .entropy import EntropyParams, EntropySeries, entropy_trajectory
from .rates import (
    FitError,
    GammaInputs,
    GammaResult,
    HypothesisError,
    default_params_degenerate,
    default_params_full,
    fit_decay_rate,
    gamma_for,
    linearized_rate_predictions,
    linearized_spectrum,
    linf_rate_predictions,
    mu_opt,
    neumann_eigenvalues,
    simulate_linearized,
)
from .verify import (
    CheckReport,
    Status,
    audit_functional_inequality,
    check_ckp_bounds,
    check_conservation,
    check_entropy_decay,
    check_functional_inequality_along,
    check_important_inequality,
    check_linearized_rate,
    check_mass_dissipation,
    check_p_l2_decay,
    check_rate_predictions,
    check_truncated_lsi,
    jsonable,
    random_audit_states,
    reports_to_json,
    smooth_positive_samples,
)

log = logging.getLogger("enzyme_rd")

TRAJECTORY_COLUMNS = ("t", "M0", "M1", "s_inf", "c_inf", "e_dev_inf", "p_dev_inf",
                      "E", "H", "M", "D_M", "D")
FIELD_COLUMNS = ("x", "e", "s", "c", "p")
ETA_GRID = (0.5, 1.0, 2.0, 3.0, 5.0, 10.0)
FIG1_EPS = (0.1, 0.01, 0.001)

EXIT_FAIL, EXIT_CONFIG, EXIT_POSITIVITY = 1, 2, 3


# --------------------------------------------------------------------------
# run setup


@dataclass
class Setup:
    """Everything derived from a config before time stepping."""

    cfg: RunConfig
    initial: object
    masses: object
    eq: object
    params: EntropyParams | None
    beta: float
    gamma: GammaResult | None
    gamma_reason: str | None
    params_reason: str | None = None

    @property
    def regime(self) -> Regime:
        return self.eq.regime

    @property
    def gamma_value(self) -> float | None:
        return None if self.gamma is None else self.gamma.value


def entropy_params(cfg: RunConfig, M0: float, e_inf, regime: Regime) -> EntropyParams:
    rates, eps_s = cfg.rates, cfg["entropy.eps_s"]
    if regime is Regime.FULL:
        if cfg["entropy.use_defaults"]:
            return default_params_full(rates, M0, cfg.geometry, cfg.diffusion.d_e,
                                       cfg["entropy.defaults_variant"])
        eps_c = cfg["entropy.eps_c"]
        if eps_c is None:
            eps_c = rates.k_f * M0 * eps_s / rates.k_r
        return EntropyParams(eps_s=eps_s, eps_c=eps_c, k=cfg["entropy.k"])
    if eps_s is None:
        raise ConfigError("entropy.eps_s", "required when d_e = d_c = 0")
    p = default_params_degenerate(rates, eps_s, e_inf)
    if not cfg["entropy.use_defaults"]:
        p = EntropyParams(eps_s=eps_s, eps_c=p.eps_c, k=cfg["entropy.k"])
    return p


def prepare(cfg: RunConfig) -> Setup:
    regime = cfg.diffusion.regime
    initial = cfg.initial_state()
    masses = conserved_masses(initial)
    eq = equilibrium(initial, cfg.diffusion)
    beta = check_min_enzyme(initial)
    try:
        params = entropy_params(cfg, masses.M0, eq.e_inf, regime)
    except ConfigError:
        raise
    except ValueError as err:
        # e.g. zero enzyme mass: the run is valid, the entropy is not defined
        reason = f"entropy parameters unavailable: {err}"
        return Setup(cfg, initial, masses, eq, None, beta, None, reason, reason)
    gamma, reason = None, None
    try:
        g = gamma_for(GammaInputs(cfg.rates, cfg.diffusion, masses.M0, masses.M1, cfg.geometry,
                                  params, beta=beta, e_inf=eq.e_inf), cfg["gamma.variant"])
        gamma = g.scaled(cfg["gamma.scale"]) if cfg["gamma.scale"] != 1.0 else g
        if not gamma.positive:
            reason = "explicit rate is not positive for these constants"
    except HypothesisError as err:
        reason = str(err)
    return Setup(cfg, initial, masses, eq, params, beta, gamma, reason)


def gamma_section(setup: Setup) -> dict:
    g = setup.gamma
    if g is None or not g.positive:
        out = {"status": Status.NOT_APPLICABLE.value, "reason": setup.gamma_reason}
        if g is not None:
            out.update(value=g.value, branches=list(g.branches))
        return out
    return {"status": "OK", "value": g.value, "branches": list(g.branches),
            "binding": g.binding, "variant": g.variant}


def params_section(p: EntropyParams | None) -> dict | None:
    if p is None:
        return None
    return {"eps_s": p.eps_s, "eps_c": jsonable(p.eps_c), "k": p.k}


def mu_opt_value(setup: Setup) -> float | None:
    if setup.regime is not Regime.FULL or not setup.masses.M0 > 0:
        return None
    return mu_opt(setup.cfg.rates, setup.masses.M0)


def fitted_rates(traj: Trajectory) -> dict:
    out = {}
    for sp, key in (("s", "s_inf"), ("c", "c_inf"), ("e", "e_dev_inf"), ("p", "p_dev_inf")):
        try:
            f = fit_decay_rate(traj.times, traj.diagnostics[key])
            out[sp] = {"rate": f.rate, "r_squared": f.r_squared, "window": list(f.window),
                       "n_samples": f.n_samples}
        except FitError as err:
            out[sp] = {"error": str(err)}
    return out


# --------------------------------------------------------------------------
# outputs


def _savetxt(path: Path, columns, data) -> None:
    np.savetxt(path, np.column_stack(data), fmt="%.17g", delimiter=",",
               header=",".join(columns), comments="")


def field_filename(t: float) -> str:
    return f"fields_t{t:g}.csv"


def write_trajectory(out: Path, traj: Trajectory, series: EntropySeries) -> None:
    d, s = traj.diagnostics, series
    if s is None:
        cols = dict.fromkeys(("E", "H", "M", "D_M", "D"), np.full(len(traj), np.nan))
    else:
        cols = {"E": s.E, "H": s.H, "M": s.M, "D_M": s.D_M, "D": s.D}
    _savetxt(out / "trajectory.csv", TRAJECTORY_COLUMNS,
             [d[c] if c in d else cols[c] for c in TRAJECTORY_COLUMNS])


def write_fields(out: Path, traj: Trajectory, times) -> dict:
    x = traj.grid.cell_centers
    actual = {}
    for t in times:
        if not traj.times[0] - 1e-9 <= t <= traj.times[-1] + 1e-9:
            log.warning("field time t=%g lies outside the run; skipped", t)
            continue
        i = traj.nearest(t)
        if abs(traj.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            log.warning("no snapshot at t=%g; writing the nearest, t=%.17g", t, traj.times[i])
        _savetxt(out / field_filename(t), FIELD_COLUMNS, [x, *traj.fields[i]])
        actual[f"{t:g}"] = float(traj.times[i])
    return actual


def run_simulation(setup: Setup):
    cfg = setup.cfg
    traj = simulate(setup.initial, cfg.rates, cfg.diffusion, cfg.stepper)
    if setup.params is None:
        return traj, None
    series = entropy_trajectory(traj, setup.params, traj.equilibrium, cfg.rates, cfg.diffusion,
                                cfg.geometry, on_indeterminate="nan")
    return traj, series


def manifest(setup: Setup, command: str, seed: int, traj: Trajectory | None = None,
             series: EntropySeries | None = None, checks=None, extra=None) -> dict:
    cfg = setup.cfg
    m = {
        "version": __version__,
        "command": command,
        "seed": seed,
        "config_text": cfg.to_text(),
        "config": cfg.values,
        "regime": setup.regime.value,
        "masses": {"M0": setup.masses.M0, "M1": setup.masses.M1},
        "beta": setup.beta,
        "params": params_section(setup.params),
        "gamma": gamma_section(setup),
    }
    mu = mu_opt_value(setup)
    if mu is not None:
        m["mu_opt"] = mu
    if traj is not None:
        m["run"] = {"n_snapshots": len(traj), "t_final": float(traj.times[-1]),
                    "clamped": traj.clamped, "halvings": traj.halvings,
                    "dt_final": traj.dt_final}
        m["fits"] = fitted_rates(traj)
    if setup.params_reason:
        m["params_reason"] = setup.params_reason
    if series is not None:
        m["skipped_cells_max"] = int(series.skipped.max())
    if checks is not None:
        m["checks"] = {r.name: r.status.value for r in checks}
    if extra:
        m.update(extra)
    return jsonable(m)


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def write_run(out: Path, setup: Setup, command: str, seed: int, traj, series,
              checks=None, extra=None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    formats = setup.cfg.formats
    extra = dict(extra or {})
    if "csv" in formats:
        write_trajectory(out, traj, series)
        extra["field_snapshots"] = write_fields(out, traj, setup.cfg.field_times)
    m = manifest(setup, command, seed, traj, series, checks, extra)
    if "json" in formats:
        write_json(out / "manifest.json", m)
        if checks is not None:
            (out / "checks.json").write_text(reports_to_json(checks) + "\n")
    return m


# --------------------------------------------------------------------------
# verification battery


def _not_applicable(name: str, reason: str) -> CheckReport:
    return CheckReport(name, Status.NOT_APPLICABLE, 0.0, None, 0.0, {"reason": reason})


def run_checks(setup: Setup, traj: Trajectory, series: EntropySeries, seed: int) -> list:
    cfg = setup.cfg
    rates, diff, geom, grid = cfg.rates, cfg.diffusion, cfg.geometry, cfg.grid
    params, eq = setup.params, traj.equilibrium
    gamma = setup.gamma_value if setup.gamma is not None and setup.gamma.positive else None
    rng = np.random.default_rng(seed)
    reports = [
        check_conservation(traj),
        check_mass_dissipation(traj, rates, grid),
        check_p_l2_decay(traj, diff.d_p, geom, rates, cfg["verify.eps_p"]),
        check_important_inequality(seed=seed),
    ]
    if params is None:
        for name in ("entropy_decay", "functional_inequality_trajectory",
                     "functional_inequality_audit", "ckp_bounds", "rate_predictions",
                     "truncated_lsi", "linearized_rate"):
            reports.append(_not_applicable(name, setup.params_reason))
        return reports
    reports += [
        check_entropy_decay(traj, params, eq, rates, diff, geom, gamma, series),
        check_functional_inequality_along(traj, params, rates, diff, geom, gamma),
    ]

    if gamma is None:
        reports.append(_not_applicable("functional_inequality_audit", setup.gamma_reason))
    else:
        states = [random_audit_states(grid, setup.regime, rng, setup.masses.M0,
                                      setup.masses.M1, eq.e_inf)
                  for _ in range(cfg["verify.audit_states"])]
        eqs = [equilibrium(st, diff) if setup.regime is Regime.FULL else eq for st in states]
        n = len(states)
        reports.append(audit_functional_inequality(states, [params] * n, eqs, [rates] * n,
                                                   diff, geom, [gamma] * n))

    if setup.regime is Regime.FULL:
        reports.append(check_ckp_bounds(traj, params, eq, rates, geom))
    else:
        reports.append(_not_applicable("ckp_bounds", "stated for all-positive diffusion"))

    if gamma is None:
        reports.append(_not_applicable("rate_predictions", setup.gamma_reason))
    else:
        try:
            pred = linf_rate_predictions(gamma, cfg["verify.n"], cfg["verify.eta"], diff.d_p,
                                         geom.C_P, cfg["verify.eps_p"], setup.regime, rates)
            reports.append(check_rate_predictions(traj, pred))
        except HypothesisError as err:
            reports.append(_not_applicable("rate_predictions", str(err)))
        except FitError as err:
            reports.append(CheckReport("rate_predictions", Status.FAIL, -math.inf, None, 0.0,
                                       {"error": str(err)}))

    samples = smooth_positive_samples(grid, cfg["verify.lsi_samples"], rng)
    reports.append(check_truncated_lsi(samples, params.eps_s, geom, grid))

    if setup.regime is Regime.FULL:
        reports.append(linearized_check(setup))
    else:
        reports.append(_not_applicable("linearized_rate", "needs all-positive diffusion"))
    return reports


def linearized_check(setup: Setup) -> CheckReport:
    cfg = setup.cfg
    grid, M0 = cfg.grid, setup.masses.M0
    mu = mu_opt(cfg.rates, M0)
    x = grid.cell_centers
    pert = 1e-3 * (1.0 + np.cos(np.pi * x))
    t_end = 30.0 / mu
    lin = simulate_linearized([-pert, pert, np.zeros_like(x), np.zeros_like(x)], cfg.rates,
                              cfg.diffusion, M0, grid, t_end, t_end / 600, n_modes=8)
    return check_linearized_rate(lin, mu)


def all_passed(reports) -> bool:
    return all(r.status is not Status.FAIL for r in reports)


# --------------------------------------------------------------------------
# rates report


def rates_report(setup: Setup) -> dict:
    cfg = setup.cfg
    rates, diff, geom = cfg.rates, cfg.diffusion, cfg.geometry
    out = {
        "regime": setup.regime.value,
        "masses": {"M0": setup.masses.M0, "M1": setup.masses.M1},
        "beta": setup.beta,
        "params": params_section(setup.params),
        "gamma": gamma_section(setup),
    }
    g = setup.gamma
    if g is not None and g.positive:
        preds = []
        for eta in ETA_GRID:
            try:
                p = linf_rate_predictions(g.value, cfg["verify.n"], eta, diff.d_p, geom.C_P,
                                          cfg["verify.eps_p"], setup.regime, rates)
                preds.append({"eta": eta, **p.as_dict()})
            except HypothesisError:
                p = linf_rate_predictions(g.value, cfg["verify.n"], eta, diff.d_p, geom.C_P,
                                          cfg["verify.eps_p"], setup.regime, rates,
                                          include_p=False)
                preds.append({"eta": eta, **p.as_dict(), "p_note": "needs n (1 + eta) >= 4"})
        out["predictions"] = preds
    else:
        out["predictions"] = {"status": Status.NOT_APPLICABLE.value,
                              "reason": setup.gamma_reason}
    if setup.regime is Regime.FULL:
        spectrum = linearized_spectrum(rates, diff, setup.masses.M0, 10)
        out["mu_opt"] = spectrum.mu_opt
        out["linearized_predictions"] = linearized_rate_predictions(rates, diff, setup.masses.M0)
        out["modes"] = [{"j": j, "lambda": float(lam), "tau_plus": float(tp),
                         "tau_minus": float(tm)}
                        for j, (lam, tp, tm) in enumerate(
                            zip(spectrum.lambdas, spectrum.tau_plus, spectrum.tau_minus))]
    else:
        out["modes"] = [{"j": j, "lambda": float(lam), "d_s_lambda": float(diff.d_s * lam)}
                        for j, lam in enumerate(neumann_eigenvalues(10))]
    return jsonable(out)


# --------------------------------------------------------------------------
# commands


def _config_from_args(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("arguments", "give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("arguments", "one of --config or --preset is required")
    overrides = {}
    if getattr(args, "gamma_scale", None) is not None:
        overrides["gamma.scale"] = repr(float(args.gamma_scale))
    for item in getattr(args, "set", None) or []:
        key, _, val = item.partition("=")
        overrides[key.strip()] = val.strip()
    return cfg.with_overrides(overrides) if overrides else cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out) if args.out else Path(cfg["outputs.directory"])


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    setup = prepare(cfg)
    traj, series = run_simulation(setup)
    out = _out_dir(args, cfg)
    checks = [check_conservation(traj)]
    write_run(out, setup, "simulate", args.seed, traj, series, checks)
    print(f"wrote {out}")
    return 0


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    setup = prepare(cfg)
    traj, series = run_simulation(setup)
    reports = run_checks(setup, traj, series, args.seed)
    out = _out_dir(args, cfg)
    write_run(out, setup, "verify", args.seed, traj, series, reports)
    for r in reports:
        print(f"{r.status.value:15s} {r.name:34s} margin={r.worst_margin:+.3e}")
    ok = all_passed(reports)
    print("verification " + ("passed" if ok else "FAILED"))
    return 0 if ok else EXIT_FAIL


def cmd_rates(args) -> int:
    cfg = _config_from_args(args)
    report = rates_report(prepare(cfg))
    text = json.dumps(report, indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rates.json").write_text(text + "\n")
    print(text)
    return 0


def fig1_summary(setup: Setup, traj: Trajectory) -> dict:
    """Late-time norms, mid-time profiles and entropy monotonicity for several ``eps_s``."""
    cfg = setup.cfg
    d = traj.diagnostics
    x = traj.grid.cell_centers
    mid = (x > 0.4) & (x < 0.6)
    i10 = traj.nearest(10.0)
    summary = {
        "t_final": float(traj.times[-1]),
        "final": {k: float(d[k][-1]) for k in ("s_inf", "c_inf", "e_dev_inf", "p_dev_inf")},
        "p_mean_final": float(traj.fields[-1, 3].mean()),
        "t10": {"t": float(traj.times[i10]),
                "s_max_mid": float(traj.fields[i10, 1][mid].max()),
                "c_max_mid": float(traj.fields[i10, 2][mid].max())},
        "entropy": {},
    }
    for eps in FIG1_EPS:
        p = default_params_degenerate(cfg.rates, eps, traj.equilibrium.e_inf)
        s = entropy_trajectory(traj, p, traj.equilibrium, cfg.rates, cfg.diffusion,
                               cfg.geometry, on_indeterminate="nan")
        rises = np.diff(s.E) / max(float(s.E[0]), 1e-300)
        summary["entropy"][f"{eps:g}"] = {
            "E0": float(s.E[0]),
            "E_final": float(s.E[-1]),
            "max_relative_increase": float(max(rises.max(), 0.0)),
            "monotone": bool(rises.max() <= 1e-12),
            "skipped_cells_max": int(s.skipped.max()),
        }
    return summary


def cmd_fig1(args) -> int:
    cfg = preset("fig1")
    if args.set:
        cfg = cfg.with_overrides(dict(i.partition("=")[::2] for i in args.set))
    setup = prepare(cfg)
    traj, series = run_simulation(setup)
    out = Path(args.out) if args.out else Path(cfg["outputs.directory"])
    summary = fig1_summary(setup, traj)
    write_run(out, setup, "fig1", args.seed, traj, series, [check_conservation(traj)],
              {"fig1": summary})
    f = summary["final"]
    print(f"t={summary['t_final']:g}: |s|={f['s_inf']:.3e} |c|={f['c_inf']:.3e} "
          f"|e-e_inf|={f['e_dev_inf']:.3e} mean p={summary['p_mean_final']:.6f}")
    for eps, rec in summary["entropy"].items():
        print(f"eps_s={eps}: entropy {'monotone' if rec['monotone'] else 'NOT monotone'}, "
              f"skipped cells {rec['skipped_cells_max']}")
    print(f"wrote {out}")
    return 0


def _sweep_worker(job):
    text, out, seed, verify = job
    from .config import parse_config

    cfg = parse_config(text)
    try:
        setup = prepare(cfg)
        traj, series = run_simulation(setup)
        checks = run_checks(setup, traj, series, seed) if verify else [check_conservation(traj)]
        write_run(Path(out), setup, "verify" if verify else "simulate", seed, traj, series,
                  checks)
        return {"status": "PASS" if all_passed(checks) else "FAIL", "gamma": setup.gamma_value}
    except PositivityError as err:
        return {"status": "ERROR", "error": str(err), "t": err.t}
    except ConfigError as err:
        return {"status": "ERROR", "error": str(err)}


def parse_sweep_axes(items) -> list[tuple[str, list[str]]]:
    axes = []
    for item in items or []:
        key, sep, vals = item.partition("=")
        if not sep or not vals.strip():
            raise ConfigError("--vary", f"expected key=v1,v2,..., got {item!r}")
        axes.append((key.strip(), [v.strip() for v in vals.split(",")]))
    return axes


def cmd_sweep(args) -> int:
    base = _config_from_args(args)
    axes = parse_sweep_axes(args.vary)
    out = _out_dir(args, base)
    jobs, index = [], []
    for i, combo in enumerate(itertools.product(*(v for _, v in axes))):
        overrides = {k: v for (k, _), v in zip(axes, combo)}
        cfg = base.with_overrides(overrides)  # validates before any work starts
        run_dir = out / f"run_{i:03d}"
        jobs.append((cfg.to_text(), str(run_dir), args.seed, args.verify))
        index.append({"run": run_dir.name, "overrides": overrides})
    out.mkdir(parents=True, exist_ok=True)
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_worker, jobs))
    for rec, res in zip(index, results):
        rec.update(res)
        print(f"{rec['run']}: {res['status']} {rec['overrides']}")
    write_json(out / "sweep.json", jsonable(index))
    return 0 if all(r["status"] == "PASS" for r in results) else EXIT_FAIL


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enzyme-rd",
        description="Reaction-diffusion simulator and entropy diagnostics for E + S <-> C -> E + P.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, gamma=True):
        p.add_argument("--config", help="config file, or a manifest.json from an earlier run")
        p.add_argument("--preset", choices=sorted(PRESETS), help="built-in configuration")
        p.add_argument("--out", help="output directory (default: outputs.directory)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        if gamma:
            p.add_argument("--gamma-scale", type=float, default=None,
                           help="multiply the explicit rate before checking it")

    common(sub.add_parser("simulate", help="run one simulation"))
    common(sub.add_parser("rates", help="explicit and linearised rates, no time stepping"))
    common(sub.add_parser("verify", help="simulate and run the check battery"))
    f = sub.add_parser("fig1", help="reproduce the degenerate-regime reference run")
    f.add_argument("--out", help="output directory")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--set", action="append", metavar="KEY=VALUE")
    s = sub.add_parser("sweep", help="cartesian parameter sweep in parallel")
    common(s)
    s.add_argument("--vary", action="append", metavar="KEY=V1,V2,...",
                   help="values for one key (repeatable)")
    s.add_argument("--workers", type=int, default=None, help="worker processes")
    s.add_argument("--verify", action="store_true", help="run the check battery per point")
    return parser


COMMANDS = {"simulate": cmd_simulate, "rates": cmd_rates, "verify": cmd_verify,
            "fig1": cmd_fig1, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except PositivityError as err:
        print(f"positivity error: {err}", file=sys.stderr)
        return EXIT_POSITIVITY


if __name__ == "__main__":
    sys.exit(main())
