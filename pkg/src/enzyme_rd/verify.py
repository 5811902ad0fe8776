"""Numerical checks of the conservation laws, entropy estimates and decay rates.

Every check returns a :class:`CheckReport`.  ``worst_margin`` is the most
adverse signed slack (negative means violated); a report passes when it is
not below ``-tolerance``.  Checks whose hypotheses fail on the given data are
reported as ``NOT_APPLICABLE`` instead of failing.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DiffusionCoeffs,
    GeometryConstants,
    Grid1D,
    RateConstants,
    Regime,
    SystemState,
)
from .dynamics import EquilibriumState, Trajectory, neumann_laplacian
from .entropy import (
    EntropyParams,
    EntropySeries,
    entropy_trajectory,
    important_inequality_slack,
    mass_density,
    production_terms,
    relative_entropy,
    total_entropy,
    truncated_mean,
)
from .rates import (
    LinearizedTrajectory,
    LinfPredictions,
    fit_decay_rate,
)

__all__ = [
    "Status",
    "CheckReport",
    "check_mass_dissipation",
    "check_conservation",
    "check_entropy_decay",
    "check_functional_inequality",
    "audit_functional_inequality",
    "random_audit_states",
    "check_ckp_bounds",
    "check_truncated_lsi",
    "smooth_positive_samples",
    "check_p_l2_decay",
    "check_rate_predictions",
    "check_linearized_rate",
    "check_important_inequality",
    "reports_to_json",
    "jsonable",
    "check_functional_inequality_along",
]

SKIP_FRACTION = 1e-3


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NOT_APPLICABLE = "NOT_APPLICABLE"


def jsonable(v):
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, enum.Enum):
        return v.value
    return v


@dataclass
class CheckReport:
    name: str
    status: Status
    worst_margin: float
    locator: object = None  # time, sample index or seed of the worst case
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    @property
    def applicable(self) -> bool:
        return self.status is not Status.NOT_APPLICABLE

    def to_dict(self) -> dict:
        return jsonable({
            "name": self.name,
            "status": self.status,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "locator": self.locator,
            "tolerance": self.tolerance,
            "details": self.details,
        })

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(d["name"], Status(d["status"]), d["worst_margin"], d.get("locator"),
                   d.get("tolerance", 0.0), d.get("details", {}))


def _report(name, margin, locator, tol, details, applicable=True) -> CheckReport:
    if not applicable:
        status = Status.NOT_APPLICABLE
    else:
        status = Status.PASS if margin >= -tol else Status.FAIL
    return CheckReport(name, status, float(margin), locator, tol, details)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


# --------------------------------------------------------------------------
# conservation and mass dissipation


def check_conservation(traj: Trajectory, tolerance: float = 1e-10) -> CheckReport:
    """Relative drift of both masses, plus pointwise ``e + c`` when ``d_e = d_c = 0``."""
    d = traj.diagnostics
    M0, M1 = d["M0"], d["M1"]
    drift0 = float(np.max(np.abs(M0 - M0[0]))) / max(1.0, abs(M0[0]))
    drift1 = float(np.max(np.abs(M1 - M1[0]))) / max(1.0, abs(M1[0]))
    details = {"M0_drift": drift0, "M1_drift": drift1, "clamped": traj.clamped}
    worst = max(drift0, drift1)
    if traj.equilibrium.regime is Regime.DEGENERATE:
        ec = traj.fields[:, 0, :] + traj.fields[:, 2, :]
        pw = float(np.max(np.abs(ec - ec[0])))
        details["pointwise_drift"] = pw
        worst = max(worst, pw)
    return _report("conservation", tolerance - worst, None, 0.0, details)


def check_mass_dissipation(
    traj: Trajectory, rates: RateConstants, grid: Grid1D | None = None, tolerance: float = 5e-2
) -> CheckReport:
    """Compare the time derivative of ``M`` with its closed form.

    The derivative is a second-order difference over snapshots (interior
    times); the mismatch is ``max |fd - rhs| / max |rhs|``.  Also checks that
    ``M`` never increases.
    """
    if len(traj) < 3:
        raise ValueError("mass dissipation check needs at least 3 snapshots")
    g = grid or traj.grid
    e, s, c = traj.fields[:, 0], traj.fields[:, 1], traj.fields[:, 2]
    w = 0.5 * (2.0 * rates.k_r + rates.k_c) / rates.k_r
    M = (c + w * s).sum(axis=1) / g.n_cells
    rhs = (-(rates.k_f * rates.k_c / (2.0 * rates.k_r)) * (e * s).sum(axis=1)
           - 0.5 * rates.k_c * c.sum(axis=1)) / g.n_cells
    fd = np.gradient(M, traj.times)[1:-1]
    r = rhs[1:-1]
    err = np.abs(fd - r)
    scale = float(np.max(np.abs(r)))
    i = int(np.argmax(err))
    mismatch = float(err[i] / scale) if scale > 0 else float(err[i])
    rises = np.diff(M) > 1e-14 * max(1.0, float(M[0]))
    details = {
        "mismatch": mismatch,
        "monotone": not bool(rises.any()),
        "n_increases": int(rises.sum()),
    }
    margin = tolerance - mismatch
    if rises.any():
        margin = min(margin, -float(np.max(np.diff(M))))
    return _report("mass_dissipation", margin, float(traj.times[i + 1]), 0.0, details)


# --------------------------------------------------------------------------
# entropy decay


def check_entropy_decay(
    traj: Trajectory,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    gamma,
    series: EntropySeries | None = None,
    tolerance: float = 1e-2,
    monotone_tolerance: float = 1e-12,
) -> CheckReport:
    """``E(t) <= E(0) exp(-gamma t) (1 + tolerance)`` and monotone decrease.

    The exponential bound is not applicable when the degenerate regime has
    ``beta = min(e_0 + c_0) = 0`` or when ``gamma`` is ``None`` or
    non-positive; the monotone sub-check is always evaluated and a failure
    there fails the report.
    """
    if series is None:
        series = entropy_trajectory(traj, params, eq, rates, diff, geometry,
                                    on_indeterminate="nan")
    E, t = series.E, series.t - series.t[0]
    E0 = float(E[0])
    g = None if gamma is None else float(gamma)
    beta = float(np.min(traj.fields[0, 0] + traj.fields[0, 2]))
    bound_ok = g is not None and g > 0 and not (eq.regime is Regime.DEGENERATE and beta <= 0)

    scale = max(E0, 1e-300)
    rises = np.diff(E) / scale
    mono_margin = -float(rises.max()) if rises.size else 0.0
    mono_pass = mono_margin >= -monotone_tolerance
    details = {
        "E0": E0,
        "E_final": float(E[-1]),
        "beta": beta,
        "gamma": g,
        "monotone": bool(mono_pass),
        "max_relative_increase": float(max(rises.max(), 0.0)) if rises.size else 0.0,
        "bound_applicable": bool(bound_ok),
    }
    if bound_ok:
        bound = E0 * np.exp(-g * t) * (1.0 + tolerance)
        rel = (bound - E) / scale
        i = int(np.argmin(rel))
        details["bound_margin"] = float(rel[i])
        margin = float(rel[i]) if mono_pass else min(float(rel[i]), mono_margin)
        return _report("entropy_decay", margin, float(series.t[i]), 0.0, details)
    loc = float(series.t[int(np.argmax(rises)) + 1]) if rises.size else None
    if not mono_pass:
        return _report("entropy_decay", mono_margin, loc, 0.0, details)
    return _report("entropy_decay", mono_margin, loc, 0.0, details, applicable=False)


# --------------------------------------------------------------------------
# functional inequality


def _rhs_parts(state, params, eq, rates, diff, geometry, on_indeterminate):
    g = state.grid
    n = g.n_cells
    terms = production_terms(state, params, eq, rates, diff, geometry, g, on_indeterminate)
    dens = np.sum(np.stack(list(terms.values())), axis=0)
    nan = np.isnan(dens)
    D = float(np.sum(dens[~nan]) / n)
    DM = float(mass_density(state, rates).sum() / n)
    k, eps_s = params.k, params.eps_s
    parts = {"D": D, "D_M": DM, "skipped": int(nan.sum())}
    parts["terms"] = {name: float(np.nansum(v) / n) for name, v in terms.items()}
    if diff.regime is Regime.FULL:
        M0 = float(np.mean(eq.e_inf))
        coef_m = k * rates.k_c / 2.0 - rates.k_c - rates.k_r - 2.0 * rates.k_f * eps_s
        coef_e = (diff.d_e * geometry.C_LSI
                  - 6.0 * ((rates.k_c + rates.k_r) / M0 + rates.k_f) * max(params.eps_c, eps_s))
        e_bar = float(np.mean(state.e))
        he = float(np.sum(relative_entropy(state.e, e_bar)) / n)
        parts.update(coef_M=coef_m, coef_e=coef_e, H_e_mean=he)
        parts["rhs"] = D + coef_m * DM + coef_e * he
    else:
        coef_m = k * rates.k_c / 2.0 - rates.k_f * eps_s
        parts.update(coef_M=coef_m)
        parts["rhs"] = D + coef_m * DM
    return parts


def check_functional_inequality(
    state: SystemState,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    gamma,
    on_indeterminate: str = "raise",
    rel_tolerance: float = 1e-10,
) -> CheckReport:
    """``gamma E <= D + coef_M D_M (+ coef_e int h(e | mean e))`` at one state.

    The slack is ``rhs - gamma E``; rounding tolerance is ``rel_tolerance``
    times the largest term.  ``details["terms"]`` attributes the production
    integral to its individual summands.
    """
    g = float(gamma)
    rep = total_entropy(state, params, eq, rates)
    parts = _rhs_parts(state, params, eq, rates, diff, geometry, on_indeterminate)
    lhs = g * rep.E
    slack = parts["rhs"] - lhs
    scale = max(abs(lhs), abs(parts["rhs"]), abs(parts["D"]), 1e-300)
    details = dict(parts, E=rep.E, gamma=g, lhs=lhs)
    skipped_frac = parts["skipped"] / state.grid.n_cells
    if skipped_frac > SKIP_FRACTION:
        details["skip_exceeded"] = True
        return _report("functional_inequality", -math.inf, state.t, 0.0, details)
    return _report("functional_inequality", slack / scale, state.t, rel_tolerance, details)


def check_functional_inequality_along(
    traj: Trajectory,
    params: EntropyParams,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    gamma,
    rel_tolerance: float = 1e-10,
) -> CheckReport:
    """:func:`check_functional_inequality` at every snapshot; reports the worst.

    Not applicable when ``gamma`` is ``None`` or non-positive.
    """
    name = "functional_inequality_trajectory"
    if gamma is None or not float(gamma) > 0:
        return _report(name, 0.0, None, rel_tolerance, {"gamma": None}, applicable=False)
    worst, loc, fails = math.inf, None, 0
    for i in range(len(traj)):
        rep = check_functional_inequality(traj.state(i), params, traj.equilibrium, rates, diff,
                                          geometry, gamma, "nan", rel_tolerance)
        fails += not rep.passed
        if rep.worst_margin < worst:
            worst, loc = rep.worst_margin, rep.locator
    return _report(name, worst, loc, rel_tolerance,
                   {"gamma": float(gamma), "n_states": len(traj), "violations": fails})


def audit_functional_inequality(
    states,
    params_list,
    eqs,
    rates_list,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    gammas,
    name: str = "functional_inequality_audit",
) -> CheckReport:
    """Run :func:`check_functional_inequality` over many states; report the worst."""
    worst, loc, fails, n = math.inf, None, 0, 0
    for i, (st, p, eq, r, g) in enumerate(zip(states, params_list, eqs, rates_list, gammas)):
        rep = check_functional_inequality(st, p, eq, r, diff, geometry, g)
        n += 1
        if not rep.passed:
            fails += 1
        if rep.worst_margin < worst:
            worst, loc = rep.worst_margin, i
    details = {"n_states": n, "violations": fails}
    status = Status.PASS if fails == 0 else Status.FAIL
    return CheckReport(name, status, float(worst), loc, 1e-10, details)


def random_audit_states(
    grid: Grid1D,
    regime: Regime,
    rng: np.random.Generator,
    M0: float = 1.0,
    M1: float = 1.0,
    e_inf=None,
):
    """A random strictly positive state compatible with the conservation laws.

    All-positive diffusion: ``int (e + c) = M0`` and ``int (s + c) < M1``.
    Degenerate: ``e + c = e_inf`` pointwise and ``int (s + c) < M1``.
    Amplitudes are drawn log-uniformly so states span all four threshold
    domains.
    """
    n = grid.n_cells

    def pos(scale_lo, scale_hi):
        amp = np.exp(rng.uniform(np.log(scale_lo), np.log(scale_hi), size=n))
        return amp * rng.uniform(0.05, 1.0, size=n)

    if regime is Regime.FULL:
        e = pos(1e-3, 1.0)
        c = pos(1e-6, 1.0)
        tot = (e + c).mean()
        e, c = e * M0 / tot, c * M0 / tot
    else:
        e_inf = np.asarray(e_inf, dtype=float)
        frac = np.exp(rng.uniform(np.log(1e-6), np.log(0.999), size=n))
        c = frac * e_inf
        e = e_inf - c
    s = pos(1e-6, 1.0)
    budget = M1 - c.mean()
    if budget <= 0:
        c = c * 0.5 * M1 / c.mean()
        if regime is Regime.FULL:
            e = e * (M0 - c.mean()) / e.mean()
        else:
            e = e_inf - c
        budget = M1 - c.mean()
    s = s * rng.uniform(0.01, 0.999) * budget / s.mean()
    p = np.full(n, max(M1 - c.mean() - s.mean(), 0.0))
    return SystemState(grid, e, s, c, p)


# --------------------------------------------------------------------------
# L1 bounds, truncated log-Sobolev, p decay


def check_ckp_bounds(
    traj: Trajectory,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    geometry: GeometryConstants,
    rel_tolerance: float = 1e-12,
) -> CheckReport:
    """L1 norms of ``c``, ``s`` and ``e - e_inf`` against their entropy bounds."""
    if eq.regime is not Regime.FULL:
        raise ValueError("the L1 entropy bounds are stated for all-positive diffusion")
    k = params.k
    worst, loc = math.inf, None
    per = {"c": math.inf, "s": math.inf, "e": math.inf}
    for i in range(len(traj)):
        st = traj.state(i)
        E = total_entropy(st, params, eq, rates).E
        bounds = {
            "c": (float(np.mean(np.abs(st.c))), E / k),
            "s": (float(np.mean(np.abs(st.s))), 2.0 * rates.k_r * E / (k * (2.0 * rates.k_r + rates.k_c))),
            "e": (float(np.mean(np.abs(st.e - eq.e_inf))), math.sqrt(geometry.C_CKP * E)),
        }
        for key, (norm, bound) in bounds.items():
            m = (bound - norm) / max(bound, norm, 1e-300)
            per[key] = min(per[key], m)
            if m < worst:
                worst, loc = m, float(st.t)
    return _report("ckp_bounds", worst, loc, rel_tolerance, {"per_bound_margin": per})


def smooth_positive_samples(grid: Grid1D, n: int, rng: np.random.Generator, n_modes: int = 6):
    """Truncated cosine series with a positive offset (min value in (0.01, 1))."""
    x = grid.cell_centers
    out = []
    for _ in range(n):
        coef = rng.normal(size=n_modes) / np.arange(1, n_modes + 1)
        f = sum(a * np.cos((j + 1) * np.pi * x) for j, a in enumerate(coef))
        f = f - f.min() + rng.uniform(0.01, 1.0)
        out.append(f * np.exp(rng.uniform(-2, 2)))
    return out


def check_truncated_lsi(
    samples, eps: float, geometry: GeometryConstants, grid: Grid1D, rel_tolerance: float = 1e-10
) -> CheckReport:
    """Discrete truncated log-Sobolev inequality for each sample.

    ``-int_{f >= eps} log(f/eps) Lap f >= C_LSI int_{f >= eps} h(f | mean_eps f)``
    with the ghost-cell Laplacian.
    """
    worst, loc = math.inf, None
    for i, f in enumerate(samples):
        f = grid.check(f)
        mask = f >= eps
        lap = neumann_laplacian(f, grid)
        lhs = -float(np.sum(np.log(f[mask] / eps) * lap[mask]) / grid.n_cells)
        fbar = truncated_mean(f, eps, grid)
        rhs = geometry.C_LSI * float(np.sum(relative_entropy(f[mask], fbar)) / grid.n_cells)
        m = (lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300) if (lhs or rhs) else 0.0
        if m < worst:
            worst, loc = m, i
    return _report("truncated_lsi", worst, loc, rel_tolerance,
                   {"n_samples": len(samples), "eps": eps, "C_LSI": geometry.C_LSI})


def check_p_l2_decay(
    traj: Trajectory,
    d_p: float,
    geometry: GeometryConstants,
    rates: RateConstants,
    eps: float = 0.5,
    rel_tolerance: float = 1e-2,
) -> CheckReport:
    """Integral bound on ``|p - mean p|_2^2`` with forcing ``k_c (c - mean c)``.

    ``alpha = 2 d_p (1 - eps) / C_P``; the convolution is integrated by the
    trapezoid rule over snapshots.
    """
    if len(traj) < 2:
        raise ValueError("p decay check needs at least 2 snapshots")
    d = traj.diagnostics
    t = traj.times - traj.times[0]
    alpha = 2.0 * d_p * (1.0 - eps) / geometry.C_P
    lhs = d["p_dev_l2"] ** 2
    forcing = (rates.k_c * d["c_dev_l2"]) ** 2
    # exp(-alpha t) int_0^t exp(alpha s) F(s) ds, in a form that cannot overflow
    conv = np.zeros_like(t)
    for i in range(1, t.size):
        dt = t[i] - t[i - 1]
        conv[i] = conv[i - 1] * math.exp(-alpha * dt) + 0.5 * dt * (
            forcing[i - 1] * math.exp(-alpha * dt) + forcing[i])
    rhs = np.exp(-alpha * t) * lhs[0] + geometry.C_P / (2.0 * d_p * eps) * conv
    # squared deviations below this are rounding noise of O(1) fields
    p_scale = float(np.max(np.abs(traj.fields[:, 3, :])))
    floor = (1e-13 * max(1.0, p_scale)) ** 2
    allowed = rhs * (1.0 + rel_tolerance) + floor
    rel = (allowed - lhs) / np.maximum(np.maximum(rhs, lhs), floor)
    i = int(np.argmin(rel))
    return _report("p_l2_decay", float(rel[i]), float(traj.times[i]), 0.0,
                   {"alpha": alpha, "eps": eps, "rel_tolerance": rel_tolerance,
                    "abs_floor": floor})


# --------------------------------------------------------------------------
# rates


_SERIES = {"s": "s_inf", "c": "c_inf", "e": "e_dev_inf", "p": "p_dev_inf"}


def check_rate_predictions(
    traj: Trajectory,
    predictions: LinfPredictions | dict,
    window=None,
    floor: float = 1e-12,
    tolerance: float = 0.05,
    species=("s", "c", "e", "p"),
) -> CheckReport:
    """Fitted L-infinity decay exponents must reach ``(1 - tolerance)`` of the prediction.

    The predictions are lower bounds on decay speed.  A series that falls
    below ``floor`` before the window raises :class:`FitError`.
    """
    pred = predictions.as_dict() if isinstance(predictions, LinfPredictions) else dict(predictions)
    d = traj.diagnostics
    fits, worst, loc = {}, math.inf, None
    for sp in species:
        want = pred.get(sp)
        if want is None:
            continue
        fit = fit_decay_rate(traj.times, d[_SERIES[sp]], window, floor)
        m = (fit.rate - (1.0 - tolerance) * want) / want
        fits[sp] = {"fitted": fit.rate, "predicted": want, "r_squared": fit.r_squared,
                    "window": fit.window, "margin": m}
        if m < worst:
            worst, loc = m, sp
    return _report("rate_predictions", worst, loc, 0.0, {"fits": fits})


def check_linearized_rate(
    lin: LinearizedTrajectory,
    expected: float,
    window=None,
    floor: float = 1e-200,
    tolerance: float = 0.05,
) -> CheckReport:
    """Fitted decay of ``|s~|_inf + |c~|_inf`` equals ``expected`` within ``tolerance``."""
    y = lin.linf("s") + lin.linf("c")
    fit = fit_decay_rate(lin.times, y, window, floor)
    rel = abs(fit.rate - expected) / expected
    return _report("linearized_rate", tolerance - rel, None, 0.0,
                   {"fitted": fit.rate, "expected": expected, "relative_error": rel,
                    "r_squared": fit.r_squared})


def check_important_inequality(n_samples: int = 100_000, seed: int = 0) -> CheckReport:
    """``x - 1 <= 6 (sqrt(x) - 1)**2`` on random ``x >= 2``."""
    rng = np.random.default_rng(seed)
    x = 2.0 + np.concatenate([
        rng.uniform(0.0, 1.0, n_samples // 2),
        np.exp(rng.uniform(np.log(1e-12), np.log(1e8), n_samples - n_samples // 2)),
    ])
    x[0] = 2.0
    slack = important_inequality_slack(x) / (x - 1.0)
    i = int(np.argmin(slack))
    return _report("important_inequality", float(slack[i]), float(x[i]), 0.0,
                   {"n_samples": int(x.size), "seed": seed})

