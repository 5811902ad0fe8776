"""Entropy kernels, functionals, threshold domains and production densities.

Notation (all integrals over the unit interval, midpoint quadrature):

* ``h(x|y) = x log(x/y) - x + y``, the relative Boltzmann kernel;
* ``h_eps(x|eps)``, the same kernel cut to 0 below the threshold ``eps``;
* ``dissip(x) = x - log x - 1`` and ``bold(x|y) = (x - y) log(x/y)``;
* ``M = int(c + (2k_r + k_c)/(2k_r) s)``, the weighted partial mass;
* ``H = int h(e|e_inf) + int h_eps_c(c|eps_c) + int h_eps_s(s|eps_s)``;
* ``E = H + k M``.

Cells whose reference enzyme level ``e_inf`` is zero (possible only in the
degenerate regime) carry ``eps_c = 0``.  Their complex stays identically
zero; they are classified as "below threshold" for ``c`` and use the
conventions ``h(0|0) = 0`` and zero cut entropy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DiffusionCoeffs,
    GeometryConstants,
    Grid1D,
    RateConstants,
    SystemState,
)
from .dynamics import EquilibriumState, Trajectory

__all__ = [
    "KernelDomainError",
    "IndeterminateRatioError",
    "Kernel",
    "EntropyParams",
    "EntropyReport",
    "DomainPartition",
    "EntropySeries",
    "eval_kernel",
    "relative_entropy",
    "cut_relative_entropy",
    "mass_functional",
    "mass_density",
    "partial_entropy",
    "total_entropy",
    "partition_domains",
    "truncated_mean",
    "production_terms",
    "production_density",
    "entropy_trajectory",
    "important_inequality_slack",
]


class KernelDomainError(ValueError):
    """Kernel evaluated outside its domain."""


class IndeterminateRatioError(ArithmeticError):
    """A production-density term needs a ratio with a zero denominator."""

    def __init__(self, term: str, cell: int, t: float | None = None):
        where = f"cell {cell}" + ("" if t is None else f" at t = {t:.17g}")
        super().__init__(f"indeterminate ratio in term {term!r} at {where}")
        self.term = term
        self.cell = cell
        self.t = t


class Kernel(str, enum.Enum):
    BOLTZMANN = "boltzmann"
    RELATIVE = "relative"
    CUT_RELATIVE = "cut_relative"
    DISSIP = "dissip"
    BOLD = "bold"


# --------------------------------------------------------------------------
# scalar kernels (vectorised)


def _xlog_ratio(x, y):
    # x * log(x / y) with the x = 0 limit; y > 0 where x > 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * np.log(x / y)
    return np.where(x == 0, 0.0, out)


def relative_entropy(x, y, allow_zero_reference: bool = False):
    """``h(x|y)``; ``h(0|y) = y``.

    With ``allow_zero_reference`` the pair ``(0, 0)`` evaluates to 0; a
    positive ``x`` over a zero reference is still a domain error.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(x < 0):
        raise KernelDomainError("relative entropy needs x >= 0")
    zero = y <= 0
    if np.any(zero):
        if not allow_zero_reference or np.any(y < 0) or np.any(x[zero] > 0):
            raise KernelDomainError("relative entropy needs y > 0")
    y_safe = np.where(zero, 1.0, y)
    return np.where(zero, 0.0, _xlog_ratio(x, y_safe) - x + y_safe)


def cut_relative_entropy(x, eps):
    """``h_eps(x|eps)``: ``h(x|eps)`` for ``x >= eps`` and 0 below.

    Zero thresholds are allowed only where ``x == 0`` (value 0).
    """
    x = np.asarray(x, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if np.any(x < 0):
        raise KernelDomainError("cut relative entropy needs x >= 0")
    if np.any(eps < 0):
        raise KernelDomainError("cut threshold must be non-negative")
    x_b, eps_b = np.broadcast_arrays(x, eps)
    zero = eps_b == 0
    if np.any(x_b[zero] > 0):
        raise KernelDomainError("positive value over a zero cut threshold")
    above = (x_b >= eps_b) & ~zero
    eps_safe = np.where(zero, 1.0, eps_b)
    val = _xlog_ratio(x_b, eps_safe) - x_b + eps_safe
    return np.where(above, val, 0.0)


def _dissip(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x == 0, np.inf, x - np.log(np.where(x == 0, 1.0, x)) - 1.0)


def _bold(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (x - y) * np.log(x / y)
    return np.where(x == y, 0.0, np.where((x == 0) | (y == 0), np.inf, val))


def eval_kernel(kind, x, y=None):
    """Evaluate one of the entropy kernels, elementwise.

    Parameters
    ----------
    kind : Kernel or str
        ``BOLTZMANN`` (``x log x - x + 1``), ``RELATIVE``, ``CUT_RELATIVE``
        (``y`` is the threshold), ``DISSIP`` (``x - log x - 1``) or ``BOLD``
        (``(x - y) log(x/y)``).
    x : array_like
        Non-negative argument; strictly positive for ``DISSIP``.
    y : array_like, optional
        Strictly positive reference for the two-argument kernels.

    Returns
    -------
    ndarray or float
        ``BOLD`` returns ``inf`` where ``x == 0 < y``.
    """
    kind = Kernel(kind)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise KernelDomainError(f"{kind.value} kernel needs x >= 0")
    if kind is Kernel.BOLTZMANN:
        out = _xlog_ratio(xa, 1.0) - xa + 1.0
    elif kind is Kernel.DISSIP:
        if np.any(xa <= 0):
            raise KernelDomainError("dissip kernel needs x > 0")
        out = _dissip(xa)
    else:
        if y is None:
            raise KernelDomainError(f"{kind.value} kernel needs a reference y")
        ya = np.asarray(y, dtype=float)
        if np.any(ya <= 0):
            raise KernelDomainError(f"{kind.value} kernel needs y > 0")
        if kind is Kernel.RELATIVE:
            out = relative_entropy(xa, ya)
        elif kind is Kernel.CUT_RELATIVE:
            out = cut_relative_entropy(xa, ya)
        else:
            out = _bold(xa, ya)
    return float(out) if np.ndim(out) == 0 else out


def important_inequality_slack(x):
    """``6 (sqrt(x) - 1)**2 - (x - 1)``; non-negative for ``x >= 2``."""
    x = np.asarray(x, dtype=float)
    return 6.0 * (np.sqrt(x) - 1.0) ** 2 - (x - 1.0)


# --------------------------------------------------------------------------
# parameters and functionals


@dataclass(frozen=True)
class EntropyParams:
    """Thresholds ``eps_s`` (scalar), ``eps_c`` (scalar or field) and weight ``k``."""

    eps_s: float
    eps_c: float | np.ndarray
    k: float

    def __post_init__(self):
        if not (np.isfinite(self.eps_s) and self.eps_s > 0):
            raise ValueError(f"entropy.eps_s must be strictly positive, got {self.eps_s}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"entropy.k must be strictly positive, got {self.k}")
        if np.ndim(self.eps_c) == 0:
            if not self.eps_c > 0:
                raise ValueError(f"eps_c must be strictly positive, got {self.eps_c}")
            object.__setattr__(self, "eps_c", float(self.eps_c))
        else:
            arr = np.array(self.eps_c, dtype=float)
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError("eps_c field must be finite and non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, "eps_c", arr)

    @property
    def eps_c_is_field(self) -> bool:
        return np.ndim(self.eps_c) > 0

    def eps_c_field(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.eps_c, dtype=float), (n,))


@dataclass(frozen=True)
class EntropyReport:
    H: float
    M: float
    E: float
    H_e: float
    H_c: float
    H_s: float


def _grid_of(state: SystemState, grid: Grid1D | None) -> Grid1D:
    return grid or state.grid


def mass_functional(state: SystemState, rates: RateConstants, grid: Grid1D | None = None) -> float:
    g = _grid_of(state, grid)
    w = 0.5 * (2.0 * rates.k_r + rates.k_c) / rates.k_r
    return float(np.sum(state.c + w * state.s) / g.n_cells)


def mass_density(state: SystemState, rates: RateConstants) -> np.ndarray:
    return (rates.k_f / rates.k_r) * state.e * state.s + state.c


def _entropy_terms(state, params, eq, grid):
    n = grid.n_cells
    h_e = relative_entropy(state.e, eq.e_inf, allow_zero_reference=True)
    h_c = cut_relative_entropy(state.c, params.eps_c_field(n))
    h_s = cut_relative_entropy(state.s, params.eps_s)
    return (float(h_e.sum() / n), float(h_c.sum() / n), float(h_s.sum() / n))


def partial_entropy(
    state: SystemState, params: EntropyParams, eq: EquilibriumState, grid: Grid1D | None = None
) -> float:
    return float(sum(_entropy_terms(state, params, eq, _grid_of(state, grid))))


def total_entropy(
    state: SystemState,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    grid: Grid1D | None = None,
) -> EntropyReport:
    g = _grid_of(state, grid)
    H_e, H_c, H_s = _entropy_terms(state, params, eq, g)
    H = H_e + H_c + H_s
    M = mass_functional(state, rates, g)
    return EntropyReport(H=H, M=M, E=H + params.k * M, H_e=H_e, H_c=H_c, H_s=H_s)


def truncated_mean(f, eps, grid: Grid1D) -> float:
    """``int max(f, eps)``."""
    arr = grid.check(f)
    return float(np.sum(np.maximum(arr, eps)) / grid.n_cells)


# --------------------------------------------------------------------------
# domains and production density


@dataclass(frozen=True)
class DomainPartition:
    """Per-cell labels 1..4 for the threshold domains."""

    labels: np.ndarray

    def mask(self, k: int) -> np.ndarray:
        return self.labels == k

    def counts(self) -> dict[int, int]:
        return {k: int(np.sum(self.labels == k)) for k in (1, 2, 3, 4)}


def partition_domains(state: SystemState, params: EntropyParams) -> DomainPartition:
    """Label cells by ``c >= eps_c`` and ``s >= eps_s``.

    Cells with ``eps_c = 0`` count as below the complex threshold; they must
    hold ``c = 0``.
    """
    n = state.grid.n_cells
    eps_c = params.eps_c_field(n)
    zero = eps_c == 0
    if np.any(state.c[zero] > 0):
        cell = int(np.flatnonzero(zero & (state.c > 0))[0])
        raise KernelDomainError(f"complex is positive at cell {cell} where eps_c = 0")
    hi_c = (state.c >= eps_c) & ~zero
    hi_s = state.s >= params.eps_s
    labels = np.where(hi_c, np.where(hi_s, 1, 3), np.where(hi_s, 2, 4)).astype(np.int8)
    labels.setflags(write=False)
    return DomainPartition(labels)


_TERMS = (
    "O1_bold", "O1_ce", "O1_s_lsi", "O1_c_lsi",
    "O2_es", "O2_e", "O2_rel", "O2_s_lsi",
    "O3_ce", "O3_ec", "O3_c_lsi",
    "O4_e", "O4_ce",
)


def production_terms(
    state: SystemState,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    grid: Grid1D | None = None,
    on_indeterminate: str = "raise",
) -> dict[str, np.ndarray]:
    """Every summand of the partial entropy production density, per cell.

    Each term is zero outside its own domain.  A term whose coefficient is
    positive but whose kernel argument has a zero denominator is
    indeterminate: ``on_indeterminate="raise"`` raises
    :class:`IndeterminateRatioError`, ``"nan"`` marks the cell with NaN.
    """
    if on_indeterminate not in ("raise", "nan"):
        raise ValueError("on_indeterminate must be 'raise' or 'nan'")
    g = _grid_of(state, grid)
    n = g.n_cells
    e, s, c = (np.asarray(a, dtype=float) for a in (state.e, state.s, state.c))
    e_inf = np.broadcast_to(np.asarray(eq.e_inf, dtype=float), (n,))
    eps_c = params.eps_c_field(n)
    eps_s = params.eps_s
    k_f, k_r, k_c = rates.k_f, rates.k_r, rates.k_c
    C = geometry.C_LSI
    part = partition_domains(state, params)
    m = {k: part.mask(k) for k in (1, 2, 3, 4)}
    s_bar = truncated_mean(s, eps_s, g)
    c_bar = truncated_mean(c, eps_c, g)
    out = {name: np.zeros(n) for name in _TERMS}
    bad = {}

    def put(name, mask, coef, value_fn, undefined):
        # coef * value on mask; zero coefficient gives 0, undefined cells are flagged
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return
        co = np.broadcast_to(coef, (n,))[idx]
        und = np.broadcast_to(undefined, (n,))[idx] & (co > 0)
        live = (co > 0) & ~und
        vals = np.zeros(idx.size)
        if np.any(live):
            vals[live] = co[live] * value_fn(idx[live])
        if np.any(und):
            vals[und] = np.nan
            bad[name] = idx[und]
        out[name][idx] = vals

    with np.errstate(divide="ignore", invalid="ignore"):
        es = e * s
        e_pos = e > 0
        # ratios used below; only read where their denominators are positive
        y_bold = np.where(eps_c > 0, e_inf * eps_s / np.where(eps_c > 0, eps_c, 1.0), 1.0)
        y_ce = np.where(e_inf > 0, eps_c / np.where(e_inf > 0, e_inf, 1.0), 1.0)
        y_ec = np.where(eps_c > 0, e_inf / np.where(eps_c > 0, eps_c, 1.0), 1.0)
        e_safe = np.where(e_pos, e, 1.0)
        c_safe = np.where(c > 0, c, 1.0)
        einf_safe = np.where(e_inf > 0, e_inf, 1.0)

    put("O1_bold", m[1], k_f * c,
        lambda i: _bold(es[i] / c_safe[i], y_bold[i]), es == 0)
    put("O1_ce", m[1], k_c * e,
        lambda i: relative_entropy(c[i] / e_safe[i], y_ce[i]), ~e_pos)
    put("O1_s_lsi", m[1], C * diff.d_s,
        lambda i: relative_entropy(s[i], s_bar), False)
    put("O1_c_lsi", m[1], C * diff.d_c,
        lambda i: relative_entropy(c[i], c_bar), False)

    ref2 = e_inf * eps_s
    put("O2_es", m[2], k_r * c,
        lambda i: _dissip(es[i] / (einf_safe[i] * eps_s)), (es == 0) | (e_inf == 0))
    put("O2_e", m[2], k_c * c,
        lambda i: _dissip(e[i] / einf_safe[i]), ~e_pos | (e_inf == 0))
    put("O2_rel", m[2], k_f * np.ones(n),
        lambda i: relative_entropy(es[i], ref2[i], allow_zero_reference=True), False)
    put("O2_s_lsi", m[2], C * diff.d_s,
        lambda i: relative_entropy(s[i], s_bar), False)

    put("O3_ce", m[3], (k_r + k_c) * e,
        lambda i: relative_entropy(c[i] / e_safe[i], y_ce[i]), ~e_pos)
    # coefficient is e-independent; c >= eps_c > 0 on this domain
    put("O3_ec", m[3], k_f * c * s,
        lambda i: relative_entropy(e[i] / c_safe[i], y_ec[i]), False)
    put("O3_c_lsi", m[3], C * diff.d_c,
        lambda i: relative_entropy(c[i], c_bar), False)

    put("O4_e", m[4], k_f * s,
        lambda i: relative_entropy(e[i], e_inf[i], allow_zero_reference=True), False)
    put("O4_ce", m[4], (k_r + k_c) * c,
        lambda i: _dissip(e[i] / einf_safe[i]), ~e_pos | (e_inf == 0))

    if on_indeterminate == "raise" and bad:
        name = min(bad, key=lambda k: bad[k][0])
        raise IndeterminateRatioError(name, int(bad[name][0]), state.t)
    return out


def production_density(
    state: SystemState,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    grid: Grid1D | None = None,
    on_indeterminate: str = "raise",
) -> np.ndarray:
    """Partial entropy production density per cell (sum of :func:`production_terms`)."""
    terms = production_terms(state, params, eq, rates, diff, geometry, grid, on_indeterminate)
    return np.sum(np.stack(list(terms.values())), axis=0)


# --------------------------------------------------------------------------
# along trajectories


@dataclass
class EntropySeries:
    t: np.ndarray
    H: np.ndarray
    M: np.ndarray
    E: np.ndarray
    H_e: np.ndarray
    H_c: np.ndarray
    H_s: np.ndarray
    D_M: np.ndarray  # int of the mass density
    D: np.ndarray  # int of the production density over determinate cells
    skipped: np.ndarray = field(default=None)  # indeterminate cells per snapshot

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in
                ("t", "H", "M", "E", "H_e", "H_c", "H_s", "D_M", "D", "skipped")}


def entropy_trajectory(
    traj: Trajectory,
    params: EntropyParams,
    eq: EquilibriumState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    geometry: GeometryConstants,
    grid: Grid1D | None = None,
    on_indeterminate: str = "raise",
) -> EntropySeries:
    """Evaluate every functional and production integral at each snapshot.

    With ``on_indeterminate="nan"`` indeterminate cells are dropped from the
    production integral and counted in ``skipped``.
    """
    g = grid or traj.grid
    n = g.n_cells
    cols = {k: np.empty(len(traj)) for k in ("H", "M", "E", "H_e", "H_c", "H_s", "D_M", "D")}
    skipped = np.zeros(len(traj), dtype=int)
    for i in range(len(traj)):
        st = traj.state(i)
        rep = total_entropy(st, params, eq, rates, g)
        for k in ("H", "M", "E", "H_e", "H_c", "H_s"):
            cols[k][i] = getattr(rep, k)
        cols["D_M"][i] = mass_density(st, rates).sum() / n
        try:
            dens = production_density(st, params, eq, rates, diff, geometry, g, on_indeterminate)
        except IndeterminateRatioError as err:
            raise IndeterminateRatioError(err.term, err.cell, st.t) from None
        nan = np.isnan(dens)
        skipped[i] = int(nan.sum())
        cols["D"][i] = float(np.sum(dens[~nan]) / n)
    return EntropySeries(t=traj.times.copy(), skipped=skipped, **cols)
