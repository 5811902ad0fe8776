"""Reaction terms, the Neumann Laplacian and IMEX time stepping.

One step is a Lie splitting: an explicit Euler reaction update followed by an
implicit diffusion solve per species.  The long-run loop lives in a
``numba``-compiled kernel; :func:`step_imex` is a plain ``numpy``/``scipy``
reference implementation of the same step, used for cross-checking.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import solve_banded

from .core import (
    DiffusionCoeffs,
    Grid1D,
    RateConstants,
    Regime,
    SystemState,
    integrate,
)

__all__ = [
    "PositivityError",
    "Scheme",
    "StepperConfig",
    "Trajectory",
    "EquilibriumState",
    "reaction_terms",
    "neumann_laplacian",
    "reaction_dt_limit",
    "step_imex",
    "simulate",
    "equilibrium",
    "check_min_enzyme",
    "DIAGNOSTIC_KEYS",
]

log = logging.getLogger(__name__)

# explicit reaction sub-step is positivity preserving below this bound
DT_GUARD = 0.5
MAX_HALVINGS = 30


class PositivityError(RuntimeError):
    """A concentration dropped below ``-negativity_tolerance``."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (t = {t:.17g})")
        self.t = t


class Scheme(str, enum.Enum):
    BACKWARD_EULER = "backward_euler"
    CRANK_NICOLSON = "crank_nicolson"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    record_every: int = 1
    negativity_tolerance: float = 1e-12
    diffusion_scheme: Scheme = Scheme.BACKWARD_EULER

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"stepper.dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end > self.dt):
            raise ValueError(f"stepper.t_end must exceed dt, got {self.t_end}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(
                f"stepper.record_every must be a positive integer, got {self.record_every}"
            )
        if not self.negativity_tolerance > 0:
            raise ValueError("stepper.negativity_tolerance must be positive")
        object.__setattr__(self, "diffusion_scheme", Scheme(self.diffusion_scheme))


@dataclass(frozen=True)
class EquilibriumState:
    e_inf: np.ndarray
    p_inf: float
    regime: Regime

    @property
    def s_inf(self) -> float:
        return 0.0

    @property
    def c_inf(self) -> float:
        return 0.0


def reaction_terms(state: SystemState, rates: RateConstants):
    """Mass-action right-hand sides ``(f_e, f_s, f_c, f_p)``."""
    e, s, c = state.e, state.s, state.c
    fwd = rates.k_f * e * s
    f_e = -fwd + (rates.k_r + rates.k_c) * c
    f_s = -fwd + rates.k_r * c
    f_c = fwd - (rates.k_r + rates.k_c) * c
    f_p = rates.k_c * c
    return f_e, f_s, f_c, f_p


def neumann_laplacian(f, grid: Grid1D) -> np.ndarray:
    """Second difference with reflected ghost cells (zero flux)."""
    u = grid.check(f)
    padded = np.concatenate(([u[0]], u, [u[-1]]))
    return (padded[:-2] - 2.0 * u + padded[2:]) / grid.h**2


def reaction_dt_limit(e, s, rates: RateConstants) -> float:
    """Largest ``dt`` with ``dt * (k_f * max(|e|, |s|) + k_r + k_c) <= 0.5``.

    The ``s`` term is needed as well as ``e``: the update of ``e`` loses
    ``dt * k_f * s * e`` and stays non-negative only if ``dt * k_f * s < 1``.
    """
    amp = max(float(np.max(np.abs(e))), float(np.max(np.abs(s))))
    return DT_GUARD / (rates.k_f * amp + rates.k_r + rates.k_c)


def _banded(grid: Grid1D, r: float) -> np.ndarray:
    n = grid.n_cells
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = ab[1, -1] = 1.0 + r
    ab[2, :-1] = -r
    return ab


def _clamp(arr: np.ndarray, tol: float, name: str, t: float) -> int:
    low = arr.min()
    if low < -tol:
        raise PositivityError(f"{name} reached {low:.3e} below tolerance {tol:g}", t)
    mask = arr < 0
    arr[mask] = 0.0
    return int(mask.sum())


def step_imex(
    state: SystemState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    config: StepperConfig,
    dt: float | None = None,
) -> SystemState:
    """Reference single step (explicit reaction, implicit diffusion).

    ``dt`` defaults to ``config.dt``.  The step does not apply the adaptive
    ``dt`` guard; :func:`simulate` does.
    """
    dt = config.dt if dt is None else dt
    grid = state.grid
    tol = config.negativity_tolerance
    for name in ("e", "s", "c", "p"):
        if getattr(state, name).min() < -tol:
            raise PositivityError(f"input field {name} is negative", state.t)

    e, s, c, p = (np.array(a, dtype=float) for a in (state.e, state.s, state.c, state.p))
    r = rates.k_f * e * s - (rates.k_r + rates.k_c) * c
    e_new = e - dt * r
    s_new = s - dt * (rates.k_f * e * s - rates.k_r * c)
    c_new = c + dt * r
    p_new = p + dt * rates.k_c * c

    out = {}
    cn = config.diffusion_scheme is Scheme.CRANK_NICOLSON
    for name, u, d in zip("escp", (e_new, s_new, c_new, p_new),
                          (diff.d_e, diff.d_s, diff.d_c, diff.d_p)):
        if d == 0:
            out[name] = u
            continue
        theta = 0.5 if cn else 1.0
        rr = theta * dt * d / grid.h**2
        rhs = u + (1.0 - theta) * dt * d * neumann_laplacian(u, grid) if cn else u
        out[name] = solve_banded((1, 1), _banded(grid, rr), rhs)

    t_new = state.t + dt
    for name in "escp":
        _clamp(out[name], tol, name, t_new)
    return SystemState(grid, out["e"], out["s"], out["c"], out["p"], t_new)


# --------------------------------------------------------------------------
# compiled kernel


@numba.njit(cache=True)
def _factor(n, r, cp, inv):
    """Thomas factorisation of tridiag(-r, 1+2r, -r) with Neumann end rows."""
    b = 1.0 + r
    inv[0] = 1.0 / b
    cp[0] = -r * inv[0]
    for i in range(1, n):
        b = (1.0 + r) if i == n - 1 else (1.0 + 2.0 * r)
        den = b + r * cp[i - 1]
        inv[i] = 1.0 / den
        cp[i] = -r * inv[i]


@numba.njit(cache=True)
def _solve(u, r, cp, inv, tmp):
    n = u.shape[0]
    tmp[0] = u[0] * inv[0]
    for i in range(1, n):
        tmp[i] = (u[i] + r * tmp[i - 1]) * inv[i]
    u[n - 1] = tmp[n - 1]
    for i in range(n - 2, -1, -1):
        u[i] = tmp[i] - cp[i] * u[i + 1]


@numba.njit(cache=True)
def _second_diff(u, i, n):
    left = u[i - 1] if i > 0 else u[0]
    right = u[i + 1] if i < n - 1 else u[n - 1]
    return left - 2.0 * u[i] + right


@numba.njit(cache=True)
def _advance(u, lo, n_steps, dt, k_f, k_r, k_c, dcoef, h, crank, tol):
    """Advance ``u`` (rows e, s, c, p) in place by up to ``n_steps`` steps.

    Each step forms the increment ``delta`` of every species (reaction, then
    an implicit solve for the diffusive part of the increment) and adds it to
    ``u`` with per-cell compensated summation; ``lo`` holds the compensation
    terms.  Summing small increments into O(1) values otherwise accumulates a
    systematic rounding bias in the conserved masses.

    Returns ``(status, steps_done, clamped, species, cell)`` where status is
    0 on success, 1 if the reaction ``dt`` bound failed before a step (state
    untouched for that step) and 2 on a negativity violation.
    """
    n = u.shape[1]
    kk = k_r + k_c
    theta = 0.5 if crank else 1.0
    cps = np.zeros((4, n))
    invs = np.zeros((4, n))
    rs = np.zeros(4)
    tmp = np.empty(n)
    inc = np.empty((4, n))
    rhs = np.empty(n)
    for sp in range(4):
        if dcoef[sp] > 0.0:
            rs[sp] = theta * dt * dcoef[sp] / (h * h)
            _factor(n, rs[sp], cps[sp], invs[sp])
    clamped = 0
    e = u[0]
    s = u[1]
    c = u[2]
    for step in range(n_steps):
        amp = 0.0
        for i in range(n):
            if e[i] > amp:
                amp = e[i]
            if s[i] > amp:
                amp = s[i]
        if dt * (k_f * amp + kk) > 0.5:
            return 1, step, clamped, -1, -1
        for i in range(n):
            fwd = k_f * e[i] * s[i]
            rr = dt * (fwd - kk * c[i])
            inc[0, i] = -rr
            inc[1, i] = -dt * (fwd - k_r * c[i])
            inc[2, i] = rr
            inc[3, i] = dt * k_c * c[i]
        for sp in range(4):
            r = rs[sp]
            if r > 0.0:
                row = u[sp]
                d = inc[sp]
                # (I - r L) delta = reaction increment + diffusive source
                if crank:
                    for i in range(n):
                        rhs[i] = d[i] + r * (_second_diff(d, i, n) + 2.0 * _second_diff(row, i, n))
                else:
                    for i in range(n):
                        rhs[i] = d[i] + r * _second_diff(row, i, n)
                _solve(rhs, r, cps[sp], invs[sp], tmp)
                for i in range(n):
                    d[i] = rhs[i]
        for sp in range(4):
            row = u[sp]
            comp = lo[sp]
            d = inc[sp]
            for i in range(n):
                y = d[i] - comp[i]
                t = row[i] + y
                comp[i] = (t - row[i]) - y
                row[i] = t
        for sp in range(4):
            row = u[sp]
            for i in range(n):
                if row[i] < 0.0:
                    if row[i] < -tol:
                        return 2, step + 1, clamped, sp, i
                    row[i] = 0.0
                    lo[sp, i] = 0.0
                    clamped += 1
    return 0, n_steps, clamped, -1, -1


# --------------------------------------------------------------------------
# trajectories

DIAGNOSTIC_KEYS = (
    "t",
    "M0",
    "M1",
    "e_dev_inf",
    "s_inf",
    "c_inf",
    "p_dev_inf",
    "p_dev_l2",
    "c_dev_l2",
)


@dataclass
class Trajectory:
    """Snapshots of one run plus per-snapshot diagnostics.

    ``fields`` has shape ``(n_snapshots, 4, n_cells)`` with rows ``e, s, c, p``.
    """

    grid: Grid1D
    times: np.ndarray
    fields: np.ndarray
    equilibrium: "EquilibriumState"
    clamped: int = 0
    dt_final: float = 0.0
    halvings: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fields = np.asarray(self.fields, dtype=float)
        if not self.diagnostics:
            self.diagnostics = _diagnostics(self.times, self.fields, self.equilibrium)

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, i: int) -> SystemState:
        e, s, c, p = self.fields[i]
        return SystemState(self.grid, e, s, c, p, float(self.times[i]))

    @property
    def snapshots(self) -> list[SystemState]:
        return [self.state(i) for i in range(len(self))]

    def nearest(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


def _diagnostics(times, fields, eq: "EquilibriumState") -> dict:
    e, s, c, p = (fields[:, k, :] for k in range(4))
    n = fields.shape[2]
    p_bar = p.mean(axis=1, keepdims=True)
    c_bar = c.mean(axis=1, keepdims=True)
    return {
        "t": times.copy(),
        "M0": (e + c).sum(axis=1) / n,
        "M1": (s + c + p).sum(axis=1) / n,
        "e_dev_inf": np.abs(e - eq.e_inf).max(axis=1),
        "s_inf": np.abs(s).max(axis=1),
        "c_inf": np.abs(c).max(axis=1),
        "p_dev_inf": np.abs(p - eq.p_inf).max(axis=1),
        "p_dev_l2": np.sqrt(((p - p_bar) ** 2).sum(axis=1) / n),
        "c_dev_l2": np.sqrt(((c - c_bar) ** 2).sum(axis=1) / n),
    }


def simulate(
    initial: SystemState,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    config: StepperConfig,
) -> Trajectory:
    """Integrate from ``initial.t`` to ``initial.t + config.t_end``.

    Snapshots are taken every ``config.record_every`` steps and at the end.
    If the reaction ``dt`` bound fails, ``dt`` is halved (and the recording
    stride doubled so snapshot times are unchanged) with a logged warning.
    """
    grid = initial.grid
    tol = config.negativity_tolerance
    if initial.min_value() < -tol:
        raise PositivityError("initial data is negative", initial.t)
    eq = equilibrium(initial, diff, grid)

    u = np.ascontiguousarray(initial.stacked(), dtype=float)
    u[u < 0] = 0.0
    lo = np.zeros_like(u)
    dcoef = np.array(diff.as_tuple(), dtype=float)
    crank = config.diffusion_scheme is Scheme.CRANK_NICOLSON

    dt = config.dt
    stride = int(config.record_every)
    t0 = initial.t
    n_full = int(math.floor(config.t_end / dt * (1 + 1e-12)))
    tail = config.t_end - n_full * dt
    if tail <= 1e-9 * dt:
        tail = 0.0

    times = [t0]
    frames = [u.copy()]
    clamped = 0
    halvings = 0
    done = 0  # steps taken at the current dt; time is t0 + done * dt

    def run(n, step_dt, t_start):
        nonlocal clamped
        status, k, cl, sp, cell = _advance(
            u, lo, n, step_dt, rates.k_f, rates.k_r, rates.k_c, dcoef, grid.h, crank, tol
        )
        clamped += cl
        if status == 2:
            raise PositivityError(
                f"species {'escp'[sp]} negative at cell {cell}", t_start + k * step_dt
            )
        return status, k

    remaining = n_full
    while remaining > 0:
        n = min(stride - (done % stride), remaining)
        status, k = run(n, dt, t0 + done * dt)
        done += k
        remaining -= k
        if status == 1:
            if halvings >= MAX_HALVINGS:
                raise PositivityError("dt guard could not be met", t0 + done * dt)
            dt *= 0.5
            done *= 2
            stride *= 2
            remaining *= 2
            halvings += 1
            log.warning("reaction dt bound exceeded at t=%.6g; halving dt to %.3e",
                        t0 + done * dt, dt)
            continue
        if done % stride == 0:
            times.append(t0 + done * dt)
            frames.append(u.copy())

    t_final = t0 + config.t_end
    if tail > 0:
        if run(1, tail, t0 + done * dt)[0] != 0:
            raise PositivityError("dt guard failed on the final partial step", t_final)
    if tail > 0 or done % stride != 0:
        times.append(t_final)
        frames.append(u.copy())
    else:
        times[-1] = t_final

    return Trajectory(
        grid=grid,
        times=np.array(times),
        fields=np.array(frames),
        equilibrium=eq,
        clamped=clamped,
        dt_final=dt,
        halvings=halvings,
    )


def equilibrium(
    initial: SystemState, diff: DiffusionCoeffs, grid: Grid1D | None = None
) -> EquilibriumState:
    g = grid or initial.grid
    M1 = integrate(initial.s + initial.c + initial.p, g)
    if diff.regime is Regime.FULL:
        M0 = integrate(initial.e + initial.c, g)
        e_inf = np.full(g.n_cells, M0)
    else:
        e_inf = np.asarray(initial.e + initial.c, dtype=float)
    e_inf = e_inf.copy()
    e_inf.setflags(write=False)
    return EquilibriumState(e_inf=e_inf, p_inf=M1, regime=diff.regime)


def check_min_enzyme(initial: SystemState) -> float:
    """``beta = min(e_0 + c_0)``; positive beta enables the degenerate-regime rates."""
    return float(np.min(initial.e + initial.c))
