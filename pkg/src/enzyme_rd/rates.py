"""Decay-rate formulas, default entropy parameters and linearised spectra.

``gamma_full`` / ``gamma_degenerate`` evaluate the explicit entropy decay
rates; ``mu_opt`` and ``mode_eigenvalues`` describe the linearisation
around equilibrium, which :func:`simulate_linearized` integrates exactly
mode by mode.  :func:`fit_decay_rate` measures exponents from series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from .core import (
    DiffusionCoeffs,
    GeometryConstants,
    Grid1D,
    RateConstants,
    Regime,
    RegimeError,
)
from .entropy import EntropyParams

__all__ = [
    "EpsCouplingError",
    "HypothesisError",
    "AliasingError",
    "FitError",
    "GammaInputs",
    "GammaResult",
    "LinearizedSpectrum",
    "LinearizedTrajectory",
    "FitResult",
    "LinfPredictions",
    "ClsiEstimate",
    "default_params_full",
    "default_params_degenerate",
    "gamma_full",
    "gamma_degenerate",
    "gamma_for",
    "mu_opt",
    "mode_eigenvalues",
    "neumann_eigenvalues",
    "linearized_spectrum",
    "simulate_linearized",
    "cosine_basis",
    "fit_decay_rate",
    "linf_rate_predictions",
    "linearized_rate_predictions",
    "lsi_ratio",
    "estimate_clsi_lower_bound",
]

_ONE_MINUS_LOG2 = 1.0 - math.log(2.0)
COUPLING_TOL = 1e-9


class EpsCouplingError(ValueError):
    """Thresholds violate the ``eps_c`` / ``eps_s`` coupling constraint."""


class HypothesisError(ValueError):
    """Hypotheses for the requested rate are not met (e.g. ``beta <= 0``)."""


class AliasingError(ValueError):
    """More cosine modes requested than the grid resolves."""


class FitError(ValueError):
    """Not enough usable samples for a decay fit."""


# --------------------------------------------------------------------------
# default parameters


def default_params_full(
    rates: RateConstants,
    M0: float,
    geometry: GeometryConstants,
    d_e: float,
    variant: str = "primary",
) -> EntropyParams:
    """Default ``(eps_s, eps_c, k)`` for all-positive diffusion.

    ``variant="primary"``::

        eps_s = d_e C_LSI M0 / (12 (k_c + k_r + M0 k_f) max(1, M0 k_f / k_r))
        eps_c = (M0 k_f / k_r) eps_s
        k     = 4 (k_c + k_r + 2 k_f eps_s) / k_c

    ``variant="alternative"`` uses the other published choice::

        eps_c = C_LSI M0 / (12 (k_c + k_r + M0 k_f) max(1, k_r / (M0 k_f)))
        eps_s = k_r eps_c / (M0 k_f)
        k     = 4 (k_c + k_r + k_f eps_s) / k_c
    """
    if not (M0 > 0 and d_e > 0):
        raise ValueError("M0 and d_e must be strictly positive")
    k_f, k_r, k_c = rates.k_f, rates.k_r, rates.k_c
    C = geometry.C_LSI
    base = 12.0 * (k_c + k_r + M0 * k_f)
    if variant == "primary":
        eps_s = d_e * C * M0 / (base * max(1.0, M0 * k_f / k_r))
        eps_c = (M0 * k_f / k_r) * eps_s
        k = 4.0 * (k_c + k_r + 2.0 * k_f * eps_s) / k_c
    elif variant == "alternative":
        eps_c = C * M0 / (base * max(1.0, k_r / (M0 * k_f)))
        eps_s = k_r * eps_c / (M0 * k_f)
        k = 4.0 * (k_c + k_r + k_f * eps_s) / k_c
    else:
        raise ValueError(f"unknown defaults variant {variant!r}")
    return EntropyParams(eps_s=eps_s, eps_c=eps_c, k=k)


def default_params_degenerate(rates: RateConstants, eps_s: float, e_inf) -> EntropyParams:
    """``eps_c(x) = (k_f eps_s / k_r) e_inf(x)`` and ``k = 4 k_f eps_s / k_c``."""
    if not eps_s > 0:
        raise ValueError("entropy.eps_s must be strictly positive")
    eps_c = (rates.k_f * eps_s / rates.k_r) * np.asarray(e_inf, dtype=float)
    return EntropyParams(eps_s=eps_s, eps_c=eps_c, k=4.0 * rates.k_f * eps_s / rates.k_c)


# --------------------------------------------------------------------------
# gamma


@dataclass(frozen=True)
class GammaInputs:
    rates: RateConstants
    diff: DiffusionCoeffs
    M0: float
    M1: float
    geometry: GeometryConstants
    params: EntropyParams
    beta: float | None = None
    e_inf: np.ndarray | None = None  # checked against eps_c in the degenerate case


@dataclass(frozen=True)
class GammaResult:
    """``value = min(branches)``; ``binding`` indexes the smallest branch."""

    value: float
    branches: tuple
    binding: int
    regime: Regime
    variant: str = "proof"

    @property
    def positive(self) -> bool:
        return self.value > 0

    def __float__(self) -> float:
        return self.value

    def scaled(self, factor: float) -> "GammaResult":
        return GammaResult(self.value * factor, self.branches, self.binding,
                           self.regime, f"{self.variant}*{factor:g}")


def _result(branches, regime, variant) -> GammaResult:
    b = tuple(float(x) for x in branches)
    i = int(np.argmin(b))
    return GammaResult(b[i], b, i, regime, variant)


def _log_mass_weight(M1, eps_s, k, k_r, k_c):
    # log(1 + M1/eps_s) + k (2 k_r + k_c) / (2 k_r)
    return math.log1p(M1 / eps_s) + k * (2.0 * k_r + k_c) / (2.0 * k_r)


def check_eps_coupling_full(params: EntropyParams, rates: RateConstants, M0: float) -> None:
    if params.eps_c_is_field:
        raise EpsCouplingError("all-positive diffusion needs a constant eps_c")
    ratio = params.eps_c / (M0 * params.eps_s)
    target = rates.k_f / rates.k_r
    if abs(ratio - target) > COUPLING_TOL * target:
        raise EpsCouplingError(
            f"eps_c / (M0 eps_s) = {ratio:.17g} but k_f / k_r = {target:.17g}"
        )


def check_eps_coupling_degenerate(params: EntropyParams, rates: RateConstants, e_inf) -> None:
    e_inf = np.asarray(e_inf, dtype=float)
    want = (rates.k_f * params.eps_s / rates.k_r) * e_inf
    got = np.broadcast_to(np.asarray(params.eps_c, dtype=float), e_inf.shape)
    if np.any(np.abs(got - want) > COUPLING_TOL * np.maximum(np.abs(want), 1e-300)):
        raise EpsCouplingError("eps_c(x) != (k_f / k_r) eps_s e_inf(x)")


def gamma_full(inputs: GammaInputs, variant: str = "proof") -> GammaResult:
    """Explicit entropy decay rate with all-positive diffusion.

    Minimum of three branches; the result may be non-positive for
    user-chosen constants and is returned as is.  ``variant="statement"``
    swaps the two logarithms of the second branch to
    ``log(1 + M0/eps_s)`` and ``log(1 + M1/eps_c)``, an alternative printed
    form; the default ``"proof"`` form uses ``log(1 + M0/eps_c)`` and
    ``log(1 + M1/eps_s)``.
    """
    r, d, p, g = inputs.rates, inputs.diff, inputs.params, inputs.geometry
    if d.regime is not Regime.FULL:
        raise RegimeError("gamma_full needs all diffusion coefficients positive")
    if variant not in ("proof", "statement"):
        raise ValueError(f"unknown gamma variant {variant!r}")
    check_eps_coupling_full(p, r, inputs.M0)
    k_f, k_r, k_c = r.k_f, r.k_r, r.k_c
    M0, M1, C = inputs.M0, inputs.M1, g.C_LSI
    eps_s, eps_c, k = p.eps_s, p.eps_c, p.k
    L = _log_mass_weight(M1, eps_s, k, k_r, k_c)
    Q = 16.0 * (eps_s + M1) / (_ONE_MINUS_LOG2 * M0)

    num1 = d.d_e * C - 6.0 * ((k_c + k_r) / M0 + k_f) * max(eps_c, eps_s)
    b1 = num1 / (1.0 + L * Q)

    num2 = k * k_c / 2.0 - k_c - k_r - 2.0 * k_f * eps_s
    if variant == "proof":
        log_a, L2 = math.log1p(M0 / eps_c), L
    else:
        log_a = math.log1p(M0 / eps_s)
        L2 = math.log1p(M1 / eps_c) + k * (2.0 * k_r + k_c) / (2.0 * k_r)
    b2 = num2 / (1.0 + k + log_a + L2 * (2.0 * k_r / (k_f * M0) + Q))

    b3 = d.d_c * d.d_s * C / (d.d_s + d.d_c * (1.0 + L))
    return _result((b1, b2, b3), Regime.FULL, variant)


def gamma_degenerate(inputs: GammaInputs) -> GammaResult:
    """Explicit entropy decay rate for ``d_e = d_c = 0``; needs ``beta > 0``."""
    r, d, p, g = inputs.rates, inputs.diff, inputs.params, inputs.geometry
    if d.regime is not Regime.DEGENERATE:
        raise RegimeError("gamma_degenerate needs d_e = d_c = 0")
    beta = inputs.beta
    if beta is None or not beta > 0:
        raise HypothesisError(f"a positive lower bound beta is required, got {beta}")
    if inputs.e_inf is not None:
        check_eps_coupling_degenerate(p, r, inputs.e_inf)
    k_f, k_r, k_c = r.k_f, r.k_r, r.k_c
    M1, C = inputs.M1, g.C_LSI
    eps_s, k = p.eps_s, p.k
    L = _log_mass_weight(M1, eps_s, k, k_r, k_c)

    num1 = k * k_c / 2.0 - k_f * eps_s
    den1 = (1.0 + k + math.log1p(k_r / (k_f * eps_s))
            + L * (2.0 * k_r / (k_f * beta) + 16.0 * (eps_s + M1) / (_ONE_MINUS_LOG2 * beta)))
    b1 = num1 / den1
    b2 = d.d_s * C / (1.0 + L)
    return _result((b1, b2), Regime.DEGENERATE, "proof")


def gamma_for(inputs: GammaInputs, variant: str = "proof") -> GammaResult:
    if inputs.diff.regime is Regime.FULL:
        return gamma_full(inputs, variant)
    return gamma_degenerate(inputs)


# --------------------------------------------------------------------------
# linearisation


def mu_opt(rates: RateConstants, e_inf: float) -> float:
    """Optimal linear decay rate.

    Equals ``(a + k_r + k_c - sqrt((a - k_r - k_c)**2 + 4 k_r a)) / 2`` with
    ``a = k_f e_inf``, evaluated in the cancellation-free form
    ``2 a k_c / (a + k_r + k_c + sqrt(...))``.
    """
    if not e_inf > 0:
        raise ValueError("e_inf must be strictly positive")
    a = rates.k_f * e_inf
    kk = rates.k_r + rates.k_c
    root = math.sqrt((a - kk) ** 2 + 4.0 * rates.k_r * a)
    return 2.0 * a * rates.k_c / (a + kk + root)


def mode_eigenvalues(rates: RateConstants, diff: DiffusionCoeffs, e_inf: float, lambda_j):
    """Roots ``(tau_plus, tau_minus)`` of the ``(s, c)`` block for mode ``lambda_j``.

    ``tau_plus >= tau_minus``; both are real and negative.  Works elementwise
    on arrays of ``lambda_j``.
    """
    lam = np.asarray(lambda_j, dtype=float)
    if np.any(lam < 0):
        raise ValueError("Neumann eigenvalues are non-negative")
    a = rates.k_f * e_inf
    kk = rates.k_r + rates.k_c
    p = diff.d_s * lam + a
    q = diff.d_c * lam + kk
    B = p + q
    # product of roots, expanded so every term is non-negative
    prod = diff.d_s * lam * q + a * diff.d_c * lam + a * rates.k_c
    root = np.sqrt((p - q) ** 2 + 4.0 * rates.k_r * a)
    tau_minus = -0.5 * (B + root)
    tau_plus = prod / tau_minus
    if np.ndim(tau_plus) == 0:
        return float(tau_plus), float(tau_minus)
    return tau_plus, tau_minus


def neumann_eigenvalues(count: int) -> np.ndarray:
    """``(j pi)**2`` for ``j = 0 .. count-1``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return (np.arange(count) * np.pi) ** 2


@dataclass(frozen=True)
class LinearizedSpectrum:
    lambdas: np.ndarray
    tau_plus: np.ndarray
    tau_minus: np.ndarray
    mu_opt: float

    @property
    def tau_max(self) -> np.ndarray:
        return np.maximum(self.tau_plus, self.tau_minus)


def linearized_spectrum(rates, diff, e_inf: float, count: int = 10) -> LinearizedSpectrum:
    lam = neumann_eigenvalues(count)
    tp, tm = mode_eigenvalues(rates, diff, e_inf, lam)
    return LinearizedSpectrum(lam, np.atleast_1d(tp), np.atleast_1d(tm), mu_opt(rates, e_inf))


def cosine_basis(grid: Grid1D, n_modes: int) -> np.ndarray:
    """Rows ``omega_j(x_i)``: 1 for ``j = 0``, ``sqrt(2) cos(j pi x_i)`` otherwise.

    The rows are orthonormal under the midpoint inner product for
    ``n_modes <= n_cells``.
    """
    if n_modes > grid.n_cells:
        raise AliasingError(f"n_modes = {n_modes} exceeds n_cells = {grid.n_cells}")
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    j = np.arange(n_modes)[:, None]
    basis = np.sqrt(2.0) * np.cos(j * np.pi * grid.cell_centers[None, :])
    basis[0] = 1.0
    return basis


@dataclass
class LinearizedTrajectory:
    """Perturbation fields ``(n_times, 4, n_cells)`` in order e, s, c, p."""

    grid: Grid1D
    times: np.ndarray
    coeffs: np.ndarray  # (n_times, 4, n_modes)
    fields: np.ndarray

    def linf(self, species: str) -> np.ndarray:
        return np.abs(self.fields[:, "escp".index(species), :]).max(axis=1)


def _mode_matrix(rates, diff, e_inf, lam):
    a = rates.k_f * e_inf
    kk = rates.k_r + rates.k_c
    return np.array([
        [-diff.d_e * lam, -a, kk, 0.0],
        [0.0, -diff.d_s * lam - a, rates.k_r, 0.0],
        [0.0, a, -diff.d_c * lam - kk, 0.0],
        [0.0, 0.0, rates.k_c, -diff.d_p * lam],
    ])


def simulate_linearized(
    initial,
    rates: RateConstants,
    diff: DiffusionCoeffs,
    e_inf: float,
    grid: Grid1D,
    t_end: float,
    dt: float,
    n_modes: int | None = None,
) -> LinearizedTrajectory:
    """Exact modal solution of the linearisation around equilibrium.

    Parameters
    ----------
    initial : sequence of four arrays
        Perturbations ``(e~, s~, c~, p~)`` on ``grid``.
    n_modes : int, optional
        Cosine modes kept; defaults to ``n_cells // 2``.

    Each mode evolves by the exact propagator ``expm(A_j dt)`` of its 4x4
    block, so the output is exact at the sample times up to rounding.
    """
    if diff.regime is not Regime.FULL:
        raise RegimeError("the linearised simulator needs all-positive diffusion")
    if not (dt > 0 and t_end >= dt):
        raise ValueError("need 0 < dt <= t_end")
    n_modes = grid.n_cells // 2 if n_modes is None else int(n_modes)
    basis = cosine_basis(grid, n_modes)
    u0 = np.stack([grid.check(f, name) for f, name in zip(initial, "escp")])
    a0 = u0 @ basis.T / grid.n_cells  # (4, n_modes)
    n_steps = int(round(t_end / dt))
    lam = neumann_eigenvalues(n_modes)
    props = np.stack([expm(_mode_matrix(rates, diff, e_inf, l) * dt) for l in lam])
    coeffs = np.empty((n_steps + 1, 4, n_modes))
    coeffs[0] = a0
    for k in range(n_steps):
        coeffs[k + 1] = np.einsum("jab,bj->aj", props, coeffs[k])
    fields = coeffs @ basis
    return LinearizedTrajectory(grid, np.arange(n_steps + 1) * dt, coeffs, fields)


# --------------------------------------------------------------------------
# fitting and predicted exponents


@dataclass(frozen=True)
class FitResult:
    rate: float
    intercept: float
    r_squared: float
    window: tuple
    n_samples: int


def fit_decay_rate(t, y, window=None, floor: float = 1e-12) -> FitResult:
    """Least-squares fit of ``log y = intercept - rate * t``.

    ``window`` defaults to the last half of the time range.  Samples at or
    below ``floor`` are dropped; at least five must remain.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t and y must be 1-D arrays of equal length")
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if np.any(y[sel] < 0):
        raise FitError("negative values in the fit window")
    sel &= y > floor
    if sel.sum() < 5:
        raise FitError(f"only {int(sel.sum())} samples above floor {floor:g} in window {window}")
    tt, ly = t[sel], np.log(y[sel])
    A = np.column_stack([np.ones_like(tt), tt])
    (b0, b1), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (b0 + b1 * tt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return FitResult(rate=-float(b1), intercept=float(b0), r_squared=min(max(r2, 0.0), 1.0),
                     window=(float(lo), float(hi)), n_samples=int(sel.sum()))


@dataclass(frozen=True)
class LinfPredictions:
    """Predicted L-infinity decay exponents per species (``None`` if not requested)."""

    regime: Regime
    s: float
    c: float
    e: float
    p: float | None
    tie_ec: bool = False
    tie_p: bool = False

    def as_dict(self) -> dict:
        return {"regime": self.regime.value, "s": self.s, "c": self.c, "e": self.e,
                "p": self.p, "tie_ec": self.tie_ec, "tie_p": self.tie_p}


def linf_rate_predictions(
    gamma: float,
    n: int,
    eta: float,
    d_p: float,
    C_P: float,
    eps: float,
    regime: Regime = Regime.FULL,
    rates: RateConstants | None = None,
    include_p: bool = True,
) -> LinfPredictions:
    """Exponents implied by an entropy decay rate ``gamma``.

    All-positive diffusion: ``s, c -> 2 gamma / (n (1 + eta))`` and
    ``e -> gamma / (n (1 + eta))``.  Degenerate: ``s -> 2 gamma / (n (1 + eta))``
    and ``e, c -> min(k_r + k_c, 2 gamma / (n (1 + eta)))`` (``rates``
    required).  The ``p`` exponent ``min(4 d_p (1 - eps) / (n C_P (1 + eta)),
    2 gamma / (n (1 + eta)))`` needs ``n (1 + eta) >= 4``.  Tie flags mark
    where the bound gains a polynomial prefactor.
    """
    if not (gamma > 0 and eta > 0 and n >= 1):
        raise ValueError("need gamma > 0, eta > 0 and n >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    ne = n * (1.0 + eta)
    fast = 2.0 * gamma / ne
    p_rate, tie_p = None, False
    if include_p:
        if ne < 4:
            raise HypothesisError("the p exponent needs n (1 + eta) >= 4")
        p_rate = min(4.0 * d_p * (1.0 - eps) / (n * C_P * (1.0 + eta)), fast)
        tie_p = bool(np.isclose(2.0 * d_p * (1.0 - eps) / C_P, gamma, rtol=1e-12, atol=0))
    regime = Regime(regime)
    if regime is Regime.FULL:
        return LinfPredictions(regime, fast, fast, gamma / ne, p_rate, False, tie_p)
    if rates is None:
        raise ValueError("the degenerate prediction needs the rate constants")
    kk = rates.k_r + rates.k_c
    ec = min(kk, fast)
    tie = bool(np.isclose(kk, fast, rtol=1e-12, atol=0))
    return LinfPredictions(regime, fast, ec, ec, p_rate, tie, tie_p)


def linearized_rate_predictions(rates, diff, e_inf: float) -> dict:
    """Sharp linear exponents: ``mu_opt`` for ``s, c``; ``min(d lambda_1, mu_opt)`` for ``e, p``."""
    mu = mu_opt(rates, e_inf)
    lam1 = np.pi**2
    return {"s": mu, "c": mu, "e": min(diff.d_e * lam1, mu), "p": min(diff.d_p * lam1, mu)}


# --------------------------------------------------------------------------
# log-Sobolev constant estimate


def lsi_ratio(f, grid: Grid1D) -> float:
    """Discrete ``int |f'|^2 / f  /  int h(f | mean f)`` for positive ``f``.

    The numerator is the face sum ``sum (df)(d log f) / h``, the form that
    matches ``-int log f  Lap f`` exactly for the ghost-cell Laplacian.
    Returns ``nan`` for constant fields.
    """
    f = grid.check(f)
    if np.any(f <= 0):
        raise ValueError("lsi_ratio needs a strictly positive field")
    fisher = float(np.sum(np.diff(f) * np.diff(np.log(f))) / grid.h)
    mean = f.mean()
    ent = float(np.mean(f * np.log(f / mean) - f + mean))
    if ent <= 0 or fisher <= 0:
        return float("nan")
    return fisher / ent


@dataclass(frozen=True)
class ClsiEstimate:
    value: float
    ratios: np.ndarray = field(repr=False)
    note: str = "numerical estimate, not a proof"


def estimate_clsi_lower_bound(
    grid: Grid1D,
    n_samples: int = 8,
    n_descent_steps: int = 40,
    seed: int | None = 0,
    min_amplitude: float = 1e-2,
    n_coeffs: int = 8,
) -> ClsiEstimate:
    """Smallest log-Sobolev ratio found over random positive fields.

    Each sample is ``f = exp(a v / |v|)`` where ``v`` spans the first
    ``n_coeffs`` non-constant cosine modes and ``a >= min_amplitude`` is a
    random fixed log-amplitude; the direction is refined by L-BFGS.  Amplitudes are kept away from 0, where both
    integrals vanish and the ratio is lost to cancellation.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    basis = cosine_basis(grid, min(grid.n_cells, n_coeffs + 1))[1:]

    def objective(w, amp):
        v = w @ basis
        nrm = np.sqrt(np.mean(v * v))
        if not nrm > 0:
            return 1e300
        r = lsi_ratio(np.exp(amp * v / nrm), grid)
        return r if np.isfinite(r) else 1e300

    ratios = []
    for _ in range(n_samples):
        amp = float(np.exp(rng.uniform(np.log(min_amplitude), np.log(2.0))))
        w0 = rng.normal(size=basis.shape[0]) / np.arange(1, basis.shape[0] + 1)
        res = minimize(objective, w0, args=(amp,), method="L-BFGS-B",
                       options={"maxiter": n_descent_steps})
        best = min(objective(w0, amp), float(res.fun))
        if best < 1e300:
            ratios.append(best)
    ratios = np.array(ratios)
    if ratios.size == 0:
        raise FitError("every sample was degenerate")
    return ClsiEstimate(value=float(ratios.min()), ratios=ratios)
