"""Grids, fields, quadrature and conserved-mass bookkeeping.

Fields are plain one-dimensional ``numpy`` arrays holding cell averages on a
uniform cell-centred grid over the unit interval (so ``|Omega| = 1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "ShapeError",
    "RegimeError",
    "Regime",
    "Grid1D",
    "SystemState",
    "RateConstants",
    "DiffusionCoeffs",
    "ConservedMasses",
    "GeometryConstants",
    "build_grid",
    "project_indicator",
    "integrate",
    "linf_norm",
    "l2_norm",
    "conserved_masses",
]

# snap indicator edges that sit within this many cell widths of a cell edge
_EDGE_SNAP = 1e-12  # relative; covers rounding in a * n_cells only


class GridError(ValueError):
    """Invalid grid or interval specification."""


class ShapeError(ValueError):
    """Field length does not match the grid, or the field is empty."""


class RegimeError(ValueError):
    """Diffusion coefficients outside the two supported regimes."""


class Regime(str, enum.Enum):
    FULL = "full"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on (0, 1)."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise GridError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells

    def check(self, f, name: str = "field") -> np.ndarray:
        arr = np.asarray(f, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != self.n_cells:
            raise ShapeError(
                f"{name} has shape {arr.shape}, expected ({self.n_cells},)"
            )
        return arr


def build_grid(n_cells: int) -> Grid1D:
    return Grid1D(n_cells)


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) <= _EDGE_SNAP * max(1.0, abs(v)) else v


def project_indicator(a: float, b: float, height: float, grid: Grid1D) -> np.ndarray:
    """Exact cell averages of ``height * chi_(a, b)``.

    Interval ends lying on a cell edge (up to rounding in ``a * n_cells``)
    are snapped to it, so edge-aligned data projects to exactly ``height``.
    """
    if not (0.0 <= a < b <= 1.0):
        raise GridError(f"invalid interval ({a}, {b}); need 0 <= a < b <= 1")
    if height < 0:
        raise GridError(f"indicator height must be non-negative, got {height}")
    n = grid.n_cells
    lo = _snap(a * n)
    hi = _snap(b * n)
    idx = np.arange(n, dtype=float)
    overlap = np.clip(np.minimum(hi, idx + 1.0) - np.maximum(lo, idx), 0.0, 1.0)
    return height * overlap


def integrate(f, grid: Grid1D) -> float:
    """Midpoint quadrature over (0, 1); exact for cell-average data."""
    arr = grid.check(f)
    return float(arr.sum() / grid.n_cells)


def linf_norm(f) -> float:
    arr = np.asarray(f, dtype=float)
    if arr.size == 0:
        raise ShapeError("linf_norm of an empty field")
    return float(np.max(np.abs(arr)))


def l2_norm(f, grid: Grid1D) -> float:
    arr = grid.check(f)
    return float(np.sqrt(np.sum(arr * arr) / grid.n_cells))


@dataclass(frozen=True)
class RateConstants:
    k_f: float
    k_r: float
    k_c: float

    def __post_init__(self):
        for name in ("k_f", "k_r", "k_c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"rates.{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class DiffusionCoeffs:
    """Diffusivities; only the FULL and DEGENERATE (d_e = d_c = 0) regimes are accepted."""

    d_e: float
    d_s: float
    d_c: float
    d_p: float

    def __post_init__(self):
        for name in ("d_e", "d_s", "d_c", "d_p"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"diffusion.{name} must be non-negative, got {v}")
        if self.d_s <= 0 or self.d_p <= 0:
            raise RegimeError("diffusion.d_s and diffusion.d_p must be strictly positive")
        full = self.d_e > 0 and self.d_c > 0
        degenerate = self.d_e == 0 and self.d_c == 0
        if not (full or degenerate):
            raise RegimeError(
                f"mixed regime d_e={self.d_e}, d_c={self.d_c} is not supported; "
                "use all-positive diffusivities or d_e = d_c = 0"
            )

    @property
    def regime(self) -> Regime:
        return Regime.FULL if self.d_e > 0 else Regime.DEGENERATE

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.d_e, self.d_s, self.d_c, self.d_p)


@dataclass(frozen=True)
class ConservedMasses:
    M0: float
    M1: float


@dataclass(frozen=True)
class GeometryConstants:
    """Functional-inequality constants of the domain.

    ``C_P`` uses the squared convention ``||f - mean f||^2 <= C_P ||f'||^2``;
    on (0, 1) with Neumann conditions the sharp value is ``1 / pi**2``.
    ``C_LSI`` has no default and must be supplied.
    """

    C_LSI: float
    C_P: float = 1.0 / np.pi**2
    C_CKP: float = 2.0

    def __post_init__(self):
        for name in ("C_LSI", "C_P", "C_CKP"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"geometry.{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class SystemState:
    """Concentrations ``e, s, c, p`` at time ``t`` on a shared grid."""

    grid: Grid1D
    e: np.ndarray
    s: np.ndarray
    c: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"state time must be non-negative, got {self.t}")
        for name in ("e", "s", "c", "p"):
            arr = self.grid.check(getattr(self, name), name)
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, grid: Grid1D, t: float = 0.0) -> "SystemState":
        z = np.zeros(grid.n_cells)
        return cls(grid, z, z, z, z, t)

    def replace(self, **changes) -> "SystemState":
        kw = dict(e=self.e, s=self.s, c=self.c, p=self.p, t=self.t)
        kw.update(changes)
        return SystemState(self.grid, **kw)

    def stacked(self) -> np.ndarray:
        return np.stack([self.e, self.s, self.c, self.p])

    def min_value(self) -> float:
        return float(min(self.e.min(), self.s.min(), self.c.min(), self.p.min()))


def conserved_masses(state: SystemState, grid: Grid1D | None = None) -> ConservedMasses:
    g = grid or state.grid
    return ConservedMasses(
        M0=integrate(state.e + state.c, g),
        M1=integrate(state.s + state.c + state.p, g),
    )
