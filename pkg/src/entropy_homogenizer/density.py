"""
Uniform grids, piecewise-constant densities and increasing maps.

Every density in the package is constant on the cells of a uniform
:class:`Grid`.  For such densities the differential entropy, the moments and
the cumulative distribution are available in closed form, so nothing here is
a quadrature approximation of a smoother object: the numbers are exact for
the piecewise-constant density itself.

Increasing maps are monotone piecewise-linear functions.  Pushing a
piecewise-constant density through one is again exact before the final
rebinning onto an output grid, which only moves mass between neighbouring
cells and never creates or destroys it.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse

from .errors import DomainMismatch, InteriorZeroRegion

_MASS_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[lo, hi]`` into ``n`` cells."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.lo) or not np.isfinite(self.hi):
            raise ValueError("grid bounds must be finite")
        if not self.hi > self.lo:
            raise ValueError(f"need hi > lo, got [{self.lo}, {self.hi}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need an integer cell count n >= 2, got {self.n}")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n", int(self.n))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def edges(self) -> np.ndarray:
        e = self.lo + self.width * np.arange(self.n + 1)
        e[-1] = self.hi
        return e

    @property
    def centers(self) -> np.ndarray:
        return self.lo + self.width * (np.arange(self.n) + 0.5)

    def cell_index(self, x):
        """Index of the cell containing ``x`` (clipped to the grid)."""
        i = np.floor((np.asarray(x, dtype=float) - self.lo) / self.width)
        return np.clip(i, 0, self.n - 1).astype(int)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.lo, self.hi, self.n * factor)


@dataclass(frozen=True, eq=False)
class Density:
    """Piecewise-constant probability density on a grid.

    ``heights`` are probability per unit length.  They are renormalized on
    construction so that ``sum(heights) * grid.width == 1``.
    """

    grid: Grid
    heights: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} heights, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("density heights must be finite")
        if np.any(h < 0):
            raise ValueError("density heights must be nonnegative")
        total = h.sum() * self.grid.width
        if not total > 0:
            raise ValueError("density has zero total mass")
        object.__setattr__(self, "heights", _readonly(h / total))

    @classmethod
    def uniform(cls, grid: Grid, a: float | None = None, b: float | None = None):
        """Uniform density on ``[a, b]`` (cells weighted by overlap)."""
        a = grid.lo if a is None else a
        b = grid.hi if b is None else b
        edges = grid.edges
        overlap = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0, None)
        return cls(grid, overlap / grid.width)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable):
        """Sample ``fn`` at cell centers and normalize."""
        return cls(grid, np.asarray(fn(grid.centers), dtype=float))

    @property
    def masses(self) -> np.ndarray:
        return self.heights * self.grid.width

    @property
    def support(self) -> tuple[int, int]:
        """First and last cell index with positive height."""
        pos = np.flatnonzero(self.heights > 0)
        return int(pos[0]), int(pos[-1])

    def cumulative(self) -> np.ndarray:
        """CDF at the grid edges (``n + 1`` values from 0 to 1)."""
        c = np.concatenate([[0.0], np.cumsum(self.masses)])
        c /= c[-1]
        return c

    def entropy(self) -> float:
        return entropy(self)

    def mean(self) -> float:
        return mean(self)

    def variance(self) -> float:
        return variance(self)


def entropy(d: Density) -> float:
    """Differential entropy in bits, ``-sum(h * dx * log2(h))``.

    Zero-height cells contribute nothing.  This is the entropy of the
    piecewise-constant density, not the discrete entropy of the cell masses;
    the two differ by ``log2(dx)``.
    """
    h = d.heights
    pos = h > 0
    return float(-np.sum(h[pos] * np.log2(h[pos])) * d.grid.width)


def mean(d: Density) -> float:
    return float(np.dot(d.masses, d.grid.centers))


def variance(d: Density) -> float:
    """Variance of the piecewise-constant density.

    Includes the within-cell term ``dx**2 / 12`` so that uniform densities
    on grid-aligned intervals give their exact variance.
    """
    mu = mean(d)
    dev = d.grid.centers - mu
    return float(np.dot(d.masses, dev * dev) + d.grid.width ** 2 / 12.0)


@dataclass(frozen=True, eq=False)
class IncreasingMap:
    """Strictly increasing piecewise-linear map through ``(x[k], y[k])`` knots."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("need matching 1-d knot arrays with at least 2 knots")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("knots must be finite")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise ValueError("knots must be strictly increasing in both x and y")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))

    @classmethod
    def identity(cls, lo: float, hi: float) -> "IncreasingMap":
        return cls([lo, hi], [lo, hi])

    @classmethod
    def affine(cls, lo: float, hi: float, slope: float, offset: float = 0.0):
        if slope <= 0:
            raise ValueError("slope must be positive")
        return cls([lo, hi], [offset + slope * lo, offset + slope * hi])

    @classmethod
    def from_function(cls, fn: Callable, lo: float, hi: float, n: int = 1024):
        """Piecewise-linear interpolant of ``fn`` on ``n`` equal segments."""
        x = np.linspace(lo, hi, n + 1)
        return cls(x, fn(x))

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def range(self) -> tuple[float, float]:
        return float(self.y[0]), float(self.y[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)

    def _check(self, v, knots, what):
        v = np.asarray(v, dtype=float)
        lo, hi = knots[0], knots[-1]
        tol = _MASS_TOL * max(1.0, abs(lo), abs(hi))
        if np.any(v < lo - tol) or np.any(v > hi + tol):
            raise DomainMismatch(f"value outside map {what} [{lo}, {hi}]")
        return v

    def __call__(self, v):
        v = self._check(v, self.x, "domain")
        return np.interp(v, self.x, self.y)

    def inverse(self, v):
        v = self._check(v, self.y, "range")
        return np.interp(v, self.y, self.x)

    def derivative(self, v):
        v = self._check(v, self.x, "domain")
        k = np.clip(np.searchsorted(self.x, v, side="right") - 1, 0, self.x.size - 2)
        return self.slopes[k]

    def inverted(self) -> "IncreasingMap":
        return IncreasingMap(self.y, self.x)


def cdf_map(d: Density, restrict_support: bool = False,
            mass_floor: float = 0.0) -> IncreasingMap:
    """Cumulative distribution of ``d`` as an increasing map onto ``[0, 1]``.

    Cells with mass at or below ``mass_floor`` count as empty.  The map is
    restricted to the support interval (leading and trailing empty cells are
    dropped).  Empty cells strictly inside the support would make the CDF
    flat; they raise :class:`InteriorZeroRegion` unless ``restrict_support``
    is set.  Every cell of the support is given at least ``1e-10`` times the
    peak height so that the knots stay strictly increasing in floating point.
    """
    mass = d.masses
    full = np.flatnonzero(mass > mass_floor)
    first, last = full[0], full[-1]
    h = d.heights[first:last + 1].copy()
    holes = np.flatnonzero(mass[first:last + 1] <= mass_floor)
    if holes.size and not restrict_support:
        raise InteriorZeroRegion(holes + first)
    h[holes] = 0.0
    h = np.maximum(h, 1e-10 * h.max())
    edges = d.grid.edges[first:last + 2]
    y = np.concatenate([[0.0], np.cumsum(h * d.grid.width)])
    y /= y[-1]
    y[-1] = 1.0
    return IncreasingMap(edges, y)


def _transport(masses, src: Grid, m: IncreasingMap, out_grid: Grid):
    """Rebin cell masses (last axis) through ``m`` onto ``out_grid``.

    The mass of ``m(X)`` in an output cell ``[a, b]`` is the source mass in
    ``[m^-1(a), m^-1(b)]``.  Both the source CDF and ``m^-1`` are piecewise
    linear, so this is exact.  Works row-wise on 2-d input.
    """
    masses = np.asarray(masses, dtype=float)
    occupied = np.flatnonzero(masses.reshape(-1, src.n).max(axis=0) > 0)
    first, last = occupied[0], occupied[-1]
    edges = src.edges
    s_lo, s_hi = edges[first], edges[last + 1]
    x_lo, x_hi = m.domain
    tol = _MASS_TOL * max(1.0, abs(s_lo), abs(s_hi))
    if s_lo < x_lo - tol or s_hi > x_hi + tol:
        raise DomainMismatch(
            f"density support [{s_lo}, {s_hi}] exits map domain [{x_lo}, {x_hi}]"
        )
    y_lo, y_hi = np.interp([max(s_lo, x_lo), min(s_hi, x_hi)], m.x, m.y)
    tol = _MASS_TOL * max(1.0, abs(out_grid.lo), abs(out_grid.hi))
    if y_lo < out_grid.lo - tol or y_hi > out_grid.hi + tol:
        raise DomainMismatch(
            f"mapped support [{y_lo}, {y_hi}] exits output grid "
            f"[{out_grid.lo}, {out_grid.hi}]"
        )
    pre = np.interp(out_grid.edges, m.y, m.x)
    pre[0], pre[-1] = min(pre[0], s_lo), max(pre[-1], s_hi)
    k = np.clip(np.searchsorted(edges, pre, side="right") - 1, 0, src.n - 1)
    t = np.clip((pre - edges[k]) / src.width, 0.0, 1.0)
    cum = np.concatenate(
        [np.zeros(masses.shape[:-1] + (1,)), np.cumsum(masses, axis=-1)], axis=-1
    )
    g = cum[..., k] + t * masses[..., k]
    return np.clip(np.diff(g, axis=-1), 0.0, None)


def transport_matrix(src: Grid, m: IncreasingMap, out_grid: Grid):
    """Sparse ``(src.n, out_grid.n)`` matrix of mass fractions.

    Entry ``[i, j]`` is the fraction of source cell ``i`` whose image lies in
    output cell ``j``, so ``masses @ T`` is the pushforward of cell masses.
    """
    lo, hi = m.domain
    tol = _MASS_TOL * max(1.0, abs(src.lo), abs(src.hi))
    if src.lo < lo - tol or src.hi > hi + tol:
        raise DomainMismatch(f"grid [{src.lo}, {src.hi}] exits map domain [{lo}, {hi}]")
    pre = np.interp(out_grid.edges, m.y, m.x)
    pre[0], pre[-1] = min(pre[0], src.lo), max(pre[-1], src.hi)
    edges = src.edges
    first = np.clip(np.searchsorted(edges, pre[:-1], side="right") - 1, 0, src.n - 1)
    last = np.clip(np.searchsorted(edges, pre[1:], side="left") - 1, 0, src.n - 1)
    last = np.maximum(last, first)
    counts = last - first + 1
    cols = np.repeat(np.arange(out_grid.n), counts)
    offset = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    rows = np.repeat(first, counts) + offset
    a = np.maximum(pre[:-1][cols], edges[rows])
    b = np.minimum(pre[1:][cols], edges[rows + 1])
    frac = np.clip(b - a, 0.0, None) / src.width
    return sparse.csr_matrix((frac, (rows, cols)), shape=(src.n, out_grid.n))


def pushforward(d: Density, m: IncreasingMap, out_grid: Grid) -> Density:
    """Density of ``m(X)`` for ``X ~ d``, rebinned onto ``out_grid``.

    Mass is conserved exactly: each source cell's mass is spread over the
    output cells its image overlaps, uniformly in the preimage coordinate
    (which is exact for a piecewise-linear map).

    Raises
    ------
    DomainMismatch
        If the support of ``d`` leaves the domain of ``m`` or its image
        leaves ``out_grid``.
    """
    mass = _transport(d.masses, d.grid, m, out_grid)
    return Density(out_grid, mass / out_grid.width)


def pushforward_rows(heights, src: Grid, m: IncreasingMap, out_grid: Grid) -> np.ndarray:
    """Row-wise :func:`pushforward` of a matrix of densities on ``src``."""
    mass = _transport(np.asarray(heights) * src.width, src, m, out_grid)
    return mass / out_grid.width
