"""
Conditional densities f(q|e) on an e-grid by q-grid lattice.

A :class:`Channel` stores one piecewise-constant density of Q per e-cell.
The information functionals (marginal of Q, conditional entropies, mutual
information, posteriors of E) are computed directly from the kernel matrix.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .density import Density, Grid, _readonly
from .errors import GridMismatch, UndefinedPosterior


def _neg_xlog2x(a):
    """Elementwise ``-a * log2(a)`` with ``0 log 0 = 0``."""
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = -a[pos] * np.log2(a[pos])
    return out


class InputDistribution(Density):
    """Density of the input E; must live on the channel's e-grid."""


@dataclass(frozen=True, eq=False)
class Channel:
    """Family of conditional densities of Q, one row per e-cell.

    ``kernel[i, j]`` is the density of Q at q-cell ``j`` given E in e-cell
    ``i``.  Rows are renormalized on construction; ``row_correction`` holds
    the largest relative mass correction that was applied (truncated
    Gaussians, for instance, lose their tails outside the q-range).
    """

    e_grid: Grid
    q_grid: Grid
    kernel: np.ndarray = field(repr=False)
    row_correction: float = field(init=False, default=0.0)

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.shape != (self.e_grid.n, self.q_grid.n):
            raise ValueError(
                f"kernel shape {k.shape} does not match grids "
                f"({self.e_grid.n}, {self.q_grid.n})"
            )
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        mass = k.sum(axis=1) * self.q_grid.width
        if np.any(mass <= 0):
            raise ValueError(f"rows {np.flatnonzero(mass <= 0)} have zero mass")
        k /= mass[:, None]
        object.__setattr__(self, "kernel", _readonly(k))
        object.__setattr__(self, "row_correction", float(np.max(np.abs(1.0 - mass))))

    @property
    def shape(self):
        return self.kernel.shape

    def row(self, i: int) -> Density:
        return Density(self.q_grid, self.kernel[i])

    def row_means(self) -> np.ndarray:
        return self.kernel @ self.q_grid.centers * self.q_grid.width

    def row_variances(self) -> np.ndarray:
        c = self.q_grid.centers
        mu = self.row_means()
        second = self.kernel @ (c * c) * self.q_grid.width
        return second - mu * mu + self.q_grid.width ** 2 / 12.0

    def uniform_input(self) -> InputDistribution:
        return InputDistribution(self.e_grid, np.ones(self.e_grid.n))

    def check_input(self, fe: Density) -> None:
        if fe.grid != self.e_grid:
            raise GridMismatch("input distribution grid differs from channel e-grid")


def _per_cell(v, centers):
    if callable(v):
        v = v(centers)
    return np.broadcast_to(np.asarray(v, dtype=float), centers.shape)


def gaussian_channel(e_grid: Grid, q_grid: Grid, mean, sigma) -> Channel:
    """Gaussian rows with per-e mean and standard deviation.

    ``mean`` and ``sigma`` are callables of the e-cell centers, arrays of
    length ``e_grid.n``, or scalars.  Each q-cell receives the exact Gaussian
    mass over the cell; the tails beyond the q-range are dropped and the
    rows renormalized.
    """
    m = _per_cell(mean, e_grid.centers)
    s = _per_cell(sigma, e_grid.centers)
    if np.any(s <= 0):
        raise ValueError("sigma must be positive")
    z = (q_grid.edges[None, :] - m[:, None]) / s[:, None]
    cell_mass = np.diff(ndtr(z), axis=1)
    return Channel(e_grid, q_grid, cell_mass / q_grid.width)


def uniform_rows_channel(e_grid: Grid, q_grid: Grid, interval: Callable) -> Channel:
    """Rows uniform on ``interval(e) -> (a, b)``, weighted by cell overlap.

    With ``a`` and ``b`` on q-cell edges the rows are exact.
    """
    edges = q_grid.edges
    rows = []
    for e in e_grid.centers:
        a, b = interval(e)
        rows.append(np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0, None))
    return Channel(e_grid, q_grid, np.array(rows) / q_grid.width)


def channel_from_function(e_grid: Grid, q_grid: Grid, fn: Callable) -> Channel:
    """Sample ``fn(e, q)`` on the lattice of cell centers."""
    e, q = np.meshgrid(e_grid.centers, q_grid.centers, indexing="ij")
    return Channel(e_grid, q_grid, fn(e, q))


# ---------------------------------------------------------------------------
# information functionals

@dataclass(frozen=True, eq=False)
class JointSummary:
    """Forward information quantities of a channel under an input."""

    channel: Channel = field(repr=False)
    input: Density = field(repr=False)
    marginal_q: Density
    h_q: float
    h_q_given_e: np.ndarray = field(repr=False)
    h_q_given_E: float
    mutual_info: float
    per_e_gain: np.ndarray = field(repr=False)
    mutual_info_kl: float

    @property
    def posterior(self) -> np.ndarray:
        """``f(e_i | q_j)`` as an ``(n_e, n_q)`` matrix (zero where f_Q = 0)."""
        return _posterior(self.channel, self.input, self.marginal_q.heights)


def marginal_q(ch: Channel, fe: Density) -> Density:
    ch.check_input(fe)
    return Density(ch.q_grid, fe.masses @ ch.kernel)


def cond_entropy_profile(ch: Channel) -> np.ndarray:
    """``h(Q|e)`` in bits for every e-cell."""
    return _neg_xlog2x(ch.kernel).sum(axis=1) * ch.q_grid.width


def _posterior(ch, fe, fq):
    joint = ch.kernel * fe.heights[:, None]
    safe = np.where(fq > 0, fq, 1.0)
    return np.where(fq[None, :] > 0, joint / safe[None, :], 0.0)


def row_divergences(ch: Channel, fq, h_rows=None) -> np.ndarray:
    """``D(f(.|e_i) || fq)`` in bits for every row.

    Rows that put mass where ``fq`` vanishes get ``inf``.
    """
    fq = np.asarray(fq, dtype=float)
    if h_rows is None:
        h_rows = cond_entropy_profile(ch)
    zero = fq <= 0
    log_fq = np.log2(np.where(zero, 1.0, fq))
    d = -h_rows - (ch.kernel @ log_fq) * ch.q_grid.width
    if zero.any():
        d = np.where(ch.kernel[:, zero].sum(axis=1) > 0, np.inf, d)
    return d


def mutual_information(ch: Channel, fe: Density) -> JointSummary:
    """I(Q;E) by the entropy decomposition ``h(Q) - h(Q|E)``.

    The double-integral form ``sum_i w_i D(row_i || f_Q)`` is returned
    alongside as ``mutual_info_kl``.
    """
    fq = marginal_q(ch, fe)
    h_q = fq.entropy()
    h_rows = cond_entropy_profile(ch)
    h_cond = float(np.dot(fe.masses, h_rows))
    w = fe.masses
    kl = float(np.dot(w[w > 0], row_divergences(ch, fq.heights, h_rows)[w > 0]))
    return JointSummary(
        channel=ch,
        input=fe,
        marginal_q=fq,
        h_q=h_q,
        h_q_given_e=h_rows,
        h_q_given_E=h_cond,
        mutual_info=h_q - h_cond,
        per_e_gain=h_q - h_rows,
        mutual_info_kl=kl,
    )


@dataclass(frozen=True, eq=False)
class ReverseSummary:
    """Posterior-side quantities: h(E|q), I(E;q) and their averages.

    Entries for q-cells with zero marginal are NaN and those cells are left
    out of the averages; ``excluded`` lists them.
    """

    posterior: np.ndarray = field(repr=False)
    h_e: float
    h_e_given_q: np.ndarray = field(repr=False)
    info_e_given_q: np.ndarray = field(repr=False)
    h_e_given_Q: float
    mutual_info: float
    posterior_mean: np.ndarray = field(repr=False)
    excluded: np.ndarray = field(repr=False)


def reverse_quantities(ch: Channel, fe: Density, strict: bool = False) -> ReverseSummary:
    """Posterior of E given each q-cell and the information it carries.

    With ``strict=True`` a zero-marginal q-cell raises
    :class:`UndefinedPosterior` instead of being excluded.
    """
    fq = marginal_q(ch, fe).heights
    excluded = np.flatnonzero(fq <= 0)
    if strict and excluded.size:
        raise UndefinedPosterior(excluded)
    post = _posterior(ch, fe, fq)
    de = ch.e_grid.width
    h_post = _neg_xlog2x(post).sum(axis=0) * de
    mean_post = ch.e_grid.centers @ post * de
    h_post[excluded] = np.nan
    mean_post[excluded] = np.nan
    h_e = fe.entropy()
    gain = h_e - h_post
    w = fq * ch.q_grid.width
    valid = fq > 0
    h_avg = float(np.dot(w[valid], h_post[valid]))
    return ReverseSummary(
        posterior=post,
        h_e=h_e,
        h_e_given_q=h_post,
        info_e_given_q=gain,
        h_e_given_Q=h_avg,
        mutual_info=h_e - h_avg,
        posterior_mean=mean_post,
        excluded=excluded,
    )


# ---------------------------------------------------------------------------
# CSV exchange

def _grid_from_centers(c):
    c = np.asarray(c, dtype=float)
    if c.size < 2:
        raise ValueError("need at least two cell centers")
    d = np.diff(c)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * max(1.0, np.abs(c).max()):
        raise ValueError("cell centers must be uniformly spaced and increasing")
    w = (c[-1] - c[0]) / (c.size - 1)
    return Grid(c[0] - w / 2, c[-1] + w / 2, c.size)


def write_channel_csv(ch: Channel, path) -> None:
    """Header row of q-centers, then one row per e-cell: center, densities."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["e\\q"] + [f"{q:.12g}" for q in ch.q_grid.centers])
        for e, row in zip(ch.e_grid.centers, ch.kernel):
            w.writerow([f"{e:.12g}"] + [f"{v:.12g}" for v in row])


def read_channel_csv(path) -> Channel:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 3:
        raise ValueError(f"{path}: need a header and at least two e-rows")
    q = [float(v) for v in rows[0][1:]]
    e = [float(r[0]) for r in rows[1:]]
    body = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    if body.shape != (len(e), len(q)):
        raise ValueError(f"{path}: ragged channel matrix")
    return Channel(_grid_from_centers(e), _grid_from_centers(q), body)
