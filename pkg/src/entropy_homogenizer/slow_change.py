"""
Closed forms for channels whose rows drift slowly with e.

When every row is a narrow bump of width ``sigma(e)`` centered on an
increasing mean ``m(e)``, the capacity-achieving input is approximately
``m'(e) / 2^{h(Q|e)}`` up to normalization ``N`` and the capacity is
``log2 N``.  The transformed channel is then nearly aligned: the mean of
``q*`` given ``e*`` is close to ``e*`` and the posterior entropy
``h(E*|q*)`` is nearly constant.  The errors are of order ``sigma_max``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .channel import (Channel, InputDistribution, _grid_from_centers, cond_entropy_profile,
                      reverse_quantities)
from .density import Density, Grid, IncreasingMap, cdf_map
from .errors import DomainMismatch, GridMismatch, NonPositiveSlope
from .transforms import HomogenizedSystem, homogenize_input

_GAUSS_H0 = 0.5 * np.log2(2 * np.pi * np.e)


def gaussian_entropy(sigma):
    """Differential entropy in bits of a normal density with std ``sigma``."""
    return _GAUSS_H0 + np.log2(np.asarray(sigma, dtype=float))


@dataclass(frozen=True, eq=False)
class SlowChangeProfile:
    """Per-e-cell mean, slope, row entropy and width of a channel.

    Attributes
    ----------
    e_grid : Grid
    m : IncreasingMap
        Conditional mean through the e-cell centers.
    m_prime : ndarray
        Slope of the mean per e-cell.
    h_profile : ndarray
        ``h(Q|e)`` in bits per e-cell.
    sigma_profile : ndarray
        Row standard deviation per e-cell.
    q_range : tuple
        ``(q_min, q_max)``; the mean must stay strictly inside.
    """

    e_grid: Grid
    m: IncreasingMap
    m_prime: np.ndarray = field(repr=False)
    h_profile: np.ndarray = field(repr=False)
    sigma_profile: np.ndarray = field(repr=False)
    q_range: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        mp = np.asarray(self.m_prime, dtype=float)
        if np.any(mp <= 0):
            raise NonPositiveSlope(
                f"m'(e) <= 0 at {np.count_nonzero(mp <= 0)} cell(s), first at "
                f"e = {self.e_grid.centers[np.argmax(mp <= 0)]:.6g}"
            )
        lo, hi = self.q_range
        y = self.m.y
        if not (lo < y[0] and y[-1] < hi):
            raise DomainMismatch(
                f"conditional mean range [{y[0]}, {y[-1]}] not inside q-range [{lo}, {hi}]"
            )

    @property
    def sigma_max(self) -> float:
        return float(np.max(self.sigma_profile))

    @classmethod
    def from_gaussian(cls, e_grid: Grid, q_range, mean, sigma, mean_prime=None):
        """Profile of Gaussian rows with mean ``mean(e)`` and std ``sigma(e)``.

        ``mean_prime`` gives the slope analytically; otherwise it is taken by
        central differences of the mean at the cell centers.
        """
        c = e_grid.centers
        mu = _eval(mean, c)
        s = _eval(sigma, c)
        mp = _eval(mean_prime, c) if mean_prime is not None else np.gradient(mu, c)
        return cls(e_grid, _mean_map(c, mu), mp, gaussian_entropy(s), s, tuple(q_range))

    @classmethod
    def from_channel(cls, ch: Channel):
        """Profile read off the rows: means, their slopes and row entropies."""
        c = ch.e_grid.centers
        mu = ch.row_means()
        return cls(ch.e_grid, _mean_map(c, mu), np.gradient(mu, c),
                   cond_entropy_profile(ch), np.sqrt(ch.row_variances()),
                   (ch.q_grid.lo, ch.q_grid.hi))

    @classmethod
    def from_csv(cls, path, q_range=(-np.inf, np.inf)):
        """Read columns ``e, m, sigma`` (Gaussian rows) or ``e, m, h``.

        The e values are the cell centers of a uniform grid.  ``sigma`` is
        recovered from ``h`` with the Gaussian relation when only ``h`` is
        given.
        """
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        head = [h.strip().lower() for h in rows[0]]
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        col = {name: data[:, head.index(name)] for name in head}
        if "e" not in col or "m" not in col or not ({"sigma", "h"} & col.keys()):
            raise ValueError(f"{path}: need columns e, m and sigma or h")
        g = _grid_from_centers(col["e"])
        mu = col["m"]
        if "sigma" in col:
            s = col["sigma"]
            h = gaussian_entropy(s)
        else:
            h = col["h"]
            s = np.exp2(h - _GAUSS_H0)
        return cls(g, _mean_map(g.centers, mu), np.gradient(mu, g.centers), h, s,
                   tuple(q_range))


def _eval(v, c):
    if callable(v):
        v = v(c)
    return np.broadcast_to(np.asarray(v, dtype=float), c.shape).copy()


def _mean_map(c, mu):
    if np.any(np.diff(mu) <= 0):
        raise NonPositiveSlope("conditional mean is not strictly increasing")
    return IncreasingMap(c, mu)


def slow_change_input(profile: SlowChangeProfile):
    """Input density proportional to ``m'(e) / 2^{h(Q|e)}``.

    Returns
    -------
    (InputDistribution, float)
        The normalized density and the normalizer ``N``.
    """
    num = profile.m_prime * np.exp2(-profile.h_profile)
    n = float(num.sum() * profile.e_grid.width)
    return InputDistribution(profile.e_grid, num), n


def slow_change_capacity(profile: SlowChangeProfile) -> float:
    """``log2 N`` in bits."""
    return float(np.log2(slow_change_input(profile)[1]))


def homogenize_slow_change(ch: Channel, profile: SlowChangeProfile,
                           n_star: int | None = None) -> HomogenizedSystem:
    """Transformed channel built from the closed-form input of ``profile``.

    The solver's optimum on a fine grid concentrates on isolated cells a few
    ``sigma`` apart, which makes ``E*`` a staircase; the closed-form input
    is the smooth density the slow-change statements refer to.
    """
    if profile.e_grid != ch.e_grid:
        raise GridMismatch("profile and channel e-grids differ")
    fe, _ = slow_change_input(profile)
    return homogenize_input(ch, fe, n_star=n_star)


def alignment_errors(ch: Channel, profile: SlowChangeProfile, n_points: int = 20,
                     margin: float = 3.0):
    """Check ``f_Q(m(e)) ~ f_E(e)/m'(e)`` and ``F_Q(m(e)) ~ F_E(e)``.

    Uses the closed-form input and its marginal at ``n_points`` cells spread
    over the interior (``margin * sigma_max`` away from the ends).

    Returns
    -------
    (ndarray, ndarray)
        Relative density errors and absolute CDF errors.
    """
    fe, _ = slow_change_input(profile)
    fq = fe.masses @ ch.kernel
    g = ch.e_grid
    pad = margin * profile.sigma_max
    lo = g.cell_index(np.array([g.lo + pad]))[0] + 1
    hi = g.cell_index(np.array([g.hi - pad]))[0] - 1
    cells = np.unique(np.linspace(lo, hi, n_points).round().astype(int))
    m_e = profile.m(g.centers[cells])
    dens = np.interp(m_e, ch.q_grid.centers, fq)
    pred = fe.heights[cells] / profile.m_prime[cells]
    f_e = np.interp(g.centers[cells], g.edges, fe.cumulative())
    f_q = cdf_map(Density(ch.q_grid, fq))(m_e)
    return np.abs(dens / pred - 1.0), np.abs(f_q - f_e)


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    """Deviation statistics over interior cells.

    ``max_deviation`` is the largest ``|mean - coordinate|``; ``ratio`` is
    that value over ``sigma_max``.  ``spread`` (posterior entropy, bits) is
    NaN for the conditional-mean check.  ``interior`` flags the cells used.
    """

    deviations: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    max_deviation: float
    sigma_max: float
    ratio: float
    spread: float = float("nan")
    h_values: np.ndarray = field(repr=False, default=None)
    mean_h: float = float("nan")


def _interior_e(sys, profile, margin):
    e = sys.source.e_grid.centers[sys.source_rows]
    lo, hi = sys.source.e_grid.lo, sys.source.e_grid.hi
    pad = margin * profile.sigma_max
    return (e >= lo + pad) & (e <= hi - pad)


def certify_corollary3(sys: HomogenizedSystem, profile: SlowChangeProfile,
                       margin: float = 3.0) -> AlignmentReport:
    """Mean of each star row against its e*-coordinate.

    e*-cells whose source coordinate lies within ``margin * sigma_max`` of
    either end of the e-range are left out of the statistics.
    """
    star = sys.star_channel
    dev = star.row_means() - star.e_grid.centers
    inside = _interior_e(sys, profile, margin)
    worst = float(np.max(np.abs(dev[inside]))) if inside.any() else float("nan")
    return AlignmentReport(dev, inside, worst, profile.sigma_max,
                           worst / profile.sigma_max)


def certify_corollary4(sys: HomogenizedSystem, profile: SlowChangeProfile | None = None,
                       margin: float = 3.0, strict: bool = False) -> AlignmentReport:
    """Posterior mean and entropy of E* for each q*-cell under uniform E*.

    With a ``profile``, q*-cells whose source coordinate ``map_q^-1(q*)``
    lies within ``margin * sigma_max`` of ``m(e_min)`` or ``m(e_max)`` are
    left out; without one, every q*-cell with positive marginal is used.
    ``mean_h`` is the marginal-weighted average of ``h(E*|q*)``.
    """
    star = sys.star_channel
    rev = reverse_quantities(star, star.uniform_input(), strict=strict)
    qc = star.q_grid.centers
    dev = rev.posterior_mean - qc
    inside = np.isfinite(rev.h_e_given_q)
    if profile is not None:
        q = sys.map_q.inverse(np.clip(qc, *sys.map_q.range))
        pad = margin * profile.sigma_max
        inside &= (q >= profile.m.y[0] + pad) & (q <= profile.m.y[-1] - pad)
        sig = profile.sigma_max
    else:
        sig = float(np.sqrt(np.max(sys.source.row_variances())))
    h = rev.h_e_given_q[inside]
    worst = float(np.max(np.abs(dev[inside]))) if inside.any() else float("nan")
    spread = float(h.max() - h.min()) if h.size else float("nan")
    return AlignmentReport(dev, inside, worst, sig, worst / sig, spread,
                           rev.h_e_given_q, rev.h_e_given_Q)
