"""
Built-in exemplar channels with their expected values.

Each case builds a channel on requested grid sizes and lists the quantities
it should reproduce.  :func:`run_case` solves, homogenizes and compares every
expectation in one pass.  :func:`variance_impossibility_experiment` probes
the fact that no increasing map of Q equalizes the variances of the two
row forms of the two-form case.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .capacity import solve_capacity, verify_stationarity
from .channel import Channel, gaussian_channel, reverse_quantities, uniform_rows_channel
from .density import Grid, IncreasingMap
from .slow_change import (SlowChangeProfile, certify_corollary3, certify_corollary4,
                          homogenize_slow_change, slow_change_capacity)
from .transforms import build_homogenized, certify_theorem1, mi_invariance_check

LOG5 = math.log2(5.0)


@dataclass(frozen=True)
class Expectation:
    """One checked quantity: passes when ``|actual - value| <= tolerance``."""

    quantity: str
    value: float
    tolerance: float
    provenance: str
    evaluate: Callable = field(repr=False, compare=False)


@dataclass(frozen=True)
class CaseSpec:
    """A named channel constructor and its expectations.

    ``grid_multiple`` gives the factors ``(e, q, star)`` that grid sizes are
    rounded up to so that breakpoints fall on cell edges.
    """

    name: str
    description: str
    params: dict
    build: Callable = field(repr=False)
    expectations: tuple = field(repr=False)
    profile: Callable | None = field(repr=False, default=None)
    grid_multiple: tuple = (1, 1, 1)

    def grid_sizes(self, n_e, n_q, n_star=None, align=True):
        n_star = n_e if n_star is None else n_star
        if not align:
            return n_e, n_q, n_star
        return tuple(-(-n // k) * k for n, k in zip((n_e, n_q, n_star), self.grid_multiple))


class CaseRun:
    """Lazily computed pipeline stages for one case at given grid sizes."""

    def __init__(self, spec: CaseSpec, n_e=1000, n_q=1000, n_star=None, tol=1e-6,
                 max_iter=100_000, align=True, restrict_support=False):
        self.spec = spec
        self.n_e, self.n_q, self.n_star = spec.grid_sizes(n_e, n_q, n_star, align)
        self.tol = tol
        self.max_iter = max_iter
        self.restrict_support = restrict_support

    @cached_property
    def channel(self) -> Channel:
        return self.spec.build(self.n_e, self.n_q)

    @cached_property
    def solution(self):
        return solve_capacity(self.channel, tol=self.tol, max_iter=self.max_iter)

    @cached_property
    def stationarity(self):
        return verify_stationarity(self.channel, self.solution)

    @cached_property
    def system(self):
        return build_homogenized(self.channel, self.solution, n_star=self.n_star,
                                 restrict_support=self.restrict_support)

    @cached_property
    def theorem1(self):
        return certify_theorem1(self.system)

    @cached_property
    def reverse(self):
        star = self.system.star_channel
        return reverse_quantities(star, star.uniform_input())

    @cached_property
    def profile(self) -> SlowChangeProfile:
        return self.spec.profile(self.channel)

    @cached_property
    def slow_system(self):
        return homogenize_slow_change(self.channel, self.profile, n_star=self.n_star)

    def check(self):
        """Evaluate every expectation; returns a list of :class:`CheckResult`."""
        out = []
        for ex in self.spec.expectations:
            actual = float(ex.evaluate(self))
            ok = bool(np.isfinite(actual) and abs(actual - ex.value) <= ex.tolerance)
            out.append(CheckResult(self.spec.name, ex.quantity, ex.value, actual,
                                   ex.tolerance, ok, ex.provenance))
        return out


@dataclass(frozen=True)
class CheckResult:
    case: str
    quantity: str
    expected: float
    actual: float
    tolerance: float
    passed: bool
    provenance: str


def run_case(spec: CaseSpec, **kwargs):
    """Build, solve, homogenize and compare; keyword arguments go to :class:`CaseRun`."""
    return CaseRun(spec, **kwargs).check()


RESULT_HEADER = ["case", "quantity", "expected", "actual", "tolerance", "pass"]


def write_results_csv(results, path) -> None:
    """Results sorted by case name, in expectation order within a case."""
    order = sorted(range(len(results)), key=lambda i: results[i].case)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for i in order:
            r = results[i]
            w.writerow([r.case, r.quantity, f"{r.expected:.12g}", f"{r.actual:.12g}",
                        f"{r.tolerance:.12g}", "true" if r.passed else "false"])


# ---------------------------------------------------------------------------
# helpers used by the expectations

def _mass_between(density, a, b):
    c = density.grid.centers
    return float(density.masses[(c > a) & (c < b)].sum())


def _band_values(values, centers, a, b):
    sel = (centers >= a) & (centers < b)
    return values[sel]


def _band_extreme(values, centers, a, b, target):
    """Value in ``[a, b)`` farthest from ``target``."""
    v = _band_values(values, centers, a, b)
    return float(v[np.argmax(np.abs(v - target))])


def _kkt_worst(run):
    st = run.stationarity
    return max(st.max_abs_on_support, st.max_pos_off_support)


# ---------------------------------------------------------------------------
# cases

def case_fig1(sigma0: float = 0.01) -> CaseSpec:
    """Gaussian rows, ``m(e) = e``, width doubling at ``e = 1/2``.

    Doubling ``sigma`` raises the row entropy by exactly one bit.
    """
    def sigma(e):
        return np.where(e < 0.5, sigma0, 2 * sigma0)

    def build(n_e, n_q):
        return gaussian_channel(Grid(0.0, 1.0, n_e), Grid(0.0, 1.0, n_q), lambda e: e, sigma)

    def profile(ch):
        return SlowChangeProfile.from_gaussian(ch.e_grid, (0.0, 1.0), lambda e: e, sigma, 1.0)

    def h_step(run):
        ch = run.channel
        h = ch.row(ch.e_grid.cell_index(np.array([0.75]))[0]).entropy()
        return h - ch.row(ch.e_grid.cell_index(np.array([0.25]))[0]).entropy()

    def ratio(run):
        fe = run.solution.f_tilde_e
        return _mass_between(fe, 0.1, 0.4) / _mass_between(fe, 0.6, 0.9)

    c_closed = math.log2(0.75 / (sigma0 * math.sqrt(2 * math.pi * math.e)))
    ex = (
        Expectation("h_step_bits", 1.0, 0.01, "PUBLISHED", h_step),
        Expectation("map_q(0.5)", 2 / 3, 5 * sigma0, "PUBLISHED", lambda r: r.system.map_q(0.5)),
        Expectation("f_e_ratio_across_half", 2.0, 10 * sigma0, "DERIVED", ratio),
        Expectation("capacity_vs_closed_form_rel", 0.0, 0.05, "DERIVED",
                    lambda r: abs(r.solution.capacity_bits - c_closed) / c_closed),
        Expectation("kkt_max_residual", 0.0, 1e-5, "DERIVED", _kkt_worst),
        Expectation("theorem1_max_deviation", 0.0, 0.05, "DERIVED",
                    lambda r: r.theorem1.max_deviation),
        Expectation("corollary3_max_deviation", 0.0, 5 * sigma0, "DERIVED",
                    lambda r: certify_corollary3(r.slow_system, r.profile).max_deviation),
    )
    return CaseSpec("fig1", "Gaussian rows, m(e)=e, sigma doubles at e=1/2",
                    {"sigma0": sigma0}, build, ex, profile)


def case_fig2(sigma0: float = 0.01) -> CaseSpec:
    """Gaussian rows of constant width; the mean's slope halves at ``e = 1/2``.

    ``m(e) = e`` below one half and ``1/4 + e/2`` above, so ``m`` is
    continuous and ends at ``3/4``.
    """
    def mean(e):
        return np.where(e < 0.5, e, 0.25 + e / 2)

    def slope(e):
        return np.where(e < 0.5, 1.0, 0.5)

    def build(n_e, n_q):
        return gaussian_channel(Grid(0.0, 1.0, n_e), Grid(0.0, 1.0, n_q), mean, sigma0)

    def profile(ch):
        return SlowChangeProfile.from_gaussian(ch.e_grid, (0.0, 1.0), mean, sigma0, slope)

    c_closed = math.log2(0.75 / (sigma0 * math.sqrt(2 * math.pi * math.e)))
    ex = (
        Expectation("map_q(0.5)", 2 / 3, 5 * sigma0, "PUBLISHED", lambda r: r.system.map_q(0.5)),
        Expectation("map_q(0.75)", 1.0, 5 * sigma0, "PUBLISHED", lambda r: r.system.map_q(0.75)),
        Expectation("f_q_mean_height_interior", 4 / 3, 10 * sigma0, "PUBLISHED",
                    lambda r: _mass_between(r.solution.f_tilde_q, 0.1, 0.65) / 0.55),
        Expectation("capacity_vs_closed_form_rel", 0.0, 0.05, "DERIVED",
                    lambda r: abs(r.solution.capacity_bits - c_closed) / c_closed),
        Expectation("kkt_max_residual", 0.0, 1e-5, "DERIVED", _kkt_worst),
        Expectation("theorem1_max_deviation", 0.0, 0.05, "DERIVED",
                    lambda r: r.theorem1.max_deviation),
        Expectation("corollary3_max_deviation", 0.0, 5 * sigma0, "DERIVED",
                    lambda r: certify_corollary3(r.slow_system, r.profile).max_deviation),
    )
    return CaseSpec("fig2", "Gaussian rows, constant sigma, slope of m halves at e=1/2",
                    {"sigma0": sigma0}, build, ex, profile)


def case_fig3() -> CaseSpec:
    """Two row forms: uniform on ``[1/4, 3/4]`` for ``e < 3/5``, else on ``[0, 1]``.

    Grid sizes are rounded up so that ``1/4``, ``3/4``, ``3/5`` and the
    transformed breakpoints ``0.1``, ``0.9`` sit on cell edges.
    """
    def build(n_e, n_q):
        return uniform_rows_channel(
            Grid(0.0, 1.0, n_e), Grid(0.0, 1.0, n_q),
            lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0),
        )

    h_star = 2 - LOG5

    def star_row(run, form):
        k = run.system.star_channel.kernel
        return k[0] if form == 1 else k[-1]

    def q_centers(run):
        return run.system.star_channel.q_grid.centers

    def row_band(run, form, a, b, target):
        return _band_extreme(star_row(run, form), q_centers(run), a, b, target)

    def h_post(run, a, b, target):
        return _band_extreme(run.reverse.h_e_given_q, q_centers(run), a, b, target)

    def info_post(run, a, b, target):
        return _band_extreme(run.reverse.info_e_given_q, q_centers(run), a, b, target)

    def h_form(run, form):
        prof = run.system.entropy_profile
        e = run.system.star_channel.e_grid.centers
        sel = e < 0.6 if form == 1 else e >= 0.6
        return _band_extreme(prof[sel], e[sel], 0.0, 1.0, h_star)

    def mi_maps(run):
        s = run.system
        return mi_invariance_check(run.channel, run.solution.f_tilde_e, s.map_q, s.map_e).delta

    ex = (
        Expectation("capacity_bits", LOG5 - 2, 1e-9, "PUBLISHED",
                    lambda r: r.solution.capacity_bits),
        Expectation("input_mass_e<3/5", 0.6, 1e-3, "PUBLISHED",
                    lambda r: _mass_between(r.solution.f_tilde_e, 0.0, 0.6)),
        Expectation("input_mass_e>=3/5", 0.4, 1e-3, "PUBLISHED",
                    lambda r: _mass_between(r.solution.f_tilde_e, 0.6, 1.0)),
        Expectation("map_q(0.25)", 0.1, 1e-12, "DERIVED", lambda r: r.system.map_q(0.25)),
        Expectation("map_q(0.75)", 0.9, 1e-12, "DERIVED", lambda r: r.system.map_q(0.75)),
        Expectation("kkt_max_residual", 0.0, 1e-6, "DERIVED", _kkt_worst),
        Expectation("star_row1_height_[0.1,0.9)", 1.25, 1e-9, "PUBLISHED",
                    lambda r: row_band(r, 1, 0.1, 0.9, 1.25)),
        Expectation("star_row1_height_outer", 0.0, 1e-9, "PUBLISHED",
                    lambda r: max(abs(row_band(r, 1, 0.0, 0.1, 0.0)),
                                  abs(row_band(r, 1, 0.9, 1.0, 0.0)))),
        Expectation("star_row2_height_outer", 2.5, 1e-9, "PUBLISHED",
                    lambda r: max((row_band(r, 2, 0.0, 0.1, 2.5), row_band(r, 2, 0.9, 1.0, 2.5)),
                                  key=lambda v: abs(v - 2.5))),
        Expectation("star_row2_height_[0.1,0.9)", 0.625, 1e-9, "PUBLISHED",
                    lambda r: row_band(r, 2, 0.1, 0.9, 0.625)),
        Expectation("h(Q*|e*)_form1", h_star, 1e-9, "PUBLISHED", lambda r: h_form(r, 1)),
        Expectation("h(Q*|e*)_form2", h_star, 1e-9, "PUBLISHED", lambda r: h_form(r, 2)),
        Expectation("theorem1_max_deviation", 0.0, 1e-9, "PUBLISHED",
                    lambda r: r.theorem1.max_deviation),
        Expectation("h(E*|q*)_outer", 1 - LOG5, 1e-9, "PUBLISHED",
                    lambda r: max((h_post(r, 0.0, 0.1, 1 - LOG5), h_post(r, 0.9, 1.0, 1 - LOG5)),
                                  key=lambda v: abs(v - 1 + LOG5))),
        Expectation("h(E*|q*)_middle", 2.25 - LOG5, 1e-9, "PUBLISHED",
                    lambda r: h_post(r, 0.1, 0.9, 2.25 - LOG5)),
        Expectation("h(E*|Q*)", 2 - LOG5, 1e-9, "PUBLISHED", lambda r: r.reverse.h_e_given_Q),
        Expectation("I(E*;q*)_outer", LOG5 - 1, 1e-9, "PUBLISHED",
                    lambda r: max((info_post(r, 0.0, 0.1, LOG5 - 1),
                                   info_post(r, 0.9, 1.0, LOG5 - 1)),
                                  key=lambda v: abs(v - LOG5 + 1))),
        Expectation("I(E*;q*)_middle", LOG5 - 2.25, 1e-9, "PUBLISHED",
                    lambda r: info_post(r, 0.1, 0.9, LOG5 - 2.25)),
        Expectation("h(E*|q*)_spread", 1.25, 1e-9, "PUBLISHED",
                    lambda r: certify_corollary4(r.system).spread),
        Expectation("mi_invariance_homogenizing_maps", 0.0, 1e-6, "DERIVED", mi_maps),
    )
    return CaseSpec("fig3", "two piecewise-uniform row forms split at e=3/5", {}, build, ex,
                    grid_multiple=(20, 20, 10))


def case_independent() -> CaseSpec:
    """Every row uniform on ``[0, 1]``: zero capacity, identity maps."""
    def build(n_e, n_q):
        return uniform_rows_channel(Grid(0.0, 1.0, n_e), Grid(0.0, 1.0, n_q),
                                    lambda e: (0.0, 1.0))

    def map_offset(run):
        s = run.system
        return max(np.max(np.abs(s.map_e.y - s.map_e.x)), np.max(np.abs(s.map_q.y - s.map_q.x)))

    ex = (
        Expectation("capacity_bits", 0.0, 1e-12, "TRIVIAL", lambda r: r.solution.capacity_bits),
        Expectation("map_identity_offset", 0.0, 1e-12, "TRIVIAL", map_offset),
        Expectation("theorem1_max_deviation", 0.0, 1e-12, "TRIVIAL",
                    lambda r: r.theorem1.max_deviation),
        Expectation("h(E*|q*)_max_abs", 0.0, 1e-12, "TRIVIAL",
                    lambda r: np.max(np.abs(r.reverse.h_e_given_q))),
    )
    return CaseSpec("independent", "every row uniform on [0,1]", {}, build, ex)


def case_gauss(sigma0: float = 0.01) -> CaseSpec:
    """Gaussian rows, ``m(e) = e`` and constant ``sigma``."""
    def build(n_e, n_q):
        return gaussian_channel(Grid(0.0, 1.0, n_e), Grid(0.0, 1.0, n_q), lambda e: e, sigma0)

    def profile(ch):
        return SlowChangeProfile.from_gaussian(ch.e_grid, (0.0, 1.0), lambda e: e, sigma0, 1.0)

    c_closed = math.log2(1.0 / (sigma0 * math.sqrt(2 * math.pi * math.e)))
    ex = (
        Expectation("closed_form_capacity_bits", c_closed, 1e-9, "DERIVED",
                    lambda r: slow_change_capacity(r.profile)),
        Expectation("capacity_vs_closed_form_rel", 0.0, 0.02, "DERIVED",
                    lambda r: abs(r.solution.capacity_bits - c_closed) / c_closed),
        Expectation("kkt_max_residual", 0.0, 1e-5, "DERIVED", _kkt_worst),
    )
    return CaseSpec("gauss", "Gaussian rows, m(e)=e, constant sigma", {"sigma0": sigma0},
                    build, ex, profile)


CASES = {
    "fig1": case_fig1,
    "fig2": case_fig2,
    "fig3": case_fig3,
    "gauss": case_gauss,
    "independent": case_independent,
}


def get_case(name: str, sigma: float | None = None) -> CaseSpec:
    """Case by registry name; ``sigma`` overrides ``sigma0`` where it applies."""
    if name not in CASES:
        raise KeyError(f"unknown case {name!r}; choose from {', '.join(sorted(CASES))}")
    factory = CASES[name]
    if sigma is not None and name in ("fig1", "fig2", "gauss"):
        return factory(sigma)
    return factory()


# ---------------------------------------------------------------------------
# variance impossibility

def _uniform_moments(g: IncreasingMap, a: float, b: float):
    """Mean and variance of ``g(X)`` for ``X`` uniform on ``[a, b]``, exactly.

    ``g`` is linear between knots, so each segment contributes
    ``L (G0 + G1) / 2`` to the integral of ``g`` and
    ``L (G0^2 + G0 G1 + G1^2) / 3`` to that of ``g^2``.  The second pass
    works on values centered at the mean, which avoids cancellation.
    """
    x = np.union1d(g.x[(g.x > a) & (g.x < b)], [a, b])
    y = g(x)
    length = np.diff(x)
    mu = np.sum(length * (y[:-1] + y[1:]) / 2) / (b - a)
    d0, d1 = y[:-1] - mu, y[1:] - mu
    return mu, np.sum(length * (d0 * d0 + d0 * d1 + d1 * d1) / 3) / (b - a)


def variance_difference(g: IncreasingMap) -> float:
    """``Var(g(Q2)) - Var(g(Q1))`` for ``Q1 ~ U[1/4, 3/4]`` and ``Q2 ~ U[0, 1]``."""
    return _uniform_moments(g, 0.0, 1.0)[1] - _uniform_moments(g, 0.25, 0.75)[1]


def random_increasing_map(rng: np.random.Generator, kind: int) -> IncreasingMap:
    """Random increasing map of ``[0, 1]``.

    ``kind % 3`` selects: 0, piecewise linear with 2 to 50 knots and
    log-normal slopes; 1, positive mixture of logistic steps plus a small
    linear term; 2, power or exponential warp.  Kinds 1 and 2 are sampled at
    257 knots.
    """
    kind %= 3
    if kind == 0:
        k = int(rng.integers(2, 51))
        x = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, k - 2)), [1.0]])
        x = np.unique(x)
        slopes = np.exp(rng.normal(0.0, 2.0, x.size - 1))
        y = np.concatenate([[0.0], np.cumsum(slopes * np.diff(x))])
        return IncreasingMap(x, y)
    x = np.linspace(0.0, 1.0, 257)
    if kind == 1:
        j = int(rng.integers(1, 6))
        w = rng.exponential(1.0, j)
        s = np.exp(rng.uniform(0.0, 4.0, j))
        t = rng.uniform(0.0, 1.0, j)
        y = 1e-3 * x + (w[:, None] / (1 + np.exp(-s[:, None] * (x - t[:, None])))).sum(axis=0)
    else:
        if rng.random() < 0.5:
            y = x ** np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
        else:
            k = rng.uniform(-15.0, 15.0)
            y = np.expm1(k * x) / k if abs(k) > 1e-9 else x.copy()
    return IncreasingMap(x, y)


@dataclass(frozen=True, eq=False)
class VarianceExperimentReport:
    n_transforms: int
    seed: int
    differences: np.ndarray = field(repr=False)
    min_difference: float
    argmin: int
    identity_difference: float

    @property
    def passed(self) -> bool:
        return self.min_difference > 0


def variance_impossibility_experiment(n_transforms: int = 10_000, seed: int = 42):
    """Search for an increasing map that equalizes the two form variances.

    Returns the smallest ``Var(G(Q2)) - Var(G(Q1))`` over all trials; a
    positive minimum means no trial succeeded.
    """
    if n_transforms < 1:
        raise ValueError("n_transforms must be at least 1")
    rng = np.random.default_rng(seed)
    diffs = np.array([variance_difference(random_increasing_map(rng, i))
                      for i in range(n_transforms)])
    k = int(np.argmin(diffs))
    return VarianceExperimentReport(
        n_transforms=n_transforms,
        seed=seed,
        differences=diffs,
        min_difference=float(diffs[k]),
        argmin=k,
        identity_difference=variance_difference(IncreasingMap.identity(0.0, 1.0)),
    )


# ---------------------------------------------------------------------------
# mutual-information invariance

def smooth_gaussian_channel(n: int) -> Channel:
    """Gaussian rows with slowly varying mean and width on ``[0, 1]^2``."""
    g = Grid(0.0, 1.0, n)
    return gaussian_channel(g, g, lambda e: 0.2 + 0.6 * e, lambda e: 0.04 + 0.02 * e)


def random_warp_pair(rng: np.random.Generator, n_knots: int = 512):
    """A cubic warp for Q and a logistic warp for E, both increasing on ``[0, 1]``."""
    a = rng.uniform(-0.3, 3.0)
    scale, shift = np.exp(rng.uniform(-1.0, 1.0)), rng.uniform(-1.0, 1.0)

    def cubic(x):
        return shift + scale * (x + 4 * a * (x - 0.5) ** 3)

    k, c = rng.uniform(1.0, 10.0), rng.uniform(0.2, 0.8)

    def logistic(x):
        s = 1.0 / (1.0 + np.exp(-k * (x - c)))
        lo, hi = 1.0 / (1.0 + np.exp(k * c)), 1.0 / (1.0 + np.exp(-k * (1 - c)))
        return (s - lo) / (hi - lo)

    return (IncreasingMap.from_function(cubic, 0.0, 1.0, n_knots),
            IncreasingMap.from_function(logistic, 0.0, 1.0, n_knots))


@dataclass(frozen=True, eq=False)
class InvarianceExperimentReport:
    n: int
    seed: int
    deltas: np.ndarray = field(repr=False)
    before: float

    @property
    def worst(self) -> float:
        return float(np.max(self.deltas))


def invariance_experiment(n: int = 4096, n_pairs: int = 20, seed: int = 42,
                          channel: Channel | None = None):
    """``|Delta I|`` for seeded random warp pairs on a smooth channel, uniform input."""
    ch = smooth_gaussian_channel(n) if channel is None else channel
    fe = ch.uniform_input()
    rng = np.random.default_rng(seed)
    deltas, before = [], float("nan")
    for _ in range(n_pairs):
        mq, me = random_warp_pair(rng)
        rep = mi_invariance_check(ch, fe, mq, me)
        deltas.append(rep.delta)
        before = rep.before
    return InvarianceExperimentReport(n, seed, np.array(deltas), before)
