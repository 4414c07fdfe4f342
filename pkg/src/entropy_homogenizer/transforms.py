"""
Entropy-homogenizing transforms.

Mapping E and Q through the cumulative distributions of the
capacity-achieving input and marginal makes both uniform on ``[0, 1]`` and
gives every transformed row ``f(q*|e*)`` the same entropy, ``-C``.  This
module builds the transformed ("star") channel by pushing the source rows
through the maps, certifies the constant-entropy property, and checks that
mutual information is unchanged by increasing maps.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .capacity import MASS_FLOOR, CapacitySolution
from .channel import Channel, InputDistribution, cond_entropy_profile, mutual_information
from .density import Density, Grid, IncreasingMap, cdf_map, pushforward_rows, transport_matrix


@dataclass(frozen=True, eq=False)
class HomogenizedSystem:
    """Source channel, its homogenizing maps and the transformed channel.

    Attributes
    ----------
    map_e, map_q : IncreasingMap
        Cumulative distributions of the capacity-achieving input and of the
        induced marginal of Q.
    star_channel : Channel
        Rows ``f(q*|e*)`` on ``[0, 1] x [0, 1]``.
    capacity_bits : float
        Capacity of the source solution, or the mutual information under
        ``input`` for systems built by :func:`homogenize_input`.
    input, marginal : Density
        The input and Q marginal whose cumulative distributions were used.
    source_rows : ndarray
        Index of the source e-cell used for every e*-cell.
    support_restricted : bool
        True when the input leaves part of the e-range (cells with mass below
        the floor) without mass; those cells have no e*-image.
    excluded_e : ndarray
        Source e-cells outside the input support.
    """

    map_e: IncreasingMap
    map_q: IncreasingMap
    star_channel: Channel
    capacity_bits: float
    entropy_profile: np.ndarray = field(repr=False)
    source: Channel = field(repr=False)
    input: InputDistribution = field(repr=False)
    marginal: Density = field(repr=False)
    source_rows: np.ndarray = field(repr=False)
    support_restricted: bool = False
    excluded_e: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, int))
    solution: CapacitySolution | None = field(repr=False, default=None)

    def uniform_input(self) -> InputDistribution:
        return self.star_channel.uniform_input()

    def marginal_deviation(self) -> float:
        """Largest ``|f_Q*(q*) - 1|`` over q*-cells under uniform E*."""
        fq = self.star_channel.kernel.mean(axis=0)
        return float(np.max(np.abs(fq - 1.0)))


def build_homogenized(ch: Channel, sol: CapacitySolution, n_star: int | None = None,
                      restrict_support: bool = False, n_star_q: int | None = None,
                      mass_floor: float = MASS_FLOOR) -> HomogenizedSystem:
    """Push the channel through the cumulative maps of ``sol``.

    Row ``k`` of the star channel is the source row at
    ``e = map_e^-1(c_k)`` (``c_k`` the center of e*-cell ``k``) pushed
    through ``map_q`` onto the q*-grid.

    Parameters
    ----------
    ch : Channel
    sol : CapacitySolution
        Solution of ``ch``.
    n_star : int, optional
        Number of e*-cells; defaults to ``ch.e_grid.n``.
    restrict_support : bool
        Accept empty cells inside the support of the Q marginal.
    n_star_q : int, optional
        Number of q*-cells; defaults to ``n_star``.
    mass_floor : float
        Input cells at or below this mass are treated as outside the
        support of the input.

    Raises
    ------
    InteriorZeroRegion
        If the marginal of Q vanishes inside its support and
        ``restrict_support`` is off.
    """
    return _build(ch, sol.f_tilde_e, sol.f_tilde_q, sol.capacity_bits, n_star,
                  n_star_q, restrict_support, mass_floor, sol)


def homogenize_input(ch: Channel, fe: InputDistribution, n_star: int | None = None,
                     restrict_support: bool = False, n_star_q: int | None = None,
                     mass_floor: float = MASS_FLOOR) -> HomogenizedSystem:
    """Like :func:`build_homogenized` for an arbitrary input density.

    ``capacity_bits`` is set to the mutual information under ``fe``.  Used
    for closed-form inputs that approximate the optimum.
    """
    js = mutual_information(ch, fe)
    return _build(ch, fe, js.marginal_q, js.mutual_info, n_star, n_star_q,
                  restrict_support, mass_floor, None)


def _build(ch, fe, fq, capacity, n_star, n_star_q, restrict_support, mass_floor, sol):
    ch.check_input(fe)
    n_star = ch.e_grid.n if n_star is None else int(n_star)
    n_star_q = n_star if n_star_q is None else int(n_star_q)
    # the input may legitimately leave cells empty; they get no e*-image
    map_e = cdf_map(fe, restrict_support=True, mass_floor=mass_floor)
    map_q = cdf_map(fq, restrict_support=restrict_support)
    excluded = np.flatnonzero(fe.masses <= mass_floor)

    e_star = Grid(0.0, 1.0, n_star)
    q_star = Grid(0.0, 1.0, n_star_q)
    idx = ch.e_grid.cell_index(map_e.inverse(e_star.centers))
    # an e*-center can only land on an empty cell through rounding at an edge
    bad = fe.masses[idx] <= mass_floor
    if bad.any():
        supp = np.flatnonzero(fe.masses > mass_floor)
        near = np.searchsorted(supp, idx[bad]).clip(0, supp.size - 1)
        idx = idx.copy()
        idx[bad] = supp[near]
    rows = pushforward_rows(ch.kernel[idx], ch.q_grid, map_q, q_star)
    star = Channel(e_star, q_star, rows)
    return HomogenizedSystem(
        map_e=map_e,
        map_q=map_q,
        star_channel=star,
        capacity_bits=capacity,
        entropy_profile=cond_entropy_profile(star),
        source=ch,
        input=fe,
        marginal=fq,
        source_rows=idx,
        support_restricted=bool(excluded.size),
        excluded_e=excluded,
        solution=sol,
    )


@dataclass(frozen=True, eq=False)
class Theorem1Report:
    """Deviation of ``h(Q*|e*)`` from ``-C``.

    ``deviations`` is per e*-cell.  ``profile_e`` holds ``h(Q*|e)`` for the
    support e-cells of the source (conditioning on E itself), and
    ``path_agreement`` compares the two conditionings on matching cells.
    ``refined_max_deviation`` is the same statistic with ``n_star``
    doubled, or NaN when not computed.
    """

    profile: np.ndarray = field(repr=False)
    deviations: np.ndarray = field(repr=False)
    max_deviation: float
    profile_e: np.ndarray = field(repr=False)
    max_deviation_e: float
    path_agreement: float
    n_star: int
    refined_max_deviation: float = float("nan")

    def passes(self, tol: float) -> bool:
        return self.max_deviation <= tol


def certify_theorem1(sys: HomogenizedSystem, refine: bool = True) -> Theorem1Report:
    """Compare the star-row entropies against ``-capacity``."""
    c = sys.capacity_bits
    profile = sys.entropy_profile
    dev = profile + c
    ch = sys.source
    supp = np.setdiff1d(np.arange(ch.e_grid.n), sys.excluded_e)
    q_star = sys.star_channel.q_grid
    rows_e = pushforward_rows(ch.kernel[supp], ch.q_grid, sys.map_q, q_star)
    h_e = _row_entropies(rows_e, q_star.width)
    lookup = dict(zip(supp.tolist(), h_e))
    agree = max(abs(lookup[i] - h) for i, h in zip(sys.source_rows.tolist(), profile))
    refined = float("nan")
    if refine:
        n = sys.star_channel.e_grid.n
        finer = _build(ch, sys.input, sys.marginal, c, 2 * n, 2 * q_star.n,
                       True, MASS_FLOOR, sys.solution)
        refined = float(np.max(np.abs(finer.entropy_profile + c)))
    return Theorem1Report(
        profile=profile,
        deviations=dev,
        max_deviation=float(np.max(np.abs(dev))),
        profile_e=h_e,
        max_deviation_e=float(np.max(np.abs(h_e + c))),
        path_agreement=float(agree),
        n_star=sys.star_channel.e_grid.n,
        refined_max_deviation=refined,
    )


def _row_entropies(rows, width):
    out = np.zeros_like(rows)
    pos = rows > 0
    out[pos] = -rows[pos] * np.log2(rows[pos])
    return out.sum(axis=1) * width


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    """Mutual information before and after increasing maps of Q and E."""

    before: float
    after: float
    delta: float
    channel: Channel = field(repr=False)
    input: InputDistribution = field(repr=False)


def transform_channel(ch: Channel, fe: InputDistribution, map_q: IncreasingMap,
                      map_e: IncreasingMap, n_q: int | None = None,
                      n_e: int | None = None):
    """Joint pushforward of ``(E, Q)`` through ``(map_e, map_q)``.

    Q is pushed row by row.  E is pushed through the exact cell transport
    matrix ``T``: the new input has masses ``w @ T`` and each new row is the
    ``w``-weighted mixture of the source rows feeding it.  The new grids
    span the map ranges with ``n_e`` and ``n_q`` cells (source sizes by
    default).

    Returns
    -------
    (Channel, InputDistribution)

    Raises
    ------
    DomainMismatch
        If a map does not cover its grid.
    """
    ch.check_input(fe)
    q_new = Grid(*map_q.range, ch.q_grid.n if n_q is None else int(n_q))
    e_new = Grid(*map_e.range, ch.e_grid.n if n_e is None else int(n_e))
    rows = pushforward_rows(ch.kernel, ch.q_grid, map_q, q_new)
    t = transport_matrix(ch.e_grid, map_e, e_new)
    w = fe.masses
    wt = t.multiply(w[:, None]).tocsc()
    w_new = np.asarray(wt.sum(axis=0)).ravel()
    mix = np.asarray(wt.T @ rows)
    # cells that receive no input mass get the plain mixture of their sources
    empty = w_new <= 0
    mix[~empty] /= w_new[~empty, None]
    if empty.any():
        tc = t.tocsc()[:, empty]
        mix[empty] = np.asarray(tc.T @ rows) / np.asarray(tc.sum(axis=0)).T
    new_ch = Channel(e_new, q_new, mix)
    return new_ch, InputDistribution(e_new, w_new / e_new.width)


def mi_invariance_check(ch: Channel, fe: InputDistribution, map_q: IncreasingMap,
                        map_e: IncreasingMap, n_q: int | None = None,
                        n_e: int | None = None) -> InvarianceReport:
    """``|I(Q°;E°) - I(Q;E)|`` for ``Q° = map_q(Q)``, ``E° = map_e(E)``."""
    before = mutual_information(ch, fe).mutual_info
    new_ch, new_fe = transform_channel(ch, fe, map_q, map_e, n_q, n_e)
    after = mutual_information(new_ch, new_fe).mutual_info
    return InvarianceReport(before, after, abs(after - before), new_ch, new_fe)


def write_map_csv(m: IncreasingMap, path, names=("x", "map_x")) -> None:
    """Knot pairs of ``m``, one per row, after a header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names))
        for x, y in zip(m.x, m.y):
            w.writerow([f"{x:.12g}", f"{y:.12g}"])


def read_map_csv(path) -> IncreasingMap:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r][1:]
    return IncreasingMap([float(r[0]) for r in rows], [float(r[1]) for r in rows])
