"""
Capacity of a discretized channel.

With cell weights ``w`` the marginal is ``f_Q = sum_i w_i f(.|e_i)`` and
``D_i = D(f(.|e_i) || f_Q)``.  The mutual information is ``sum_i w_i D_i``
and ``max_i D_i`` bounds the capacity from above, so the iteration stops as
soon as the two bounds are within ``tol``.  At the optimum every e-cell that
carries mass has ``D_i = C`` and the rest have ``D_i <= C``.

The fixed-point (Blahut-Arimoto) iteration is exact but converges slowly on
smooth channels, where many cells carry mass; an interior-point phase takes
over from its iterate to certify those conditions to tight tolerances.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import Channel, InputDistribution, cond_entropy_profile, row_divergences
from .density import Density
from .errors import NotConverged

MASS_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class CapacitySolution:
    """Capacity-achieving input found by :func:`solve_capacity`.

    ``divergences`` holds ``D_i`` per e-cell and ``kkt_residuals`` holds
    ``D_i - capacity_bits``.  ``history`` is the lower bound after every
    iteration.
    """

    f_tilde_e: InputDistribution
    f_tilde_q: Density
    capacity_bits: float
    divergences: np.ndarray = field(repr=False)
    kkt_residuals: np.ndarray = field(repr=False)
    lower_bound_bits: float
    upper_bound_bits: float
    iterations: int
    converged: bool
    history: np.ndarray = field(repr=False)

    @property
    def gap(self) -> float:
        return self.upper_bound_bits - self.lower_bound_bits



def _certified(d, w, tol, mass_floor):
    """Bound gap and support residual both within ``tol`` (bits)."""
    c = float(np.dot(w, d))
    supp = w > mass_floor
    return d.max() - c <= tol and np.max(np.abs(d[supp] - c)) <= tol


def _interior_point(ch, w, h_rows, tol, mass_floor, max_steps=200):
    """Primal-dual interior-point refinement on the simplex, from ``w``.

    Solves ``D_i - nu + lam_i = 0``, ``sum w = 1``, ``w_i lam_i = mu`` for a
    shrinking ``mu`` (``D`` in nats; ``lam_i`` is the deficit ``C - D_i``).
    Newton systems are scaled by ``diag(w)`` and restricted to cells whose
    mass is not negligible; the remaining cells only feel their diagonal
    term.  Stops as soon as the bound gap and the support residuals are
    certified below ``tol`` bits.
    """
    ln2 = np.log(2.0)
    cols = ch.kernel.max(axis=0) > 0
    k = ch.kernel[:, cols]
    dq = ch.q_grid.width
    w = np.maximum(w, 1e-300)
    w /= w.sum()
    d = row_divergences(ch, w @ ch.kernel, h_rows)
    nu = float(d.max()) * ln2
    lam = np.maximum(nu - d * ln2, 1e-3 * (nu - np.dot(w, d) * ln2) + 1e-300)
    steps = 0
    while steps < max_steps:
        fq = w @ k
        d_bits = row_divergences(ch, w @ ch.kernel, h_rows)
        if _certified(d_bits, w, tol, mass_floor):
            break
        d = d_bits * ln2
        r_d = d - nu + lam
        act = w > 1e-14 * w.max()
        off = ~act
        kw = k[act] * (w[act, None] * np.sqrt(dq / fq)[None, :])
        m = kw @ kw.T
        m[np.diag_indices_from(m)] += w[act] * lam[act]
        try:
            factor = cho_factor(m)
        except np.linalg.LinAlgError:
            m[np.diag_indices_from(m)] += 1e-12 * np.trace(m) / m.shape[0]
            factor = cho_factor(m)
        z2 = np.zeros_like(w)
        z2[act] = cho_solve(factor, w[act])
        z2[off] = 1.0 / lam[off]

        def direction(r_c):
            rhs = w * r_d + r_c
            z1 = np.zeros_like(w)
            z1[act] = cho_solve(factor, rhs[act])
            z1[off] = rhs[off] / (w[off] * lam[off])
            sdir = z1 - (np.dot(w, z1) / np.dot(w, z2)) * z2
            dnu = np.dot(w, z1) / np.dot(w, z2)
            return sdir, dnu, r_c / w - lam * sdir

        def step_length(sdir, dlam):
            alpha = 1.0
            if np.any(sdir < 0):
                alpha = min(alpha, 1.0 / float(np.max(-sdir)))
            neg = dlam < 0
            if neg.any():
                alpha = min(alpha, float(np.min(-lam[neg] / dlam[neg])))
            return alpha

        # predictor (pure Newton) then Mehrotra corrector
        mu = float(np.dot(w, lam)) / w.size
        s_aff, _, l_aff = direction(-w * lam)
        a_aff = step_length(s_aff, l_aff)
        mu_aff = float(np.dot(w * (1 + a_aff * s_aff), lam + a_aff * l_aff)) / w.size
        sigma = min(1.0, (mu_aff / mu) ** 3)
        sdir, dnu, dlam = direction(sigma * mu - w * lam - (w * s_aff) * l_aff)
        alpha = min(1.0, 0.99 * step_length(sdir, dlam))
        w = w * (1.0 + alpha * sdir)
        w = np.maximum(w, 1e-300)
        w /= w.sum()
        lam = lam + alpha * dlam
        nu = nu + alpha * dnu
        steps += 1
    return w, steps


def solve_capacity(ch: Channel, tol: float = 1e-6, max_iter: int = 100_000,
                   init: Density | None = None, polish: bool = True,
                   ba_iter: int = 500, mass_floor: float = MASS_FLOOR) -> CapacitySolution:
    """Maximize I(Q;E) over input weights on the channel's e-cells.

    Blahut-Arimoto updates ``w_i <- w_i 2^{D_i} / sum(w 2^D)`` run until the
    bound gap ``max_i D_i - sum_i w_i D_i`` is below ``tol``.  On smooth
    channels that takes very long, so by default after ``ba_iter`` updates
    the iterate is handed to a primal-dual interior-point phase that stops
    once the gap and the stationarity residuals on every cell with mass
    above ``mass_floor`` are below ``tol``.

    Parameters
    ----------
    ch : Channel
    tol : float
        Target bound gap in bits.
    max_iter : int
        Total budget of updates over both phases.
    init : Density, optional
        Starting input; uniform by default.
    polish : bool
        Enable the interior-point phase.
    ba_iter : int
        Blahut-Arimoto updates before switching phases.
    mass_floor : float
        Cells below this mass count as off-support in the Newton stopping
        rule.

    Raises
    ------
    NotConverged
        If the bound gap is still above ``tol`` at exit; the exception
        carries the final iterate.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if init is None:
        w = np.full(ch.e_grid.n, 1.0 / ch.e_grid.n)
    else:
        ch.check_input(init)
        w = init.masses.copy()
    h_rows = cond_entropy_profile(ch)
    budget = min(max_iter, ba_iter) if polish else max_iter
    history = []
    it = 0
    while True:
        fq = w @ ch.kernel
        d = row_divergences(ch, fq, h_rows)
        pos = w > 0
        lower = float(np.dot(w[pos], d[pos]))
        upper = float(np.max(d))
        history.append(lower)
        if upper - lower <= tol or it >= budget:
            break
        w = w * np.exp2(d - upper)
        w /= w.sum()
        it += 1

    steps = 0
    if polish and not _certified(d, w, tol, mass_floor):
        w, steps = _interior_point(ch, w, h_rows, tol, mass_floor,
                                   max_steps=min(200, max_iter - it))
        fq = w @ ch.kernel
        d = row_divergences(ch, fq, h_rows)
        lower = float(np.dot(w, d))
        upper = float(np.max(d))

    sol = CapacitySolution(
        f_tilde_e=InputDistribution(ch.e_grid, w / ch.e_grid.width),
        f_tilde_q=Density(ch.q_grid, fq),
        capacity_bits=lower,
        divergences=d,
        kkt_residuals=d - lower,
        lower_bound_bits=lower,
        upper_bound_bits=upper,
        iterations=it + steps,
        converged=upper - lower <= tol and (not polish or _certified(d, w, tol, mass_floor)),
        history=np.array(history),
    )
    if not sol.converged:
        raise NotConverged(sol, upper - lower, it + steps)
    return sol


@dataclass(frozen=True, eq=False)
class StationarityReport:
    """Residuals of the maximization condition for a candidate input.

    ``residuals[i] = -sum_j f(q_j|e_i) log2 f_Q(q_j) dq - h(Q|e_i) - C``.
    On support cells (mass above ``mass_floor``) they should vanish; off the
    support they should be nonpositive.
    """

    residuals: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)
    max_abs_on_support: float
    max_pos_off_support: float

    def passes(self, tol: float) -> bool:
        return self.max_abs_on_support <= tol and self.max_pos_off_support <= tol


def verify_stationarity(ch: Channel, sol: CapacitySolution,
                        mass_floor: float = MASS_FLOOR) -> StationarityReport:
    fe = sol.f_tilde_e
    ch.check_input(fe)
    fq = fe.masses @ ch.kernel
    h_rows = cond_entropy_profile(ch)
    cross = -(ch.kernel @ np.log2(np.where(fq > 0, fq, 1.0))) * ch.q_grid.width
    res = cross - h_rows - sol.capacity_bits
    support = fe.masses > mass_floor
    on = float(np.max(np.abs(res[support]))) if support.any() else 0.0
    off = float(np.max(res[~support], initial=-np.inf))
    return StationarityReport(
        residuals=res,
        support=support,
        max_abs_on_support=on,
        max_pos_off_support=max(off, 0.0),
    )
