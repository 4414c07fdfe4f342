"""Exception types raised across the package."""


class HomogenizerError(Exception):
    """Base class for all package errors."""


class InteriorZeroRegion(HomogenizerError):
    """A density vanishes on cells strictly inside its support.

    The cumulative distribution is then flat there and cannot be inverted.
    """

    def __init__(self, cells):
        self.cells = list(cells)
        super().__init__(
            f"density has {len(self.cells)} zero-height cell(s) inside its "
            f"support (first at index {self.cells[0]}); pass "
            "restrict_support=True to accept this"
        )


class DomainMismatch(HomogenizerError):
    """The support of a density leaves the domain of a map or output grid."""


class GridMismatch(HomogenizerError):
    """Two objects that must share a grid do not."""


class UndefinedPosterior(HomogenizerError):
    """The posterior of E is requested at a q-cell with zero marginal."""

    def __init__(self, cells):
        self.cells = list(cells)
        super().__init__(f"zero marginal density at {len(self.cells)} q-cell(s)")


class NonPositiveSlope(HomogenizerError):
    """The conditional mean m(e) is not strictly increasing."""


class NotConverged(HomogenizerError):
    """The capacity iteration hit ``max_iter`` before the bound gap closed.

    Attributes
    ----------
    solution : CapacitySolution
        Best iterate found.
    gap : float
        Upper minus lower capacity bound at exit, in bits.
    """

    def __init__(self, solution, gap, max_iter):
        self.solution = solution
        self.gap = gap
        self.max_iter = max_iter
        super().__init__(
            f"capacity iteration not converged after {max_iter} iterations "
            f"(bound gap {gap:.3e} bits)"
        )
