import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entropy_homogenizer.density import (Density, Grid, IncreasingMap, cdf_map, entropy, mean,
                                         pushforward, pushforward_rows, transport_matrix,
                                         variance)
from entropy_homogenizer.errors import DomainMismatch, InteriorZeroRegion

LOG5 = math.log2(5)


class TestGrid:
    def test_geometry(self):
        g = Grid(-1.0, 3.0, 8)
        assert g.width == 0.5
        np.testing.assert_allclose(np.diff(g.edges), 0.5)
        assert g.centers[0] == -0.75
        assert g.edges[-1] == 3.0

    @pytest.mark.parametrize("lo,hi,n", [(0, 0, 4), (1, 0, 4), (0, 1, 1), (0, 1, 2.5)])
    def test_rejects_bad_grids(self, lo, hi, n):
        with pytest.raises(ValueError):
            Grid(lo, hi, n)

    def test_cell_index_clips(self):
        g = Grid(0, 1, 10)
        np.testing.assert_array_equal(g.cell_index([-1, 0, 0.05, 0.999, 1, 2]), [0, 0, 0, 9, 9, 9])


class TestDensity:
    def test_normalizes(self):
        d = Density(Grid(0, 2, 4), [1, 1, 1, 1])
        assert d.masses.sum() == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(d.heights, 0.5)

    @pytest.mark.parametrize("h", [[1, -1, 1, 1], [0, 0, 0, 0], [1, np.nan, 1, 1]])
    def test_rejects_invalid(self, h):
        with pytest.raises(ValueError):
            Density(Grid(0, 1, 4), h)

    def test_heights_are_read_only(self):
        d = Density(Grid(0, 1, 4), [1, 2, 3, 4])
        with pytest.raises(ValueError):
            d.heights[0] = 5.0


class TestEntropy:
    @pytest.mark.parametrize("n", [2, 7, 1000])
    def test_uniform_unit_interval_is_zero(self, n):
        assert entropy(Density.uniform(Grid(0, 1, n))) == pytest.approx(0.0, abs=1e-14)

    def test_uniform_quarter_interval(self):
        d = Density.uniform(Grid(0, 1, 1000), 0.25, 0.75)
        assert d.entropy() == pytest.approx(-1.0, abs=1e-12)

    def test_transformed_form_value(self):
        # height 5/4 on [0.1, 0.9]
        d = Density.uniform(Grid(0, 1, 1000), 0.1, 0.9)
        assert np.allclose(d.heights[100:900], 1.25)
        assert d.entropy() == pytest.approx(2 - LOG5, abs=1e-12)

    def test_is_not_the_discrete_entropy(self):
        d = Density.uniform(Grid(0, 1, 64))
        discrete = -np.sum(d.masses * np.log2(d.masses))
        assert discrete - entropy(d) == pytest.approx(-math.log2(d.grid.width))


class TestMoments:
    def test_uniform(self):
        d = Density.uniform(Grid(0, 1, 10))
        assert mean(d) == pytest.approx(0.5)
        assert variance(d) == pytest.approx(1 / 12, abs=1e-15)

    def test_narrow_form_mean(self):
        d = Density.uniform(Grid(0, 1, 1000), 0.25, 0.75)
        assert d.mean() == pytest.approx(0.5)

    def test_wide_form_has_four_times_the_variance(self):
        g = Grid(0, 1, 1000)
        narrow = Density.uniform(g, 0.25, 0.75)
        wide = Density.uniform(g)
        assert wide.variance() == pytest.approx(4 * narrow.variance(), rel=1e-12)


class TestIncreasingMap:
    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            IncreasingMap([0, 1, 1], [0, 1, 2])
        with pytest.raises(ValueError):
            IncreasingMap([0, 1, 2], [0, 1, 1])

    def test_round_trip(self, rng):
        m = IncreasingMap.from_function(lambda x: np.exp(3 * x) + x, 0, 1, 37)
        x = rng.uniform(0, 1, 1000)
        np.testing.assert_allclose(m.inverse(m(x)), x, atol=1e-12)
        y = rng.uniform(*m.range, 1000)
        np.testing.assert_allclose(m(m.inverse(y)), y, atol=1e-12)

    def test_domain_check(self):
        m = IncreasingMap.identity(0, 1)
        with pytest.raises(DomainMismatch):
            m(1.5)
        with pytest.raises(DomainMismatch):
            m.inverse(-0.1)

    def test_derivative_and_inverted(self):
        m = IncreasingMap([0, 1, 2], [0, 2, 3])
        np.testing.assert_allclose(m.derivative([0.5, 1.5]), [2, 1])
        assert m.inverted()(2.5) == pytest.approx(1.5)


class TestCdfMap:
    def test_uniform_gives_identity(self):
        m = cdf_map(Density.uniform(Grid(0, 1, 50)))
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(m(x), x, atol=1e-14)

    def test_two_step_input(self):
        g = Grid(0, 1, 100)
        d = Density(g, np.where(g.centers < 0.5, 4 / 3, 2 / 3))
        assert cdf_map(d)(0.5) == pytest.approx(2 / 3, abs=1e-14)

    def test_three_band_marginal(self):
        g = Grid(0, 1, 1000)
        c = g.centers
        d = Density(g, np.where((c > 0.25) & (c < 0.75), 1.6, 0.4))
        m = cdf_map(d)
        assert m(0.25) == pytest.approx(0.1, abs=1e-12)
        assert m(0.75) == pytest.approx(0.9, abs=1e-12)
        assert m.range == (0.0, 1.0)

    def test_restricts_to_support(self):
        d = Density.uniform(Grid(0, 1, 20), 0.25, 0.75)
        m = cdf_map(d)
        assert m.domain == pytest.approx((0.25, 0.75))

    def test_interior_zero_region(self):
        d = Density(Grid(0, 1, 5), [1, 1, 0, 1, 1])
        with pytest.raises(InteriorZeroRegion) as info:
            cdf_map(d)
        assert info.value.cells == [2]
        m = cdf_map(d, restrict_support=True)
        assert m(0.4) == pytest.approx(0.5, abs=1e-8)
        assert m(0.6) == pytest.approx(0.5, abs=1e-8)

    def test_mass_floor_treats_tiny_cells_as_empty(self):
        d = Density(Grid(0, 1, 4), [1e-20, 1, 1, 1e-20])
        assert cdf_map(d, mass_floor=1e-15).domain == pytest.approx((0.25, 0.75))


class TestPushforward:
    def test_identity(self):
        g = Grid(0, 1, 10)
        d = Density(g, np.arange(1, 11))
        out = pushforward(d, IncreasingMap.identity(0, 1), g)
        np.testing.assert_allclose(out.heights, d.heights, atol=1e-14)

    def test_own_cdf_uniformizes(self):
        g = Grid(0, 1, 40)
        d = Density.uniform(g)
        out = pushforward(d, cdf_map(d), g)
        np.testing.assert_allclose(out.heights, 1.0, atol=1e-12)

    def test_narrow_form_through_marginal_cdf(self):
        g = Grid(0, 1, 1000)
        c = g.centers
        fq = Density(g, np.where((c > 0.25) & (c < 0.75), 1.6, 0.4))
        out = pushforward(Density.uniform(g, 0.25, 0.75), cdf_map(fq), g)
        np.testing.assert_allclose(out.heights[100:900], 1.25, atol=1e-9)
        np.testing.assert_allclose(out.heights[:100], 0.0, atol=1e-9)
        np.testing.assert_allclose(out.heights[900:], 0.0, atol=1e-9)

    @pytest.mark.parametrize("n_out", [7, 50, 333])
    def test_own_cdf_uniformizes_on_any_grid(self, n_out):
        # the CDF is exactly piecewise linear, so the image is exactly uniform
        g = Grid(0, 1, 100)
        d = Density.from_function(g, lambda x: 1 + 0.8 * np.sin(6 * x))
        out = pushforward(d, cdf_map(d), Grid(0, 1, n_out))
        np.testing.assert_allclose(out.heights, 1.0, atol=1e-12)

    @pytest.mark.parametrize("slope", [0.25, 2.0, 3.0])
    def test_affine_entropy_shift(self, slope):
        g = Grid(0, 1, 64)
        d = Density.from_function(g, lambda x: 1 + x)
        out_grid = Grid(1.0, 1.0 + slope, 64)
        out = pushforward(d, IncreasingMap.affine(0, 1, slope, 1.0), out_grid)
        assert out.entropy() == pytest.approx(d.entropy() + math.log2(slope), abs=1e-12)

    def test_entropy_shift_smooth_map(self):
        # h(m(X)) = h(X) + E log2 m'(X), up to discretization
        fn = lambda x: x + 0.5 * x ** 2
        for n, tol in ((200, 2e-3), (800, 5e-4)):
            g = Grid(0, 1, n)
            d = Density.from_function(g, lambda x: 2 - x)
            m = IncreasingMap.from_function(fn, 0, 1, n)
            out = pushforward(d, m, Grid(0, 1.5, n))
            expected = d.entropy() + np.dot(d.masses, np.log2(1 + g.centers))
            assert abs(out.entropy() - expected) < tol

    def test_domain_mismatch(self):
        d = Density.uniform(Grid(0, 2, 10))
        with pytest.raises(DomainMismatch):
            pushforward(d, IncreasingMap.identity(0, 1), Grid(0, 2, 10))
        m = IncreasingMap.affine(0, 2, 2.0)
        with pytest.raises(DomainMismatch):
            pushforward(d, m, Grid(0, 2, 10))

    def test_rows_and_matrix_agree(self, rng):
        g = Grid(0, 1, 30)
        out = Grid(0, 4, 17)
        m = IncreasingMap.from_function(lambda x: 4 * x ** 2, 0, 1, 9)
        h = rng.uniform(0, 1, (5, 30))
        rows = pushforward_rows(h, g, m, out)
        via = (h * g.width) @ transport_matrix(g, m, out).toarray() / out.width
        np.testing.assert_allclose(rows, via, atol=1e-13)
        np.testing.assert_allclose(rows.sum(axis=1) * out.width, h.sum(axis=1) * g.width)


@st.composite
def density_and_map(draw):
    n = draw(st.integers(2, 60))
    heights = draw(st.lists(st.floats(0, 10), min_size=n, max_size=n))
    if sum(heights) == 0:
        heights[0] = 1.0
    k = draw(st.integers(2, 30))
    steps = draw(st.lists(st.floats(1e-3, 100), min_size=k - 1, max_size=k - 1))
    y = np.concatenate([[0.0], np.cumsum(steps)])
    x = np.linspace(0, 1, k)
    n_out = draw(st.integers(2, 80))
    return Density(Grid(0, 1, n), heights), IncreasingMap(x, y), n_out


@settings(max_examples=200, deadline=None)
@given(density_and_map())
def test_pushforward_conserves_mass(args):
    d, m, n_out = args
    out = Grid(*m.range, n_out)
    raw = pushforward_rows(d.heights[None], d.grid, m, out).sum() * out.width
    assert abs(raw - 1.0) <= 1e-12
