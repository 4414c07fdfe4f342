import math

import numpy as np
import pytest

from entropy_homogenizer.channel import (Channel, InputDistribution, channel_from_function,
                                         cond_entropy_profile, gaussian_channel, marginal_q,
                                         mutual_information, read_channel_csv,
                                         reverse_quantities, uniform_rows_channel,
                                         write_channel_csv)
from entropy_homogenizer.density import Grid
from entropy_homogenizer.errors import GridMismatch, UndefinedPosterior

LOG5 = math.log2(5)


def independent(n=50):
    g = Grid(0, 1, n)
    return channel_from_function(g, g, lambda e, q: 1 + 0.5 * np.cos(3 * q))


class TestChannel:
    def test_rows_renormalized_with_correction(self):
        g = Grid(0, 1, 200)
        ch = gaussian_channel(g, g, lambda e: e, 0.05)
        np.testing.assert_allclose(ch.kernel.sum(axis=1) * g.width, 1.0, atol=1e-12)
        # edge rows lose half their Gaussian mass to truncation
        assert 0.45 < ch.row_correction < 0.5

    def test_rejects_bad_kernels(self):
        g = Grid(0, 1, 4)
        with pytest.raises(ValueError):
            Channel(g, g, np.ones((3, 4)))
        with pytest.raises(ValueError):
            Channel(g, g, -np.ones((4, 4)))
        k = np.ones((4, 4))
        k[2] = 0
        with pytest.raises(ValueError):
            Channel(g, g, k)

    def test_row_moments(self):
        g = Grid(0, 1, 1000)
        ch = uniform_rows_channel(g, g, lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0))
        np.testing.assert_allclose(ch.row_means(), 0.5, atol=1e-12)
        assert ch.row_variances()[0] == pytest.approx(1 / 48, abs=1e-12)
        assert ch.row_variances()[-1] == pytest.approx(1 / 12, abs=1e-12)

    def test_grid_mismatch(self):
        ch = independent()
        with pytest.raises(GridMismatch):
            marginal_q(ch, InputDistribution(Grid(0, 1, 49), np.ones(49)))


class TestMarginal:
    def test_identical_rows(self):
        ch = independent()
        fe = InputDistribution(ch.e_grid, np.linspace(1, 3, 50))
        np.testing.assert_allclose(marginal_q(ch, fe).heights, ch.kernel[0], rtol=1e-12)

    def test_two_form_channel(self):
        g = Grid(0, 1, 1000)
        ch = uniform_rows_channel(g, g, lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0))
        fq = marginal_q(ch, ch.uniform_input()).heights
        c = g.centers
        np.testing.assert_allclose(fq[(c > 0.25) & (c < 0.75)], 1.6, atol=1e-12)
        np.testing.assert_allclose(fq[(c < 0.25) | (c > 0.75)], 0.4, atol=1e-12)

    def test_slope_step_channel_stretches_uniformly(self):
        g = Grid(0, 1, 1000)
        sigma = 0.01
        ch = gaussian_channel(g, g, lambda e: np.where(e < 0.5, e, 0.25 + e / 2), sigma)
        fe = InputDistribution(g, np.where(g.centers < 0.5, 4 / 3, 2 / 3))
        fq = marginal_q(ch, fe).heights
        c = g.centers
        inner = (c > 5 * sigma) & (c < 0.75 - 5 * sigma)
        np.testing.assert_allclose(fq[inner], 4 / 3, atol=5 * sigma)
        assert np.all(fq[c > 0.75 + 5 * sigma] < 1e-3)


class TestEntropyProfile:
    def test_two_forms(self):
        g = Grid(0, 1, 1000)
        ch = uniform_rows_channel(g, g, lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0))
        h = cond_entropy_profile(ch)
        np.testing.assert_allclose(h[g.centers < 0.6], -1.0, atol=1e-12)
        np.testing.assert_allclose(h[g.centers >= 0.6], 0.0, atol=1e-12)

    def test_width_doubling_adds_one_bit(self):
        g = Grid(0, 1, 1000)
        q = Grid(0, 1, 8000)
        ch = gaussian_channel(g, q, lambda e: e, lambda e: np.where(e < 0.5, 0.01, 0.02))
        h = cond_entropy_profile(ch)
        assert h[750] - h[250] == pytest.approx(1.0, abs=1e-4)

    def test_constant_gaussian(self):
        sigma = 0.05
        e = Grid(0.3, 0.7, 4)
        q = Grid(0, 1, 20000)
        h = cond_entropy_profile(gaussian_channel(e, q, lambda x: x, sigma))
        expected = 0.5 * math.log2(2 * math.pi * math.e * sigma ** 2)
        np.testing.assert_allclose(h, expected, atol=1e-6)


class TestMutualInformation:
    def test_independent_is_zero(self):
        ch = independent()
        js = mutual_information(ch, ch.uniform_input())
        assert js.mutual_info == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(js.per_e_gain, 0.0, atol=1e-12)

    def test_two_form_uniform_input(self):
        g = Grid(0, 1, 1000)
        ch = uniform_rows_channel(g, g, lambda e: (0.25, 0.75) if e < 0.6 else (0.0, 1.0))
        js = mutual_information(ch, ch.uniform_input())
        assert js.mutual_info == pytest.approx(LOG5 - 2, abs=1e-12)
        assert js.h_q_given_E == pytest.approx(-0.6, abs=1e-12)
        # h(Q) of the 1.6 / 0.4 mixture, by hand
        h_q = -(0.5 * 1.6 * math.log2(1.6) + 0.5 * 0.4 * math.log2(0.4))
        assert js.h_q == pytest.approx(h_q, abs=1e-12)
        assert js.mutual_info_kl == pytest.approx(js.mutual_info, abs=1e-12)

    def test_narrower_rows_carry_more_information(self):
        g = Grid(0, 1, 400)
        values = [mutual_information(ch, ch.uniform_input()).mutual_info
                  for ch in (gaussian_channel(g, g, lambda e: e, s) for s in (0.05, 0.02, 0.01))]
        assert values[0] < values[1] < values[2]

    def test_decomposition_matches_kl_form(self, rng):
        g = Grid(0, 1, 60)
        ch = Channel(g, g, rng.uniform(0, 1, (60, 60)))
        fe = InputDistribution(g, rng.uniform(0, 1, 60))
        js = mutual_information(ch, fe)
        assert js.mutual_info == pytest.approx(js.mutual_info_kl, abs=1e-12)
        assert js.mutual_info == pytest.approx(js.h_q - js.h_q_given_E, abs=1e-12)


class TestReverse:
    def test_independent(self):
        ch = independent()
        fe = InputDistribution(ch.e_grid, np.linspace(1, 2, 50))
        rev = reverse_quantities(ch, fe)
        np.testing.assert_allclose(rev.h_e_given_q, fe.entropy(), atol=1e-12)
        np.testing.assert_allclose(rev.info_e_given_q, 0.0, atol=1e-12)

    def test_symmetry(self, rng):
        for n_e, n_q in ((30, 50), (80, 20)):
            e, q = Grid(0, 1, n_e), Grid(-1, 2, n_q)
            ch = Channel(e, q, rng.uniform(0, 1, (n_e, n_q)) ** 3)
            fe = InputDistribution(e, rng.uniform(0, 1, n_e))
            i_qe = mutual_information(ch, fe).mutual_info
            i_eq = reverse_quantities(ch, fe).mutual_info
            assert i_eq == pytest.approx(i_qe, abs=1e-8)

    def test_zero_marginal_cells(self):
        g = Grid(0, 1, 10)
        ch = uniform_rows_channel(g, g, lambda e: (0.0, 0.5))
        rev = reverse_quantities(ch, ch.uniform_input())
        np.testing.assert_array_equal(rev.excluded, np.arange(5, 10))
        assert np.all(np.isnan(rev.h_e_given_q[5:]))
        assert np.all(np.isfinite(rev.h_e_given_q[:5]))
        assert rev.mutual_info == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(UndefinedPosterior) as info:
            reverse_quantities(ch, ch.uniform_input(), strict=True)
        assert info.value.cells == list(range(5, 10))


def test_csv_round_trip(tmp_path):
    e, q = Grid(0, 1, 7), Grid(-2, 3, 11)
    ch = gaussian_channel(e, q, lambda x: 2 * x, 0.7)
    path = tmp_path / "ch.csv"
    write_channel_csv(ch, path)
    back = read_channel_csv(path)
    assert back.e_grid.n == 7 and back.q_grid.n == 11
    assert back.q_grid.lo == pytest.approx(-2) and back.q_grid.hi == pytest.approx(3)
    np.testing.assert_allclose(back.kernel, ch.kernel, rtol=1e-10)
    assert path.read_text().splitlines()[0].startswith("e\\q,")


def test_csv_rejects_ragged(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("e\\q,0.25,0.75\n0.25,1,1\n0.75,1\n")
    with pytest.raises(ValueError):
        read_channel_csv(path)
