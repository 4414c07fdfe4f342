import csv

import numpy as np
import pytest

from entropy_homogenizer import casebook
from entropy_homogenizer.casebook import (RESULT_HEADER, CheckResult, get_case,
                                          invariance_experiment, random_increasing_map,
                                          run_case, smooth_gaussian_channel,
                                          variance_difference,
                                          variance_impossibility_experiment, write_results_csv)
from entropy_homogenizer.density import IncreasingMap


def failures(results):
    return [(r.quantity, r.actual, r.expected, r.tolerance) for r in results if not r.passed]


class TestRegistry:
    def test_names(self):
        assert set(casebook.CASES) == {"fig1", "fig2", "fig3", "gauss", "independent"}

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_case("nope")

    def test_sigma_override(self):
        assert get_case("fig1", 0.005).params == {"sigma0": 0.005}
        assert get_case("fig3", 0.005).params == {}

    def test_grid_alignment(self):
        spec = get_case("fig3")
        assert spec.grid_sizes(1001, 999) == (1020, 1000, 1010)
        assert spec.grid_sizes(1001, 999, align=False) == (1001, 999, 1001)

    def test_provenance_labels(self):
        labels = {ex.provenance for name in casebook.CASES for ex in get_case(name).expectations}
        assert labels <= {"PUBLISHED", "DERIVED", "TRIVIAL"}


class TestCases:
    def test_two_form_case(self):
        results = run_case(get_case("fig3"), n_e=200, n_q=200)
        assert len(results) == 20
        assert not failures(results)

    def test_independent_case(self):
        assert not failures(run_case(get_case("independent"), n_e=100, n_q=100))

    @pytest.mark.parametrize("name", ["fig1", "fig2", "gauss"])
    def test_smooth_cases(self, run_case, name):
        assert not failures(run_case(name, 0.01).check())

    def test_fig2_at_half_width(self, run_case):
        coarse = run_case("fig2", 0.01).check()
        fine = run_case("fig2", 0.005).check()
        assert not failures(fine)
        tol = {r.quantity: r.tolerance for r in coarse}
        for r in fine:
            if r.quantity.startswith(("map_q", "f_q", "corollary3")):
                assert r.tolerance == pytest.approx(tol[r.quantity] / 2)

    def test_misaligned_two_form_grid_fails(self):
        results = run_case(get_case("fig3"), n_e=201, n_q=203, align=False)
        assert failures(results)


class TestResultsCsv:
    def test_format_and_order(self, tmp_path):
        rows = [CheckResult("b", "x", 1.0, 1.0, 0.1, True, "PUBLISHED"),
                CheckResult("a", "y", 0.5, 2.0, 1e-9, False, "DERIVED"),
                CheckResult("a", "z", 1 / 3, 1 / 3, 0.0, True, "DERIVED")]
        path = tmp_path / "results.csv"
        write_results_csv(rows, path)
        with open(path, newline="") as fh:
            read = list(csv.reader(fh))
        assert read[0] == RESULT_HEADER
        assert [r[:2] for r in read[1:]] == [["a", "y"], ["a", "z"], ["b", "x"]]
        assert read[1][5] == "false" and read[3][5] == "true"
        assert float(read[2][2]) == pytest.approx(1 / 3, abs=1e-12)


class TestVarianceExperiment:
    def test_identity(self):
        assert variance_difference(IncreasingMap.identity(0, 1)) == pytest.approx(1 / 16,
                                                                                  abs=1e-15)

    @pytest.mark.parametrize("a", [0.1, 1.0, 7.0])
    def test_affine_scales_quadratically(self, a):
        g = IncreasingMap.affine(0, 1, a, 3.0)
        assert variance_difference(g) == pytest.approx(a * a / 16, rel=1e-12)

    def test_random_maps_are_increasing(self, rng):
        for kind in range(30):
            m = random_increasing_map(rng, kind)
            assert m.domain == (0.0, 1.0)
            assert np.all(np.diff(m.y) > 0)

    def test_small_run_positive(self):
        rep = variance_impossibility_experiment(300, seed=7)
        assert rep.passed
        assert rep.min_difference > 0
        assert rep.differences.size == 300
        assert rep.identity_difference == pytest.approx(0.0625)

    def test_seeded(self):
        a = variance_impossibility_experiment(50, seed=3)
        b = variance_impossibility_experiment(50, seed=3)
        np.testing.assert_array_equal(a.differences, b.differences)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            variance_impossibility_experiment(0)


def test_invariance_experiment_small():
    rep = invariance_experiment(n=256, n_pairs=4, seed=1)
    assert rep.deltas.size == 4
    assert rep.worst < 0.05
    assert rep.before > 0
    ch = smooth_gaussian_channel(256)
    assert ch.e_grid.n == 256
