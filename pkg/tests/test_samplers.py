import itertools
import math

import numpy as np
import pytest
from scipy import stats

from manipbench import samplers as S
from manipbench.elections import induced_profile
from manipbench.engine import ranking_indices, rankings_from_utilities


class TestRandomStream:
    def test_determinism(self):
        a = S.sample_batch(S.ProbModel.uniform(), 4, 7, 3, S.make_rng(99))
        b = S.sample_batch(S.ProbModel.uniform(), 4, 7, 3, S.make_rng(99))
        assert np.array_equal(a, b)

    def test_derived_streams_differ(self):
        s = S.RandomStream(5)
        a = s.derive(0).uniform(size=4)
        b = s.derive(1).uniform(size=4)
        assert not np.array_equal(a, b)

    def test_single_equals_batch_of_one(self):
        u1 = S.sample_uniform(5, 3, S.make_rng(17))
        u2 = S.sample_uniform_batch(1, 5, 3, S.make_rng(17))[0]
        assert np.array_equal(u1.rows, u2)

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError):
            S.RandomStream(0, algorithm="mt19937")


class TestUniform:
    def test_support_and_mean(self):
        u = S.sample_uniform_batch(500, 10, 3, S.make_rng(1))
        assert u.min() >= 0.0 and u.max() <= 1.0
        assert abs(u.mean() - 0.5) < 0.02

    def test_induced_rankings_equidistributed(self):
        u = S.sample_uniform_batch(1, 60000, 3, S.make_rng(2))
        idx = ranking_indices(rankings_from_utilities(u)[0])
        freq = np.bincount(idx, minlength=6) / 60000
        assert np.all(np.abs(freq - 1 / 6) < 0.02)

    def test_rows_distinct(self):
        u = S.sample_uniform_batch(200, 8, 6, S.make_rng(3))
        assert not S._rows_have_duplicates(u).any()


class TestSpatial2D:
    def test_all_nonpositive(self):
        u = S.sample_spatial2d_batch(100, 5, 4, S.make_rng(4))
        assert (u <= 0).all()

    def test_expected_squared_distance(self):
        # difference of two independent standard bivariate normals has
        # coordinate variance 2, so E||v - c||^2 = 4
        u = S.sample_spatial2d_batch(10000, 1, 1, S.make_rng(5))
        assert abs(-u.mean() - 4.0) < 0.1

    def test_duplicate_rate_negligible(self):
        draws = S.sample_spatial2d_batch(300, 6, 5, S.make_rng(6))
        assert not S._rows_have_duplicates(draws).any()


def mallows_exact_distance(phi: float, m: int) -> float:
    """Brute-force expected Kendall distance over all m! permutations."""
    ref = tuple(range(m))
    total = weight_sum = 0.0
    for perm in itertools.permutations(ref):
        d = S.kendall_tau_distance(perm, ref)
        w = phi**d
        total += d * w
        weight_sum += w
    return total / weight_sum


class TestMallows:
    def test_phi_one_uniform(self):
        u = S.sample_mallows_batch(1, 60000, 3, 1.0, S.make_rng(7))
        idx = ranking_indices(rankings_from_utilities(u)[0])
        counts = np.bincount(idx, minlength=6)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_rel_phi_to_zero_gives_reference(self):
        u = S.sample_mallows_batch(1, 500, 4, 1e-12, S.make_rng(8))
        orders = rankings_from_utilities(u)[0]
        assert (orders == np.arange(4)).all()

    def test_mean_kendall_distance_phi_one(self):
        u = S.sample_mallows_batch(1, 40000, 3, 1.0, S.make_rng(9))
        orders = rankings_from_utilities(u)[0]
        d = np.array([S.kendall_tau_distance(tuple(o), (0, 1, 2)) for o in orders])
        assert abs(d.mean() - 1.5) < 0.02

    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    def test_normalization_solves_distance_equation(self, m):
        phi = S.phi_from_rel_phi(0.8, m)
        target = 0.8 * m * (m - 1) / 4
        assert abs(S.expected_kendall_distance(phi, m) - target) < 1e-9

    @pytest.mark.parametrize("m,phi", [(3, 0.5), (4, 0.8), (5, 0.3)])
    def test_closed_form_matches_enumeration(self, m, phi):
        assert abs(S.expected_kendall_distance(phi, m) - mallows_exact_distance(phi, m)) < 1e-12

    def test_sampler_distribution_matches_mallows_weights(self):
        # sampled frequencies should match phi**distance weights
        m, rel_phi, count = 3, 0.8, 60000
        phi = S.phi_from_rel_phi(rel_phi, m)
        u = S.sample_mallows_batch(1, count, m, rel_phi, S.make_rng(10))
        idx = ranking_indices(rankings_from_utilities(u)[0])
        counts = np.bincount(idx, minlength=6)
        weights = np.array(
            [phi ** S.kendall_tau_distance(p, (0, 1, 2)) for p in itertools.permutations(range(3))]
        )
        expected = count * weights / weights.sum()
        assert stats.chisquare(counts, expected).pvalue > 0.01

    def test_utilities_rank_consistent(self):
        u = S.sample_mallows_batch(30, 9, 5, 0.8, S.make_rng(11))
        orders = rankings_from_utilities(u)
        sorted_desc = -np.sort(-u, axis=-1)
        picked = np.take_along_axis(u, orders.astype(np.int64), axis=-1)
        assert np.array_equal(picked, sorted_desc)

    def test_rejects_bad_rel_phi(self):
        with pytest.raises(ValueError):
            S.sample_mallows(5, 3, 0.0, S.make_rng(0))
        with pytest.raises(ValueError):
            S.ProbModel.mallows(1.5)


class TestInducedConsistency:
    def test_induced_profile_of_sample_is_valid(self):
        for model in (S.ProbModel.uniform(), S.ProbModel.spatial2d(), S.ProbModel.mallows()):
            up = S.sample_profile_utilities(model, 6, 4, S.make_rng(12))
            p = induced_profile(up)
            assert p.n == 6 and p.m == 4


def test_model_codes_and_parse():
    assert int(S.ModelKind.UNIFORM) == 0
    assert int(S.ModelKind.SPATIAL2D) == 1
    assert int(S.ModelKind.MALLOWS) == 2
    assert S.ProbModel.parse("mallows:0.5").rel_phi == 0.5
    assert S.ProbModel.parse("mallows").rel_phi == 0.8
    assert S.ProbModel.parse("spatial2d").kind == S.ModelKind.SPATIAL2D
    with pytest.raises(ValueError):
        S.ProbModel.parse("urn")
