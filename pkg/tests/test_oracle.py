import math

import numpy as np
import pytest

from manipbench import elections as E
from manipbench import engine as G
from manipbench import oracle as O
from manipbench.information import InfoType, feature_length
from manipbench.voting_methods import MethodId, apply_method, lottery_eu

from conftest import random_utilities


def brute_force_eus(method, u, voter):
    """Independent oracle: literal replace-ballot loop over all rankings."""
    profile = E.induced_profile(u)
    eus = []
    for k in range(math.factorial(u.m)):
        p2 = E.replace_ballot(profile, voter, E.Ranking.from_index(u.m, k))
        eus.append(lottery_eu(apply_method(method, p2), u.row(voter)))
    return np.array(eus)


TIE4_EXPECTED = [0.75, 1.0, 0.5, 0.5, 0.75, 0.5]


class TestResponseEus:
    def test_tie4_worked_example(self):
        eus = O.response_eus(MethodId.BORDA, E.utilities_tie4(), 0)
        assert np.allclose(eus, TIE4_EXPECTED)

    def test_sincere_entry_matches(self):
        u = E.utilities_tie4()
        eus = O.response_eus(MethodId.BORDA, u, 0)
        assert eus[E.Ranking((0, 1, 2)).index] == O.sincere_eu(MethodId.BORDA, u, 0)

    def test_non_pivotal_instance_all_equal(self):
        # nine other voters unanimous: one ballot cannot change any winner
        rows = [[0.1, 0.9, 0.5]] + [[1.0, 0.5, 0.0]] * 9
        u = E.UtilityProfile(rows)
        for method in MethodId:
            eus = O.response_eus(method, u, 0)
            assert np.allclose(eus, eus[0])

    @pytest.mark.parametrize("method", list(MethodId))
    def test_matches_brute_force(self, method, rng):
        for _ in range(6):
            u = random_utilities(rng, int(rng.integers(2, 8)), int(rng.integers(2, 5)))
            voter = int(rng.integers(0, u.n))
            assert np.allclose(
                O.response_eus(method, u, voter), brute_force_eus(method, u, voter)
            )


class TestLabels:
    def test_tie4_optimizing(self):
        mask = O.optimizing_labels(MethodId.BORDA, E.utilities_tie4(), 0)
        assert mask.tolist() == [False, True, False, False, False, False]

    def test_tie4_satisficing_single_profitable(self):
        mask = O.satisficing_labels(MethodId.BORDA, E.utilities_tie4(), 0)
        assert mask.tolist() == [False, True, False, False, False, False]

    def test_non_pivotal_all_bits(self):
        rows = [[0.1, 0.9, 0.5]] + [[1.0, 0.5, 0.0]] * 9
        u = E.UtilityProfile(rows)
        assert O.optimizing_labels(MethodId.BORDA, u, 0).all()
        assert O.satisficing_labels(MethodId.BORDA, u, 0).all()

    def test_satisficing_no_profit_keeps_nonlosing(self):
        eus = np.array([0.5, 0.5, 0.3, 0.5, 0.2, 0.5])
        mask = O.satisficing_mask(eus, np.float64(0.5))
        assert mask.tolist() == [True, True, False, True, False, True]

    def test_satisficing_profit_only_profitable(self):
        eus = np.array([0.5, 0.9, 0.3, 0.5, 0.2, 0.9])
        mask = O.satisficing_mask(eus, np.float64(0.5))
        assert mask.tolist() == [False, True, False, False, False, True]

    def test_masks_nonempty_random(self, rng):
        for _ in range(40):
            u = random_utilities(rng, 5, 3)
            method = MethodId(int(rng.integers(0, 9)))
            assert O.optimizing_labels(method, u, 0).any()
            assert O.satisficing_labels(method, u, 0).any()

    def test_optimizing_subset_of_satisficing_when_profitable(self, rng):
        found = 0
        for _ in range(800):
            u = random_utilities(rng, 5, 3)
            method = MethodId(int(rng.integers(0, 9)))
            eus = O.response_eus(method, u, 0)
            sincere = O.sincere_eu(method, u, 0)
            if eus.max() > sincere + O.EU_TOL:
                found += 1
                opt = O.optimizing_mask(eus)
                sat = O.satisficing_mask(eus, np.float64(sincere))
                assert not np.any(opt & ~sat)
        assert found > 20

    def test_permutation_equivariance(self, rng):
        # relabeling candidates permutes the label mask by the induced action
        for _ in range(20):
            m = int(rng.integers(2, 5))
            u = random_utilities(rng, 5, m)
            method = MethodId(int(rng.integers(0, 9)))
            sigma = rng.permutation(m)
            u2 = E.UtilityProfile._from_array(u.rows[:, np.argsort(sigma)])
            mask = O.optimizing_labels(method, u, 0)
            mask2 = O.optimizing_labels(method, u2, 0)
            for k in range(math.factorial(m)):
                order = E.Ranking.from_index(m, k).order
                image = E.Ranking(tuple(int(sigma[c]) for c in order))
                assert mask[k] == mask2[image.index]


class TestProfitability:
    def test_examples(self):
        u = E.utilities_tie4()
        assert O.profitability(MethodId.BORDA, u, 0, E.Ranking((0, 2, 1))) == 0.25
        assert O.profitability(MethodId.BORDA, u, 0, E.Ranking((1, 0, 2))) == -0.25
        assert O.profitability(MethodId.BORDA, u, 0, E.Ranking((0, 1, 2))) == 0.0

    def test_bounded(self, rng):
        for _ in range(60):
            u = random_utilities(rng, 5, 3)
            method = MethodId(int(rng.integers(0, 9)))
            k = int(rng.integers(0, 6))
            p = O.profitability(method, u, 0, E.Ranking.from_index(3, k))
            assert -1.0 <= p <= 1.0

    def test_ideal_nonnegative(self, rng):
        for method in MethodId:
            U = rng.uniform(size=(50, 7, 4))
            assert (O.ideal_profits(method, U) >= 0).all()

    def test_outcome_fields(self):
        out = O.manipulation_outcome(MethodId.BORDA, E.utilities_tie4(), 0, E.Ranking((0, 2, 1)))
        assert out.winners == frozenset({0})
        assert out.eu_submitted == 1.0 and out.eu_sincere == 0.75
        assert out.profitability == 0.25
        sincere = O.manipulation_outcome(
            MethodId.BORDA, E.utilities_tie4(), 0, E.Ranking((0, 1, 2))
        )
        assert sincere.profitability == 0.0


class TestInstances:
    def test_make_instance_shapes(self):
        inst = O.make_instance(
            MethodId.BORDA, E.utilities_tie4(), 0, InfoType.MAJORITY_MATRIX
        )
        assert inst.features.shape == (12,)
        assert inst.labels.sum() == 1
        assert inst.meta == O.InstanceMeta(MethodId.BORDA, InfoType.MAJORITY_MATRIX, 4, 3)

    def test_batch_matches_scalar(self, rng):
        U = rng.uniform(size=(25, 6, 3))
        batch = O.make_instance_batch(MethodId.MINIMAX, U, InfoType.MARGIN_MATRIX)
        for b in range(25):
            up = E.UtilityProfile._from_array(U[b])
            inst = O.make_instance(MethodId.MINIMAX, up, 0, InfoType.MARGIN_MATRIX)
            assert np.allclose(batch.features[b], inst.features)
            assert np.array_equal(batch.labels[b], inst.labels)

    def test_labels_nonempty_random(self, rng):
        U = rng.uniform(size=(1000, 5, 3))
        batch = O.make_instance_batch(MethodId.IRV_PUT, U, InfoType.PLURALITY_SCORES)
        assert batch.labels.any(axis=1).all()

    def test_feature_dim_matches_contract(self, rng):
        for info in InfoType:
            U = rng.uniform(size=(4, 5, 4))
            batch = O.make_instance_batch(MethodId.BORDA, U, info)
            assert batch.features.shape[1] == feature_length(info, 4)

    def test_satisficing_batch(self, rng):
        U = rng.uniform(size=(200, 5, 3))
        opt = O.make_instance_batch(MethodId.BORDA, U, InfoType.MAJORITY_MATRIX, O.Labeling.OPTIMIZING)
        sat = O.make_instance_batch(MethodId.BORDA, U, InfoType.MAJORITY_MATRIX, O.Labeling.SATISFICING)
        profitable = sat.eus.max(axis=1) > sat.eus[np.arange(200), sat.sincere_idx] + O.EU_TOL
        assert np.all(~(opt.labels[profitable] & ~sat.labels[profitable]))
