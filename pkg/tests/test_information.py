import numpy as np
import pytest

from manipbench import elections as E
from manipbench import engine as G
from manipbench import information as I
from manipbench.voting_methods import MethodId, apply_method

from conftest import random_profile


class TestExtractors:
    def test_plurality_scores(self):
        assert I.plurality_scores(E.profile_5()).tolist() == [2, 2, 1]
        assert I.plurality_scores(E.profile_unanimous()).tolist() == [3, 0, 0]
        assert I.plurality_scores(E.profile_cycle()).tolist() == [1, 1, 1]

    def test_scores_sum_to_n(self, rng):
        for _ in range(30):
            p = random_profile(rng, int(rng.integers(2, 7)), int(rng.integers(1, 22)))
            assert I.plurality_scores(p).sum() == p.n

    def test_plurality_ranking(self):
        assert I.plurality_ranking(E.profile_5()).tolist() == [0, 0, 2]
        assert I.plurality_ranking(E.profile_unanimous()).tolist() == [0, 1, 1]
        assert I.plurality_ranking(E.profile_cycle()).tolist() == [0, 0, 0]

    def test_majority_matrix(self):
        maj = I.majority_matrix(E.profile_5())
        assert maj[0, 1] == 1 and maj[1, 2] == 1 and maj[2, 0] == 1
        assert maj[1, 0] == -1 and np.all(np.diag(maj) == 0)
        assert np.all(I.majority_matrix(E.profile_unanimous())[np.triu_indices(3, 1)] == 1)

    def test_majority_matrix_keeps_zero(self):
        p = E.Profile(2, [(0, 1), (1, 0)])
        assert I.majority_matrix(p).tolist() == [[0, 0], [0, 0]]

    def test_qualitative_margin_matrix(self):
        q5 = I.qualitative_margin_matrix(E.profile_5())
        assert q5[0, 1] == 1 and q5[1, 2] == 2 and q5[2, 0] == 1
        assert q5[2, 1] == -2
        qc = I.qualitative_margin_matrix(E.profile_cycle())
        assert qc[0, 1] == qc[1, 2] == qc[2, 0] == 1
        qu = I.qualitative_margin_matrix(E.profile_unanimous())
        assert np.all(qu[np.triu_indices(3, 1)] == 1)

    def test_qualitative_skew_symmetric(self, rng):
        for _ in range(30):
            p = random_profile(rng, int(rng.integers(2, 7)), int(rng.integers(1, 22)))
            q = I.qualitative_margin_matrix(p)
            assert np.array_equal(q, -q.T)

    def test_sincere_winners(self):
        assert I.sincere_winners(E.profile_5(), MethodId.BORDA).tolist() == [0, 1, 0]
        assert I.sincere_winners(E.profile_5(), MethodId.MINIMAX).tolist() == [1, 1, 0]
        for method in MethodId:
            assert I.sincere_winners(E.profile_unanimous(), method).tolist() == [1, 0, 0]

    def test_sincere_winners_nonempty(self, rng):
        for _ in range(20):
            p = random_profile(rng, int(rng.integers(2, 6)), int(rng.integers(1, 12)))
            for method in MethodId:
                assert I.sincere_winners(p, method).sum() >= 1


class TestDetermination:
    def test_margins_determine_majority_and_qualitative(self, rng):
        # the margin matrix functionally determines both coarser matrices
        for _ in range(40):
            p = random_profile(rng, int(rng.integers(2, 7)), int(rng.integers(1, 22)))
            entries = E.margin_matrix(p).entries
            assert np.array_equal(I.majority_matrix(p), np.sign(entries))
            assert np.array_equal(I.qualitative_margin_matrix(p), I.qualitative_ranks(entries))

    @pytest.mark.parametrize("info", list(I.InfoType))
    def test_no_info_block_determines_winners(self, info, rng):
        # two m=3, n=5 profiles sharing the info block but with different
        # winners under some method
        seen: dict[bytes, E.Profile] = {}
        for _ in range(4000):
            p = random_profile(rng, 3, 5)
            block = I.info_block(p, info, MethodId.BORDA)
            key = np.asarray(block).tobytes()
            q = seen.get(key)
            if q is None:
                seen[key] = p
                continue
            if any(
                apply_method(method, p) != apply_method(method, q)
                for method in MethodId
            ):
                return
        pytest.fail(f"no winner-divergent pair found for {info}")


class TestFeatures:
    def test_lengths(self):
        assert I.feature_length(I.InfoType.MARGIN_MATRIX, 3) == 12
        assert I.feature_length(I.InfoType.PLURALITY_SCORES, 6) == 12
        assert I.feature_length(I.InfoType.SINCERE_WINNERS, 4) == 8
        u = E.utilities_tie4()
        for info in I.InfoType:
            f = I.build_features(u, 0, info, MethodId.BORDA)
            assert f.shape == (I.feature_length(info, 3),)

    def test_concatenation_layout(self):
        u = E.utilities_tie4()
        f = I.build_features(u, 0, I.InfoType.PLURALITY_SCORES)
        assert f[:3].tolist() == [1.0, 0.5, 0.0]
        assert f[3:].tolist() == I.plurality_scores(E.profile_tie4()).astype(float).tolist()

    def test_info_uses_full_sincere_profile(self):
        # manipulator's own sincere ballot is counted in the info block
        u = E.utilities_tie4()
        f = I.build_features(u, 0, I.InfoType.PLURALITY_SCORES)
        assert f[3:].sum() == 4  # all four voters, not three

    def test_normalize_switch(self):
        u = E.utilities_tie4()
        raw = I.build_features(u, 0, I.InfoType.MARGIN_MATRIX)
        scaled = I.build_features(u, 0, I.InfoType.MARGIN_MATRIX, normalize=True)
        assert np.allclose(scaled[3:], raw[3:] / 4)
        assert np.array_equal(scaled[:3], raw[:3])

    def test_sincere_winners_requires_method(self):
        with pytest.raises(ValueError):
            I.info_block(E.profile_5(), I.InfoType.SINCERE_WINNERS)

    def test_codes_stable(self):
        assert [int(v) for v in I.InfoType] == list(range(6))
        assert I.InfoType.parse("majority") == I.InfoType.MAJORITY_MATRIX
        with pytest.raises(ValueError):
            I.InfoType.parse("bayes")


class TestBatchVariants:
    @pytest.mark.parametrize("info", list(I.InfoType))
    def test_blocks_match_per_profile(self, info, rng):
        U = rng.uniform(size=(30, 7, 4))
        orders = G.rankings_from_utilities(U)
        pos = G.positions_from_orders(orders)
        if info == I.InfoType.SINCERE_WINNERS:
            eng = G.ResponseEngine(MethodId.NANSON, U)
            masks = eng.winner_masks(eng.sincere_idx[:, None])[:, 0]
            blocks = I.info_blocks_batch(orders, pos, info, masks)
        else:
            blocks = I.info_blocks_batch(orders, pos, info)
        for b in range(30):
            up = E.UtilityProfile._from_array(U[b])
            want = I.info_block(E.induced_profile(up), info, MethodId.NANSON)
            assert np.array_equal(blocks[b], np.asarray(want, dtype=float).reshape(-1))

    def test_features_match_per_profile(self, rng):
        U = rng.uniform(size=(12, 5, 3))
        orders = G.rankings_from_utilities(U)
        pos = G.positions_from_orders(orders)
        feats = I.build_features_batch(U, orders, pos, I.InfoType.MARGIN_MATRIX)
        for b in range(12):
            up = E.UtilityProfile._from_array(U[b])
            want = I.build_features(up, 0, I.InfoType.MARGIN_MATRIX)
            assert np.allclose(feats[b], want)
