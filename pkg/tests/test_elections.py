import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manipbench import elections as E

from conftest import random_profile


perm_strategy = st.integers(2, 6).flatmap(
    lambda m: st.permutations(list(range(m)))
)


class TestRanking:
    def test_index_zero_is_identity(self):
        for m in range(2, 7):
            assert E.Ranking.from_index(m, 0).order == tuple(range(m))

    def test_last_index_is_reversed(self):
        import math

        for m in range(2, 7):
            r = E.Ranking.from_index(m, math.factorial(m) - 1)
            assert r.order == tuple(reversed(range(m)))

    @given(perm_strategy)
    def test_round_trip(self, order):
        r = E.Ranking(tuple(order))
        assert E.Ranking.from_index(r.m, r.index) == r

    def test_lexicographic_order(self):
        ranks = [E.Ranking.from_index(3, k).order for k in range(6)]
        assert ranks == sorted(ranks)

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            E.Ranking((0, 0, 2))

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            E.Ranking.from_index(3, 6)


class TestProfile:
    def test_requires_voters(self):
        with pytest.raises(ValueError):
            E.Profile(3, [])

    def test_ranking_m_must_match(self):
        with pytest.raises(ValueError):
            E.Profile(3, [(0, 1)])

    def test_positions_invert_orders(self, rng):
        p = random_profile(rng, 4, 7)
        pos = p.positions()
        for i in range(p.n):
            for spot, cand in enumerate(p.orders[i]):
                assert pos[i, cand] == spot


class TestUtilityProfile:
    def test_rejects_duplicate_utilities(self):
        with pytest.raises(ValueError):
            E.UtilityProfile([[0.5, 0.5, 0.1]])

    def test_rows_immutable(self):
        u = E.utilities_tie4()
        with pytest.raises(ValueError):
            u.rows[0, 0] = 2.0


class TestMargins:
    def test_profile5_margins(self):
        p = E.profile_5()
        assert E.margin(p, 0, 1) == 1
        assert E.margin(p, 1, 2) == 3
        assert E.margin(p, 2, 0) == 1
        assert E.margin(p, 0, 0) == 0

    def test_unanimous_margin(self):
        assert E.margin(E.profile_unanimous(), 0, 1) == 3

    def test_bad_candidate(self):
        with pytest.raises(IndexError):
            E.margin(E.profile_5(), 0, 3)

    def test_matrix_examples(self):
        entries = E.margin_matrix(E.profile_5()).entries
        assert entries[0, 1] == 1 and entries[1, 2] == 3 and entries[2, 0] == 1
        cyc = E.margin_matrix(E.profile_cycle()).entries
        assert cyc[0, 1] == cyc[1, 2] == cyc[2, 0] == 1
        unan = E.margin_matrix(E.profile_unanimous()).entries
        assert unan[0, 1] == unan[0, 2] == unan[1, 2] == 3

    def test_skew_symmetry_and_parity_random(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 7))
            n = int(rng.integers(1, 22))
            p = random_profile(rng, m, n)
            mm = E.margin_matrix(p)
            assert np.array_equal(mm.entries, -mm.entries.T)
            off = ~np.eye(m, dtype=bool)
            assert np.all(np.abs(mm.entries) <= n)
            assert np.all((mm.entries[off] - n) % 2 == 0)

    def test_margin_matrix_invariant_rejects_asymmetry(self):
        with pytest.raises(ValueError):
            E.MarginMatrix(entries=np.array([[0, 1], [1, 0]]), n=3)


class TestCondorcetWinner:
    def test_fixtures(self):
        assert E.condorcet_winner(E.profile_unanimous()) == 0
        assert E.condorcet_winner(E.profile_cycle()) is None
        assert E.condorcet_winner(E.profile_5()) is None

    def test_winner_beats_everyone(self, rng):
        found = 0
        for _ in range(200):
            p = random_profile(rng, int(rng.integers(2, 6)), int(rng.integers(1, 12)))
            c = E.condorcet_winner(p)
            if c is None:
                # absence means every candidate loses or ties against someone
                assert all(
                    any(E.margin(p, a, b) <= 0 for b in range(p.m) if b != a)
                    for a in range(p.m)
                )
            else:
                found += 1
                assert all(E.margin(p, c, x) > 0 for x in range(p.m) if x != c)
        assert found > 0


class TestInducedProfile:
    def test_examples(self):
        p = E.induced_profile(E.UtilityProfile([[0.2, 0.9, 0.5]]))
        assert tuple(p.orders[0]) == (1, 2, 0)
        p = E.induced_profile(E.UtilityProfile([[1.0, 0.5, 0.0]]))
        assert tuple(p.orders[0]) == (0, 1, 2)
        assert tuple(E.profile_tie4().orders[0]) == (0, 1, 2)

    def test_matches_pairwise_comparison(self, rng):
        for _ in range(30):
            n, m = int(rng.integers(1, 9)), int(rng.integers(2, 7))
            rows = rng.uniform(size=(n, m))
            u = E.UtilityProfile(rows)
            pos = E.induced_profile(u).positions()
            for i in range(n):
                for a in range(m):
                    for b in range(m):
                        if rows[i, a] > rows[i, b]:
                            assert pos[i, a] < pos[i, b]


class TestRemoveCandidate:
    def test_profile5_examples(self):
        r = E.remove_candidate(E.profile_5(), 2)
        ballots = [tuple(row) for row in r.profile.orders]
        assert ballots.count((0, 1)) == 3 and ballots.count((1, 0)) == 2
        r = E.remove_candidate(E.profile_unanimous(), 1)
        assert all(tuple(row) == (0, 1) for row in r.profile.orders)
        assert r.kept == (0, 2)
        r = E.remove_candidate(E.profile_cycle(), 0)
        assert [tuple(row) for row in r.profile.orders] == [(0, 1), (0, 1), (1, 0)]

    def test_single_candidate_rejected(self):
        p = E.Profile(1, [(0,)])
        with pytest.raises(ValueError):
            E.remove_candidate(p, 0)

    def test_preserves_margins(self, rng):
        for _ in range(40):
            m = int(rng.integers(3, 7))
            p = random_profile(rng, m, int(rng.integers(1, 15)))
            a = int(rng.integers(0, m))
            r = E.remove_candidate(p, a)
            for new_x, old_x in enumerate(r.kept):
                for new_y, old_y in enumerate(r.kept):
                    assert E.margin(r.profile, new_x, new_y) == E.margin(p, old_x, old_y)


class TestReplaceBallot:
    def test_tie4_example(self):
        p = E.replace_ballot(E.profile_tie4(), 0, E.Ranking((0, 2, 1)))
        ballots = [tuple(row) for row in p.orders]
        assert ballots == [(0, 2, 1), (0, 1, 2), (1, 0, 2), (1, 0, 2)]

    def test_identity_replacement(self):
        p = E.profile_unanimous()
        q = E.replace_ballot(p, 0, E.Ranking((0, 1, 2)))
        assert p == q

    def test_margin_updates(self):
        p = E.replace_ballot(E.profile_5(), 4, E.Ranking((0, 1, 2)))
        assert E.margin(p, 0, 1) == 3

    def test_original_unmodified(self):
        p = E.profile_5()
        before = p.orders.copy()
        E.replace_ballot(p, 0, E.Ranking((2, 1, 0)))
        assert np.array_equal(p.orders, before)

    def test_bad_voter(self):
        with pytest.raises(IndexError):
            E.replace_ballot(E.profile_5(), 5, E.Ranking((0, 1, 2)))


@settings(max_examples=60)
@given(st.lists(st.permutations(list(range(4))), min_size=1, max_size=9))
def test_margin_matrix_skew_symmetric_hypothesis(ballots):
    p = E.Profile(4, [tuple(b) for b in ballots])
    mm = E.margin_matrix(p)
    assert np.array_equal(mm.entries, -mm.entries.T)
    assert np.all(np.diag(mm.entries) == 0)
