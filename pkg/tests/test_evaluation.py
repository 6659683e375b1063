import numpy as np
import pytest

from manipbench import elections as E
from manipbench import evaluation as EV
from manipbench import neural as N
from manipbench import oracle as O
from manipbench.information import InfoType
from manipbench.samplers import ProbModel, RandomStream
from manipbench.voting_methods import MethodId

from conftest import random_utilities


class TestSemAccumulator:
    def test_textbook_value(self):
        acc = EV.SemAccumulator()
        acc.update(np.array([0.0, 0.0, 1.0, 1.0]))
        assert acc.mean == pytest.approx(0.5)
        assert acc.sem == pytest.approx(0.288675, abs=1e-6)

    def test_batched_merge_matches_single_pass(self, rng):
        values = rng.normal(size=1000)
        one = EV.SemAccumulator()
        one.update(values)
        split = EV.SemAccumulator()
        for chunk in np.array_split(values, 7):
            split.update(chunk)
        assert one.mean == pytest.approx(split.mean, abs=1e-12)
        assert one.sem == pytest.approx(split.sem, abs=1e-12)

    def test_zero_variance(self):
        acc = EV.SemAccumulator()
        acc.update(np.zeros(100))
        assert acc.mean == 0.0 and acc.sem == 0.0


class TestDecide:
    def test_sincere(self):
        r = EV.decide(EV.SincerePolicy(), E.utilities_tie4())
        assert r.order == (0, 1, 2)

    def test_ideal_tie4(self):
        r = EV.decide(EV.IdealPolicy(), E.utilities_tie4(), method=MethodId.BORDA)
        assert r.order == (0, 2, 1)

    def test_ideal_lowest_index_tie_break(self):
        # non-pivotal election: every reply optimal, index 0 picked
        rows = [[0.1, 0.9, 0.5]] + [[1.0, 0.5, 0.0]] * 9
        u = E.UtilityProfile(rows)
        r = EV.decide(EV.IdealPolicy(), u, method=MethodId.BORDA)
        assert r.index == 0

    def test_net_argmax_first_max(self):
        cfg = N.NetConfig(input_dim=12, hidden=(4,), output_dim=6)
        policy = EV.NetPolicy(N.init_net(cfg, zero=True), InfoType.MAJORITY_MATRIX)
        # uniform output distribution: argmax tie broken at lowest index
        r = EV.decide(policy, E.utilities_tie4(), method=MethodId.BORDA)
        assert r.index == 0

    def test_net_dimension_mismatch(self):
        cfg = N.NetConfig(input_dim=10, hidden=(4,), output_dim=6)
        policy = EV.NetPolicy(N.init_net(cfg), InfoType.MAJORITY_MATRIX)
        with pytest.raises(ValueError):
            EV.decide(policy, E.utilities_tie4(), method=MethodId.BORDA)

    def test_reseat_manipulator(self, rng):
        u = random_utilities(rng, 6, 3)
        r = EV.decide(EV.SincerePolicy(), u, manipulator=3)
        assert r.order == tuple(np.argsort(-u.rows[3]))


class TestEvaluate:
    def test_sincere_exact_zero_min_samples(self):
        res = EV.evaluate(
            EV.SincerePolicy(), MethodId.MINIMAX, ProbModel.uniform(), 7, 3, 123
        )
        assert res.mean_profitability == 0.0
        assert res.samples == 4096
        assert res.sem == 0.0
        assert res.flag == ""

    def test_ideal_nonnegative_and_contract(self):
        res = EV.ideal_baseline(MethodId.BORDA, ProbModel.uniform(), 5, 3, 7)
        assert res.mean_profitability > 0
        assert res.samples >= 4096
        assert res.sem < 5e-4
        assert res.completed

    def test_deterministic_given_seed(self):
        kwargs = dict(min_samples=4096)
        a = EV.evaluate(EV.IdealPolicy(), MethodId.PLURALITY, ProbModel.uniform(), 5, 3, 99, **kwargs)
        b = EV.evaluate(EV.IdealPolicy(), MethodId.PLURALITY, ProbModel.uniform(), 5, 3, 99, **kwargs)
        assert a.mean_profitability == b.mean_profitability
        assert a.samples == b.samples

    def test_cap_flag(self):
        res = EV.evaluate(
            EV.IdealPolicy(), MethodId.BORDA, ProbModel.uniform(), 5, 3, 3,
            sample_cap=2048, min_samples=1024,
        )
        assert res.flag == "cap"
        assert res.samples == 2048

    def test_ideal_dominates_net(self):
        cfg = N.NetConfig(input_dim=12, hidden=(8,), output_dim=6, init_seed=5)
        policy = EV.NetPolicy(N.init_net(cfg), InfoType.MAJORITY_MATRIX)
        seed = 17
        net_res = EV.evaluate(policy, MethodId.BORDA, ProbModel.uniform(), 5, 3, seed)
        ideal_res = EV.ideal_baseline(MethodId.BORDA, ProbModel.uniform(), 5, 3, seed)
        slack = 2 * (net_res.sem + ideal_res.sem)
        assert ideal_res.mean_profitability >= net_res.mean_profitability - slack

    def test_mallows_and_spatial_run(self):
        for model in (ProbModel.mallows(), ProbModel.spatial2d()):
            res = EV.evaluate(
                EV.SincerePolicy(), MethodId.PLURALITY, model, 5, 3, 31,
            )
            assert res.mean_profitability == 0.0


class TestBatchProfits:
    def test_sincere_identically_zero(self, rng):
        U = rng.uniform(size=(100, 5, 3))
        profits = EV.batch_profits(EV.SincerePolicy(), MethodId.BORDA, U)
        assert (profits == 0.0).all()

    def test_ideal_matches_oracle(self, rng):
        U = rng.uniform(size=(50, 5, 3))
        profits = EV.batch_profits(EV.IdealPolicy(), MethodId.NANSON, U)
        assert np.allclose(profits, O.ideal_profits(MethodId.NANSON, U))

    def test_net_profit_matches_manual(self, rng):
        cfg = N.NetConfig(input_dim=12, hidden=(8,), output_dim=6, init_seed=3)
        policy = EV.NetPolicy(N.init_net(cfg), InfoType.MAJORITY_MATRIX)
        U = rng.uniform(size=(20, 5, 3))
        profits = EV.batch_profits(policy, MethodId.BORDA, U)
        for b in range(20):
            up = E.UtilityProfile._from_array(U[b])
            ballot = EV.decide(policy, up, method=MethodId.BORDA)
            assert profits[b] == pytest.approx(
                O.profitability(MethodId.BORDA, up, 0, ballot), abs=1e-12
            )
