"""Manipulation policies and Monte-Carlo profitability estimation.

A policy picks a ballot per election: the trained network via argmax over its
output distribution (ties to the lowest ranking index), the sincere stub, or
the ideal manipulator that always submits an expected-utility-optimal reply.

``evaluate`` samples elections until the estimated standard error of the mean
profitability drops below the target (with a minimum sample count), batching
the sampling so results are deterministic for a given seed regardless of how
batches are distributed over workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine, oracle
from .elections import Ranking, UtilityProfile
from .information import InfoType, build_features_batch, feature_length
from .neural import TrainedNet, forward
from .samplers import ProbModel, RandomStream, sample_batch
from .voting_methods import MethodId

SEM_TARGET = 5e-4
MIN_SAMPLES = 4096
SAMPLE_CAP = 1_000_000
EVAL_BATCH = 512


class SemAccumulator:
    """Running mean and standard error, merged batch-by-batch (Chan's
    parallel update, so the reduction is order-insensitive)."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        nb = values.size
        if nb == 0:
            return
        mb = float(values.mean())
        m2b = float(((values - mb) ** 2).sum())
        if self.count == 0:
            self.count, self.mean, self._m2 = nb, mb, m2b
            return
        total = self.count + nb
        delta = mb - self.mean
        self.mean += delta * nb / total
        self._m2 += m2b + delta * delta * self.count * nb / total
        self.count = total

    @property
    def sd(self) -> float:
        if self.count < 2:
            return float("inf")
        return (self._m2 / (self.count - 1)) ** 0.5

    @property
    def sem(self) -> float:
        if self.count < 2:
            return float("inf")
        return self.sd / self.count**0.5


@dataclass(frozen=True)
class EvalResult:
    policy: str
    method: MethodId
    model: ProbModel
    n: int
    m: int
    info: InfoType | None
    seed: int
    mean_profitability: float
    sem: float
    samples: int
    flag: str = ""  # "cap" when the hard sample cap stopped the loop

    @property
    def completed(self) -> bool:
        return self.flag == ""


class SincerePolicy:
    """Always submits the sincere ranking (profitability identically zero)."""

    label = "sincere"

    def check_dims(self, n: int, m: int) -> None:
        pass


class IdealPolicy:
    """Full-information agent submitting the lowest-index optimal reply."""

    label = "ideal"

    def check_dims(self, n: int, m: int) -> None:
        pass


@dataclass
class NetPolicy:
    """Argmax decision rule over a trained network's output distribution."""

    net: TrainedNet
    info: InfoType
    normalize: bool = False
    label: str = field(default="net", init=False)

    def check_dims(self, n: int, m: int) -> None:
        want = feature_length(self.info, m)
        if self.net.config.input_dim != want:
            raise ValueError(
                f"network input_dim {self.net.config.input_dim} does not match "
                f"m + info length = {want} for m={m}"
            )

    def _features(self, eng: engine.ResponseEngine, utilities: np.ndarray) -> np.ndarray:
        orders = engine.rankings_from_utilities(utilities)
        if self.info == InfoType.SINCERE_WINNERS:
            masks = eng.winner_masks(eng.sincere_idx[:, None])[:, 0]
        else:
            masks = None
        return build_features_batch(
            utilities, orders, eng.pos, self.info, masks, self.normalize
        )

    def chosen_from_utilities(
        self, eng: engine.ResponseEngine, utilities: np.ndarray
    ) -> np.ndarray:
        self.check_dims(utilities.shape[1], utilities.shape[2])
        probs = forward(self.net, self._features(eng, utilities))
        return probs.argmax(axis=1)


def decide(policy, u: UtilityProfile, manipulator: int = 0, method: MethodId | None = None) -> Ranking:
    """Single-election decision; the method is needed by the ideal policy and
    by network policies observing sincere winners."""
    utilities = oracle._reseat(u, manipulator)
    if isinstance(policy, SincerePolicy):
        orders = engine.rankings_from_utilities(utilities)
        return Ranking(tuple(int(c) for c in orders[0, 0]))
    if isinstance(policy, IdealPolicy):
        if method is None:
            raise ValueError("ideal policy needs the voting method")
        eng = engine.ResponseEngine(method, utilities)
        masks = eng.winner_masks(None)
        eus = eng.lottery_eus(masks, utilities[:, 0, :])
        k = int(np.argmax(eus[0] >= eus[0].max() - oracle.EU_TOL))
        return Ranking.from_index(u.m, k)
    if isinstance(policy, NetPolicy):
        if policy.info == InfoType.SINCERE_WINNERS and method is None:
            raise ValueError("sincere-winners features need the voting method")
        eng = engine.ResponseEngine(method if method is not None else MethodId.PLURALITY, utilities)
        k = int(policy.chosen_from_utilities(eng, utilities)[0])
        return Ranking.from_index(u.m, k)
    raise TypeError(f"unknown policy: {policy!r}")


def batch_profits(policy, method: MethodId, utilities: np.ndarray) -> np.ndarray:
    """Profitability of the policy's submission for each election in a batch."""
    B = utilities.shape[0]
    eng = engine.ResponseEngine(method, utilities)
    rows = utilities[:, 0, :]
    ranges = oracle.utility_range(rows)
    if isinstance(policy, SincerePolicy):
        masks = eng.winner_masks(eng.sincere_idx[:, None])
        eus = eng.lottery_eus(masks, rows)[:, 0]
        return (eus - eus) / ranges
    if isinstance(policy, IdealPolicy):
        masks = eng.winner_masks(None)
        eus = eng.lottery_eus(masks, rows)
        sincere = eus[np.arange(B), eng.sincere_idx]
        return (eus.max(axis=1) - sincere) / ranges
    if isinstance(policy, NetPolicy):
        chosen = policy.chosen_from_utilities(eng, utilities)
        pair = np.stack([chosen, eng.sincere_idx], axis=1)
        masks = eng.winner_masks(pair)
        eus = eng.lottery_eus(masks, rows)
        return (eus[:, 0] - eus[:, 1]) / ranges
    raise TypeError(f"unknown policy: {policy!r}")


def evaluate(
    policy,
    method: MethodId,
    model: ProbModel,
    n: int,
    m: int,
    stream: RandomStream | int,
    sem_target: float = SEM_TARGET,
    min_samples: int = MIN_SAMPLES,
    sample_cap: int = SAMPLE_CAP,
    batch_size: int = EVAL_BATCH,
) -> EvalResult:
    """Monte-Carlo mean profitability with the SEM stopping rule.

    Fresh elections are sampled per batch from streams derived from
    (seed, batch index); the loop stops once at least ``min_samples`` elections
    are in and the SEM falls below ``sem_target``, or hard-stops (flagged) at
    ``sample_cap``.
    """
    if isinstance(stream, int):
        stream = RandomStream(stream)
    acc = SemAccumulator()
    batch_index = 0
    flag = ""
    while True:
        rng = stream.derive(batch_index)
        take = min(batch_size, sample_cap - acc.count)
        utilities = sample_batch(model, take, n, m, rng)
        acc.update(batch_profits(policy, method, utilities))
        batch_index += 1
        if acc.count >= min_samples and acc.sem < sem_target:
            break
        if acc.count >= sample_cap:
            flag = "cap"
            break
    info = policy.info if isinstance(policy, NetPolicy) else None
    return EvalResult(
        policy=policy.label,
        method=MethodId(method),
        model=model,
        n=n,
        m=m,
        info=info,
        seed=stream.seed,
        mean_profitability=acc.mean,
        sem=acc.sem,
        samples=acc.count,
        flag=flag,
    )


def ideal_baseline(
    method: MethodId,
    model: ProbModel,
    n: int,
    m: int,
    stream: RandomStream | int,
    **kwargs,
) -> EvalResult:
    """The full-information upper bound every learned policy is compared to."""
    return evaluate(IdealPolicy(), method, model, n, m, stream, **kwargs)
