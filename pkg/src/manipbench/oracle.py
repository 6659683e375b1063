"""Exhaustive best-response oracle: the expected utility of every possible
ballot, optimal and satisficing label masks, and the normalized profitability
of a submitted ranking.

The manipulator is voter 0 throughout (samplers and methods are anonymous, so
the choice is immaterial; a ``voter`` argument re-seats rows where offered).
Expected-utility comparisons use an absolute tolerance of 1e-12 so that the
division in the even-chance lottery cannot split analytically tied replies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import engine
from .elections import Ranking, UtilityProfile
from .information import InfoType, build_features_batch, feature_length
from .voting_methods import MethodId

EU_TOL = 1e-12


class Labeling(IntEnum):
    """Which replies get positive labels. Stable codes for dataset files."""

    OPTIMIZING = 0
    SATISFICING = 1

    @classmethod
    def parse(cls, text: str) -> "Labeling":
        key = text.strip().lower()
        if key in ("optimizing", "opt", "0"):
            return cls.OPTIMIZING
        if key in ("satisficing", "sat", "1"):
            return cls.SATISFICING
        raise ValueError(f"unknown labeling: {text!r}")

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class InstanceMeta:
    method: MethodId
    info: InfoType
    n: int
    m: int


@dataclass(frozen=True)
class LabeledInstance:
    """One training example: features plus the mask of positive replies."""

    features: np.ndarray  # (m + info_len,) float64
    labels: np.ndarray    # (m!,) bool, at least one set
    meta: InstanceMeta


@dataclass(frozen=True)
class ManipulationOutcome:
    submitted: Ranking
    winners: frozenset
    eu_submitted: float
    eu_sincere: float
    profitability: float


def _reseat(u: UtilityProfile, voter: int) -> np.ndarray:
    rows = u.rows
    if voter == 0:
        return rows[None, :, :]
    if not 0 <= voter < u.n:
        raise IndexError(f"voter {voter} out of range for n={u.n}")
    order = [voter] + [i for i in range(u.n) if i != voter]
    return rows[order][None, :, :]


def response_eus(method: MethodId, u: UtilityProfile, voter: int = 0) -> np.ndarray:
    """Expected lottery utility, for the given voter, of submitting each of
    the m! rankings while everyone else votes sincerely."""
    eus, _ = engine.response_eus(method, _reseat(u, voter))
    return eus[0]


def sincere_eu(method: MethodId, u: UtilityProfile, voter: int = 0) -> float:
    eus = response_eus(method, u, voter)
    sincere_idx = engine.ranking_indices(
        engine.rankings_from_utilities(_reseat(u, voter))[:, 0, :]
    )[0]
    return float(eus[sincere_idx])


def optimizing_mask(eus: np.ndarray) -> np.ndarray:
    """Bits on every EU-maximal reply (within tolerance)."""
    return eus >= eus.max(axis=-1, keepdims=True) - EU_TOL


def satisficing_mask(eus: np.ndarray, sincere: np.ndarray) -> np.ndarray:
    """Bits on all profitable replies when any exist, else on every reply
    doing at least as well as sincere."""
    sincere = np.asarray(sincere)[..., None]
    profitable = eus > sincere + EU_TOL
    fallback = eus >= sincere - EU_TOL
    has_profit = profitable.any(axis=-1, keepdims=True)
    return np.where(has_profit, profitable, fallback)


def label_mask(eus: np.ndarray, sincere: np.ndarray, labeling: Labeling) -> np.ndarray:
    if labeling == Labeling.OPTIMIZING:
        return optimizing_mask(eus)
    return satisficing_mask(eus, sincere)


def optimizing_labels(method: MethodId, u: UtilityProfile, voter: int = 0) -> np.ndarray:
    return optimizing_mask(response_eus(method, u, voter))


def satisficing_labels(method: MethodId, u: UtilityProfile, voter: int = 0) -> np.ndarray:
    eus = response_eus(method, u, voter)
    return satisficing_mask(eus, np.float64(sincere_eu(method, u, voter)))


def utility_range(row: np.ndarray) -> np.ndarray:
    return row.max(axis=-1) - row.min(axis=-1)


def profitability(method: MethodId, u: UtilityProfile, voter: int, submitted: Ranking) -> float:
    """Normalized gain of a submitted ranking over sincere voting: the EU
    difference divided by the voter's utility range."""
    eus = response_eus(method, u, voter)
    sincere = sincere_eu(method, u, voter)
    row = u.row(voter)
    return float((eus[submitted.index] - sincere) / utility_range(row))


def manipulation_outcome(
    method: MethodId, u: UtilityProfile, voter: int, submitted: Ranking
) -> ManipulationOutcome:
    utilities = _reseat(u, voter)
    eng = engine.ResponseEngine(method, utilities)
    mask = int(eng.winner_masks(np.array([[submitted.index]]))[0, 0])
    winners = frozenset(c for c in range(u.m) if mask >> c & 1)
    eus = eng.lottery_eus(eng.winner_masks(None), utilities[:, 0, :])[0]
    eu_sub = float(eus[submitted.index])
    eu_sin = float(eus[eng.sincere_idx[0]])
    profit = (eu_sub - eu_sin) / float(utility_range(u.row(voter)))
    return ManipulationOutcome(submitted, winners, eu_sub, eu_sin, profit)


@dataclass
class InstanceBatch:
    """Dense batch of labeled instances plus the oracle quantities that the
    trainer's validation metric needs."""

    features: np.ndarray      # (B, d) float64
    labels: np.ndarray        # (B, m!) bool
    eus: np.ndarray           # (B, m!) float64
    sincere_idx: np.ndarray   # (B,) int64
    ranges: np.ndarray        # (B,) float64
    meta: InstanceMeta

    def __len__(self) -> int:
        return self.features.shape[0]


def make_instance_batch(
    method: MethodId,
    utilities: np.ndarray,
    info: InfoType,
    labeling: Labeling = Labeling.OPTIMIZING,
    normalize: bool = False,
) -> InstanceBatch:
    """Label a batch of elections: features from the sincere profile, label
    bits from the response-EU oracle."""
    B, n, m = utilities.shape
    eng = engine.ResponseEngine(method, utilities)
    masks = eng.winner_masks(None)
    rows = utilities[:, 0, :]
    eus = eng.lottery_eus(masks, rows)
    sincere = eus[np.arange(B), eng.sincere_idx]
    labels = label_mask(eus, sincere, labeling)
    if info == InfoType.SINCERE_WINNERS:
        sincere_masks = masks[np.arange(B), eng.sincere_idx]
    else:
        sincere_masks = None
    orders = engine.rankings_from_utilities(utilities)
    features = build_features_batch(
        utilities, orders, eng.pos, info, sincere_masks, normalize
    )
    return InstanceBatch(
        features=features,
        labels=labels,
        eus=eus,
        sincere_idx=eng.sincere_idx,
        ranges=utility_range(rows),
        meta=InstanceMeta(method=method, info=info, n=n, m=m),
    )


def make_instance(
    method: MethodId,
    u: UtilityProfile,
    manipulator: int,
    info: InfoType,
    labeling: Labeling = Labeling.OPTIMIZING,
    normalize: bool = False,
) -> LabeledInstance:
    batch = make_instance_batch(
        method, _reseat(u, manipulator), info, labeling, normalize
    )
    assert batch.labels[0].any()
    assert batch.features.shape[1] == feature_length(info, u.m)
    return LabeledInstance(
        features=batch.features[0],
        labels=batch.labels[0],
        meta=batch.meta,
    )


def ideal_profits(method: MethodId, utilities: np.ndarray) -> np.ndarray:
    """Profitability achieved by a full-information optimal reply, per election."""
    eus, sincere_idx = engine.response_eus(method, utilities)
    B = utilities.shape[0]
    sincere = eus[np.arange(B), sincere_idx]
    return (eus.max(axis=1) - sincere) / utility_range(utilities[:, 0, :])


def max_actions(m: int) -> int:
    return math.factorial(m)
