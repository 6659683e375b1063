"""The six limited-information summaries a manipulator may observe, and the
assembly of network input vectors from them.

Each extractor summarizes the full sincere profile (the manipulator's own
sincere ballot included). Feature vectors are the manipulator's m utilities
followed by the flattened information block, fed raw: integer counts and
margins are cast to float without rescaling (a normalization switch exists
because the effect of feature scale on training is an open knob).
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

from .elections import Profile, UtilityProfile, induced_profile, margin_matrix
from .voting_methods import MethodId, apply_method, plurality_counts


class InfoType(IntEnum):
    """Stable integer codes used in dataset files and CLI flags."""

    PLURALITY_SCORES = 0
    PLURALITY_RANKING = 1
    MARGIN_MATRIX = 2
    MAJORITY_MATRIX = 3
    QUALITATIVE_MARGIN_MATRIX = 4
    SINCERE_WINNERS = 5

    @classmethod
    def parse(cls, text: str) -> "InfoType":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "plurality_scores": cls.PLURALITY_SCORES,
            "scores": cls.PLURALITY_SCORES,
            "plurality_ranking": cls.PLURALITY_RANKING,
            "ranking": cls.PLURALITY_RANKING,
            "margin_matrix": cls.MARGIN_MATRIX,
            "margin": cls.MARGIN_MATRIX,
            "majority_matrix": cls.MAJORITY_MATRIX,
            "majority": cls.MAJORITY_MATRIX,
            "qualitative_margin_matrix": cls.QUALITATIVE_MARGIN_MATRIX,
            "qualitative": cls.QUALITATIVE_MARGIN_MATRIX,
            "sincere_winners": cls.SINCERE_WINNERS,
            "winners": cls.SINCERE_WINNERS,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(int(key))
        except ValueError:
            raise ValueError(f"unknown info type: {text!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


def info_length(info: InfoType, m: int) -> int:
    """Length of the flattened information block."""
    if info in (InfoType.MARGIN_MATRIX, InfoType.MAJORITY_MATRIX, InfoType.QUALITATIVE_MARGIN_MATRIX):
        return m * m
    return m


def feature_length(info: InfoType, m: int) -> int:
    return m + info_length(info, m)


def plurality_scores(profile: Profile) -> np.ndarray:
    """Number of voters whose favorite is each candidate."""
    return plurality_counts(profile)


def plurality_ranking(profile: Profile) -> np.ndarray:
    """Ordinal ranking by plurality score: entry c counts the candidates with
    a strictly greater score than c (0 = front-runner; ties share a value)."""
    scores = plurality_counts(profile)
    return (scores[None, :] > scores[:, None]).sum(axis=1)


def majority_matrix(profile: Profile) -> np.ndarray:
    """Sign of the margin matrix."""
    return np.sign(margin_matrix(profile).entries)


def qualitative_ranks(margins: np.ndarray) -> np.ndarray:
    """Replace each positive margin by the 1-based rank of its value among the
    distinct positive margin values (ascending); mirror to skew-symmetry."""
    margins = np.asarray(margins)
    positive = np.unique(margins[margins > 0])
    out = np.zeros_like(margins)
    for rank, value in enumerate(positive, start=1):
        out[margins == value] = rank
        out[margins == -value] = -rank
    return out


def qualitative_margin_matrix(profile: Profile) -> np.ndarray:
    return qualitative_ranks(margin_matrix(profile).entries)


def sincere_winners(profile: Profile, method: MethodId) -> np.ndarray:
    """Indicator vector of the method's winners on the sincere profile."""
    bits = np.zeros(profile.m, dtype=np.int64)
    for c in apply_method(method, profile):
        bits[c] = 1
    return bits


def info_block(profile: Profile, info: InfoType, method: MethodId | None = None) -> np.ndarray:
    """The flattened (row-major) information block for one profile."""
    if info == InfoType.PLURALITY_SCORES:
        return plurality_scores(profile)
    if info == InfoType.PLURALITY_RANKING:
        return plurality_ranking(profile)
    if info == InfoType.MARGIN_MATRIX:
        return margin_matrix(profile).entries.reshape(-1)
    if info == InfoType.MAJORITY_MATRIX:
        return majority_matrix(profile).reshape(-1)
    if info == InfoType.QUALITATIVE_MARGIN_MATRIX:
        return qualitative_margin_matrix(profile).reshape(-1)
    if method is None:
        raise ValueError("sincere-winners information requires a voting method")
    return sincere_winners(profile, method)


def build_features(
    u: UtilityProfile,
    manipulator: int,
    info: InfoType,
    method: MethodId | None = None,
    normalize: bool = False,
) -> np.ndarray:
    """Network input: the manipulator's utilities then the information block.

    The block is computed on the full sincere profile induced by u. With
    ``normalize`` the block is scaled by 1/n (margins and counts only; the
    default is raw values).
    """
    profile = induced_profile(u)
    block = info_block(profile, info, method).astype(np.float64)
    if normalize:
        block = block / profile.n
    return np.concatenate([u.row(manipulator), block])


# --- batched variants (numpy tensors, used by dataset generation and the
# evaluator; must match the per-profile functions above exactly) ----------

def margin_matrices_batch(pos: np.ndarray) -> np.ndarray:
    above = (pos[:, :, :, None] < pos[:, :, None, :]).sum(axis=1, dtype=np.int32)
    return above - above.swapaxes(-1, -2)


def plurality_scores_batch(orders: np.ndarray) -> np.ndarray:
    m = orders.shape[-1]
    return (orders[:, :, 0][:, :, None] == np.arange(m, dtype=np.int8)).sum(
        axis=1, dtype=np.int32
    )


def plurality_ranking_batch(orders: np.ndarray) -> np.ndarray:
    scores = plurality_scores_batch(orders)
    return (scores[:, None, :] > scores[:, :, None]).sum(axis=2, dtype=np.int32)


def qualitative_ranks_batch(margins: np.ndarray) -> np.ndarray:
    """Per-matrix qualitative ranks; ranks are dense within each matrix."""
    B, m, _ = margins.shape
    flat = margins.reshape(B, m * m)
    out = np.zeros_like(flat)
    positive = np.where(flat > 0, flat, 0)
    order = np.sort(positive, axis=1)
    for b in range(B):
        values = np.unique(order[b][order[b] > 0])
        for rank, value in enumerate(values, start=1):
            out[b][flat[b] == value] = rank
            out[b][flat[b] == -value] = -rank
    return out.reshape(B, m, m)


def info_blocks_batch(
    orders: np.ndarray,
    pos: np.ndarray,
    info: InfoType,
    sincere_winner_masks: np.ndarray | None = None,
) -> np.ndarray:
    """(B, info_len) float64 blocks for a batch of sincere profiles.

    ``sincere_winner_masks`` (uint8 candidate bitmasks) is required for the
    sincere-winners info type; the caller computes it with the match engine.
    """
    B, _, m = orders.shape
    if info == InfoType.PLURALITY_SCORES:
        return plurality_scores_batch(orders).astype(np.float64)
    if info == InfoType.PLURALITY_RANKING:
        return plurality_ranking_batch(orders).astype(np.float64)
    if info == InfoType.MARGIN_MATRIX:
        return margin_matrices_batch(pos).reshape(B, m * m).astype(np.float64)
    if info == InfoType.MAJORITY_MATRIX:
        return np.sign(margin_matrices_batch(pos)).reshape(B, m * m).astype(np.float64)
    if info == InfoType.QUALITATIVE_MARGIN_MATRIX:
        return qualitative_ranks_batch(margin_matrices_batch(pos)).reshape(B, m * m).astype(np.float64)
    if sincere_winner_masks is None:
        raise ValueError("sincere-winners blocks need precomputed winner masks")
    bits = (sincere_winner_masks.astype(np.int64)[:, None] >> np.arange(m)) & 1
    return bits.astype(np.float64)


def build_features_batch(
    utilities: np.ndarray,
    orders: np.ndarray,
    pos: np.ndarray,
    info: InfoType,
    sincere_winner_masks: np.ndarray | None = None,
    normalize: bool = False,
) -> np.ndarray:
    """(B, m + info_len) float64 feature matrix for manipulator voter 0."""
    blocks = info_blocks_batch(orders, pos, info, sincere_winner_masks)
    if normalize:
        blocks = blocks / utilities.shape[1]
    return np.concatenate([utilities[:, 0, :], blocks], axis=1)
