"""Vectorized winner computation for batches of elections and ballots.

The manipulation oracle and the Monte-Carlo evaluator both need the winner set
of ``method(replace_ballot(P, 0, r))`` for many elections and many candidate
ballots r at once: labeling an election means scoring all m! replies, and an
ideal-manipulator baseline at m=6 means 720 method evaluations per sampled
election. These engines compute winner sets as uint8 candidate bitmasks over a
(batch, ballots) grid in numpy.

Margin methods work on a response-margin tensor built incrementally: the
margin matrix with ballot r equals the other voters' margin matrix plus a
per-ballot +/-1 contribution that is precomputed once per m. The Instant
Runoff variants work on per-survivor-subset first-place counts, with IRV-PUT
evaluated by a bottom-up dynamic program over survivor subsets.

Everything here must agree exactly with the per-profile implementations in
voting_methods; tests enforce that on random profiles, odd and even n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elections import MAX_CANDIDATES, all_rankings
from .voting_methods import MethodId

_BIG = np.int32(1 << 20)
_NEG = np.int32(-(1 << 20))


@dataclass(frozen=True)
class _Tables:
    m: int
    fact: int
    perms: np.ndarray        # (R, m) int8, lexicographic
    ballot_margins: np.ndarray  # (R, m, m) int8: +1 if ballot ranks a above b
    top_of: np.ndarray       # (R, 2^m) int8: ballot's favorite within subset
    member_bits: np.ndarray  # (2^m, m) bool
    popcount: np.ndarray     # (2^m,) int8
    subsets_by_size: tuple[tuple[int, ...], ...]  # subset masks grouped by popcount


@lru_cache(maxsize=None)
def tables(m: int) -> _Tables:
    if not 2 <= m <= MAX_CANDIDATES:
        raise ValueError(f"m must be in 2..{MAX_CANDIDATES}, got {m}")
    perms = np.array(all_rankings(m), dtype=np.int8)
    fact = math.factorial(m)
    pos = np.empty((fact, m), dtype=np.int8)
    rows = np.arange(fact)[:, None]
    pos[rows, perms] = np.arange(m, dtype=np.int8)
    ballot_margins = np.where(
        pos[:, :, None] < pos[:, None, :], np.int8(1), np.int8(-1)
    )
    eye = np.eye(m, dtype=bool)
    ballot_margins[:, eye] = 0

    n_subsets = 1 << m
    member_bits = (np.arange(n_subsets)[:, None] >> np.arange(m)) & 1
    member_bits = member_bits.astype(bool)
    popcount = member_bits.sum(axis=1).astype(np.int8)

    top_of = np.zeros((fact, n_subsets), dtype=np.int8)
    for r, perm in enumerate(perms):
        for s in range(1, n_subsets):
            for c in perm:
                if s >> c & 1:
                    top_of[r, s] = c
                    break
    by_size = tuple(
        tuple(int(s) for s in range(1, n_subsets) if int(popcount[s]) == k)
        for k in range(m + 1)
    )
    return _Tables(
        m=m,
        fact=fact,
        perms=perms,
        ballot_margins=ballot_margins,
        top_of=top_of,
        member_bits=member_bits,
        popcount=popcount,
        subsets_by_size=by_size,
    )


def rankings_from_utilities(utilities: np.ndarray) -> np.ndarray:
    """(B, n, m) utilities -> (B, n, m) candidate orders, best first."""
    return np.argsort(-utilities, axis=-1, kind="stable").astype(np.int8)


def positions_from_orders(orders: np.ndarray) -> np.ndarray:
    """Invert candidate orders into rank positions along the last axis."""
    pos = np.empty_like(orders)
    np.put_along_axis(pos, orders.astype(np.int64), np.arange(orders.shape[-1], dtype=np.int8), axis=-1)
    return pos


def ranking_indices(orders: np.ndarray) -> np.ndarray:
    """Lexicographic permutation index of each order; orders is (..., m)."""
    m = orders.shape[-1]
    idx = np.zeros(orders.shape[:-1], dtype=np.int64)
    for j in range(m - 1):
        smaller_after = np.zeros(orders.shape[:-1], dtype=np.int64)
        for k in range(j + 1, m):
            smaller_after += orders[..., k] < orders[..., j]
        idx += smaller_after * math.factorial(m - 1 - j)
    return idx


def pairwise_above_counts(pos: np.ndarray) -> np.ndarray:
    """(B, n, m) positions -> (B, m, m) counts of voters ranking a above b."""
    return (pos[:, :, :, None] < pos[:, :, None, :]).sum(axis=1, dtype=np.int16)


def margin_matrices(pos: np.ndarray) -> np.ndarray:
    """(B, n, m) positions -> (B, m, m) int16 margin matrices."""
    above = pairwise_above_counts(pos)
    return above - above.swapaxes(-1, -2)


def subset_first_counts(pos: np.ndarray, m: int) -> np.ndarray:
    """First-place counts per survivor subset.

    pos is (B, n, m) rank positions. Returns (B, 2^m, m) int16 where entry
    [b, s, c] counts the voters whose favorite candidate within subset s is c.
    """
    t = tables(m)
    B, n, _ = pos.shape
    counts = np.zeros((B, 1 << m, m), dtype=np.int16)
    cand_range = np.arange(m, dtype=np.int8)
    for s in range(1, 1 << m):
        members = np.flatnonzero(t.member_bits[s])
        sub = pos[:, :, members]
        top = members[np.argmin(sub, axis=-1)].astype(np.int8)
        counts[:, s, :] = (top[:, :, None] == cand_range).sum(axis=1, dtype=np.int16)
    return counts


def pack_winners(winner_bool: np.ndarray) -> np.ndarray:
    """(..., m) boolean winner indicators -> (...,) uint8 candidate bitmasks."""
    m = winner_bool.shape[-1]
    bits = (1 << np.arange(m)).astype(np.uint8)
    return (winner_bool * bits).sum(axis=-1).astype(np.uint8)


def _response_margins(
    margins_others: np.ndarray, ballot_idx: np.ndarray | None, m: int
) -> np.ndarray:
    t = tables(m)
    if ballot_idx is None:
        return margins_others[:, None, :, :] + t.ballot_margins[None, :, :, :]
    return margins_others[:, None, :, :] + t.ballot_margins[ballot_idx]


def _winners_borda(margins: np.ndarray) -> np.ndarray:
    rowsum = margins.sum(axis=-1, dtype=np.int32)
    return pack_winners(rowsum == rowsum.max(axis=-1, keepdims=True))


def _condorcet_bool(margins: np.ndarray) -> np.ndarray:
    m = margins.shape[-1]
    positive = margins > 0
    positive[..., np.arange(m), np.arange(m)] = True
    return positive.all(axis=-1)


def _winners_black(margins: np.ndarray) -> np.ndarray:
    cw = _condorcet_bool(margins)
    has_cw = cw.any(axis=-1)
    borda_mask = _winners_borda(margins)
    cw_mask = pack_winners(cw)
    return np.where(has_cw, cw_mask, borda_mask)


def _winners_minimax(margins: np.ndarray) -> np.ndarray:
    m = margins.shape[-1]
    masked = margins.astype(np.int32)
    masked[..., np.arange(m), np.arange(m)] = _NEG
    worst_in = masked.max(axis=-2)
    return pack_winners(worst_in == worst_in.min(axis=-1, keepdims=True))


def _winners_nanson(margins: np.ndarray) -> np.ndarray:
    # Strict Nanson: on the restriction to survivors S, a candidate's Borda
    # score is below the average iff its margin row-sum over S is negative.
    m = margins.shape[-1]
    alive = np.ones(margins.shape[:-1], dtype=bool)
    for _ in range(m):
        rowsum = np.where(alive[..., None, :], margins, 0).sum(axis=-1, dtype=np.int32)
        drop = alive & (rowsum < 0)
        if not drop.any():
            break
        alive &= ~drop
    return pack_winners(alive)


_NEG16 = np.int16(-(1 << 14))


def _widest_paths(margins: np.ndarray) -> np.ndarray:
    # margins are voter counts (|entry| <= n <= a few dozen), so int16 widest
    # paths never overflow and halve the memory traffic of this hot loop.
    m = margins.shape[-1]
    strength = np.where(margins > 0, margins.astype(np.int16), _NEG16)
    strength[..., np.arange(m), np.arange(m)] = _NEG16
    buf = np.empty_like(strength)
    for k in range(m):
        np.minimum(strength[..., :, k, None], strength[..., None, k, :], out=buf)
        np.maximum(strength, buf, out=strength)
    return strength


def _winners_split_cycle(margins: np.ndarray) -> np.ndarray:
    margins = margins.astype(np.int16, copy=False)
    strength = _widest_paths(margins)
    incoming = margins.swapaxes(-1, -2)  # incoming[a, b] = margin(b, a)
    survives = (incoming > 0) & (strength < incoming)
    return pack_winners(~survives.any(axis=-1))


def _sv_scan(
    sub: np.ndarray,
    sc_global: np.ndarray,
    members: list[int],
    child_lookup,
) -> np.ndarray:
    """Vectorized max-margin pair scan of the Stable Voting recursion.

    sub is the (N, k, k) restriction of the margins to ``members`` (global
    candidate ids); sc_global the Split Cycle winner bitmasks over global
    bits; child_lookup(b) the Stable Voting bitmask with b removed. A pair
    (a, b) succeeds when a wins without b; all a of the top-margin successful
    pairs win.
    """
    k = len(members)
    N = sub.shape[0]
    success = np.zeros((N, k, k), dtype=bool)
    for bi, b in enumerate(members):
        child = child_lookup(b).astype(np.int64)
        for ai, a in enumerate(members):
            if a != b:
                success[:, ai, bi] = (child >> a) & 1
    a_bits = sc_global.astype(np.int64)[:, None] >> np.asarray(members)[None, :]
    a_is_sc = (a_bits & 1).astype(bool)
    success &= a_is_sc[:, :, None]
    score = np.where(success, sub.astype(np.int16, copy=False), _NEG16)
    best = score.max(axis=(1, 2))
    win_local = (success & (score == best[:, None, None])).any(axis=2)
    bits = (1 << np.asarray(members, dtype=np.int64)).astype(np.int64)
    return (win_local * bits).sum(axis=1).astype(np.uint8)


def _winners_stable_voting(margins: np.ndarray) -> np.ndarray:
    """Stable Voting on a batch of margin matrices.

    Cells with a lone Split Cycle winner are done outright. The rest go
    through a bottom-up dynamic program over survivor subsets (winner masks
    stay in the original candidate numbering throughout): for each subset,
    Split Cycle of the restriction either settles it or the max-margin pair
    scan consults the already-computed one-removal children.
    """
    m = margins.shape[-1]
    sc = _winners_split_cycle(margins)
    t = tables(m)
    flat_sc = sc.reshape(-1)
    multi = np.flatnonzero(t.popcount[flat_sc.astype(np.int64)] > 1)
    if not multi.size:
        return sc
    flat = margins.reshape(-1, m, m)
    sub_flat = flat[multi].astype(np.int16).reshape(-1, m * m)  # (N, m*m)
    N = sub_flat.shape[0]

    table = np.zeros((1 << m, N), dtype=np.uint8)
    for s in t.subsets_by_size[1]:
        table[s] = s
    for size in range(2, m + 1):
        for s in t.subsets_by_size[size]:
            members = [c for c in range(m) if s >> c & 1]
            mem = np.asarray(members, dtype=np.int64)
            if size == m:
                sub = sub_flat.reshape(N, m, m)
                sc_s = flat_sc[multi]
            else:
                gather = (mem[:, None] * m + mem[None, :]).reshape(-1)
                sub = sub_flat[:, gather].reshape(N, size, size)
                sc_local = _winners_split_cycle(sub).astype(np.int64)
                local_bits = (sc_local[:, None] >> np.arange(size)) & 1
                sc_s = (local_bits << mem[None, :]).sum(axis=1).astype(np.uint8)
            scanned = _sv_scan(
                sub, sc_s, members, lambda b: table[s ^ (1 << b)]
            )
            single = t.popcount[sc_s.astype(np.int64)] == 1
            table[s] = np.where(single, sc_s, scanned)
    result = sc.copy()
    result.reshape(-1)[multi] = table[(1 << m) - 1]
    return result


def _winners_plurality(counts: np.ndarray) -> np.ndarray:
    return pack_winners(counts == counts.max(axis=-1, keepdims=True))


def _gather_counts(
    counts_table: np.ndarray, subset: np.ndarray, ballot_idx: np.ndarray, m: int
) -> np.ndarray:
    """Full-electorate first-place counts for per-cell survivor subsets.

    counts_table is (B, 2^m, m) for the other voters; subset and ballot_idx are
    (B, K). Adds the manipulator's one vote for their favorite in the subset.
    """
    t = tables(m)
    B = counts_table.shape[0]
    rows = np.arange(B)[:, None]
    counts = counts_table[rows, subset].astype(np.int16)
    top = t.top_of[ballot_idx, subset]
    counts += top[..., None] == np.arange(m, dtype=np.int8)
    return counts


def _winners_irv_simultaneous(
    counts_table: np.ndarray, ballot_idx: np.ndarray, n: int, m: int
) -> np.ndarray:
    t = tables(m)
    shape = ballot_idx.shape
    alive = np.full(shape, (1 << m) - 1, dtype=np.int64)
    done = np.zeros(shape, dtype=bool)
    result = np.zeros(shape, dtype=np.uint8)
    for _ in range(m):
        if done.all():
            break
        counts = _gather_counts(counts_table, alive, ballot_idx, m)
        member = t.member_bits[alive]
        maj = 2 * counts > n
        has_maj = maj.any(axis=-1) & ~done
        result = np.where(has_maj, pack_winners(maj), result)
        done |= has_maj
        masked = np.where(member, counts.astype(np.int32), _BIG)
        fewest = masked.min(axis=-1, keepdims=True)
        loser_bits = pack_winners(member & (masked == fewest)).astype(np.int64)
        all_tie = (loser_bits == alive) & ~done
        result = np.where(all_tie, alive.astype(np.uint8), result)
        done |= all_tie
        survivors = alive & ~loser_bits
        single = (t.popcount[survivors] == 1) & ~done
        result = np.where(single, survivors.astype(np.uint8), result)
        done |= single
        alive = np.where(done, alive, survivors)
    return result


def _counts_for_fixed_subset(
    counts_table: np.ndarray, s: int, ballot_idx: np.ndarray, m: int
) -> np.ndarray:
    """Like _gather_counts but for one survivor subset shared by all cells."""
    t = tables(m)
    top = t.top_of[ballot_idx, s]
    counts = counts_table[:, s, :][:, None, :].astype(np.int16)
    return counts + (top[..., None] == np.arange(m, dtype=np.int8))


def _winners_irv_put(
    counts_table: np.ndarray, ballot_idx: np.ndarray, n: int, m: int
) -> np.ndarray:
    t = tables(m)
    shape = ballot_idx.shape
    table = np.zeros((1 << m,) + shape, dtype=np.uint8)
    for s in t.subsets_by_size[1]:
        table[s] = s
    for size in range(2, m + 1):
        for s in t.subsets_by_size[size]:
            members = [c for c in range(m) if s >> c & 1]
            members_arr = np.asarray(members, dtype=np.int8)
            top = t.top_of[ballot_idx, s]
            counts = counts_table[:, s, members][:, None, :] + (
                top[..., None] == members_arr
            )
            maj = 2 * counts > n
            has_maj = maj.any(axis=-1)
            fewest = counts.min(axis=-1, keepdims=True)
            union = np.zeros(shape, dtype=np.uint8)
            for j, b in enumerate(members):
                is_min = counts[..., j] == fewest[..., 0]
                union |= np.where(is_min, table[s ^ (1 << b)], 0)
            maj_bits = (maj * (1 << members_arr).astype(np.uint8)).sum(axis=-1).astype(np.uint8)
            table[s] = np.where(has_maj, maj_bits, union)
    return table[(1 << m) - 1]


class ResponseEngine:
    """Winner masks for one batch of elections under a fixed voting method.

    utilities is (B, n, m); the manipulator is voter 0. ``winner_masks``
    evaluates the method on the profile where voter 0 submits each requested
    ballot (all m! rankings when ballot_idx is None), returning uint8
    candidate bitmasks of shape (B, K).
    """

    def __init__(self, method: MethodId, utilities: np.ndarray):
        if utilities.ndim != 3:
            raise ValueError("utilities must be (batch, voters, candidates)")
        self.method = MethodId(method)
        self.B, self.n, self.m = utilities.shape
        self.t = tables(self.m)
        orders = rankings_from_utilities(utilities)
        self.pos = positions_from_orders(orders)
        self.sincere_idx = ranking_indices(orders[:, 0, :])
        self._margins_others: np.ndarray | None = None
        self._counts_table: np.ndarray | None = None

    def _needs_margins(self) -> bool:
        return self.method in (
            MethodId.BORDA,
            MethodId.BLACK,
            MethodId.MINIMAX,
            MethodId.NANSON,
            MethodId.SPLIT_CYCLE,
            MethodId.STABLE_VOTING,
        )

    @property
    def margins_others(self) -> np.ndarray:
        if self._margins_others is None:
            self._margins_others = margin_matrices(self.pos[:, 1:, :])
        return self._margins_others

    @property
    def counts_table(self) -> np.ndarray:
        if self._counts_table is None:
            self._counts_table = subset_first_counts(self.pos[:, 1:, :], self.m)
        return self._counts_table

    def _robust_condorcet_winner(self) -> np.ndarray:
        """Candidate who is the Condorcet winner no matter what the
        manipulator submits (-1 when none): the other voters alone give them a
        margin of at least 2 over every rival, which one ballot cannot undo."""
        mo = self.margins_others
        off = mo + 2 * self.n * np.eye(self.m, dtype=mo.dtype)
        robust = (off >= 2).all(axis=-1)
        return np.where(robust.any(axis=-1), robust.argmax(axis=-1), -1)

    def winner_masks(self, ballot_idx: np.ndarray | None = None) -> np.ndarray:
        method, m = self.method, self.m
        if ballot_idx is not None:
            ballot_idx = np.asarray(ballot_idx, dtype=np.int64)
            if ballot_idx.ndim == 1:
                ballot_idx = ballot_idx[:, None]
        if self._needs_margins():
            condorcet_consistent = method != MethodId.BORDA
            if condorcet_consistent:
                robust = self._robust_condorcet_winner()
                open_rows = np.flatnonzero(robust < 0)
                if open_rows.size < self.B:
                    K = self.t.fact if ballot_idx is None else ballot_idx.shape[1]
                    out = np.empty((self.B, K), dtype=np.uint8)
                    out[:] = np.where(robust >= 0, 1 << np.maximum(robust, 0), 0).astype(np.uint8)[:, None]
                    if open_rows.size:
                        sub_idx = None if ballot_idx is None else ballot_idx[open_rows]
                        margins = _response_margins(
                            self.margins_others[open_rows], sub_idx, m
                        )
                        out[open_rows] = self._margin_method_masks(method, margins)
                    return out
            margins = _response_margins(self.margins_others, ballot_idx, m)
            return self._margin_method_masks(method, margins)
        if ballot_idx is None:
            idx = np.broadcast_to(np.arange(self.t.fact), (self.B, self.t.fact))
        else:
            idx = ballot_idx
        if method == MethodId.PLURALITY:
            counts = _counts_for_fixed_subset(self.counts_table, (1 << m) - 1, idx, m)
            return _winners_plurality(counts)
        if method == MethodId.IRV_SIMULTANEOUS:
            return _winners_irv_simultaneous(self.counts_table, idx, self.n, m)
        return _winners_irv_put(self.counts_table, idx, self.n, m)

    @staticmethod
    def _margin_method_masks(method: MethodId, margins: np.ndarray) -> np.ndarray:
        if method == MethodId.BORDA:
            return _winners_borda(margins)
        if method == MethodId.BLACK:
            return _winners_black(margins)
        if method == MethodId.MINIMAX:
            return _winners_minimax(margins)
        if method == MethodId.NANSON:
            return _winners_nanson(margins)
        if method == MethodId.SPLIT_CYCLE:
            return _winners_split_cycle(margins)
        return _winners_stable_voting(margins)

    def lottery_eus(self, masks: np.ndarray, utility_rows: np.ndarray) -> np.ndarray:
        """Even-chance lottery EU of each winner mask for the given utility rows.

        masks is (B, K) uint8; utility_rows is (B, m). Returns (B, K) float64.
        """
        sums = utility_rows @ self.t.member_bits.T.astype(np.float64)
        take = sums[np.arange(masks.shape[0])[:, None], masks.astype(np.int64)]
        return take / self.t.popcount[masks.astype(np.int64)]


def response_eus(method: MethodId, utilities: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expected utility of every possible ballot for a batch of elections.

    Returns (eus, sincere_idx): eus is (B, m!) float64 for manipulator voter 0,
    sincere_idx (B,) the lexicographic index of each sincere ballot.
    """
    eng = ResponseEngine(method, utilities)
    masks = eng.winner_masks(None)
    eus = eng.lottery_eus(masks, utilities[:, 0, :])
    return eus, eng.sincere_idx
