"""The nine preferential voting methods and the even-chance-lottery utility.

Every method maps a Profile to a nonempty frozenset of winning candidates.
Plurality and both Instant Runoff variants work from first-place counts; the
remaining methods are functions of the pairwise margin matrix only, which is
what makes candidate-removal recursions cheap (restriction = submatrix).
"""

from __future__ import annotations

from enum import IntEnum
from typing import Callable, Sequence

import numpy as np

from .elections import (
    Profile,
    WinnerSet,
    condorcet_winner,
    margin_matrix,
)


class MethodId(IntEnum):
    """Stable integer codes used in dataset files and CLI flags."""

    PLURALITY = 0
    IRV_PUT = 1
    IRV_SIMULTANEOUS = 2
    BORDA = 3
    BLACK = 4
    MINIMAX = 5
    NANSON = 6
    SPLIT_CYCLE = 7
    STABLE_VOTING = 8

    @classmethod
    def parse(cls, text: str) -> "MethodId":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "plurality": cls.PLURALITY,
            "irv_put": cls.IRV_PUT,
            "irv": cls.IRV_PUT,
            "irv_simultaneous": cls.IRV_SIMULTANEOUS,
            "irv_sim": cls.IRV_SIMULTANEOUS,
            "borda": cls.BORDA,
            "black": cls.BLACK,
            "minimax": cls.MINIMAX,
            "nanson": cls.NANSON,
            "split_cycle": cls.SPLIT_CYCLE,
            "stable_voting": cls.STABLE_VOTING,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(int(key))
        except ValueError:
            raise ValueError(f"unknown voting method: {text!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


def plurality_counts(profile: Profile) -> np.ndarray:
    """First-place vote count per candidate."""
    return np.bincount(profile.orders[:, 0], minlength=profile.m)


def plurality(profile: Profile) -> WinnerSet:
    """Candidates with the most first-place rankings."""
    counts = plurality_counts(profile)
    return frozenset(np.flatnonzero(counts == counts.max()).tolist())


def borda_scores(profile: Profile) -> np.ndarray:
    """Borda score per candidate: m-1 points for a top ranking down to 0 for last."""
    pos = profile.positions()
    return (profile.m - 1 - pos).sum(axis=0)


def borda(profile: Profile) -> WinnerSet:
    """Candidates with maximal Borda score."""
    scores = borda_scores(profile)
    return frozenset(np.flatnonzero(scores == scores.max()).tolist())


def _first_counts_within(orders: np.ndarray, alive: frozenset, m: int) -> np.ndarray:
    """First-place counts when only the candidates in ``alive`` remain."""
    counts = np.zeros(m, dtype=np.int64)
    for row in orders:
        for c in row:
            if c in alive:
                counts[c] += 1
                break
    return counts


def irv_put(profile: Profile) -> WinnerSet:
    """Instant Runoff with parallel-universe tiebreaking.

    A strict majority of first-place votes wins outright; otherwise the winner
    set is the union, over every candidate tied for the fewest first-place
    votes, of the IRV-PUT winners after removing that candidate.
    """
    n, m = profile.n, profile.m
    orders = profile.orders
    memo: dict[frozenset, frozenset] = {}

    def solve(alive: frozenset) -> frozenset:
        if len(alive) == 1:
            return frozenset(alive)
        cached = memo.get(alive)
        if cached is not None:
            return cached
        counts = _first_counts_within(orders, alive, m)
        alive_list = sorted(alive)
        for c in alive_list:
            if 2 * counts[c] > n:
                result = frozenset({c})
                memo[alive] = result
                return result
        fewest = min(counts[c] for c in alive_list)
        winners: set = set()
        for b in alive_list:
            if counts[b] == fewest:
                winners |= solve(alive - {b})
        result = frozenset(winners)
        memo[alive] = result
        return result

    return solve(frozenset(range(m)))


def irv_simultaneous(profile: Profile) -> WinnerSet:
    """Instant Runoff that eliminates all fewest-first-place candidates at once.

    If every remaining candidate ties for fewest, they all win.
    """
    n, m = profile.n, profile.m
    orders = profile.orders
    alive = frozenset(range(m))
    while True:
        if len(alive) == 1:
            return frozenset(alive)
        counts = _first_counts_within(orders, alive, m)
        alive_list = sorted(alive)
        for c in alive_list:
            if 2 * counts[c] > n:
                return frozenset({c})
        fewest = min(counts[c] for c in alive_list)
        losers = {c for c in alive_list if counts[c] == fewest}
        if losers == alive:
            return frozenset(alive)
        alive = alive - losers


def black(profile: Profile) -> WinnerSet:
    """The Condorcet winner if one exists, otherwise the Borda winners."""
    cw = condorcet_winner(profile)
    if cw is not None:
        return frozenset({cw})
    return borda(profile)


def minimax(profile: Profile) -> WinnerSet:
    """Candidates minimizing their worst (largest) incoming margin."""
    entries = margin_matrix(profile).entries
    worst = _minimax_scores(entries)
    return frozenset(np.flatnonzero(worst == worst.min()).tolist())


def _minimax_scores(entries: np.ndarray) -> np.ndarray:
    masked = entries.copy()
    np.fill_diagonal(masked, np.iinfo(np.int64).min)
    return masked.max(axis=0)


def nanson(profile: Profile) -> WinnerSet:
    """Strict Nanson: repeatedly drop candidates with Borda score strictly
    below the average on the restricted profile, until none are below."""
    entries = margin_matrix(profile).entries
    n = profile.n
    alive = list(range(profile.m))
    while True:
        k = len(alive)
        sub = entries[np.ix_(alive, alive)]
        # Borda score on the restriction, with c's score = sum over rivals d of
        # the number of voters preferring c to d = (n + margin) / 2.
        doubled = n * (k - 1) + sub.sum(axis=1)
        below = doubled < doubled.mean()
        if not below.any():
            return frozenset(alive)
        alive = [c for c, drop in zip(alive, below) if not drop]


def _widest_path_strengths(entries: np.ndarray) -> np.ndarray:
    """strength[a, b] = best over directed a->b paths of the minimal edge
    weight along the path, using only positive-margin edges."""
    m = entries.shape[0]
    neg_inf = np.iinfo(np.int64).min // 2
    strength = np.where(entries > 0, entries, neg_inf)
    np.fill_diagonal(strength, neg_inf)
    for k in range(m):
        via = np.minimum(strength[:, k][:, None], strength[k, :][None, :])
        strength = np.maximum(strength, via)
    return strength


def split_cycle(profile: Profile) -> WinnerSet:
    """Split Cycle winners.

    In the margin graph, an edge a->b of weight w is deleted exactly when it is
    a minimal-weight edge of some simple cycle, i.e. when a directed path from
    b back to a exists whose edges all have weight >= w. Winners are the
    candidates with no surviving incoming edge.
    """
    entries = margin_matrix(profile).entries
    return frozenset(_split_cycle_from_margins(entries))


def _split_cycle_from_margins(entries: np.ndarray) -> list[int]:
    m = entries.shape[0]
    strength = _widest_path_strengths(entries)
    winners = []
    for a in range(m):
        incoming_survives = any(
            entries[b, a] > 0 and strength[a, b] < entries[b, a]
            for b in range(m)
            if b != a
        )
        if not incoming_survives:
            winners.append(a)
    return winners


def stable_voting(profile: Profile) -> WinnerSet:
    """Stable Voting.

    A lone Split Cycle winner wins outright. Otherwise, scanning margin values
    in strictly decreasing order over pairs (a, b) with a a Split Cycle winner
    and b any other candidate (negative margins included), the winners are all
    a in the first pair(s) for which a wins Stable Voting with b removed.
    """
    entries = margin_matrix(profile).entries
    return frozenset(stable_voting_from_margins(entries))


_NEG = -(1 << 30)


def _split_cycle_small(rows: Sequence[Sequence[int]], ids: tuple[int, ...]) -> list[int]:
    """Split Cycle on a margin submatrix, in plain Python (hot path for the
    batched oracle's recursion fallback). Returns winners as ids entries."""
    k = len(ids)
    strength = [
        [rows[a][b] if rows[a][b] > 0 else _NEG for b in ids] for a in ids
    ]
    for i in range(k):
        strength[i][i] = _NEG
    for mid in range(k):
        row_mid = strength[mid]
        for i in range(k):
            s_im = strength[i][mid]
            if s_im == _NEG:
                continue
            row_i = strength[i]
            for j in range(k):
                v = s_im if s_im < row_mid[j] else row_mid[j]
                if v > row_i[j]:
                    row_i[j] = v
    winners = []
    for j in range(k):
        for i in range(k):
            w = rows[ids[i]][ids[j]]
            if i != j and w > 0 and strength[j][i] < w:
                break
        else:
            winners.append(ids[j])
    return winners


def _drop_candidate(sub: tuple[tuple[int, ...], ...], b: int) -> tuple[tuple[int, ...], ...]:
    return tuple(
        tuple(row[j] for j in range(len(sub)) if j != b)
        for i, row in enumerate(sub)
        if i != b
    )


def sv_from_margin_content(
    sub: tuple[tuple[int, ...], ...],
    memo: dict,
) -> tuple[int, ...]:
    """Stable Voting winners (local indices) for a margin matrix given as a
    tuple of tuples. ``memo`` maps matrix content to winners and may be shared
    across calls: identical submatrices occur constantly when scoring all m!
    ballots of one election, so sharing it there is a large win."""
    k = len(sub)
    if k == 1:
        return (0,)
    hit = memo.get(sub)
    if hit is not None:
        return hit
    ids = tuple(range(k))
    sc = _split_cycle_small(sub, ids)
    if len(sc) == 1:
        result = (sc[0],)
        memo[sub] = result
        return result
    pairs = [(sub[a][b], a, b) for a in sc for b in ids if b != a]
    pairs.sort(key=lambda t: -t[0])
    winners: list[int] = []
    current = None
    for value, a, b in pairs:
        if winners and value != current:
            break
        child = sv_from_margin_content(_drop_candidate(sub, b), memo)
        if (a - (a > b)) in child and a not in winners:
            winners.append(a)
        current = value
    if not winners:
        raise RuntimeError("stable voting produced no winner")
    result = tuple(sorted(winners))
    memo[sub] = result
    return result


def stable_voting_from_margins(entries, memo: dict | None = None) -> list[int]:
    """Stable Voting computed from a margin matrix (nested list or array)."""
    sub = tuple(tuple(int(x) for x in row) for row in entries)
    return list(sv_from_margin_content(sub, {} if memo is None else memo))


def lottery_eu(winners: WinnerSet, utilities: Sequence[float] | np.ndarray) -> float:
    """Expected utility of the even-chance lottery over a winner set."""
    if not winners:
        raise ValueError("winner set must be nonempty")
    u = np.asarray(utilities, dtype=np.float64)
    return float(sum(u[c] for c in winners) / len(winners))


METHODS: dict[MethodId, Callable[[Profile], WinnerSet]] = {
    MethodId.PLURALITY: plurality,
    MethodId.IRV_PUT: irv_put,
    MethodId.IRV_SIMULTANEOUS: irv_simultaneous,
    MethodId.BORDA: borda,
    MethodId.BLACK: black,
    MethodId.MINIMAX: minimax,
    MethodId.NANSON: nanson,
    MethodId.SPLIT_CYCLE: split_cycle,
    MethodId.STABLE_VOTING: stable_voting,
}


def apply_method(method: MethodId, profile: Profile) -> WinnerSet:
    return METHODS[MethodId(method)](profile)
