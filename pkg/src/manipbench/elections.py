"""Core election domain: rankings, profiles, utilities, margins, Condorcet winners.

Candidates are integers 0..m-1 and voters are row indices. Every value in this
module is immutable after construction and safe to share between workers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

MAX_CANDIDATES = 6

# Winner sets are plain frozensets of candidate indices (always nonempty).
WinnerSet = frozenset


@lru_cache(maxsize=None)
def all_rankings(m: int) -> tuple[tuple[int, ...], ...]:
    """All m! candidate orders in lexicographic order (index 0 is 0>1>...>m-1)."""
    if not 1 <= m <= MAX_CANDIDATES:
        raise ValueError(f"m must be in 1..{MAX_CANDIDATES}, got {m}")
    return tuple(itertools.permutations(range(m)))


@lru_cache(maxsize=None)
def _ranking_index_table(m: int) -> dict[tuple[int, ...], int]:
    return {order: k for k, order in enumerate(all_rankings(m))}


@dataclass(frozen=True)
class Ranking:
    """A strict linear order of candidates, top to bottom.

    ``index`` is the position of ``order`` in the lexicographic enumeration of
    all permutations of 0..m-1; this indexing is a stable contract used by the
    action space, dataset files, and network outputs.
    """

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(c) for c in self.order)
        object.__setattr__(self, "order", order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation of 0..{len(order) - 1}: {order}")

    @property
    def m(self) -> int:
        return len(self.order)

    @property
    def index(self) -> int:
        return _ranking_index_table(self.m)[self.order]

    @classmethod
    def from_index(cls, m: int, index: int) -> "Ranking":
        rankings = all_rankings(m)
        if not 0 <= index < len(rankings):
            raise ValueError(f"ranking index {index} out of range for m={m}")
        return cls(rankings[index])

    def position_of(self, candidate: int) -> int:
        """0-based position of a candidate (0 = top)."""
        return self.order.index(candidate)

    def __iter__(self):
        return iter(self.order)


class Profile:
    """A preference profile: one strict ranking per voter over m candidates."""

    __slots__ = ("m", "_orders")

    def __init__(self, m: int, rankings: Sequence[Ranking | Sequence[int]]):
        if not rankings:
            raise ValueError("a profile needs at least one voter")
        orders = []
        for r in rankings:
            rk = r if isinstance(r, Ranking) else Ranking(tuple(r))
            if rk.m != m:
                raise ValueError(f"ranking {rk.order} does not cover {m} candidates")
            orders.append(rk.order)
        arr = np.array(orders, dtype=np.int8)
        arr.flags.writeable = False
        self.m = int(m)
        self._orders = arr

    @classmethod
    def _from_array(cls, m: int, orders: np.ndarray) -> "Profile":
        p = object.__new__(cls)
        arr = np.ascontiguousarray(orders, dtype=np.int8)
        arr.flags.writeable = False
        p.m = int(m)
        p._orders = arr
        return p

    @property
    def n(self) -> int:
        return self._orders.shape[0]

    @property
    def orders(self) -> np.ndarray:
        """(n, m) array; row i lists voter i's candidates from top to bottom."""
        return self._orders

    def ranking(self, voter: int) -> Ranking:
        return Ranking(tuple(int(c) for c in self._orders[voter]))

    @property
    def rankings(self) -> tuple[Ranking, ...]:
        return tuple(self.ranking(i) for i in range(self.n))

    def positions(self) -> np.ndarray:
        """(n, m) array of rank positions: positions()[i, c] is candidate c's
        0-based position on voter i's ballot."""
        pos = np.empty_like(self._orders)
        rows = np.arange(self.n)[:, None]
        pos[rows, self._orders] = np.arange(self.m, dtype=np.int8)
        return pos

    def __eq__(self, other):
        return (
            isinstance(other, Profile)
            and self.m == other.m
            and np.array_equal(self._orders, other._orders)
        )

    def __hash__(self):
        return hash((self.m, self._orders.tobytes()))

    def __repr__(self):
        ballots = [">".join(str(c) for c in row) for row in self._orders]
        return f"Profile(m={self.m}, ballots={ballots})"


class UtilityProfile:
    """An n x m matrix of utilities; within each row all values are distinct."""

    __slots__ = ("m", "_rows")

    def __init__(self, rows: Sequence[Sequence[float]] | np.ndarray):
        arr = np.array(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("utilities must be a non-empty 2-D array")
        for i, row in enumerate(arr):
            if len(np.unique(row)) != arr.shape[1]:
                raise ValueError(f"duplicate utilities in row {i}: {row}")
        arr.flags.writeable = False
        self.m = int(arr.shape[1])
        self._rows = arr

    @classmethod
    def _from_array(cls, rows: np.ndarray) -> "UtilityProfile":
        u = object.__new__(cls)
        arr = np.ascontiguousarray(rows, dtype=np.float64)
        arr.flags.writeable = False
        u.m = int(arr.shape[1])
        u._rows = arr
        return u

    @property
    def n(self) -> int:
        return self._rows.shape[0]

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    def row(self, voter: int) -> np.ndarray:
        return self._rows[voter]

    def __eq__(self, other):
        return isinstance(other, UtilityProfile) and np.array_equal(self._rows, other._rows)

    def __repr__(self):
        return f"UtilityProfile(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class MarginMatrix:
    """Skew-symmetric matrix of pairwise margins for an n-voter profile."""

    entries: np.ndarray
    n: int

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("margin matrix must be square")
        if np.any(e != -e.T):
            raise ValueError("margin matrix must be skew-symmetric")
        off_diag = ~np.eye(e.shape[0], dtype=bool)
        if np.any(np.abs(e) > self.n) or np.any((e[off_diag] - self.n) % 2 != 0):
            raise ValueError("margins must satisfy |entry| <= n and entry == n (mod 2)")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return int(self.entries[key])


class Restriction(NamedTuple):
    """A profile with one candidate removed, plus the dense re-indexing map.

    ``kept[new_index] == old_index`` translates winners of the restricted
    profile back to the original candidate numbering.
    """

    profile: Profile
    kept: tuple[int, ...]


def _check_candidate(profile: Profile, c: int) -> None:
    if not 0 <= c < profile.m:
        raise IndexError(f"candidate {c} out of range for m={profile.m}")


def margin(profile: Profile, a: int, b: int) -> int:
    """Number of voters ranking a above b minus the number ranking b above a."""
    _check_candidate(profile, a)
    _check_candidate(profile, b)
    if a == b:
        return 0
    pos = profile.positions()
    above = int(np.sum(pos[:, a] < pos[:, b]))
    return 2 * above - profile.n


def margin_matrix(profile: Profile) -> MarginMatrix:
    """Pairwise margin matrix of a profile."""
    pos = profile.positions()
    above = (pos[:, :, None] < pos[:, None, :]).sum(axis=0).astype(np.int64)
    return MarginMatrix(entries=above - above.T, n=profile.n)


def condorcet_winner(profile: Profile) -> Optional[int]:
    """The candidate with a positive margin over every rival, if one exists."""
    entries = margin_matrix(profile).entries
    for c in range(profile.m):
        if all(entries[c, d] > 0 for d in range(profile.m) if d != c):
            return c
    return None


def induced_profile(u: UtilityProfile) -> Profile:
    """The profile ranking candidates by strictly decreasing utility per voter."""
    orders = np.argsort(-u.rows, axis=1, kind="stable").astype(np.int8)
    return Profile._from_array(u.m, orders)


def remove_candidate(profile: Profile, a: int) -> Restriction:
    """Restrict every ballot to the candidates other than a.

    Surviving candidates are renumbered densely (order preserved); the old
    indices are returned so recursive methods can translate winners back.
    """
    _check_candidate(profile, a)
    if profile.m < 2:
        raise ValueError("cannot remove a candidate from a 1-candidate profile")
    kept = tuple(c for c in range(profile.m) if c != a)
    old_to_new = np.full(profile.m, -1, dtype=np.int8)
    for new, old in enumerate(kept):
        old_to_new[old] = new
    orders = profile.orders
    restricted = old_to_new[orders[orders != a].reshape(profile.n, profile.m - 1)]
    return Restriction(Profile._from_array(profile.m - 1, restricted), kept)


def replace_ballot(profile: Profile, voter: int, r: Ranking) -> Profile:
    """A copy of the profile with one voter's ballot replaced."""
    if not 0 <= voter < profile.n:
        raise IndexError(f"voter {voter} out of range for n={profile.n}")
    if r.m != profile.m:
        raise ValueError(f"ballot covers {r.m} candidates, profile has {profile.m}")
    orders = profile.orders.copy()
    orders[voter] = r.order
    return Profile._from_array(profile.m, orders)


def factorial(m: int) -> int:
    return math.factorial(m)


# --- Canonical fixtures -------------------------------------------------
#
# Small 3-candidate profiles (a=0, b=1, c=2) with hand-checkable outcomes,
# shared by the test suites of every module.

def profile_cycle() -> Profile:
    """m=3, n=3: a>b>c, b>c>a, c>a>b (perfect majority cycle)."""
    return Profile(3, [(0, 1, 2), (1, 2, 0), (2, 0, 1)])


def profile_5() -> Profile:
    """m=3, n=5: two a>b>c, one c>a>b, two b>c>a."""
    return Profile(3, [(0, 1, 2), (0, 1, 2), (2, 0, 1), (1, 2, 0), (1, 2, 0)])


def profile_unanimous() -> Profile:
    """m=3, n=3: all voters a>b>c."""
    return Profile(3, [(0, 1, 2)] * 3)


def utilities_tie4() -> UtilityProfile:
    """m=3, n=4: voter 0 (the manipulator) has utilities (1.0, 0.5, 0.0) and
    sincere ballot a>b>c; voter 1 votes a>b>c; voters 2 and 3 vote b>a>c."""
    return UtilityProfile(
        [
            [1.0, 0.5, 0.0],
            [1.0, 0.5, 0.0],
            [0.5, 1.0, 0.0],
            [0.5, 1.0, 0.0],
        ]
    )


def profile_tie4() -> Profile:
    return induced_profile(utilities_tie4())


def profile_irv4() -> Profile:
    """m=3, n=4: a>b>c, a>b>c, b>a>c, c>b>a (splits the two IRV variants)."""
    return Profile(3, [(0, 1, 2), (0, 1, 2), (1, 0, 2), (2, 1, 0)])
