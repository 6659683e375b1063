"""Election generation under three probability models, from seeded streams.

All sampling goes through numpy's PCG64 generator: a named, portable algorithm
whose output for a given seed is identical across platforms (for a fixed numpy
version), which makes datasets and evaluations replayable. Batched sampling is
the primary path; the single-profile functions draw a batch of one so both
paths consume the stream identically.

Rows with duplicated utilities (a measure-zero event that float rounding can
still produce) are resampled rather than tie-broken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .elections import UtilityProfile


class ModelKind(IntEnum):
    """Stable integer codes used in dataset files and CLI flags."""

    UNIFORM = 0
    SPATIAL2D = 1
    MALLOWS = 2


@dataclass(frozen=True)
class ProbModel:
    kind: ModelKind
    rel_phi: float = 0.8

    def __post_init__(self):
        if self.kind == ModelKind.MALLOWS and not 0.0 < self.rel_phi <= 1.0:
            raise ValueError(f"rel_phi must be in (0, 1], got {self.rel_phi}")

    @classmethod
    def uniform(cls) -> "ProbModel":
        return cls(ModelKind.UNIFORM)

    @classmethod
    def spatial2d(cls) -> "ProbModel":
        return cls(ModelKind.SPATIAL2D)

    @classmethod
    def mallows(cls, rel_phi: float = 0.8) -> "ProbModel":
        return cls(ModelKind.MALLOWS, rel_phi)

    @classmethod
    def parse(cls, text: str) -> "ProbModel":
        key, _, arg = text.strip().lower().partition(":")
        if key in ("uniform", "0"):
            return cls.uniform()
        if key in ("spatial2d", "spatial", "1"):
            return cls.spatial2d()
        if key in ("mallows", "2"):
            return cls.mallows(float(arg) if arg else 0.8)
        raise ValueError(f"unknown probability model: {text!r}")

    @property
    def label(self) -> str:
        if self.kind == ModelKind.MALLOWS:
            return f"mallows:{self.rel_phi:g}"
        return self.kind.name.lower()


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Derive an independent stream from a seed and integer keys so that
    workers and batches get deterministic streams regardless of scheduling."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass(frozen=True)
class RandomStream:
    """A seed plus the (fixed, named) generator algorithm behind it. Handing
    one of these around instead of a live generator keeps derived streams
    independent of scheduling order."""

    seed: int
    algorithm: str = "pcg64"

    def __post_init__(self):
        if self.algorithm != "pcg64":
            raise ValueError(f"unsupported generator algorithm: {self.algorithm}")

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed)

    def derive(self, *keys: int) -> np.random.Generator:
        return substream(self.seed, *keys)


def _rows_have_duplicates(utilities: np.ndarray) -> np.ndarray:
    """(..., m) utilities -> boolean mask over rows with any repeated value."""
    s = np.sort(utilities, axis=-1)
    return (np.diff(s, axis=-1) == 0).any(axis=-1)


def sample_uniform_batch(count: int, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """(count, n, m) i.i.d. uniform [0,1] utilities, duplicate rows resampled."""
    u = rng.uniform(size=(count, n, m))
    bad = _rows_have_duplicates(u)
    while bad.any():
        for b, i in zip(*np.nonzero(bad)):
            u[b, i] = rng.uniform(size=m)
        bad = _rows_have_duplicates(u)
    return u


def sample_spatial2d_batch(count: int, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Voters and candidates i.i.d. standard bivariate normal; utility is the
    negated squared Euclidean distance from voter to candidate."""
    voters = rng.standard_normal(size=(count, n, 2))
    cands = rng.standard_normal(size=(count, m, 2))
    u = -((voters[:, :, None, :] - cands[:, None, :, :]) ** 2).sum(axis=-1)
    bad = _rows_have_duplicates(u)
    while bad.any():
        for b, i in zip(*np.nonzero(bad)):
            v = rng.standard_normal(size=2)
            u[b, i] = -((v[None, :] - cands[b]) ** 2).sum(axis=-1)
        bad = _rows_have_duplicates(u)
    return u


def mallows_step_expectation(phi: float, i: int) -> float:
    """Expected inversions added when inserting the (i+1)-th item."""
    weights = phi ** np.arange(i + 1, dtype=np.float64)
    return float((np.arange(i + 1) * weights).sum() / weights.sum())


def expected_kendall_distance(phi: float, m: int) -> float:
    """Closed-form expected Kendall tau distance of a Mallows(phi) draw from
    the reference ranking, via the repeated-insertion decomposition."""
    return sum(mallows_step_expectation(phi, i) for i in range(1, m))


@lru_cache(maxsize=None)
def phi_from_rel_phi(rel_phi: float, m: int) -> float:
    """Dispersion phi whose expected swap distance is rel_phi times the
    uniform (phi=1) expectation m(m-1)/4, found by bisection to 1e-10."""
    if not 0.0 < rel_phi <= 1.0:
        raise ValueError(f"rel_phi must be in (0, 1], got {rel_phi}")
    if rel_phi == 1.0:
        return 1.0
    target = rel_phi * m * (m - 1) / 4.0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        value = expected_kendall_distance(mid, m)
        if abs(value - target) < 1e-10:
            return mid
        if value < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


@lru_cache(maxsize=None)
def _insertion_cum_weights(phi: float, m: int) -> tuple[np.ndarray, ...]:
    """Cumulative insertion-position distributions for steps 1..m-1.

    At step i the new item lands at position p in 0..i with probability
    proportional to phi**(i-p); position i (the bottom) costs no inversions.
    """
    cums = []
    for i in range(1, m):
        w = phi ** (i - np.arange(i + 1, dtype=np.float64))
        cums.append(np.cumsum(w / w.sum()))
    return tuple(cums)


def _mallows_orders(count: int, n: int, m: int, phi: float, rng: np.random.Generator) -> np.ndarray:
    cums = _insertion_cum_weights(phi, m)
    draws = rng.uniform(size=(count, n, m - 1))
    orders = np.empty((count, n, m), dtype=np.int8)
    for b in range(count):
        for i in range(n):
            ballot = [0]
            for step in range(1, m):
                p = int(np.searchsorted(cums[step - 1], draws[b, i, step - 1], side="right"))
                ballot.insert(min(p, step), step)
            orders[b, i] = ballot
    return orders


def sample_mallows_batch(
    count: int, n: int, m: int, rel_phi: float, rng: np.random.Generator
) -> np.ndarray:
    """Rankings drawn from the normalized Mallows model around 0>1>...>m-1,
    converted to utilities by sorting fresh uniform draws onto each ballot
    (highest utility to the top-ranked candidate, and so on down)."""
    phi = phi_from_rel_phi(rel_phi, m)
    orders = _mallows_orders(count, n, m, phi, rng)
    draws = rng.uniform(size=(count, n, m))
    bad = _rows_have_duplicates(draws)
    while bad.any():
        for b, i in zip(*np.nonzero(bad)):
            draws[b, i] = rng.uniform(size=m)
        bad = _rows_have_duplicates(draws)
    ranked = -np.sort(-draws, axis=-1)
    u = np.empty_like(draws)
    np.put_along_axis(u, orders.astype(np.int64), ranked, axis=-1)
    return u


def sample_batch(model: ProbModel, count: int, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if model.kind == ModelKind.UNIFORM:
        return sample_uniform_batch(count, n, m, rng)
    if model.kind == ModelKind.SPATIAL2D:
        return sample_spatial2d_batch(count, n, m, rng)
    return sample_mallows_batch(count, n, m, model.rel_phi, rng)


def sample_uniform(n: int, m: int, rng: np.random.Generator) -> UtilityProfile:
    return UtilityProfile._from_array(sample_uniform_batch(1, n, m, rng)[0])


def sample_spatial2d(n: int, m: int, rng: np.random.Generator) -> UtilityProfile:
    return UtilityProfile._from_array(sample_spatial2d_batch(1, n, m, rng)[0])


def sample_mallows(n: int, m: int, rel_phi: float, rng: np.random.Generator) -> UtilityProfile:
    return UtilityProfile._from_array(sample_mallows_batch(1, n, m, rel_phi, rng)[0])


def sample_profile_utilities(model: ProbModel, n: int, m: int, rng: np.random.Generator) -> UtilityProfile:
    return UtilityProfile._from_array(sample_batch(model, 1, n, m, rng)[0])


def kendall_tau_distance(order, reference) -> int:
    """Number of candidate pairs ranked oppositely by the two orders."""
    pos = {c: k for k, c in enumerate(reference)}
    seq = [pos[c] for c in order]
    return sum(
        1
        for i in range(len(seq))
        for j in range(i + 1, len(seq))
        if seq[i] > seq[j]
    )
