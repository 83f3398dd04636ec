"""Background sampling of raw scores between random compound sets.

Every (S, repetition) draw uses its own generator seeded from
``(seed, subset, S, repetition)`` (``(seed, 3, i, j, repetition)`` for the
grid protocol), so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from ..fingerprint import FingerprintSet, similarity_matrix

# pools up to this size get a precomputed all-pairs similarity matrix
DENSE_POOL_LIMIT = 4000


class PoolTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class SampledPoint:
    s: int
    raw: float


@dataclass(frozen=True)
class SamplingProtocol:
    """Set-size protocol for one subset.

    ``grid=False``: draw ``n_s`` distinct S in [size_min**2, size_max**2], each
    factored as i*j with i, j in [size_min, size_max], ``reps`` draws per S.
    ``grid=True``: every (i, j) in [size_min, size_max]**2 with ``reps`` draws.
    """

    subset: int
    size_min: int
    size_max: int
    n_s: int
    reps: int
    grid: bool = False

    def scaled(self, scale: float) -> SamplingProtocol:
        if not 0.0 < scale <= 1.0:
            raise ValueError(f"scale factor must be in (0, 1], got {scale}")
        if self.grid:
            return replace(self, reps=max(2, round(self.reps * scale)))
        return replace(self, n_s=max(3, round(self.n_s * scale)))

    def clamped(self, pool_size: int) -> SamplingProtocol:
        """Shrink set sizes to fit a small pool (desk-scale databases)."""
        if pool_size >= self.size_max:
            return self
        hi = max(1, pool_size)
        lo = min(self.size_min, max(1, hi // 2))
        n_s = self.n_s
        if not self.grid:
            n_s = min(n_s, hi * hi - lo * lo + 1)
        return replace(self, size_min=lo, size_max=hi, n_s=n_s)

    @property
    def n_points(self) -> int:
        if self.grid:
            return (self.size_max - self.size_min + 1) ** 2 * self.reps
        return self.n_s * self.reps

    def to_dict(self) -> dict:
        return asdict(self)


PROTOCOLS = {
    1: SamplingProtocol(1, 10, 300, 1000, 30),
    2: SamplingProtocol(2, 100, 2000, 1000, 30),
    3: SamplingProtocol(3, 1, 50, 0, 100, grid=True),
}


@dataclass
class BackgroundSample:
    """Raw scores for every sampled set pair at one or more thresholds."""

    s: np.ndarray  # (n,)
    i: np.ndarray
    j: np.ndarray
    ts: tuple[float, ...]
    raw: np.ndarray  # (n, len(ts))
    protocol: SamplingProtocol
    seed: int

    def column(self, ts: float) -> np.ndarray:
        k = self.ts.index(ts)
        return self.raw[:, k]

    def points(self, ts: float) -> list[SampledPoint]:
        col = self.column(ts)
        return [SampledPoint(int(s), float(r)) for s, r in zip(self.s, col)]


class SimilarityPool:
    """Pool of fingerprints with optional precomputed similarity matrix."""

    def __init__(self, pool: FingerprintSet):
        self.fps = pool
        self.size = len(pool)
        self.dense = similarity_matrix(pool, pool) if self.size <= DENSE_POOL_LIMIT else None

    def block(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense[np.ix_(a, b)]
        return similarity_matrix(self.fps[a], self.fps[b])


def _thresholded_sums(block: np.ndarray, ts: tuple[float, ...]) -> np.ndarray:
    if len(ts) <= 4:
        return np.array([block[block >= t].sum() for t in ts])
    v = np.sort(block, axis=None)
    tail = np.concatenate([np.cumsum(v[::-1])[::-1], [0.0]])
    return tail[np.searchsorted(v, ts, side="left")]


def _factor_pairs(s: int, lo: int, hi: int) -> np.ndarray:
    cand = np.arange(lo, hi + 1)
    ok = (s % cand == 0) & (s // cand >= lo) & (s // cand <= hi)
    return cand[ok]


def _draw_sizes(protocol: SamplingProtocol, seed: int):
    rng = np.random.default_rng([seed, protocol.subset, 0])
    lo, hi = protocol.size_min, protocol.size_max
    chosen: dict[int, int] = {}
    limit = hi * hi - lo * lo + 1
    want = min(protocol.n_s, limit)
    attempts = 0
    while len(chosen) < want:
        attempts += 1
        if attempts > 200 * want + 10_000:
            break
        s = int(rng.integers(lo * lo, hi * hi + 1))
        if s in chosen:
            continue
        divs = _factor_pairs(s, lo, hi)
        if divs.size == 0:
            continue
        chosen[s] = int(divs[rng.integers(divs.size)])
    pairs = sorted((s, i, s // i) for s, i in chosen.items())
    return pairs


def sample_background(
    pool: FingerprintSet | SimilarityPool,
    protocol: SamplingProtocol,
    ts,
    seed: int,
) -> BackgroundSample:
    """Raw scores for random set pairs drawn from ``pool`` under ``protocol``."""
    if not isinstance(pool, SimilarityPool):
        pool = SimilarityPool(pool)
    ts = tuple(float(t) for t in (ts if np.ndim(ts) else [ts]))
    if any(not 0.0 <= t <= 1.0 for t in ts):
        raise ValueError("thresholds must lie in [0, 1]")
    if pool.size < protocol.size_max:
        raise PoolTooSmallError(
            f"pool of {pool.size} compounds cannot supply sets of {protocol.size_max}"
        )
    if protocol.grid:
        rng_keys = [
            (i, j) for i in range(protocol.size_min, protocol.size_max + 1)
            for j in range(protocol.size_min, protocol.size_max + 1)
        ]
        sizes = [(i * j, i, j) for i, j in rng_keys]
    else:
        sizes = _draw_sizes(protocol, seed)
    n = pool.size
    rows_s, rows_i, rows_j, raws = [], [], [], []
    for s, i, j in sizes:
        for rep in range(protocol.reps):
            key = [seed, protocol.subset, i, j, rep] if protocol.grid else [seed, protocol.subset, s, rep]
            rng = np.random.default_rng(key)
            a = rng.choice(n, size=i, replace=False)
            b = rng.choice(n, size=j, replace=False)
            raws.append(_thresholded_sums(pool.block(a, b), ts))
            rows_s.append(s)
            rows_i.append(i)
            rows_j.append(j)
    raw = np.array(raws, dtype=np.float64).reshape(len(raws), len(ts))
    return BackgroundSample(
        np.array(rows_s, dtype=np.int64),
        np.array(rows_i, dtype=np.int64),
        np.array(rows_j, dtype=np.int64),
        ts,
        raw,
        protocol,
        seed,
    )


def _points(pool, subset, ts, rng_seed, scale):
    sample = sample_background(pool, PROTOCOLS[subset].scaled(scale), [ts], rng_seed)
    return sample.points(float(ts))


def sample_background_subset1(pool, ts: float, rng_seed: int, scale: float = 1.0) -> list[SampledPoint]:
    """Subset-1 protocol: S in [10^2, 300^2], 30 draws per S."""
    return _points(pool, 1, ts, rng_seed, scale)


def sample_background_subset2(pool, ts: float, rng_seed: int, scale: float = 1.0) -> list[SampledPoint]:
    """Subset-2 protocol: S in [100^2, 2000^2], 30 draws per S.

    ``pool`` must already hold one compound per scaffold.
    """
    return _points(pool, 2, ts, rng_seed, scale)


def sample_background_subset3(pool, ts: float, rng_seed: int, scale: float = 1.0) -> list[SampledPoint]:
    """Subset-3 protocol: every i, j in 1..50, 100 draws each."""
    return _points(pool, 3, ts, rng_seed, scale)
