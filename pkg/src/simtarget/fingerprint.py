"""Circular (ECFP-style) fingerprints, Tanimoto similarity and packed fingerprint files.

Fingerprints are stored as little-endian ``uint64`` words; all similarity
kernels work on whole words with ``np.bitwise_count``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chem import Molecule
from .chem.canon import atom_invariant

MASK64 = (1 << 64) - 1
DEFAULT_WIDTH = 2048
DEFAULT_RADIUS = 2
DEFAULT_SEED = 0x5EA5EED

_MAGIC = b"STFPDB\x00\x01"
_VERSION = 1
_HEADER = struct.Struct("<8sIIIQQ")


class FingerprintError(ValueError):
    pass


def _mix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash_ints(seed: int, values) -> int:
    h = _mix64(seed & MASK64)
    for v in values:
        h = _mix64(h ^ (v & MASK64))
    return h


@dataclass(frozen=True, eq=False)
class Fingerprint:
    words: np.ndarray
    popcount: int

    @classmethod
    def from_bits(cls, bits, width: int = DEFAULT_WIDTH) -> Fingerprint:
        if width % 64:
            raise FingerprintError("width must be a multiple of 64")
        words = np.zeros(width // 64, dtype=np.uint64)
        for b in set(int(x) for x in bits):
            if not 0 <= b < width:
                raise FingerprintError(f"bit {b} out of range for width {width}")
            words[b >> 6] |= np.uint64(1) << np.uint64(b & 63)
        return cls.from_words(words)

    @classmethod
    def from_words(cls, words) -> Fingerprint:
        words = np.ascontiguousarray(words, dtype=np.uint64)
        words.flags.writeable = False
        return cls(words, int(np.bitwise_count(words).sum()))

    @property
    def width(self) -> int:
        return self.words.size * 64

    def on_bits(self) -> list[int]:
        bits = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return np.flatnonzero(bits).tolist()

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash(self.words.tobytes())


def ecfp(
    mol: Molecule, radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH, seed: int = DEFAULT_SEED
) -> Fingerprint:
    """Hashed circular fingerprint of ``mol``.

    Environments covering the same atom set are emitted once, keeping the
    smallest identifier; identifiers fold into ``width`` bits by modulo.
    """
    heavy = [i for i, a in enumerate(mol.atoms) if a.is_heavy]
    if not heavy:
        raise FingerprintError("molecule has no heavy atoms")
    if radius < 0:
        raise FingerprintError("radius must be non-negative")
    ids = {}
    envs = {}
    best: dict[frozenset, int] = {}
    for i in heavy:
        inv = atom_invariant(mol, i)
        # (Z, degree, charge, H, ring, aromatic)
        ids[i] = hash_ints(seed, (inv[0], inv[3], inv[2], inv[4], inv[5], inv[1]))
        envs[i] = frozenset((i,))
        _keep(best, envs[i], ids[i])
    nbrs = mol.neighbors
    bonds = mol.bonds
    for r in range(1, radius + 1):
        new_ids, new_envs = {}, {}
        for i in heavy:
            pairs = sorted(
                (int(bonds[k].order), ids[j]) for j, k in nbrs[i] if mol.atoms[j].is_heavy
            )
            flat = [r, ids[i]]
            env = set(envs[i])
            for order, nid in pairs:
                flat += (order, nid)
            for j, _ in nbrs[i]:
                if mol.atoms[j].is_heavy:
                    env |= envs[j]
            new_ids[i] = hash_ints(seed, flat)
            new_envs[i] = frozenset(env)
            _keep(best, new_envs[i], new_ids[i])
        ids, envs = new_ids, new_envs
    return Fingerprint.from_bits((h % width for h in best.values()), width)


def _keep(best, env, ident):
    cur = best.get(env)
    if cur is None or ident < cur:
        best[env] = ident


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; 0.0 when both are empty."""
    if a.words.size != b.words.size:
        raise FingerprintError(f"width mismatch: {a.width} vs {b.width}")
    inter = int(np.bitwise_count(a.words & b.words).sum())
    union = a.popcount + b.popcount - inter
    return inter / union if union else 0.0


class FingerprintSet:
    """Row-packed fingerprint matrix with cached popcounts."""

    def __init__(self, words: np.ndarray):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 2:
            raise FingerprintError("expected a 2-D word matrix")
        self.words = words
        self.popcounts = np.bitwise_count(words).sum(axis=1, dtype=np.int64)

    @classmethod
    def from_fingerprints(cls, fps, width: int | None = None) -> FingerprintSet:
        fps = list(fps)
        if not fps:
            nwords = (width or DEFAULT_WIDTH) // 64
            return cls(np.zeros((0, nwords), dtype=np.uint64))
        n = fps[0].words.size
        if any(fp.words.size != n for fp in fps):
            raise FingerprintError("fingerprints of mixed widths")
        return cls(np.stack([fp.words for fp in fps]))

    def __len__(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, idx) -> Fingerprint | FingerprintSet:
        if isinstance(idx, (int, np.integer)):
            return Fingerprint.from_words(self.words[idx])
        return FingerprintSet(self.words[idx])

    @property
    def width(self) -> int:
        return self.words.shape[1] * 64

    def similarities(self, query: Fingerprint, chunk: int = 1 << 15) -> np.ndarray:
        """Tanimoto of ``query`` against every row."""
        if query.words.size != self.words.shape[1]:
            raise FingerprintError(f"width mismatch: {query.width} vs {self.width}")
        out = np.empty(len(self), dtype=np.float64)
        q = query.words
        for lo in range(0, len(self), chunk):
            block = self.words[lo : lo + chunk]
            inter = np.bitwise_count(block & q).sum(axis=1, dtype=np.int64)
            union = self.popcounts[lo : lo + chunk] + query.popcount - inter
            with np.errstate(invalid="ignore", divide="ignore"):
                sims = inter / union
            out[lo : lo + chunk] = np.where(union > 0, sims, 0.0)
        return out

    def bits_float(self) -> np.ndarray:
        return np.unpackbits(self.words.view(np.uint8), axis=1, bitorder="little").astype(
            np.float32
        )


def similarity_matrix(a: FingerprintSet, b: FingerprintSet) -> np.ndarray:
    """Dense Tanimoto matrix between two fingerprint sets (rows of ``a`` by rows of ``b``)."""
    if a.words.shape[1] != b.words.shape[1]:
        raise FingerprintError("width mismatch")
    # float32 products are exact: counts never exceed the width (< 2**24)
    inter = (a.bits_float() @ b.bits_float().T).astype(np.int64)
    union = a.popcounts[:, None] + b.popcounts[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = inter / union
    return np.where(union > 0, sims, 0.0)


def bulk_max_similarity(query: Fingerprint, fps: FingerprintSet | list) -> tuple[float, int]:
    """Maximum Tanimoto of ``query`` over a set, with the lowest index among ties."""
    if not isinstance(fps, FingerprintSet):
        fps = FingerprintSet.from_fingerprints(fps)
    if len(fps) == 0:
        raise FingerprintError("empty fingerprint set")
    sims = fps.similarities(query)
    idx = int(np.argmax(sims))
    return float(sims[idx]), idx


# --------------------------------------------------------------------------
# binary database file


@dataclass(frozen=True)
class FingerprintConfig:
    width: int = DEFAULT_WIDTH
    radius: int = DEFAULT_RADIUS
    seed: int = DEFAULT_SEED


def save_fingerprints(path, fps: FingerprintSet, config: FingerprintConfig) -> None:
    if fps.width != config.width:
        raise FingerprintError("fingerprint width disagrees with config")
    header = _HEADER.pack(_MAGIC, _VERSION, config.width, config.radius, config.seed, len(fps))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(fps.words.astype("<u8", copy=False).tobytes())


def load_fingerprints(path) -> tuple[FingerprintSet, FingerprintConfig]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FingerprintError(f"{path}: truncated header")
    magic, version, width, radius, seed, count = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise FingerprintError(f"{path}: not a fingerprint database")
    if version != _VERSION:
        raise FingerprintError(f"{path}: unsupported version {version}")
    nwords = width // 64
    body = np.frombuffer(data, dtype="<u8", offset=_HEADER.size)
    if body.size != count * nwords:
        raise FingerprintError(f"{path}: expected {count} rows of {width} bits")
    words = body.astype(np.uint64).reshape(count, nwords)
    return FingerprintSet(words), FingerprintConfig(width, radius, seed)
