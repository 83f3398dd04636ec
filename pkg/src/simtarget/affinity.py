"""Affinity evidence through pluggable providers.

A provider maps (compound, target_id, pocket_id) to a pKd-like score (higher
binds stronger) or ``None`` when it has no entry. Compound strings are
canonicalized before lookup, so any spelling of the same structure hits the
same key.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

from .chem import canonical_smiles, largest_fragment, parse_smiles

SYNTHETIC_RANGE = (3.0, 9.0)


class AffinityError(ValueError):
    pass


class CoverageError(AffinityError):
    pass


@dataclass(frozen=True, order=True)
class PocketRef:
    target_id: str
    pocket_id: str


@dataclass(frozen=True)
class AffinityTriple:
    query_affinity: float
    positive_mean: float
    background_mean: float
    best_pocket: PocketRef

    def to_dict(self) -> dict:
        return {
            "query_affinity": self.query_affinity,
            "positive_mean": self.positive_mean,
            "background_mean": self.background_mean,
            "best_pocket": self.best_pocket.pocket_id,
        }


class AffinityProvider(Protocol):
    def score(self, compound: str, target_id: str, pocket_id: str) -> float | None: ...


@lru_cache(maxsize=65536)
def canonical_key(compound: str) -> str:
    return canonical_smiles(largest_fragment(parse_smiles(compound)))


class TableProvider:
    """Immutable lookup table, optionally answering misses with a default score."""

    def __init__(self, table: dict[tuple[str, str, str], float], default: float | None = None):
        self._table = dict(table)
        self.default = default

    def __len__(self) -> int:
        return len(self._table)

    def score(self, compound: str, target_id: str, pocket_id: str) -> float | None:
        val = self._table.get((canonical_key(compound), target_id, pocket_id))
        return self.default if val is None else val

    def pockets(self) -> dict[str, list[str]]:
        out: dict[str, set] = {}
        for _, tid, pid in self._table:
            out.setdefault(tid, set()).add(pid)
        return {k: sorted(v) for k, v in sorted(out.items())}


class SyntheticProvider:
    """Deterministic pseudo-scores: a seeded hash of the key mapped into [3, 9]."""

    def __init__(self, seed: int = 0, low: float = SYNTHETIC_RANGE[0], high: float = SYNTHETIC_RANGE[1]):
        self.seed = int(seed)
        self.low, self.high = float(low), float(high)

    def score(self, compound: str, target_id: str, pocket_id: str) -> float:
        key = f"{self.seed}\x1f{canonical_key(compound)}\x1f{target_id}\x1f{pocket_id}"
        h = int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")
        return self.low + (self.high - self.low) * (h / 2.0**64)


def table_provider(path, default: float | None = None) -> TableProvider:
    """Load a TSV with header ``compound, target_id, pocket_id, score``."""
    required = ("compound", "target_id", "pocket_id", "score")
    table: dict[tuple[str, str, str], float] = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as err:
        raise AffinityError(f"cannot read affinity table {path}: {err}") from err
    with fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in required):
            raise AffinityError(f"{path}: header must contain {', '.join(required)}")
        for line, row in enumerate(reader, start=2):
            try:
                score = float(row["score"])
                key = (canonical_key(row["compound"]), row["target_id"], row["pocket_id"])
            except (TypeError, ValueError) as err:
                raise AffinityError(f"{path}:{line}: malformed row ({err})") from err
            if not math.isfinite(score) or not row["target_id"] or not row["pocket_id"]:
                raise AffinityError(f"{path}:{line}: malformed row")
            if key in table:
                raise AffinityError(f"{path}:{line}: duplicate key {key}")
            table[key] = score
    return TableProvider(table, default)


def predict_affinity(provider, query: str, pockets) -> tuple[float, PocketRef]:
    """Best score over ``pockets``; ties go to the smallest pocket_id.

    Pockets the provider does not cover are skipped; covering none is an error.
    """
    pockets = sorted(pockets, key=lambda p: p.pocket_id)
    if not pockets:
        raise AffinityError("empty pocket list")
    best = None
    for p in pockets:
        s = provider.score(query, p.target_id, p.pocket_id)
        if s is None:
            continue
        if best is None or s > best[0]:
            best = (float(s), p)
    if best is None:
        raise CoverageError(f"no affinity for {query!r} at any pocket of {pockets[0].target_id}")
    return best


def reference_stats(provider, target, background, pockets=None) -> tuple[float, float]:
    """Mean best-pocket score over a target's actives and over the background compounds.

    ``target`` is a TargetRecord (its ``active_smiles`` are the positives) or a
    plain list of structure strings; ``pockets`` defaults to one pocket per target.
    """
    actives = getattr(target, "active_smiles", target)
    if pockets is None:
        if not hasattr(target, "target_id"):
            raise AffinityError("pockets are required when positives are given as a plain list")
        pockets = default_pockets(target.target_id)
    actives, background = list(actives), list(background)
    if not actives or not background:
        raise AffinityError("reference statistics need positives and background compounds")
    pos = [predict_affinity(provider, c, pockets)[0] for c in actives]
    bg = [predict_affinity(provider, c, pockets)[0] for c in background]
    return math.fsum(pos) / len(pos), math.fsum(bg) / len(bg)


def default_pockets(target_id: str) -> list[PocketRef]:
    return [PocketRef(target_id, "P1")]
