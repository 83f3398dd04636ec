"""Ligand-side screening: subsets, cumulative screening, association and max-similarity search."""

from __future__ import annotations

import csv
import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

import numpy as np

from .fingerprint import Fingerprint, FingerprintSet, bulk_max_similarity, similarity_matrix
from .sea.scoring import e_value, p_value, thresholded_sum, z_score

MAX_SIM_THRESHOLD = 0.4
SIGNIFICANCE = 0.05
# an association edge at position k must have an E-value below EDGE_CUTOFFS[k]
EDGE_CUTOFFS = (1e-10, 1e-50, 1e-100)


class ScreeningError(ValueError):
    pass


def subset_for(n_actives: int) -> int:
    """Subset label for a target with ``n_actives`` known actives."""
    if n_actives < 1:
        raise ScreeningError("a target needs at least one active")
    if n_actives < 5:
        return 3
    if n_actives <= 300:
        return 1
    return 2


@dataclass
class TargetRecord:
    target_id: str
    name: str
    organism: str
    active_fps: FingerprintSet
    active_ids: list[str]
    subset: int = 0
    # rows of active_fps that survive scaffold deduplication (used for subset 2)
    dedup_index: np.ndarray | None = None
    active_smiles: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.active_fps) == 0:
            raise ScreeningError(f"target {self.target_id} has no actives")
        if len(self.active_ids) != len(self.active_fps):
            raise ScreeningError(f"target {self.target_id}: ids and fingerprints differ in length")
        expected = subset_for(len(self.active_fps))
        if self.subset == 0:
            self.subset = expected
        elif self.subset != expected:
            raise ScreeningError(
                f"target {self.target_id} with {len(self.active_fps)} actives belongs to "
                f"subset {expected}, not {self.subset}"
            )

    @property
    def screening_fps(self) -> FingerprintSet:
        """Active set used for set-vs-set statistics (scaffold-deduplicated in subset 2)."""
        if self.subset == 2 and self.dedup_index is not None:
            return self.active_fps[np.asarray(self.dedup_index, dtype=np.int64)]
        return self.active_fps


@dataclass(frozen=True)
class ScreeningHit:
    target_id: str
    z: float = 0.0
    p: float = 1.0
    e: float = 1.0
    max_sim: float = 0.0
    max_sim_compound: str | None = None
    via_association: bool = False
    association_parent: str | None = None
    parent_e: float | None = None
    direct_hit: bool = False
    subset: int = 0

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "z": self.z,
            "p": self.p,
            "e": self.e,
            "max_sim": self.max_sim,
            "max_sim_compound": self.max_sim_compound,
            "via_association": self.via_association,
            "association_parent": self.association_parent,
            "parent_e": self.parent_e,
            "direct_hit": self.direct_hit,
            "subset": self.subset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScreeningHit:
        return cls(**d)


def partition_subsets(targets) -> dict[int, list[TargetRecord]]:
    out: dict[int, list[TargetRecord]] = {1: [], 2: [], 3: []}
    for t in targets:
        out[subset_for(len(t.active_fps))].append(t)
    return out


def _model_for(models, subset: int, purpose: str):
    if isinstance(models, Mapping):
        return models.get(subset)
    return models.get(subset, purpose)


def cumulative_scores(query: Fingerprint, targets, models) -> list[ScreeningHit]:
    """Z, P and E of the singleton query set against every target's actives (no cutoff).

    ``models`` is either a ``ModelSet`` or a mapping subset -> cumulative StatModel.
    """
    out = []
    for t in sorted(targets, key=lambda t: t.target_id):
        model = _model_for(models, t.subset, "cumulative")
        if model is None:
            raise ScreeningError(f"no cumulative model for populated subset {t.subset}")
        fps = t.screening_fps
        sims = fps.similarities(query)
        raw = thresholded_sum(sims, model.ts)
        z = z_score(raw, float(len(fps)), model)
        p = p_value(z)
        best, idx = bulk_max_similarity(query, t.active_fps)
        out.append(
            ScreeningHit(
                t.target_id, z, p, e_value(p, model.n_db), best, t.active_ids[idx],
                direct_hit=True, subset=t.subset,
            )
        )
    return out


def cumulative_screen(query: Fingerprint, targets, models, significance: float = SIGNIFICANCE):
    """Targets whose cumulative similarity to the query is significant (p < ``significance``)."""
    return [h for h in cumulative_scores(query, targets, models) if h.p < significance]


@dataclass
class AssociationGraph:
    edges: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def neighbors(self, target_id: str) -> list[tuple[str, float]]:
        return self.edges.get(target_id, [])

    def check(self) -> None:
        for src, lst in self.edges.items():
            if len(lst) > len(EDGE_CUTOFFS):
                raise ScreeningError(f"{src}: out-degree {len(lst)} exceeds {len(EDGE_CUTOFFS)}")
            for k, (dst, e) in enumerate(lst):
                if dst == src:
                    raise ScreeningError(f"{src}: self-edge")
                if not e < EDGE_CUTOFFS[k]:
                    raise ScreeningError(f"{src}->{dst}: edge {k} has E={e:g}")

    def write_tsv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(["source_id", "rank", "partner_id", "e_value"])
            for src in sorted(self.edges):
                for k, (dst, e) in enumerate(self.edges[src]):
                    w.writerow([src, k, dst, repr(float(e))])

    @classmethod
    def read_tsv(cls, path) -> AssociationGraph:
        edges: dict[str, list[tuple[str, float]]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh, delimiter="\t"))
        for row in sorted(rows, key=lambda r: (r["source_id"], int(r["rank"]))):
            edges.setdefault(row["source_id"], []).append((row["partner_id"], float(row["e_value"])))
        graph = cls(edges)
        graph.check()
        return graph


def pair_e_values(members, model) -> dict[tuple[str, str], float]:
    """E-value of every ordered target pair within one subset under a clustering model."""
    members = sorted(members, key=lambda t: t.target_id)
    sets = [t.screening_fps for t in members]
    if len(members) < 2:
        return {}
    words = np.concatenate([s.words for s in sets])
    sims = similarity_matrix(FingerprintSet(words), FingerprintSet(words))
    bounds = np.concatenate([[0], np.cumsum([len(s) for s in sets])])
    out = {}
    for a, ta in enumerate(members):
        for b, tb in enumerate(members):
            if a == b:
                continue
            block = sims[bounds[a] : bounds[a + 1], bounds[b] : bounds[b + 1]]
            raw = thresholded_sum(block, model.ts)
            z = z_score(raw, float(block.size), model)
            out[(ta.target_id, tb.target_id)] = e_value(p_value(z), model.n_db)
    return out


def build_association_graph(targets, clustering_models) -> AssociationGraph:
    """Link each target to up to three partners in its subset under tiered E-value cutoffs."""
    edges: dict[str, list[tuple[str, float]]] = {}
    for subset, members in partition_subsets(targets).items():
        if len(members) < 2:
            continue
        model = _model_for(clustering_models, subset, "clustering")
        if model is None:
            raise ScreeningError(f"no clustering model for populated subset {subset}")
        evals = pair_e_values(members, model)
        for t in members:
            partners = sorted(
                ((e, dst) for (src, dst), e in evals.items() if src == t.target_id),
            )
            kept = []
            for k, cut in enumerate(EDGE_CUTOFFS):
                if k >= len(partners) or not partners[k][0] < cut:
                    break
                kept.append((partners[k][1], partners[k][0]))
            if kept:
                edges[t.target_id] = kept
    graph = AssociationGraph(edges)
    graph.check()
    return graph


def associate_targets(hits, graph: AssociationGraph) -> list[ScreeningHit]:
    """Append graph neighbours of direct hits; direct hits win over association."""
    hits = list(hits)
    direct = {h.target_id for h in hits}
    added: dict[str, ScreeningHit] = {}
    for h in sorted(hits, key=lambda h: h.target_id):
        for dst, e in graph.neighbors(h.target_id):
            if dst in direct:
                continue
            prev = added.get(dst)
            if prev is not None and (prev.parent_e, prev.association_parent) <= (e, h.target_id):
                continue
            added[dst] = ScreeningHit(
                dst, via_association=True, association_parent=h.target_id, parent_e=e
            )
    return hits + [added[k] for k in sorted(added)]


def max_sim_screen(query: Fingerprint, targets, threshold: float = MAX_SIM_THRESHOLD):
    """Targets with at least one active whose Tanimoto to the query exceeds ``threshold``."""
    out = []
    for t in sorted(targets, key=lambda t: t.target_id):
        best, idx = bulk_max_similarity(query, t.active_fps)
        if best > threshold:
            out.append(ScreeningHit(t.target_id, max_sim=best, max_sim_compound=t.active_ids[idx],
                                    subset=t.subset))
    return out


def _combine(records, n_db: int) -> ScreeningHit:
    tid = records[0].target_id
    direct = [r for r in records if r.direct_hit]
    if direct:
        base = min(direct, key=lambda r: (r.p, -r.z))
        stats = {"z": base.z, "p": base.p, "e": base.e, "direct_hit": True}
    else:
        stats = {"z": 0.0, "p": 1.0, "e": float(n_db), "direct_hit": False}
    best = max(records, key=lambda r: (r.max_sim, r.max_sim_compound is not None,
                                       r.max_sim_compound or ""))
    assoc = [r for r in records if r.via_association]
    link = {"via_association": False, "association_parent": None, "parent_e": None}
    if assoc:
        a = min(assoc, key=lambda r: (r.parent_e, r.association_parent))
        link = {"via_association": True, "association_parent": a.association_parent,
                "parent_e": a.parent_e}
    subset = max(r.subset for r in records)
    return ScreeningHit(tid, max_sim=best.max_sim, max_sim_compound=best.max_sim_compound,
                        subset=subset, **stats, **link)


def merge_candidates(cumulative_hits, associated_hits, maxsim_hits, n_db=1) -> list[ScreeningHit]:
    """Union of all evidence keyed by target_id, sorted by target_id.

    Targets without a direct cumulative hit get neutral statistics z=0, p=1,
    e=n_db; ``n_db`` is an int or a mapping target_id -> int.
    """
    groups: dict[str, list[ScreeningHit]] = {}
    for h in (*cumulative_hits, *associated_hits, *maxsim_hits):
        groups.setdefault(h.target_id, []).append(h)
    out = []
    for tid in sorted(groups):
        n = n_db.get(tid, 1) if isinstance(n_db, Mapping) else n_db
        out.append(_combine(groups[tid], n))
    return out


def fill_max_sim(hits, query: Fingerprint, targets_by_id) -> list[ScreeningHit]:
    """Attach the true max similarity (and subset) to candidates that lack it."""
    out = []
    for h in hits:
        t = targets_by_id[h.target_id]
        if h.max_sim_compound is None:
            best, idx = bulk_max_similarity(query, t.active_fps)
            h = replace(h, max_sim=best, max_sim_compound=t.active_ids[idx])
        if h.subset != t.subset:
            h = replace(h, subset=t.subset)
        out.append(h)
    return out


def association_strength(hit: ScreeningHit, cap: float = 300.0) -> float:
    if not hit.via_association or hit.parent_e is None:
        return 0.0
    if hit.parent_e <= 0:
        return cap
    return min(cap, max(0.0, -math.log10(hit.parent_e)))
