"""On-disk target database: ingest, build, load and predict.

A database is a directory of flat files::

    manifest.json       version, fingerprint config, counts, file digests
    targets.tsv         one row per target
    compounds.tsv       unique curated compounds (row = fingerprint row)
    actives.tsv         target -> compound links
    fingerprints.bin    packed fingerprints of compounds.tsv
    rejections.tsv      dropped interaction rows with the first failing rule
    accepted.tsv        surviving interaction rows (re-ingestable)
    background.smi      affinity background compounds          (build)
    models.json         six background models                   (build)
    association.tsv     target association graph                (build)
    pockets.tsv         pockets per target                      (build)
    affinity_refs.tsv   positive / background affinity means    (build)
    forest.json         ranking forest                          (train-rank)
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .affinity import (
    AffinityTriple,
    PocketRef,
    canonical_key,
    default_pockets,
    predict_affinity,
    reference_stats,
)
from .chem import (
    WHITELIST,
    ChemError,
    SmilesError,
    canonical_smiles,
    check_element_whitelist,
    has_formal_charges,
    heavy_atom_count,
    largest_fragment,
    parse_smiles,
)
from .fingerprint import FingerprintConfig, FingerprintSet, ecfp, load_fingerprints, save_fingerprints
from .ranking import RankForest, RankingError, assemble_features, rank_candidates
from .scaffold import dedupe_keys, scaffold_key
from .screening import (
    MAX_SIM_THRESHOLD,
    SIGNIFICANCE,
    AssociationGraph,
    TargetRecord,
    associate_targets,
    build_association_graph,
    cumulative_screen,
    fill_max_sim,
    max_sim_screen,
    merge_candidates,
    partition_subsets,
    subset_for,
)
from .sea.fit import fit_stat_model
from .sea.model import DEFAULT_TS, PURPOSES, ModelSet
from .sea.sampling import PROTOCOLS, SimilarityPool, sample_background

log = logging.getLogger(__name__)

DB_VERSION = 1
ACTIVITY_TYPES = ("Kd", "Ki", "IC50", "EC50")
ACCEPTED_RELATIONS = ("=", "<")
KNOWN_RELATIONS = ("=", "<", ">")
VALUE_LIMIT_NM = 20_000.0  # strict: 20 uM itself is rejected
MAX_HEAVY_ATOMS = 100
N_SIMILAR = 20
INTERACTION_COLUMNS = (
    "compound_id", "smiles", "target_id", "activity_type", "relation", "value_nM", "organism",
)
BUILD_FILES = ("models.json", "association.tsv", "pockets.tsv", "affinity_refs.tsv", "background.smi")


class DatabaseError(ValueError):
    pass


class QueryError(ValueError):
    pass


# --------------------------------------------------------------------------
# helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_tsv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_tsv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def _fmt(x: float) -> str:
    return repr(float(x))


def default_background() -> list[str]:
    """The packaged 100-compound diversity set."""
    text = resources.files("simtarget").joinpath("data/background.smi").read_text(encoding="utf-8")
    return read_smiles_lines(text.splitlines())


def read_smiles_lines(lines) -> list[str]:
    out = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line.split()[0])
    return out


@dataclass
class CuratedCompound:
    smiles: str  # canonical, largest fragment
    fingerprint: object
    scaffold: str


def curate(smiles: str, fp_config: FingerprintConfig = FingerprintConfig()):
    """Parse, keep the largest fragment and apply the element / size rules.

    Returns ``(rule, detail, compound)``; ``rule`` is ``None`` when the structure passes.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mol = parse_smiles(smiles)
    except (SmilesError, ChemError) as err:
        return "parse", str(err), None
    mol = largest_fragment(mol)
    if not check_element_whitelist(mol):
        bad = sorted({a.element for a in mol.atoms} - _whitelist())
        return "element", ",".join(bad), None
    n_heavy = heavy_atom_count(mol)
    if n_heavy > MAX_HEAVY_ATOMS:
        return "heavy_atoms", str(n_heavy), None
    fp = ecfp(mol, fp_config.radius, fp_config.width, fp_config.seed)
    comp = CuratedCompound(canonical_smiles(mol), fp, scaffold_key(mol).canonical_string)
    return None, "charged" if has_formal_charges(mol) else "", comp


def _whitelist():
    return set(WHITELIST)


# --------------------------------------------------------------------------
# ingest


@dataclass
class IngestReport:
    n_rows: int
    n_accepted: int
    rejections: list[tuple[int, str, str, str]]  # (line, compound_id, rule, detail)
    warnings: list[str]
    n_targets: int
    subset_counts: dict[int, int]

    def to_dict(self) -> dict:
        counts: dict[str, int] = {}
        for _, _, rule, _ in self.rejections:
            counts[rule] = counts.get(rule, 0) + 1
        return {
            "rows": self.n_rows,
            "accepted": self.n_accepted,
            "rejected": len(self.rejections),
            "rejections_by_rule": dict(sorted(counts.items())),
            "targets": self.n_targets,
            "subset_counts": {str(k): v for k, v in sorted(self.subset_counts.items())},
            "warnings": len(self.warnings),
        }


def read_aliases(path) -> dict[str, str]:
    out = {}
    for row in _read_tsv(Path(path)):
        try:
            out[row["alias_target_id"]] = row["canonical_target_id"]
        except KeyError as err:
            raise DatabaseError(f"{path}: alias file needs alias_target_id, canonical_target_id") from err
    return out


def _first_failing_rule(row: dict):
    """Row-level filters, in order; the compound rules run afterwards."""
    for col in INTERACTION_COLUMNS:
        if row.get(col) is None or (col != "organism" and str(row[col]).strip() == ""):
            return "malformed", f"missing {col}"
    if row["activity_type"] not in ACTIVITY_TYPES:
        return "activity_type", row["activity_type"]
    if row["relation"] not in ACCEPTED_RELATIONS:
        return "relation", row["relation"]
    try:
        value = float(row["value_nM"])
    except ValueError:
        return "malformed", f"value {row['value_nM']!r}"
    if not (math.isfinite(value) and value > 0):
        return "malformed", f"value {row['value_nM']!r}"
    if not value < VALUE_LIMIT_NM:
        return "value", row["value_nM"]
    return None


def ingest(
    interactions_path,
    db_dir,
    aliases=None,
    fp_config: FingerprintConfig = FingerprintConfig(),
) -> IngestReport:
    """Curate an interactions TSV into a fresh database directory."""
    db = Path(db_dir)
    try:
        fh = open(interactions_path, newline="", encoding="utf-8")
    except OSError as err:
        raise DatabaseError(f"cannot read {interactions_path}: {err}") from err
    with fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if reader.fieldnames is None:
            raise DatabaseError(f"{interactions_path}: empty file")
        missing = [c for c in INTERACTION_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DatabaseError(f"{interactions_path}: missing columns {', '.join(missing)}")
        rows = list(reader)
    if isinstance(aliases, (str, Path)):
        aliases = read_aliases(aliases)
    aliases = aliases or {}

    curated: dict[str, CuratedCompound | tuple] = {}  # raw smiles -> result
    compounds: dict[str, CuratedCompound] = {}  # canonical -> compound
    per_target: dict[str, dict[str, str]] = {}  # target -> canonical -> compound_id
    meta: dict[str, str] = {}  # target -> organism
    rejections, notes, accepted = [], [], []
    for line, row in enumerate(rows, start=2):
        cid = (row.get("compound_id") or "").strip()
        bad = _first_failing_rule(row)
        if bad:
            rejections.append((line, cid, *bad))
            continue
        smi = row["smiles"].strip()
        if smi not in curated:
            curated[smi] = curate(smi, fp_config)
        rule, detail, comp = curated[smi]
        if rule:
            rejections.append((line, cid, rule, detail))
            continue
        if detail == "charged":
            notes.append(f"line {line}: {cid} carries formal charges (kept as given)")
        tid = aliases.get(row["target_id"].strip(), row["target_id"].strip())
        actives = per_target.setdefault(tid, {})
        if comp.smiles in actives:
            rejections.append((line, cid, "duplicate", f"{tid} already has {actives[comp.smiles]}"))
            continue
        actives[comp.smiles] = cid
        meta.setdefault(tid, (row.get("organism") or "").strip())
        compounds.setdefault(comp.smiles, comp)
        accepted.append({**{k: row[k] for k in INTERACTION_COLUMNS}, "smiles": comp.smiles,
                         "target_id": tid})
    if not per_target:
        raise DatabaseError("no targets survived curation")

    db.mkdir(parents=True, exist_ok=True)
    for name in (*BUILD_FILES, "forest.json", "manifest.json"):
        (db / name).unlink(missing_ok=True)
    canon = sorted(compounds)
    row_of = {smi: k for k, smi in enumerate(canon)}
    fps = FingerprintSet.from_fingerprints([compounds[s].fingerprint for s in canon], fp_config.width)
    save_fingerprints(db / "fingerprints.bin", fps, fp_config)
    _write_tsv(db / "compounds.tsv", ["row", "smiles", "scaffold"],
               [[k, s, compounds[s].scaffold] for k, s in enumerate(canon)])
    target_rows, active_rows = [], []
    subset_counts = {1: 0, 2: 0, 3: 0}
    for tid in sorted(per_target):
        links = sorted(per_target[tid].items(), key=lambda kv: (kv[1], kv[0]))
        subset = subset_for(len(links))
        subset_counts[subset] += 1
        target_rows.append([tid, tid, meta[tid], subset, len(links)])
        for smi, cid in links:
            active_rows.append([tid, cid, row_of[smi]])
    _write_tsv(db / "targets.tsv", ["target_id", "name", "organism", "subset", "n_actives"], target_rows)
    _write_tsv(db / "actives.tsv", ["target_id", "compound_id", "row"], active_rows)
    _write_tsv(db / "rejections.tsv", ["line", "compound_id", "rule", "detail"], rejections)
    _write_tsv(db / "accepted.tsv", list(INTERACTION_COLUMNS),
               [[r[k] for k in INTERACTION_COLUMNS] for r in accepted])
    report = IngestReport(len(rows), len(accepted), rejections, notes, len(per_target), subset_counts)
    write_manifest(db, {"stage": "ingested", "ingest": report.to_dict()})
    for n in notes:
        log.info(n)
    return report


# --------------------------------------------------------------------------
# manifest


def _artifact_files(db: Path) -> list[str]:
    names = ["targets.tsv", "compounds.tsv", "actives.tsv", "fingerprints.bin",
             "rejections.tsv", "accepted.tsv", *BUILD_FILES, "forest.json"]
    return [n for n in names if (db / n).exists()]


def write_manifest(db: Path, updates: dict) -> dict:
    path = db / "manifest.json"
    doc = json.loads(path.read_text()) if path.exists() else {}
    doc.update(updates)
    _, cfg = load_fingerprints(db / "fingerprints.bin")
    doc["version"] = DB_VERSION
    doc["fingerprint"] = {"width": cfg.width, "radius": cfg.radius, "seed": cfg.seed}
    counts = {"1": 0, "2": 0, "3": 0}
    for row in _read_tsv(db / "targets.tsv"):
        counts[row["subset"]] += 1
    doc["subset_counts"] = counts
    doc["files"] = {n: _sha256(db / n) for n in _artifact_files(db)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def verify_manifest(db: Path) -> dict:
    path = db / "manifest.json"
    if not path.exists():
        raise DatabaseError(f"{db}: no manifest.json (not a database directory?)")
    doc = json.loads(path.read_text())
    if doc.get("version") != DB_VERSION:
        raise DatabaseError(f"{db}: unsupported database version {doc.get('version')}")
    for name, digest in doc.get("files", {}).items():
        f = db / name
        if not f.exists():
            raise DatabaseError(f"{db}: missing artifact {name}")
        if _sha256(f) != digest:
            raise DatabaseError(f"{db}: digest mismatch for {name} (file changed or corrupt)")
    return doc


# --------------------------------------------------------------------------
# loaded database


@dataclass
class Database:
    path: Path
    manifest: dict
    fp_config: FingerprintConfig
    compounds: list[str]
    scaffolds: list[str]
    fingerprints: FingerprintSet
    targets: list[TargetRecord]
    models: ModelSet | None = None
    graph: AssociationGraph | None = None
    pockets: dict[str, list[PocketRef]] = field(default_factory=dict)
    refs: dict[str, tuple[float, float]] = field(default_factory=dict)
    background: list[str] = field(default_factory=list)
    forest: RankForest | None = None

    @property
    def by_id(self) -> dict[str, TargetRecord]:
        return {t.target_id: t for t in self.targets}

    @property
    def manifest_digest(self) -> str:
        return _sha256(self.path / "manifest.json")

    @property
    def is_built(self) -> bool:
        return self.models is not None and self.graph is not None

    def n_db(self) -> dict[str, int]:
        out = {}
        for t in self.targets:
            m = self.models.get(t.subset, "cumulative") if self.models else None
            out[t.target_id] = m.n_db if m else 1
        return out


def load(db_dir, verify: bool = True) -> Database:
    db = Path(db_dir)
    manifest = verify_manifest(db) if verify else json.loads((db / "manifest.json").read_text())
    fps, cfg = load_fingerprints(db / "fingerprints.bin")
    comp_rows = _read_tsv(db / "compounds.tsv")
    smiles = [r["smiles"] for r in comp_rows]
    scaffolds = [r["scaffold"] for r in comp_rows]
    links: dict[str, list[tuple[str, int]]] = {}
    for r in _read_tsv(db / "actives.tsv"):
        links.setdefault(r["target_id"], []).append((r["compound_id"], int(r["row"])))
    targets = []
    for r in _read_tsv(db / "targets.tsv"):
        tid = r["target_id"]
        ids = [c for c, _ in links[tid]]
        rows = np.array([k for _, k in links[tid]], dtype=np.int64)
        dedup = np.asarray(dedupe_keys([scaffolds[k] for k in rows]), dtype=np.int64)
        targets.append(
            TargetRecord(tid, r["name"], r["organism"], fps[rows], ids, int(r["subset"]),
                         dedup, [smiles[k] for k in rows])
        )
    out = Database(db, manifest, cfg, smiles, scaffolds, fps, targets)
    if (db / "models.json").exists():
        out.models = ModelSet.from_json((db / "models.json").read_text())
    if (db / "association.tsv").exists():
        out.graph = AssociationGraph.read_tsv(db / "association.tsv")
    if (db / "pockets.tsv").exists():
        for r in _read_tsv(db / "pockets.tsv"):
            out.pockets.setdefault(r["target_id"], []).append(PocketRef(r["target_id"], r["pocket_id"]))
    if (db / "affinity_refs.tsv").exists():
        for r in _read_tsv(db / "affinity_refs.tsv"):
            out.refs[r["target_id"]] = (float(r["positive_mean"]), float(r["background_mean"]))
    if (db / "background.smi").exists():
        out.background = read_smiles_lines((db / "background.smi").read_text().splitlines())
    if (db / "forest.json").exists():
        out.forest = RankForest.from_json((db / "forest.json").read_text())
    return out


# --------------------------------------------------------------------------
# build


def sampling_pools(db: Database) -> dict[int, FingerprintSet]:
    """Background pools: every curated compound, one per scaffold for subset 2."""
    everything = db.fingerprints
    unique = everything[np.asarray(dedupe_keys(db.scaffolds), dtype=np.int64)]
    return {1: everything, 2: unique, 3: everything}


def n_db_for(subset_size: int, purpose: str) -> int:
    """Comparisons per subset: targets screened (cumulative) or ordered pairs (clustering)."""
    if purpose == "cumulative":
        return max(1, subset_size)
    return max(1, subset_size * (subset_size - 1))


def background_sample(pool: FingerprintSet, subset: int, ts, seed: int, scale: float = 1.0,
                      fallback: FingerprintSet | None = None, sim_pool=None):
    """Sample one subset's background, shrinking set sizes for small pools."""
    protocol = PROTOCOLS[subset].scaled(scale)
    if len(pool) < protocol.size_max and fallback is not None and len(fallback) > len(pool):
        log.warning("subset %d pool of %d compounds too small; using all %d compounds",
                    subset, len(pool), len(fallback))
        pool, sim_pool = fallback, None
    clamped = protocol.clamped(len(pool))
    if clamped != protocol:
        log.warning("subset %d set sizes clamped to [%d, %d] for a pool of %d compounds",
                    subset, clamped.size_min, clamped.size_max, len(pool))
    return sample_background(sim_pool or SimilarityPool(pool), clamped, ts, seed)


def fit_models(db: Database, seed: int = 0, scale: float = 1.0, ts_overrides=None,
               subsets=(1, 2, 3)) -> ModelSet:
    ts_table = dict(DEFAULT_TS)
    ts_table.update(ts_overrides or {})
    parts = partition_subsets(db.targets)
    pools = sampling_pools(db)
    models = ModelSet()
    absent = []
    dense = SimilarityPool(db.fingerprints) if len(db.fingerprints) <= 4000 else None
    for subset in subsets:
        if not parts[subset]:
            absent += [(subset, p) for p in PURPOSES]
            continue
        ts = sorted({ts_table[(subset, p)] for p in PURPOSES})
        pool = pools[subset]
        shared = dense if pool is db.fingerprints else None
        sample = background_sample(pool, subset, ts, seed, scale, db.fingerprints, shared)
        for purpose in PURPOSES:
            n = n_db_for(len(parts[subset]), purpose)
            models.add(fit_stat_model(sample, ts_table[(subset, purpose)], purpose, n))
    models.absent = sorted(absent)
    return models


def build(db_dir, provider, seed: int = 0, scale: float = 1.0, background=None,
          pockets=None, ts_overrides=None) -> Database:
    """Fit all background models, the association graph and affinity references."""
    dbp = Path(db_dir)
    db = load(dbp)
    background = list(background) if background is not None else default_background()
    models = fit_models(db, seed, scale, ts_overrides)
    graph = build_association_graph(db.targets, models)
    pocket_map = {t.target_id: default_pockets(t.target_id) for t in db.targets}
    given: dict[str, list[PocketRef]] = {}
    for p in pockets or []:
        given.setdefault(p.target_id, []).append(p)
    pocket_map.update({k: v for k, v in given.items() if k in pocket_map})
    refs = {t.target_id: reference_stats(provider, t, background, pocket_map[t.target_id])
            for t in db.targets}

    (dbp / "forest.json").unlink(missing_ok=True)
    (dbp / "models.json").write_text(models.to_json())
    graph.write_tsv(dbp / "association.tsv")
    _write_tsv(dbp / "pockets.tsv", ["target_id", "pocket_id"],
               [[p.target_id, p.pocket_id] for tid in sorted(pocket_map)
                for p in sorted(pocket_map[tid], key=lambda p: p.pocket_id)])
    _write_tsv(dbp / "affinity_refs.tsv", ["target_id", "positive_mean", "background_mean"],
               [[tid, _fmt(a), _fmt(b)] for tid, (a, b) in sorted(refs.items())])
    (dbp / "background.smi").write_text("".join(s + "\n" for s in background))
    write_manifest(dbp, {
        "stage": "built",
        "build": {"seed": seed, "scale": scale, "background_size": len(background)},
        "absent_models": [list(k) for k in models.absent],
    })
    return load(dbp)


def save_forest(db_dir, forest: RankForest) -> None:
    dbp = Path(db_dir)
    forest.save(dbp / "forest.json")
    write_manifest(dbp, {"stage": "ranked"})


# --------------------------------------------------------------------------
# prediction


def query_fingerprint(db: Database, smiles: str):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mol = largest_fragment(parse_smiles(smiles))
    except SmilesError as err:
        raise QueryError(f"cannot parse query: {err}") from err
    except ChemError as err:
        raise QueryError(f"invalid query structure: {err}") from err
    cfg = db.fp_config
    return canonical_smiles(mol), ecfp(mol, cfg.radius, cfg.width, cfg.seed)


def screen(db: Database, fp, expand_maxsim: bool = False, significance: float = SIGNIFICANCE,
           max_sim_threshold: float = MAX_SIM_THRESHOLD):
    """Candidate targets for one query fingerprint, with all evidence merged."""
    if not db.is_built:
        raise DatabaseError(f"{db.path}: database not built (run build first)")
    cum = cumulative_screen(fp, db.targets, db.models, significance)
    maxsim = max_sim_screen(fp, db.targets, max_sim_threshold)
    seeds = cum + (maxsim if expand_maxsim else [])
    assoc = [h for h in associate_targets(seeds, db.graph) if h.via_association]
    merged = merge_candidates(cum, assoc, maxsim, db.n_db())
    return fill_max_sim(merged, fp, db.by_id)


def affinity_triple(db: Database, provider, query: str, target_id: str) -> AffinityTriple:
    pockets = db.pockets.get(target_id) or default_pockets(target_id)
    best, pocket = predict_affinity(provider, query, pockets)
    pos, bg = db.refs[target_id]
    return AffinityTriple(best, pos, bg, pocket)


def candidate_features(db: Database, provider, query_canonical: str, hits):
    rows = []
    for h in hits:
        aff = affinity_triple(db, provider, query_canonical, h.target_id)
        rows.append((h, aff, assemble_features(h, aff)))
    return rows


def similar_actives(db: Database, fp, target_id: str, n: int = N_SIMILAR) -> list[dict]:
    t = db.by_id[target_id]
    sims = t.active_fps.similarities(fp)
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], t.active_ids[i]))[:n]
    return [{"compound_id": t.active_ids[i], "smiles": t.active_smiles[i], "tc": float(sims[i])}
            for i in order]


def predict(db: Database, smiles: str, provider, top: int = 100, expand_maxsim: bool = False) -> dict:
    """Full prediction for one query structure as a JSON-ready document."""
    canonical, fp = query_fingerprint(db, smiles)
    hits = screen(db, fp, expand_maxsim)
    ranked = []
    if hits:
        if db.forest is None:
            raise DatabaseError(f"{db.path}: no ranking forest (run train-rank first)")
        rows = candidate_features(db, provider, canonical, hits)
        X = np.array([fv.as_array() for _, _, fv in rows])
        probs = db.forest.predict_proba(X)
        ranked = rank_candidates([(h, a, p, fv) for (h, a, fv), p in zip(rows, probs)], top)
    results = []
    for r in ranked:
        rec = {"rank": r.rank, "target_id": r.target_id, "probability": r.probability}
        rec.update({k: v for k, v in r.hit.to_dict().items() if k != "target_id"})
        rec["affinity"] = r.affinity.to_dict()
        rec["features"] = r.features.to_dict()
        rec["similar_actives"] = similar_actives(db, fp, r.target_id)
        results.append(rec)
    return {
        "query": smiles,
        "canonical": canonical,
        "database": str(db.path),
        "manifest_sha256": db.manifest_digest,
        "n_candidates": len(hits),
        "candidates": results,
    }


# --------------------------------------------------------------------------
# training data for the ranker


def training_rows(db: Database, provider, cases, expand_maxsim: bool = False):
    """Labelled candidate rows for (query, true target set) cases.

    Returns ``(features, labels, groups, target_ids, n_true)``; queries that
    fail to parse are skipped with a warning.
    """
    feats, labels, groups, tids, n_true = [], [], [], [], {}
    for g, case in enumerate(cases):
        query, truth = (case.compound, case.true_targets) if hasattr(case, "compound") else case
        try:
            canonical, fp = query_fingerprint(db, query)
        except QueryError as err:
            log.warning("skipping training query %r: %s", query, err)
            continue
        n_true[g] = len(set(truth))
        for h, _, fv in candidate_features(db, provider, canonical, screen(db, fp, expand_maxsim)):
            feats.append(fv.as_array())
            labels.append(1 if h.target_id in truth else 0)
            groups.append(g)
            tids.append(h.target_id)
    X = np.asarray(feats, dtype=np.float64).reshape(-1, 8)
    return X, np.asarray(labels, dtype=np.int64), np.asarray(groups, dtype=np.int64), tids, n_true


def train_ranker(db: Database, provider, cases, seed: int = 0, hyperparams=None,
                 expand_maxsim: bool = False) -> RankForest:
    from .ranking import train_forest

    X, y, *_ = training_rows(db, provider, cases, expand_maxsim)
    if len(set(y.tolist())) < 2:
        raise RankingError(
            f"training candidates contain a single class ({int(y.sum())} of {y.size} positive)"
        )
    return train_forest(list(zip(X, y)), hyperparams, seed)


# --------------------------------------------------------------------------
# threshold selection


def select_cumulative_ts(db: Database, cases, subset: int, seed: int = 0, scale: float = 1.0,
                         grid=None, significance: float = SIGNIFICANCE) -> tuple[float, list]:
    """Cumulative threshold that recovers the most true targets of ``subset`` on ``cases``."""
    from .sea.fit import TS_GRID, select_ts

    grid = tuple(grid or TS_GRID)
    members = partition_subsets(db.targets)[subset]
    if not members:
        raise DatabaseError(f"subset {subset} has no targets")
    ids = {t.target_id for t in members}
    pairs = []
    for case in cases:
        query, truth = (case.compound, case.true_targets) if hasattr(case, "compound") else case
        truth = set(truth) & ids
        if truth:
            pairs.append((query_fingerprint(db, query)[1], truth))
    if not pairs:
        raise DatabaseError(f"no evaluation case has a true target in subset {subset}")
    pool = sampling_pools(db)[subset]
    sample = background_sample(pool, subset, grid, seed, scale, db.fingerprints)
    n = n_db_for(len(members), "cumulative")
    candidates, curve = [], []
    for ts in grid:
        try:
            candidates.append((ts, fit_stat_model(sample, ts, "cumulative", n)))
        except ValueError as err:
            log.info("ts=%.2f skipped: %s", ts, err)

    def hits(model, fp):
        try:
            return {h.target_id for h in cumulative_screen(fp, members, {subset: model}, significance)}
        except ValueError:
            return set()

    best = select_ts(candidates, pairs, hits)
    total = sum(len(t) for _, t in pairs)
    for ts, model in candidates:
        curve.append((ts, sum(len(t & hits(model, fp)) for fp, t in pairs) / total))
    return best, curve


def select_clustering_ts(db: Database, subset: int, seed: int = 0, scale: float = 1.0, grid=None):
    from .sea.fit import TS_GRID, select_ts_by_gof

    grid = tuple(grid or TS_GRID)
    members = partition_subsets(db.targets)[subset]
    pool = sampling_pools(db)[subset]
    sample = background_sample(pool, subset, grid, seed, scale, db.fingerprints)
    best, scored = select_ts_by_gof(sample, n_db_for(len(members), "clustering"))
    return best, sorted((t, p) for p, t, _ in scored)
