"""Candidate features, a from-scratch random forest, ranking and ablation.

Trees are CART classifiers grown on Gini impurity and stored as flat node
arrays (``feature == -1`` marks a leaf). Each tree draws from its own
generator seeded with ``(seed, tree_index)``, so training is deterministic
and independent of evaluation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .affinity import AffinityTriple
from .screening import ScreeningHit, association_strength
from .sea.scoring import neg_log10

FEATURE_NAMES = (
    "max_sim",
    "neg_log10_p",
    "z",
    "association_strength",
    "direct_hit",
    "query_affinity",
    "positive_mean",
    "background_mean",
)
N_FEATURES = len(FEATURE_NAMES)
P_CAP = 300.0
TOP_N = 100
MODEL_VERSION = 1

# optimal values of the published hyperparameter search
DEFAULT_FOREST_PARAMS = {
    "n_estimators": 610,
    "max_depth": 26,
    "min_samples_split": 7,
    "min_samples_leaf": 2,
    "bootstrap": False,
    "max_features": "sqrt",
}
SEARCH_RANGES = {
    "n_estimators": [100, 1000],
    "max_depth": [3, 30],
    "min_samples_split": [2, 20],
    "min_samples_leaf": [1, 20],
    "bootstrap": [True, False],
    "max_features": ["sqrt", "log2", None],
}


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    max_sim: float
    neg_log10_p: float
    z: float
    association_strength: float
    direct_hit: float
    query_affinity: float
    positive_mean: float
    background_mean: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise RankingError(f"non-finite feature in {self}")
        if self.neg_log10_p < 0:
            raise RankingError("neg_log10_p must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)


def assemble_features(hit: ScreeningHit, aff: AffinityTriple) -> FeatureVector:
    return FeatureVector(
        max_sim=float(hit.max_sim),
        neg_log10_p=neg_log10(hit.p, P_CAP),
        z=float(hit.z),
        association_strength=association_strength(hit, P_CAP),
        direct_hit=1.0 if hit.direct_hit else 0.0,
        query_affinity=float(aff.query_affinity),
        positive_mean=float(aff.positive_mean),
        background_mean=float(aff.background_mean),
    )


def resolve_max_features(setting, n_features: int = N_FEATURES) -> int:
    if setting is None:
        return n_features
    if setting == "sqrt":
        return max(1, int(math.isqrt(n_features)))
    if setting == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(setting, float):
        return max(1, int(setting * n_features))
    return max(1, min(n_features, int(setting)))


@dataclass
class Tree:
    feature: np.ndarray  # int, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # positive-class fraction
    n_samples: np.ndarray
    impurity: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            go_left = X[rows[inner], f[inner]] <= self.threshold[node[inner]]
            nxt = np.where(go_left, self.left[node[inner]], self.right[node[inner]])
            node[inner] = nxt

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            n, d = stack.pop()
            best = max(best, d)
            if self.feature[n] >= 0:
                stack += [(self.left[n], d + 1), (self.right[n], d + 1)]
        return best

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "impurity": self.impurity.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["n_samples"], dtype=np.int64),
            np.asarray(d["impurity"], dtype=np.float64),
        )

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value", "n_samples", "impurity")
        )


def _gini(pos: float, n: float) -> float:
    if n == 0:
        return 0.0
    q = pos / n
    return 2.0 * q * (1.0 - q)


def _best_split_on(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best threshold on one feature: (weighted child impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    k = np.arange(1, n)  # left size
    valid = (xs[1:] > xs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
    if not valid.any():
        return None
    left_pos = np.cumsum(ys)[:-1]
    right_pos = ys.sum() - left_pos
    ql = left_pos / k
    qr = right_pos / (n - k)
    child = (k * 2.0 * ql * (1 - ql) + (n - k) * 2.0 * qr * (1 - qr)) / n
    child = np.where(valid, child, np.inf)
    i = int(np.argmin(child))
    lo, hi = xs[i], xs[i + 1]
    thr = (lo + hi) / 2.0
    if thr >= hi or not np.isfinite(thr):
        thr = lo
    return float(child[i]), float(thr)


def _grow_tree(X, y, rows, params, rng) -> Tree:
    max_depth = params["max_depth"]
    min_split = params["min_samples_split"]
    min_leaf = params["min_samples_leaf"]
    n_try = resolve_max_features(params["max_features"], X.shape[1])
    feature, threshold, left, right, value, n_samples, impurity = ([] for _ in range(7))

    def new_node(idx):
        n = idx.size
        pos = float(y[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(pos / n)
        n_samples.append(n)
        impurity.append(_gini(pos, n))
        return len(feature) - 1

    root = new_node(rows)
    stack = [(root, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = idx.size
        if depth >= max_depth or n < min_split or n < 2 * min_leaf or impurity[node] <= 0.0:
            continue
        best = None
        seen = 0
        for f in rng.permutation(X.shape[1]):
            # keep looking past n_try features until some valid split exists
            if seen >= n_try and best is not None:
                break
            seen += 1
            res = _best_split_on(X[idx, f], y[idx], min_leaf)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], res[1], int(f))
        if best is None:
            continue
        _, thr, f = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node] = f
        threshold[node] = thr
        ln = new_node(li)
        rn = new_node(ri)
        left[node], right[node] = ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))
    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
        np.asarray(n_samples, dtype=np.int64),
        np.asarray(impurity, dtype=np.float64),
    )


@dataclass
class RankForest:
    trees: list[Tree]
    hyperparams: dict
    feature_names: tuple = FEATURE_NAMES
    feature_means: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    seed: int = 0

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise RankingError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)

    def to_json(self) -> str:
        doc = {
            "version": MODEL_VERSION,
            "hyperparams": self.hyperparams,
            "search_ranges": SEARCH_RANGES,
            "feature_names": list(self.feature_names),
            "feature_means": [float(v) for v in self.feature_means],
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RankForest:
        doc = json.loads(text)
        if doc.get("version") != MODEL_VERSION:
            raise RankingError(f"unsupported forest file version {doc.get('version')}")
        names = tuple(doc["feature_names"])
        if names != FEATURE_NAMES:
            raise RankingError(f"forest was trained on features {names}")
        return cls(
            [Tree.from_dict(t) for t in doc["trees"]],
            doc["hyperparams"],
            names,
            np.asarray(doc["feature_means"], dtype=np.float64),
            int(doc.get("seed", 0)),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> RankForest:
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _as_matrix(rows) -> tuple[np.ndarray, np.ndarray]:
    feats, labels = [], []
    for fv, label in rows:
        feats.append(fv.as_array() if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64))
        labels.append(label)
    return np.asarray(feats, dtype=np.float64).reshape(-1, N_FEATURES), np.asarray(labels)


def train_forest(rows, hyperparams: dict | None = None, seed: int = 0) -> RankForest:
    """Fit a forest on ``(FeatureVector or array, label)`` rows."""
    params = dict(DEFAULT_FOREST_PARAMS)
    params.update(hyperparams or {})
    X, y = _as_matrix(rows)
    if X.shape[0] == 0:
        raise RankingError("no training rows")
    if not np.isin(y, (0, 1)).all():
        raise RankingError("labels must be 0 or 1")
    y = y.astype(np.float64)
    if y.min() == y.max():
        raise RankingError("training rows contain a single class")
    if not np.all(np.isfinite(X)):
        raise RankingError("non-finite training features")
    n = X.shape[0]
    trees = []
    for t in range(int(params["n_estimators"])):
        rng = np.random.default_rng([seed, t])
        if params["bootstrap"]:
            idx = np.sort(rng.integers(0, n, size=n))
        else:
            idx = np.arange(n)
        trees.append(_grow_tree(X, y, idx, params, rng))
    return RankForest(trees, params, FEATURE_NAMES, X.mean(axis=0), seed)


def predict_proba(forest: RankForest, fv) -> float:
    x = fv.as_array() if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64)
    return float(forest.predict_proba(x[None, :])[0])


def feature_importance(forest: RankForest) -> np.ndarray:
    """Mean decrease in Gini impurity per feature, normalized to sum to one."""
    total = np.zeros(len(forest.feature_names))
    for t in forest.trees:
        imp = np.zeros_like(total)
        root_n = t.n_samples[0]
        for node in np.flatnonzero(t.feature >= 0):
            l, r = t.left[node], t.right[node]
            gain = (
                t.n_samples[node] * t.impurity[node]
                - t.n_samples[l] * t.impurity[l]
                - t.n_samples[r] * t.impurity[r]
            ) / root_n
            imp[t.feature[node]] += gain
        if imp.sum() > 0:
            total += imp / imp.sum()
    if total.sum() == 0:
        return total
    return total / total.sum()


@dataclass(frozen=True)
class RankedPrediction:
    target_id: str
    probability: float
    rank: int
    hit: ScreeningHit
    affinity: AffinityTriple | None = None
    features: FeatureVector | None = None


def rank_candidates(candidates, top: int = TOP_N) -> list[RankedPrediction]:
    """Order ``(hit, affinity, probability[, features])`` tuples and keep the best ``top``.

    Sort key: probability desc, then max_sim desc, then target_id asc.
    """
    items = [tuple(c) + (None,) * (4 - len(c)) for c in candidates]
    items.sort(key=lambda c: (-c[2], -c[0].max_sim, c[0].target_id))
    return [
        RankedPrediction(hit.target_id, float(prob), k + 1, hit, aff, fv)
        for k, (hit, aff, prob, fv) in enumerate(items[:top])
    ]


def mask_features(X: np.ndarray, mask, means: np.ndarray) -> np.ndarray:
    """Replace the named (or indexed) feature columns by their training means."""
    X = np.array(X, dtype=np.float64, copy=True)
    for m in mask:
        j = FEATURE_NAMES.index(m) if isinstance(m, str) else int(m)
        X[:, j] = means[j]
    return X


def ranking_metrics(prob, labels, groups, max_sim, target_ids, n_true=None, ks=(15, 100)) -> dict:
    """ROC-AUC over candidate rows plus Top-N performance / Top-K recall per query group.

    ``n_true`` maps group -> number of true targets (defaults to the positives
    present among that group's candidates).
    """
    from .evaluation import EvalCase, roc_auc, top_k_recall, top_n_performance

    prob, labels = np.asarray(prob, dtype=np.float64), np.asarray(labels)
    groups = np.asarray(groups)
    out = {}
    try:
        out["auc"] = roc_auc(prob, labels)
    except ValueError:
        out["auc"] = None
    preds, cases = [], []
    for g in sorted(set(groups.tolist())):
        idx = np.flatnonzero(groups == g)
        order = sorted(idx, key=lambda i: (-prob[i], -max_sim[i], target_ids[i]))
        truth = {target_ids[i] for i in idx if labels[i] == 1}
        missing = (n_true or {}).get(g, len(truth)) - len(truth)
        truth |= {f"__missed_{g}_{k}" for k in range(max(0, missing))}
        if not truth:
            continue
        preds.append([target_ids[i] for i in order])
        cases.append(EvalCase(str(g), frozenset(truth)))
    for k in ks:
        if not cases:
            out[f"top{k}"] = None
        elif k >= 100:
            out[f"top{k}"] = top_k_recall(preds, cases, k)
        else:
            out[f"top{k}"] = top_n_performance(preds, cases, k)
    return out


def ablate(forest: RankForest, X, labels, masks, groups=None, max_sim=None, target_ids=None,
           n_true=None, ks=(15, 100)) -> dict:
    """Metrics with each feature mask applied (mean imputation), and deltas vs. unmasked."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    groups = np.zeros(n, dtype=np.int64) if groups is None else np.asarray(groups)
    max_sim = X[:, 0] if max_sim is None else np.asarray(max_sim)
    target_ids = [str(i) for i in range(n)] if target_ids is None else list(target_ids)
    base = ranking_metrics(forest.predict_proba(X), labels, groups, max_sim, target_ids, n_true, ks)
    report = {"baseline": base, "masks": []}
    for mask in masks:
        mask = list(mask)
        m = ranking_metrics(
            forest.predict_proba(mask_features(X, mask, forest.feature_means)),
            labels, groups, max_sim, target_ids, n_true, ks,
        )
        delta = {
            k: (None if m[k] is None or base[k] is None else m[k] - base[k]) for k in m
        }
        report["masks"].append({"mask": [str(x) for x in mask], "metrics": m, "delta": delta})
    return report
