"""Ranking metrics: Top-K recall, Top-N performance and ROC-AUC."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# the benchmark sets only kept compounds with at least this many known targets
MIN_TRUE_TARGETS = 2


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalCase:
    compound: str
    true_targets: frozenset

    def __post_init__(self):
        if not self.true_targets:
            raise EvaluationError(f"case {self.compound!r} has no true targets")
        object.__setattr__(self, "true_targets", frozenset(self.true_targets))

    @property
    def below_min_targets(self) -> bool:
        return len(self.true_targets) < MIN_TRUE_TARGETS


def read_cases(path) -> list[EvalCase]:
    """Evaluation TSV: compound string, then semicolon-separated target ids."""
    cases = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or row[0].startswith("#"):
                continue
            if line == 1 and row[0].lower() in ("compound", "smiles"):
                continue
            if len(row) < 2:
                raise EvaluationError(f"{path}:{line}: expected compound and target ids")
            targets = frozenset(t.strip() for t in row[1].split(";") if t.strip())
            cases.append(EvalCase(row[0].strip(), targets))
    return cases


def write_cases(path, cases) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["compound", "true_targets"])
        for c in cases:
            w.writerow([c.compound, ";".join(sorted(c.true_targets))])


def _check(predictions, cases, k):
    if k < 1:
        raise EvaluationError("cut-off must be >= 1")
    cases = list(cases)
    predictions = list(predictions)
    if not cases:
        raise EvaluationError("no evaluation cases")
    if len(predictions) != len(cases):
        raise EvaluationError(f"{len(predictions)} prediction lists for {len(cases)} cases")
    return predictions, cases


def top_k_recall(predictions, cases, k: int = 100) -> float:
    """Fraction of true (compound, target) pairs found in that compound's top k.

    ``predictions[i]`` is the ranked list of target ids for ``cases[i]``.
    """
    predictions, cases = _check(predictions, cases, k)
    found = total = 0
    for pred, case in zip(predictions, cases):
        top = set(list(pred)[:k])
        found += len(case.true_targets & top)
        total += len(case.true_targets)
    return found / total


def top_n_performance(predictions, cases, n: int = 15) -> float:
    """Fraction of compounds with at least one true target in the top n."""
    predictions, cases = _check(predictions, cases, n)
    ok = sum(1 for pred, case in zip(predictions, cases) if case.true_targets & set(list(pred)[:n]))
    return ok / len(cases)


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(positive outscores negative), ties counted as one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise EvaluationError("scores and labels must be 1-D and equally long")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int((labels == 0).sum())
    if n_pos + n_neg != labels.size:
        raise EvaluationError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC-AUC needs both classes")
    ranks = rankdata(scores)  # average ranks resolve ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


METRICS = ("top100", "top15", "auc")


def metrics_report(predictions, cases, scores=None, labels=None, which=METRICS) -> dict:
    out = {}
    for name in which:
        if name == "auc":
            out["auc"] = roc_auc(scores, labels) if scores is not None else None
        elif name.startswith("top"):
            k = int(name[3:])
            if k >= 100:
                out[name] = top_k_recall(predictions, cases, k)
            else:
                out[name] = top_n_performance(predictions, cases, k)
        else:
            raise EvaluationError(f"unknown metric {name!r}")
    return out


def format_table(metrics: dict) -> str:
    width = max(len(k) for k in metrics) if metrics else 6
    lines = [f"{'metric':<{width}}  value"]
    for k, v in metrics.items():
        lines.append(f"{k:<{width}}  {'n/a' if v is None else f'{v:.4f}'}")
    return "\n".join(lines)


def metrics_json(metrics: dict) -> str:
    return json.dumps(metrics, indent=2, sort_keys=True)
