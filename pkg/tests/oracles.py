"""Independent reference implementations used by the tests."""

from __future__ import annotations

import csv
from pathlib import Path

import networkx as nx
import numpy as np


def mol_graph(mol) -> nx.Graph:
    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, label=(a.element, a.aromatic, a.formal_charge, mol.total_hydrogens(i), a.isotope))
    for b in mol.bonds:
        g.add_edge(b.begin, b.end, order=int(b.order))
    return g


def isomorphic(m1, m2) -> bool:
    return nx.is_isomorphic(
        mol_graph(m1),
        mol_graph(m2),
        node_match=lambda x, y: x["label"] == y["label"],
        edge_match=lambda x, y: x["order"] == y["order"],
    )


def tanimoto_bits(a: set, b: set) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def raw_score_loop(bits_a, bits_b, ts: float) -> float:
    total = 0.0
    for a in bits_a:
        for b in bits_b:
            t = tanimoto_bits(a, b)
            if t >= ts:
                total += t
    return total


def auc_pairs(scores, labels) -> float:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))


def random_bitsets(rng, n: int, width: int = 2048, density: float = 0.03) -> list[set]:
    return [set(np.flatnonzero(rng.random(width) < density).tolist()) for _ in range(n)]


def write_interactions(path, rows, columns) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), delimiter="\t", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path
