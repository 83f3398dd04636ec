"""Canonical atom ranking by iterative neighbourhood refinement with tie breaking."""

from __future__ import annotations

from .elements import atomic_number
from .molecule import Molecule


def atom_invariant(mol: Molecule, idx: int) -> tuple[int, ...]:
    a = mol.atoms[idx]
    return (
        atomic_number(a.element),
        int(a.aromatic),
        a.formal_charge,
        mol.heavy_degree(idx),
        mol.total_hydrogens(idx),
        int(a.ring_member),
        a.isotope or 0,
    )


def _dense(keys) -> list[int]:
    lookup = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [lookup[k] for k in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    nbrs = mol.neighbors
    bonds = mol.bonds
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((int(bonds[k].order), ranks[j]) for j, k in nbrs[i])))
            for i in range(len(ranks))
        ]
        new = _dense(keys)
        n_new = len(set(new))
        if n_new == n_classes:
            return new
        ranks, n_classes = new, n_new


def canonical_ranks(mol: Molecule) -> list[int]:
    """Ranks forming a permutation of ``0..n-1``, invariant under atom relabeling.

    Atoms that remain tied after refinement are separated one at a time,
    always in the lowest tied class; for symmetry-equivalent atoms the
    choice does not affect the written SMILES.
    """
    n = len(mol.atoms)
    if n == 0:
        return []
    ranks = _refine(mol, _dense([atom_invariant(mol, i) for i in range(n)]))
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        pick = min(i for i in range(n) if ranks[i] == tied)
        ranks = [2 * r + (0 if i == pick else 1) if r == tied else 2 * r for i, r in enumerate(ranks)]
        ranks = _refine(mol, _dense(ranks))
    return ranks


def canonical_smiles(mol: Molecule) -> str:
    from .smiles import write_smiles

    return write_smiles(mol, canonical_ranks(mol))
