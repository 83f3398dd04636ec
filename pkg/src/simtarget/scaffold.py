"""Murcko frameworks and scaffold-level deduplication."""

from __future__ import annotations

from dataclasses import dataclass

from .chem import BondOrder, Molecule, canonical_smiles


@dataclass(frozen=True, order=True)
class ScaffoldKey:
    canonical_string: str
    ring_count: int

    @property
    def is_empty(self) -> bool:
        return self.canonical_string == ""


EMPTY_KEY = ScaffoldKey("", 0)


def framework_atoms(mol: Molecule, keep_exocyclic_double: bool = True) -> list[int]:
    """Atom indices of the ring systems plus linkers between them."""
    alive = {i for i, a in enumerate(mol.atoms) if a.is_heavy}
    nbrs = mol.neighbors
    degree = {i: sum(1 for j, _ in nbrs[i] if j in alive) for i in alive}
    queue = [i for i in alive if degree[i] <= 1 and not mol.atoms[i].ring_member]
    while queue:
        i = queue.pop()
        if i not in alive:
            continue
        alive.discard(i)
        for j, _ in nbrs[i]:
            if j in alive:
                degree[j] -= 1
                if degree[j] <= 1 and not mol.atoms[j].ring_member:
                    queue.append(j)
    if keep_exocyclic_double and alive:
        extra = set()
        for i in alive:
            for j, k in nbrs[i]:
                if (
                    j not in alive
                    and mol.atoms[j].is_heavy
                    and mol.bonds[k].order is BondOrder.DOUBLE
                    and mol.heavy_degree(j) == 1
                ):
                    extra.add(j)
        alive |= extra
    return sorted(alive)


def murcko_scaffold(mol: Molecule, keep_exocyclic_double: bool = True) -> Molecule:
    """Ring systems and linkers of ``mol`` with terminal side chains pruned.

    Acyclic molecules give an empty molecule. Terminal atoms double-bonded to
    the framework (ring carbonyl oxygens and the like) are kept unless
    ``keep_exocyclic_double`` is false.
    """
    keep = framework_atoms(mol, keep_exocyclic_double)
    if not keep:
        return Molecule((), (), "")
    sub = mol.subgraph(keep)
    return Molecule(sub.atoms, sub.bonds, canonical_smiles(sub))


def scaffold_key(mol: Molecule, keep_exocyclic_double: bool = True) -> ScaffoldKey:
    frame = murcko_scaffold(mol, keep_exocyclic_double)
    if not frame.atoms:
        return EMPTY_KEY
    return ScaffoldKey(frame.source_text, frame.ring_count())


def scaffold_dedupe(mols, keep_exocyclic_double: bool = True) -> list[int]:
    """Index of the first molecule for each distinct scaffold key, in input order."""
    return dedupe_keys(scaffold_key(m, keep_exocyclic_double) for m in mols)


def dedupe_keys(keys) -> list[int]:
    seen = set()
    reps = []
    for i, key in enumerate(keys):
        if key not in seen:
            seen.add(key)
            reps.append(i)
    return reps
