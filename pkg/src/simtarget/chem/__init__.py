from .canon import canonical_ranks, canonical_smiles
from .elements import WHITELIST
from .molecule import (
    Atom,
    Bond,
    BondOrder,
    ChemError,
    Molecule,
    ValenceError,
    check_element_whitelist,
    has_formal_charges,
    heavy_atom_count,
)
from .smiles import SmilesError, StereoIgnoredWarning, parse_smiles, write_smiles


def largest_fragment(mol: Molecule) -> Molecule:
    """Connected component with the most heavy atoms.

    Ties go to more bonds, then to the lexicographically smallest canonical SMILES.
    """
    comps = mol.components()
    if len(comps) <= 1:
        return mol
    bonds_in = [0] * len(comps)
    owner = {}
    for c, comp in enumerate(comps):
        for i in comp:
            owner[i] = c
    for b in mol.bonds:
        bonds_in[owner[b.begin]] += 1

    def key(c):
        heavy = sum(1 for i in comps[c] if mol.atoms[i].is_heavy)
        sub = mol.subgraph(comps[c])
        return (-heavy, -bonds_in[c], canonical_smiles(sub))

    best = min(range(len(comps)), key=key)
    frag = mol.subgraph(comps[best])
    return Molecule(frag.atoms, frag.bonds, canonical_smiles(frag))


__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "ChemError",
    "Molecule",
    "SmilesError",
    "StereoIgnoredWarning",
    "ValenceError",
    "WHITELIST",
    "canonical_ranks",
    "canonical_smiles",
    "check_element_whitelist",
    "has_formal_charges",
    "heavy_atom_count",
    "largest_fragment",
    "parse_smiles",
    "write_smiles",
]
