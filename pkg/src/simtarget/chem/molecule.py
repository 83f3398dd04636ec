"""Immutable molecular graph types and the graph utilities built on them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property

from .elements import DEFAULT_VALENCES, WHITELIST, is_element


class ChemError(ValueError):
    """Base class for structure errors."""


class ValenceError(ChemError):
    pass


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        return 1 if self is BondOrder.AROMATIC else int(self)

    @property
    def symbol(self) -> str:
        return {1: "-", 2: "=", 3: "#", 4: ":"}[int(self)]


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    ring_member: bool = False
    isotope: int | None = None
    bracket: bool = False

    def __post_init__(self):
        if not is_element(self.element):
            raise ChemError(f"unknown element {self.element!r}")
        if self.explicit_h < 0 or self.implicit_h < 0:
            raise ChemError("negative hydrogen count")

    @property
    def hydrogens(self) -> int:
        return self.explicit_h + self.implicit_h

    @property
    def is_heavy(self) -> bool:
        return self.element != "H"


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE

    def other(self, idx: int) -> int:
        return self.end if idx == self.begin else self.begin

    @property
    def key(self) -> tuple[int, int]:
        return (self.begin, self.end) if self.begin < self.end else (self.end, self.begin)


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_text: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for b in self.bonds:
            if b.begin == b.end:
                raise ChemError(f"self-loop on atom {b.begin}")
            if not (0 <= b.begin < n and 0 <= b.end < n):
                raise ChemError(f"bond {b.key} references a missing atom")
            if b.key in seen:
                raise ChemError(f"duplicate bond between atoms {b.key}")
            seen.add(b.key)
            if b.order is BondOrder.AROMATIC and not (
                self.atoms[b.begin].aromatic and self.atoms[b.end].aromatic
            ):
                raise ChemError(f"aromatic bond {b.key} between non-aromatic atoms")

    @classmethod
    def build(cls, atoms, bonds, source_text: str = "") -> Molecule:
        """Construct a molecule, recomputing ring-membership flags from the graph."""
        atoms = tuple(atoms)
        bonds = tuple(bonds)
        in_ring = ring_atoms(len(atoms), bonds)
        atoms = tuple(
            a if a.ring_member == (i in in_ring) else replace(a, ring_member=i in in_ring)
            for i, a in enumerate(atoms)
        )
        return cls(atoms, bonds, source_text)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom: tuple of (neighbor index, bond index)."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for k, b in enumerate(self.bonds):
            adj[b.begin].append((b.end, k))
            adj[b.end].append((b.begin, k))
        return tuple(tuple(x) for x in adj)

    @cached_property
    def ring_bonds(self) -> frozenset[int]:
        return frozenset(_cycle_bonds(len(self.atoms), self.bonds))

    def degree(self, idx: int) -> int:
        return len(self.neighbors[idx])

    def heavy_degree(self, idx: int) -> int:
        return sum(1 for j, _ in self.neighbors[idx] if self.atoms[j].is_heavy)

    def total_hydrogens(self, idx: int) -> int:
        """Attached hydrogens, counting explicit [H] atoms bonded to idx."""
        return self.atoms[idx].hydrogens + sum(
            1 for j, _ in self.neighbors[idx] if not self.atoms[j].is_heavy
        )

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by lowest index."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                i = stack.pop()
                comp.append(i)
                for j, _ in self.neighbors[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            comps.append(sorted(comp))
        return comps

    def ring_count(self) -> int:
        """Cycle-space dimension (E - V + C)."""
        return len(self.bonds) - len(self.atoms) + len(self.components())

    def subgraph(self, keep, source_text: str = "") -> Molecule:
        """Induced subgraph on ``keep``; removed bonds are replaced by hydrogens."""
        keep = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep)}
        lost = [0] * len(self.atoms)
        bonds = []
        for b in self.bonds:
            bi, ei = b.begin in remap, b.end in remap
            if bi and ei:
                bonds.append(Bond(remap[b.begin], remap[b.end], b.order))
            elif bi:
                lost[b.begin] += b.order.valence
            elif ei:
                lost[b.end] += b.order.valence
        atoms = []
        for old in keep:
            a = self.atoms[old]
            extra = lost[old] if self.atoms[old].is_heavy else 0
            atoms.append(replace(a, implicit_h=a.implicit_h + extra) if extra else a)
        return Molecule.build(atoms, bonds, source_text)


def _cycle_bonds(n: int, bonds) -> set[int]:
    """Indices of bonds lying on at least one cycle (all non-bridges)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, b in enumerate(bonds):
        adj[b.begin].append((b.end, k))
        adj[b.end].append((b.begin, k))
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # frames: (node, parent bond, iterator position)
        stack = [(root, -1, 0)]
        while stack:
            v, pb, pos = stack[-1]
            if pos < len(adj[v]):
                stack[-1] = (v, pb, pos + 1)
                w, k = adj[v][pos]
                if k == pb:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, 0))
                else:
                    low[v] = min(low[v], disc[w])
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(pb)
    return set(range(len(bonds))) - bridges


def ring_atoms(n: int, bonds) -> set[int]:
    out = set()
    for k in _cycle_bonds(n, bonds):
        out.add(bonds[k].begin)
        out.add(bonds[k].end)
    return out


def bond_valence(mol_bonds, idx: int, aromatic: bool) -> int:
    used = 0
    has_aromatic = False
    for b in mol_bonds:
        if idx in (b.begin, b.end):
            used += b.order.valence
            has_aromatic |= b.order is BondOrder.AROMATIC
    return used + (1 if aromatic and has_aromatic else 0)


def default_implicit_h(element: str, aromatic: bool, used: int) -> int:
    """Implicit hydrogens for an unbracketed atom with ``used`` bonding valence.

    Aromatic atoms count one extra valence unit for the delocalised bond.
    """
    valences = DEFAULT_VALENCES.get(element)
    if valences is None:
        raise ValenceError(f"{element} is not in the organic subset")
    for v in valences:
        if v >= used:
            return v - used
    if aromatic and used - 1 <= valences[-1]:
        return 0
    raise ValenceError(f"valence {used} exceeds allowed {valences[-1]} for {element}")


def heavy_atom_count(mol: Molecule) -> int:
    return sum(1 for a in mol.atoms if a.is_heavy)


def check_element_whitelist(mol: Molecule) -> bool:
    """True iff every atom belongs to the curation element whitelist."""
    return all(a.element in WHITELIST for a in mol.atoms)


def has_formal_charges(mol: Molecule) -> bool:
    return any(a.formal_charge for a in mol.atoms)
