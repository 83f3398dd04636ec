"""SMILES reading and writing.

Supported: organic subset, bracket atoms with isotope/H-count/charge, branches,
ring closures (digits and ``%nn``), lowercase aromatic atoms and dot-separated
fragments. Stereo marks (``@``, ``/``, ``\\``) are accepted and dropped with a
:class:`StereoIgnoredWarning`.
"""

from __future__ import annotations

import sys
import warnings

from .elements import AROMATIC_BRACKET, ORGANIC_SUBSET, is_element
from .molecule import (
    Atom,
    Bond,
    BondOrder,
    ChemError,
    Molecule,
    ValenceError,
    bond_valence,
    default_implicit_h,
)


class SmilesError(ChemError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.reason = message
        self.offset = offset


class StereoIgnoredWarning(UserWarning):
    pass


_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[dict] = []
        self.bonds: dict[tuple[int, int], tuple[BondOrder | None, int]] = {}
        self.ring_open: dict[int, tuple[int, BondOrder | None, int]] = {}
        self.stereo = False

    def fail(self, message: str, offset: int | None = None):
        raise SmilesError(message, self.pos if offset is None else offset)

    def parse(self) -> Molecule:
        text = self.text
        if not text:
            self.fail("empty SMILES string", 0)
        prev: int | None = None
        branch_stack: list[tuple[int, int]] = []  # (atom, offset of "(")
        branch_empty = False
        pending: tuple[BondOrder, int] | None = None

        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "(":
                if prev is None:
                    self.fail("branch opened before any atom")
                if pending is not None:
                    self.fail("bond symbol before branch", pending[1])
                branch_stack.append((prev, self.pos))
                branch_empty = True
                self.pos += 1
            elif ch == ")":
                if not branch_stack:
                    self.fail("unbalanced ')'")
                if pending is not None:
                    self.fail("dangling bond symbol", pending[1])
                if branch_empty:
                    self.fail("empty branch")
                prev = branch_stack.pop()[0]
                branch_empty = False
                self.pos += 1
            elif ch in _BOND_CHARS or ch == "$":
                if ch == "$":
                    self.fail("quadruple bonds are not supported")
                if prev is None:
                    self.fail("bond symbol without a preceding atom")
                if pending is not None:
                    self.fail("consecutive bond symbols")
                if ch in "/\\":
                    self.stereo = True
                pending = (_BOND_CHARS[ch], self.pos)
                self.pos += 1
            elif ch == ".":
                if pending is not None:
                    self.fail("bond symbol before '.'", pending[1])
                if prev is None:
                    self.fail("'.' without a preceding atom")
                if branch_stack:
                    self.fail("'.' inside a branch")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.fail("ring closure without a preceding atom")
                start = self.pos
                num = self._ring_number()
                self._ring_bond(prev, num, pending, start)
                pending = None
            else:
                start = self.pos
                idx = self._atom()
                if prev is not None:
                    order = pending[0] if pending else None
                    self._add_bond(prev, idx, order, pending[1] if pending else start)
                elif pending is not None:
                    self.fail("bond symbol without a preceding atom", pending[1])
                pending = None
                prev = idx
                branch_empty = False

        if pending is not None:
            self.fail("dangling bond symbol", pending[1])
        if prev is None:
            self.fail("'.' without a following atom", len(text) - 1)
        if branch_stack:
            self.fail("unbalanced '('", branch_stack[-1][1])
        if self.ring_open:
            num, (atom, _, off) = min(self.ring_open.items(), key=lambda kv: kv[1][2])
            self.fail(f"unclosed ring bond {num}", off)
        if self.stereo:
            warnings.warn(
                f"stereo descriptors ignored in {text!r}", StereoIgnoredWarning, stacklevel=3
            )
        return self._finish()

    def _ring_number(self) -> int:
        text = self.text
        if text[self.pos] == "%":
            digits = text[self.pos + 1 : self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.fail("malformed '%nn' ring number")
            self.pos += 3
            return int(digits)
        self.pos += 1
        return int(text[self.pos - 1])

    def _ring_bond(self, atom, num, pending, offset):
        if num not in self.ring_open:
            self.ring_open[num] = (atom, pending[0] if pending else None, offset)
            return
        other, order, open_off = self.ring_open.pop(num)
        close_order = pending[0] if pending else None
        if order is not None and close_order is not None and order != close_order:
            self.fail(f"conflicting bond orders on ring bond {num}", offset)
        if other == atom:
            self.fail(f"ring bond {num} closes on its own atom", offset)
        self._add_bond(other, atom, order or close_order, offset)

    def _add_bond(self, a, b, order, offset):
        key = (a, b) if a < b else (b, a)
        if key in self.bonds:
            self.fail("duplicate bond between the same atoms", offset)
        self.bonds[key] = (order, offset)

    def _atom(self) -> int:
        text, start = self.text, self.pos
        ch = text[start]
        if ch == "[":
            return self._bracket_atom()
        two = text[start : start + 2]
        if two in ("Cl", "Br"):
            self.pos += 2
            return self._push(two, False, start)
        if ch in ORGANIC_SUBSET:
            self.pos += 1
            return self._push(ch, False, start)
        if ch in "bcnops":
            self.pos += 1
            return self._push(ch.upper(), True, start)
        if ch.isalpha():
            self.fail(f"unknown or non-organic element {ch!r} outside brackets")
        self.fail(f"unexpected character {ch!r}")

    def _push(self, element, aromatic, offset, **kw) -> int:
        self.atoms.append(dict(element=element, aromatic=aromatic, offset=offset, **kw))
        return len(self.atoms) - 1

    def _bracket_atom(self) -> int:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            self.fail("unclosed '['", start)
        body = text[start + 1 : end]
        i = 0

        def at(k):
            return body[k] if k < len(body) else ""

        iso = ""
        while at(i).isdigit():
            iso += body[i]
            i += 1
        # element symbol
        aromatic = False
        sym = None
        for cand in sorted(AROMATIC_BRACKET, key=len, reverse=True):
            if body.startswith(cand, i):
                sym, aromatic = cand.capitalize(), True
                i += len(cand)
                break
        if sym is None:
            if not at(i).isupper():
                self.fail("missing element symbol in bracket atom", start + 1 + i)
            if at(i + 1).islower() and is_element(body[i : i + 2]):
                sym = body[i : i + 2]
                i += 2
            else:
                sym = body[i]
                i += 1
            if not is_element(sym):
                self.fail(f"unknown element symbol {sym!r}", start + 1 + i - len(sym))
        # chirality
        if at(i) == "@":
            self.stereo = True
            i += 1
            if at(i) == "@":
                i += 1
            elif body[i : i + 2] in ("TH", "AL", "SP", "TB", "OH"):
                i += 2
                while at(i).isdigit():
                    i += 1
        hcount = 0
        if at(i) == "H":
            i += 1
            digits = ""
            while at(i).isdigit():
                digits += body[i]
                i += 1
            hcount = int(digits) if digits else 1
        charge = 0
        if at(i) in ("+", "-"):
            sign = 1 if body[i] == "+" else -1
            sc = body[i]
            i += 1
            digits = ""
            while at(i).isdigit():
                digits += body[i]
                i += 1
            if digits:
                charge = sign * int(digits)
            else:
                mag = 1
                while at(i) == sc:
                    mag += 1
                    i += 1
                charge = sign * mag
        if at(i) == ":":
            i += 1
            if not at(i).isdigit():
                self.fail("malformed atom class", start + 1 + i)
            while at(i).isdigit():
                i += 1
        if i != len(body):
            self.fail(f"unexpected {body[i]!r} in bracket atom", start + 1 + i)
        self.pos = end + 1
        return self._push(
            sym,
            aromatic,
            start,
            bracket=True,
            explicit_h=hcount,
            formal_charge=charge,
            isotope=int(iso) if iso else None,
        )

    def _finish(self) -> Molecule:
        specs = self.atoms
        bonds = []
        for (a, b), (order, offset) in sorted(self.bonds.items()):
            both_arom = specs[a]["aromatic"] and specs[b]["aromatic"]
            if order is None:
                order = BondOrder.AROMATIC if both_arom else BondOrder.SINGLE
            elif order is BondOrder.AROMATIC and not both_arom:
                self.fail("aromatic bond between non-aromatic atoms", offset)
            bonds.append(Bond(a, b, order))
        skeleton = [
            Atom(
                s["element"],
                aromatic=s["aromatic"],
                formal_charge=s.get("formal_charge", 0),
                explicit_h=s.get("explicit_h", 0),
                isotope=s.get("isotope"),
                bracket=s.get("bracket", False),
            )
            for s in specs
        ]
        mol = Molecule.build(skeleton, bonds, self.text)
        atoms = list(mol.atoms)
        for i, s in enumerate(specs):
            a = atoms[i]
            if a.aromatic and not a.ring_member:
                self.fail("aromatic atom outside a ring", s["offset"])
            if a.bracket:
                continue
            used = bond_valence(bonds, i, a.aromatic)
            try:
                h = default_implicit_h(a.element, a.aromatic, used)
            except ValenceError as err:
                self.fail(f"valence violation ({err})", s["offset"])
            if h:
                atoms[i] = Atom(
                    a.element, a.aromatic, a.formal_charge, 0, h, a.ring_member, a.isotope, False
                )
        return Molecule(tuple(atoms), tuple(bonds), self.text)


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Raises :class:`SmilesError` (with ``offset``) on malformed input, unknown
    elements and valence violations.
    """
    return _Parser(text.strip()).parse()


# --------------------------------------------------------------------------
# writing


def _atom_token(mol: Molecule, idx: int) -> str:
    a = mol.atoms[idx]
    sym = a.element.lower() if a.aromatic else a.element
    bare_ok = (
        a.formal_charge == 0
        and a.isotope is None
        and (a.element in ORGANIC_SUBSET)
        and (not a.aromatic or a.element in "BCNOPS")
    )
    if bare_ok:
        used = bond_valence(mol.bonds, idx, a.aromatic)
        try:
            if default_implicit_h(a.element, a.aromatic, used) == a.hydrogens:
                return sym
        except ValenceError:
            pass
    out = "["
    if a.isotope is not None:
        out += str(a.isotope)
    out += sym
    if a.hydrogens:
        out += "H" if a.hydrogens == 1 else f"H{a.hydrogens}"
    if a.formal_charge:
        sign = "+" if a.formal_charge > 0 else "-"
        mag = abs(a.formal_charge)
        out += sign if mag == 1 else f"{sign}{mag}"
    return out + "]"


def _bond_token(mol: Molecule, bond: Bond) -> str:
    a, b = mol.atoms[bond.begin], mol.atoms[bond.end]
    if bond.order is BondOrder.AROMATIC:
        return ""
    if bond.order is BondOrder.SINGLE:
        return "-" if (a.aromatic and b.aromatic) else ""
    return bond.order.symbol


def write_smiles(mol: Molecule, ranks=None) -> str:
    """Write ``mol`` as SMILES, traversing atoms in ``ranks`` order.

    With the default (canonical) ranks the output is canonical: isomorphic
    molecules give identical strings. Fragments are sorted by their string.
    """
    if not mol.atoms:
        return ""
    if ranks is None:
        from .canon import canonical_ranks

        ranks = canonical_ranks(mol)
    frags = []
    for comp in mol.components():
        start = min(comp, key=lambda i: ranks[i])
        frags.append(_write_component(mol, start, ranks))
    return ".".join(sorted(frags))


def _write_component(mol: Molecule, start: int, ranks) -> str:
    nbrs = mol.neighbors
    order_of = lambda pair: ranks[pair[0]]  # noqa: E731

    # pass 1: DFS tree, collect ring-closure bonds
    visited = set()
    parent_bond: dict[int, int] = {}
    children: dict[int, list[tuple[int, int]]] = {}
    closures: dict[int, list[int]] = {}  # atom -> bond indices closing a ring at it
    tree_bonds = set()
    stack = [(start, -1)]
    dfs_order = []
    while stack:
        v, pb = stack.pop()
        if v in visited:
            continue
        visited.add(v)
        dfs_order.append(v)
        if pb >= 0:
            tree_bonds.add(pb)
            parent_bond[v] = pb
            children.setdefault(mol.bonds[pb].other(v), []).append((v, pb))
        for w, k in sorted(nbrs[v], key=order_of, reverse=True):
            if w not in visited:
                stack.append((w, k))
    position = {v: i for i, v in enumerate(dfs_order)}
    for k, b in enumerate(mol.bonds):
        if k in tree_bonds or b.begin not in visited:
            continue
        closures.setdefault(b.begin, []).append(k)
        closures.setdefault(b.end, []).append(k)

    # pass 2: emit
    free_digits = list(range(1, 100))
    open_ring: dict[int, int] = {}  # bond -> digit
    out: list[str] = []

    def ring_label(d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(v: int):
        out.append(_atom_token(mol, v))
        # ring bonds: closings first (opened earlier), then openings, by partner order
        ring_here = sorted(
            closures.get(v, []), key=lambda k: (position[mol.bonds[k].other(v)], k)
        )
        for k in ring_here:
            if k in open_ring:
                d = open_ring.pop(k)
                out.append(_bond_token(mol, mol.bonds[k]) + ring_label(d))
                free_digits.append(d)
                free_digits.sort()
        for k in ring_here:
            w = mol.bonds[k].other(v)
            if position[w] > position[v] and k not in open_ring:
                d = free_digits.pop(0)
                open_ring[k] = d
                out.append(_bond_token(mol, mol.bonds[k]) + ring_label(d))
        kids = children.get(v, [])
        kids = sorted(kids, key=lambda p: position[p[0]])
        for n, (w, k) in enumerate(kids):
            last = n == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_bond_token(mol, mol.bonds[k]))
            emit(w)
            if not last:
                out.append(")")

    if len(dfs_order) + 50 > sys.getrecursionlimit():
        sys.setrecursionlimit(len(dfs_order) + 1000)
    emit(start)
    return "".join(out)
