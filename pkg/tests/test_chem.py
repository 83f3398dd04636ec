from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import isomorphic
from simtarget.chem import (
    BondOrder,
    SmilesError,
    StereoIgnoredWarning,
    ValenceError,
    canonical_ranks,
    canonical_smiles,
    check_element_whitelist,
    has_formal_charges,
    heavy_atom_count,
    largest_fragment,
    parse_smiles,
    write_smiles,
)

CORPUS = [
    line.split()[0]
    for line in (Path(__file__).parent / "data" / "roundtrip.smi").read_text().splitlines()
    if line.strip()
]


class TestParser:
    def test_benzene(self):
        m = parse_smiles("c1ccccc1")
        assert len(m.atoms) == 6
        assert all(a.aromatic and a.hydrogens == 1 for a in m.atoms)
        assert all(b.order is BondOrder.AROMATIC for b in m.bonds)
        assert all(a.ring_member for a in m.atoms)

    def test_implicit_hydrogens(self):
        m = parse_smiles("CC(=O)N")
        assert [a.hydrogens for a in m.atoms] == [3, 0, 0, 2]

    def test_bracket_atom_fields(self):
        m = parse_smiles("[13CH3+]")
        a = m.atoms[0]
        assert (a.element, a.isotope, a.explicit_h, a.formal_charge) == ("C", 13, 3, 1)
        assert parse_smiles("[Fe+3]").atoms[0].formal_charge == 3
        assert parse_smiles("[O--]").atoms[0].formal_charge == -2

    def test_ring_closure_percent(self):
        a = parse_smiles("C%10CCCCC%10")
        b = parse_smiles("C1CCCCC1")
        assert isomorphic(a, b)

    def test_ring_bond_order_on_closure(self):
        m = parse_smiles("C=1CCCCC1")
        orders = sorted(int(b.order) for b in m.bonds)
        assert orders == [1, 1, 1, 1, 1, 2]

    def test_disconnected(self):
        m = parse_smiles("[Na+].[Cl-]")
        assert len(m.components()) == 2
        assert not m.bonds

    def test_stereo_ignored_with_warning(self):
        with pytest.warns(StereoIgnoredWarning):
            m = parse_smiles("C/C=C/C")
        assert isomorphic(m, parse_smiles("CC=CC"))

    def test_chirality_dropped(self):
        assert isomorphic(parse_smiles("N[C@@H](C)C(=O)O"), parse_smiles("NC(C)C(=O)O"))

    def test_ring_flags(self):
        m = parse_smiles("c1ccccc1CC")
        assert [a.ring_member for a in m.atoms] == [True] * 6 + [False, False]
        assert m.ring_count() == 1
        assert parse_smiles("C12C3C4C1C5C2C3C45").ring_count() == 5

    @pytest.mark.parametrize(
        "text, offset, reason",
        [
            ("C(", 1, "unbalanced '('"),
            ("C)", 1, "unbalanced ')'"),
            ("C1CC", 1, "unclosed ring bond 1"),
            ("", 0, "empty SMILES string"),
            ("C==C", 2, "consecutive bond symbols"),
            ("CX", 1, None),
            ("c", 0, "aromatic atom outside a ring"),
            ("C(=)C", 2, "dangling bond symbol"),
            ("[C", 0, "unclosed '['"),
            ("[Xx]", 1, None),
            (".C", 0, None),
            ("C.", 1, None),
            ("C(C.C)", 3, "'.' inside a branch"),
            ("C$C", 1, None),
            ("(C)", 0, None),
            ("1CC1", 0, None),
            ("C1CC1C1", 6, "unclosed ring bond 1"),
            ("CC()C", 3, "empty branch"),
            ("C11", 2, None),
            ("Q", 0, None),
            ("C=1CCCCC-1", 9, None),
        ],
    )
    def test_invalid(self, text, offset, reason):
        with pytest.raises(SmilesError) as info:
            parse_smiles(text)
        assert info.value.offset == offset
        if reason:
            assert info.value.reason == reason
        assert f"offset {offset}" in str(info.value)

    @pytest.mark.parametrize("text", ["FC(F)(F)(F)F", "O=O=O", "C#N#C", "N(C)(C)(C)C"])
    def test_valence_violation(self, text):
        with pytest.raises((SmilesError, ValenceError)):
            parse_smiles(text)

    def test_hypervalent_allowed_states(self):
        parse_smiles("CS(=O)(=O)C")
        parse_smiles("OP(=O)(O)O")
        parse_smiles("[N+](C)(C)(C)C")

    @pytest.mark.parametrize("text", CORPUS[:40])
    def test_valid_corpus_parses(self, text):
        m = parse_smiles(text)
        assert len(m.atoms) > 0


class TestRoundTrip:
    def test_corpus_size(self):
        assert len(CORPUS) == 100

    @pytest.mark.parametrize("text", CORPUS)
    def test_isomorphic_round_trip(self, text):
        m = parse_smiles(text)
        out = write_smiles(m)
        back = parse_smiles(out)
        assert isomorphic(m, back), (text, out)
        assert canonical_smiles(back) == out

    @pytest.mark.parametrize("text", CORPUS[::5])
    def test_canonical_invariant_under_atom_order(self, text):
        m = parse_smiles(text)
        ref = canonical_smiles(m)
        rng = np.random.default_rng(len(text))
        for _ in range(5):
            # write with a random traversal order, then re-canonicalize
            ranks = rng.permutation(len(m.atoms)).tolist()
            shuffled = write_smiles(m, ranks)
            assert canonical_smiles(parse_smiles(shuffled)) == ref, shuffled

    def test_canonical_ranks_are_a_permutation(self):
        m = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O")
        r = canonical_ranks(m)
        assert sorted(r) == list(range(len(m.atoms)))


# random acyclic / monocyclic molecules for property tests
_ATOMS = ["C", "N", "O", "F", "Cl", "S"]


@st.composite
def chain_smiles(draw):
    n = draw(st.integers(1, 12))
    parts = ["C"]
    for _ in range(n):
        sym = draw(st.sampled_from(_ATOMS[:3] + ["C", "C"]))
        if draw(st.booleans()) and len(parts) > 1:
            parts.append(f"({draw(st.sampled_from(_ATOMS))})")
        parts.append(sym)
    s = "".join(parts)
    if draw(st.booleans()):
        s = "C1CC" + s + "C1"
    return s


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(chain_smiles())
    def test_round_trip_property(self, text):
        try:
            m = parse_smiles(text)
        except (SmilesError, ValenceError):
            return
        out = canonical_smiles(m)
        assert isomorphic(m, parse_smiles(out))
        assert canonical_smiles(parse_smiles(out)) == out

    @settings(max_examples=60, deadline=None)
    @given(chain_smiles(), st.randoms(use_true_random=False))
    def test_canonical_permutation_property(self, text, rnd):
        try:
            m = parse_smiles(text)
        except (SmilesError, ValenceError):
            return
        ranks = list(range(len(m.atoms)))
        rnd.shuffle(ranks)
        assert canonical_smiles(parse_smiles(write_smiles(m, ranks))) == canonical_smiles(m)


class TestCurationHelpers:
    def test_largest_fragment(self):
        m = largest_fragment(parse_smiles("[Na+].OC(=O)c1ccccc1"))
        assert canonical_smiles(m) == canonical_smiles(parse_smiles("OC(=O)c1ccccc1"))

    def test_largest_fragment_tie_is_deterministic(self):
        a = canonical_smiles(largest_fragment(parse_smiles("CCO.OCC")))
        b = canonical_smiles(largest_fragment(parse_smiles("OCC.CCO")))
        assert a == b

    def test_largest_fragment_single_component_is_identity(self):
        m = parse_smiles("CCO")
        assert largest_fragment(m) is m

    def test_whitelist(self):
        assert check_element_whitelist(parse_smiles("CC(=O)[O-].[Zn+2]"))
        assert check_element_whitelist(parse_smiles("ClCBr"))
        assert not check_element_whitelist(parse_smiles("C[Si](C)(C)C"))
        assert not check_element_whitelist(parse_smiles("[B](C)(C)C"))
        assert not check_element_whitelist(parse_smiles("[Se]"))

    def test_heavy_atom_count_ignores_hydrogen(self):
        assert heavy_atom_count(parse_smiles("[2H]C([2H])([2H])O")) == 2
        assert heavy_atom_count(parse_smiles("C" * 101)) == 101

    def test_charges(self):
        assert has_formal_charges(parse_smiles("C[N+](C)(C)C"))
        assert not has_formal_charges(parse_smiles("CN(C)C"))

    def test_subgraph_keeps_valence(self):
        m = parse_smiles("CCO")
        sub = m.subgraph([0, 1])
        assert [a.hydrogens for a in sub.atoms] == [3, 3]
