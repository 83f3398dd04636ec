import math

import numpy as np
import pytest

from simtarget.affinity import (
    AffinityError,
    CoverageError,
    PocketRef,
    SyntheticProvider,
    TableProvider,
    canonical_key,
    predict_affinity,
    reference_stats,
    table_provider,
)


def pockets(tid, *ids):
    return [PocketRef(tid, p) for p in ids]


class TestPredictAffinity:
    def test_single_pocket(self):
        prov = TableProvider({(canonical_key("CCO"), "T1", "P1"): 6.5})
        assert predict_affinity(prov, "OCC", pockets("T1", "P1")) == (6.5, PocketRef("T1", "P1"))

    def test_best_pocket(self):
        key = canonical_key("CCO")
        prov = TableProvider({(key, "T1", "A"): 6.1, (key, "T1", "B"): 7.3, (key, "T1", "C"): 5.0})
        assert predict_affinity(prov, "CCO", pockets("T1", "A", "B", "C")) == (7.3, PocketRef("T1", "B"))

    def test_tie_to_smallest_pocket_and_permutation_invariance(self):
        key = canonical_key("CCO")
        prov = TableProvider({(key, "T1", "B"): 7.0, (key, "T1", "A"): 7.0, (key, "T1", "C"): 2.0})
        ps = pockets("T1", "C", "B", "A")
        ref = predict_affinity(prov, "CCO", ps)
        assert ref == (7.0, PocketRef("T1", "A"))
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert predict_affinity(prov, "CCO", [ps[i] for i in rng.permutation(3)]) == ref

    def test_coverage(self):
        prov = TableProvider({})
        with pytest.raises(CoverageError):
            predict_affinity(prov, "CCO", pockets("T1", "P1"))
        with pytest.raises(AffinityError):
            predict_affinity(prov, "CCO", [])
        # partial coverage skips the missing pocket
        prov = TableProvider({(canonical_key("CCO"), "T1", "P2"): 4.0})
        assert predict_affinity(prov, "CCO", pockets("T1", "P1", "P2"))[0] == 4.0


class TestReferenceStats:
    def test_means(self):
        table = {(canonical_key(s), "T1", "P1"): 7.0 for s in ("CCO", "CCN", "CCC")}
        table[(canonical_key("c1ccccc1"), "T1", "P1")] = 4.0
        table[(canonical_key("CC(=O)O"), "T1", "P1")] = 6.0
        prov = TableProvider(table)
        pos, bg = reference_stats(prov, ["CCO", "CCN", "CCC"], ["c1ccccc1", "CC(=O)O"], pockets("T1", "P1"))
        assert (pos, bg) == (7.0, 5.0)

    def test_brute_force_and_determinism(self):
        prov = SyntheticProvider(3)
        acts = ["CCO", "CCCN", "c1ccccc1O", "CC(C)O"]
        bg = ["CCCC", "OCCO", "NCCN"]
        ps = pockets("T9", "P1", "P2")
        pos, back = reference_stats(prov, acts, bg, ps)
        ref_pos = math.fsum(max(prov.score(a, "T9", p.pocket_id) for p in ps) for a in acts) / 4
        ref_bg = math.fsum(max(prov.score(a, "T9", p.pocket_id) for p in ps) for a in bg) / 3
        assert (pos, back) == (ref_pos, ref_bg)
        assert reference_stats(prov, acts, bg, ps) == (pos, back)

    def test_requires_inputs(self):
        prov = SyntheticProvider(0)
        with pytest.raises(AffinityError):
            reference_stats(prov, [], ["CCO"], pockets("T", "P1"))
        with pytest.raises(AffinityError):
            reference_stats(prov, ["CCO"], ["CCN"])


class TestProviders:
    def test_synthetic_range_and_determinism(self):
        prov = SyntheticProvider(1)
        vals = [prov.score(s, "T1", "P1") for s in ("CCO", "CCN", "CCC", "c1ccccc1")]
        assert all(3.0 <= v <= 9.0 for v in vals)
        assert prov.score("CCO", "T1", "P1") == prov.score("OCC", "T1", "P1")
        assert SyntheticProvider(2).score("CCO", "T1", "P1") != vals[0]

    def test_table_file(self, tmp_path):
        path = tmp_path / "aff.tsv"
        path.write_text("compound\ttarget_id\tpocket_id\tscore\nOCC\tT1\tP1\t7.2\n")
        prov = table_provider(path)
        assert prov.score("CCO", "T1", "P1") == 7.2
        assert prov.score("CCN", "T1", "P1") is None
        assert table_provider(path, default=4.0).score("CCN", "T1", "P1") == 4.0
        assert prov.pockets() == {"T1": ["P1"]}

    @pytest.mark.parametrize(
        "body",
        [
            "compound\ttarget\tscore\nCCO\tT1\t1\n",
            "compound\ttarget_id\tpocket_id\tscore\nCCO\tT1\tP1\tabc\n",
            "compound\ttarget_id\tpocket_id\tscore\nC(\tT1\tP1\t5\n",
            "compound\ttarget_id\tpocket_id\tscore\nCCO\tT1\tP1\t5\nOCC\tT1\tP1\t6\n",
            "compound\ttarget_id\tpocket_id\tscore\nCCO\tT1\tP1\tnan\n",
        ],
    )
    def test_malformed_tables(self, tmp_path, body):
        path = tmp_path / "bad.tsv"
        path.write_text(body)
        with pytest.raises(AffinityError):
            table_provider(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(AffinityError):
            table_provider(tmp_path / "none.tsv")
