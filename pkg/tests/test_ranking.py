import numpy as np
import pytest

from simtarget.affinity import AffinityTriple, PocketRef
from simtarget.ranking import (
    FEATURE_NAMES,
    DEFAULT_FOREST_PARAMS,
    FeatureVector,
    RankForest,
    RankingError,
    ablate,
    assemble_features,
    feature_importance,
    mask_features,
    predict_proba,
    rank_candidates,
    resolve_max_features,
    train_forest,
)
from simtarget.screening import ScreeningHit


def blobs(n=200, seed=0, sep=4.0):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 2).astype(int)
    X = rng.normal(0, 1, (n, 8)) + sep * y[:, None]
    return X, y


def single_informative(n, seed):
    """Only column 0 carries the label; the rest is noise."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(int)
    X = rng.random((n, 8))
    X[:, 0] = y + rng.normal(0, 0.15, n)
    return X, y


def rows(X, y):
    return list(zip(X, y))


class TestFeatures:
    def test_order_and_assembly(self):
        assert FEATURE_NAMES[0] == "max_sim" and len(FEATURE_NAMES) == 8
        hit = ScreeningHit("T", z=2.0, p=1e-4, e=0.1, max_sim=0.6, max_sim_compound="c",
                           direct_hit=True)
        aff = AffinityTriple(7.5, 6.0, 4.5, PocketRef("T", "P1"))
        fv = assemble_features(hit, aff)
        np.testing.assert_allclose(fv.as_array(), [0.6, 4.0, 2.0, 0.0, 1.0, 7.5, 6.0, 4.5])

    def test_p_zero_is_capped(self):
        hit = ScreeningHit("T", z=50.0, p=0.0, direct_hit=True)
        fv = assemble_features(hit, AffinityTriple(5, 5, 5, PocketRef("T", "P1")))
        assert fv.neg_log10_p == 300.0

    def test_validation(self):
        with pytest.raises(RankingError):
            FeatureVector(np.nan, 0, 0, 0, 0, 0, 0, 0)
        with pytest.raises(RankingError):
            FeatureVector(0, -1, 0, 0, 0, 0, 0, 0)


class TestHyperparameters:
    def test_table_s2_verbatim(self):
        assert DEFAULT_FOREST_PARAMS == {"n_estimators": 610, "max_depth": 26, "min_samples_split": 7,
                            "min_samples_leaf": 2, "bootstrap": False, "max_features": "sqrt"}
        assert resolve_max_features("sqrt") == 2
        assert resolve_max_features(None) == 8
        assert resolve_max_features("log2") == 3

    def test_forest_records_params(self):
        f = train_forest(rows(*blobs(40)), {"n_estimators": 3})
        assert f.hyperparams["max_depth"] == 26 and len(f.trees) == 3


class TestTraining:
    def test_blobs_training_accuracy(self):
        X, y = blobs()
        f = train_forest(rows(X, y), {"n_estimators": 50}, seed=1)
        assert np.all((f.predict_proba(X) > 0.5) == y)

    def test_stump(self):
        X = np.zeros((10, 8))
        X[:, 3] = np.arange(10)
        y = (np.arange(10) >= 6).astype(int)
        f = train_forest(rows(X, y), {"n_estimators": 1, "max_features": None, "max_depth": 1})
        t = f.trees[0]
        assert t.feature[0] == 3 and t.threshold[0] == 5.5
        np.testing.assert_array_equal(f.predict_proba(X), y)

    def test_forest_is_mean_of_trees(self):
        X, y = single_informative(120, 0)
        f = train_forest(rows(X, y), {"n_estimators": 7}, seed=2)
        Q = np.random.default_rng(3).random((50, 8))
        ref = np.mean([t.predict(Q) for t in f.trees], axis=0)
        np.testing.assert_allclose(f.predict_proba(Q), ref, rtol=0, atol=1e-15)

    def test_fuzz_probabilities_bounded(self):
        X, y = single_informative(300, 4)
        f = train_forest(rows(X, y), {"n_estimators": 20}, seed=0)
        p = f.predict_proba(np.random.default_rng(5).random((10_000, 8)))
        assert np.all((p >= 0) & (p <= 1))

    def test_tree_structure_obeys_limits(self):
        X, y = single_informative(400, 6)
        f = train_forest(rows(X, y), {"n_estimators": 10, "max_depth": 6}, seed=0)
        for t in f.trees:
            assert t.depth() <= 6
            leaves = t.feature < 0
            assert np.all(t.n_samples[leaves] >= 2)
            inner = ~leaves
            assert np.all(t.n_samples[inner] >= 7)
            np.testing.assert_array_equal(t.n_samples[t.left[inner]] + t.n_samples[t.right[inner]],
                                          t.n_samples[inner])

    def test_deterministic_per_seed(self):
        X, y = single_informative(150, 7)
        a = train_forest(rows(X, y), {"n_estimators": 15}, seed=11)
        b = train_forest(rows(X, y), {"n_estimators": 15}, seed=11)
        assert a.to_json() == b.to_json()
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))
        c = train_forest(rows(X, y), {"n_estimators": 15}, seed=12)
        assert c.to_json() != a.to_json()

    def test_errors(self):
        X, _ = blobs(20)
        with pytest.raises(RankingError):
            train_forest(rows(X, np.zeros(20, dtype=int)))
        with pytest.raises(RankingError):
            train_forest([])
        with pytest.raises(RankingError):
            train_forest(rows(X, np.full(20, 2)))


class TestSklearnOracle:
    def test_shallow_tree_matches(self):
        tree_mod = pytest.importorskip("sklearn.tree")
        X, y = single_informative(300, 8)
        for depth in (1, 2, 3):
            f = train_forest(rows(X, y), {"n_estimators": 1, "max_features": None, "max_depth": depth,
                                          "min_samples_leaf": 2, "min_samples_split": 7})
            ref = tree_mod.DecisionTreeClassifier(max_depth=depth, min_samples_leaf=2,
                                                  min_samples_split=7, random_state=0).fit(X, y)
            Q = np.random.default_rng(depth).random((2000, 8))
            np.testing.assert_allclose(f.predict_proba(Q), ref.predict_proba(Q)[:, 1], atol=1e-12)


class TestImportance:
    def test_sums_to_one_and_finds_signal(self):
        X, y = single_informative(300, 9)
        f = train_forest(rows(X, y), {"n_estimators": 30}, seed=0)
        imp = feature_importance(f)
        assert abs(imp.sum() - 1.0) <= 1e-9
        assert int(np.argmax(imp)) == 0


class TestAblation:
    def test_masking_sole_informative_feature(self):
        X, y = single_informative(400, 10)
        Xt, yt = single_informative(400, 11)
        f = train_forest(rows(X, y), {"n_estimators": 50}, seed=0)
        rep = ablate(f, Xt, yt, [["max_sim"], ["z"]])
        assert rep["baseline"]["auc"] > 0.95
        assert abs(rep["masks"][0]["metrics"]["auc"] - 0.5) <= 0.1
        assert abs(rep["masks"][1]["delta"]["auc"]) < 0.05

    def test_mask_uses_means(self):
        X = np.arange(16.0).reshape(2, 8)
        out = mask_features(X, ["z", 0], np.full(8, -1.0))
        assert np.all(out[:, [0, 2]] == -1.0)
        np.testing.assert_array_equal(out[:, 1], X[:, 1])


class TestPersistence:
    def test_json_round_trip(self, tmp_path):
        X, y = single_informative(100, 12)
        f = train_forest(rows(X, y), {"n_estimators": 5}, seed=3)
        path = tmp_path / "forest.json"
        f.save(path)
        g = RankForest.load(path)
        assert g.to_json() == f.to_json()
        np.testing.assert_array_equal(g.predict_proba(X), f.predict_proba(X))

    def test_rejects_wrong_version(self):
        X, y = single_informative(60, 13)
        text = train_forest(rows(X, y), {"n_estimators": 1}).to_json().replace('"version":1', '"version":99')
        with pytest.raises((RankingError, ValueError)):
            RankForest.from_json(text)


class TestRankCandidates:
    def test_ordering_and_ties(self):
        hits = [ScreeningHit("B", max_sim=0.5), ScreeningHit("A", max_sim=0.5),
                ScreeningHit("C", max_sim=0.9), ScreeningHit("D", max_sim=0.1)]
        probs = [0.7, 0.7, 0.7, 0.9]
        out = rank_candidates([(h, None, p) for h, p in zip(hits, probs)], top=3)
        assert [r.target_id for r in out] == ["D", "C", "A"]
        assert [r.rank for r in out] == [1, 2, 3]

    def test_predict_single(self):
        X, y = blobs(60)
        f = train_forest(rows(X, y), {"n_estimators": 5})
        fv = FeatureVector(*X[1])
        assert predict_proba(f, fv) == f.predict_proba(X[1:2])[0]
