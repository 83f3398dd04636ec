import warnings

import pytest

from oracles import write_interactions
from simtarget import datastore as ds
from simtarget.affinity import SyntheticProvider
from simtarget.synthetic import planted_database


@pytest.fixture(autouse=True)
def _quiet_stereo():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=UserWarning)
        yield


@pytest.fixture(scope="session")
def planted():
    return planted_database(seed=0)


@pytest.fixture(scope="session")
def planted_db(tmp_path_factory, planted):
    """Ingested, built and ranked planted database (reduced sampling, 100 trees)."""
    root = tmp_path_factory.mktemp("planted")
    src = write_interactions(root / "interactions.tsv", planted.interactions, ds.INTERACTION_COLUMNS)
    ds.ingest(src, root / "db")
    provider = SyntheticProvider(0)
    db = ds.build(root / "db", provider, seed=0, scale=0.1)
    forest = ds.train_ranker(db, provider, planted.train_cases, seed=0,
                             hyperparams={"n_estimators": 100})
    ds.save_forest(root / "db", forest)
    return ds.load(root / "db"), provider


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
