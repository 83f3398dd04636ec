"""Command-line entry point.

Exit codes: 0 success, 1 user error (bad input, bad flags), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import datastore as ds
from .affinity import AffinityError, SyntheticProvider, table_provider
from .chem import SmilesError
from .evaluation import EvaluationError, format_table, read_cases, roc_auc, top_k_recall, top_n_performance
from .ranking import FEATURE_NAMES, DEFAULT_FOREST_PARAMS, RankingError, ablate, feature_importance
from .report import emit_report
from .screening import ScreeningError
from .sea.model import PURPOSES

log = logging.getLogger("simtarget")

USER_ERRORS = (
    ds.DatabaseError, ds.QueryError, SmilesError, AffinityError, RankingError,
    EvaluationError, ScreeningError, FileNotFoundError, PermissionError, IsADirectoryError,
)

# feature families for --ablate
FAMILIES = {
    "max_similarity": ["max_sim"],
    "cumulative": ["neg_log10_p", "z", "direct_hit"],
    "association": ["association_strength"],
    "affinity": ["query_affinity", "positive_mean", "background_mean"],
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _emit(args, payload: dict, text: str) -> None:
    out = _dump(payload) if args.json else text
    if getattr(args, "out", None) and args.command not in ("report", "fit"):
        Path(args.out).write_text(_dump(payload) + "\n")
    print(out)


def _provider(spec: str | None, default: float | None, fallback_seed: int):
    spec = spec or f"synthetic:{fallback_seed}"
    if spec == "synthetic" or spec.startswith("synthetic:"):
        seed = int(spec.split(":", 1)[1]) if ":" in spec else fallback_seed
        return SyntheticProvider(seed), f"synthetic:{seed}"
    return table_provider(spec, default), str(Path(spec).resolve())


def _db_provider(args, db: ds.Database):
    spec = args.affinity or db.manifest.get("affinity", {}).get("spec")
    return _provider(spec, args.affinity_default, args.seed)[0]


def _queries(args) -> list[str]:
    if args.smiles is not None:
        return [args.smiles]
    return ds.read_smiles_lines(Path(args.smiles_file).read_text().splitlines())


def _ts_overrides(items) -> dict:
    out = {}
    for item in items or []:
        try:
            key, value = item.split("=")
            subset, purpose = key.split(":")
            out[(int(subset), purpose)] = float(value)
        except ValueError as err:
            raise UsageError(f"--ts expects SUBSET:PURPOSE=VALUE, got {item!r}") from err
        if purpose not in PURPOSES or int(subset) not in (1, 2, 3):
            raise UsageError(f"--ts: unknown model {key!r}")
    return out


def _mask(item: str) -> list[str]:
    names = []
    for part in item.split(","):
        part = part.strip()
        if part in FAMILIES:
            names += FAMILIES[part]
        elif part in FEATURE_NAMES:
            names.append(part)
        else:
            raise UsageError(
                f"--ablate: unknown feature {part!r} (features: {', '.join(FEATURE_NAMES)}; "
                f"families: {', '.join(FAMILIES)})"
            )
    return names


# --------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    report = ds.ingest(args.interactions, args.db, aliases=args.aliases)
    payload = report.to_dict()
    lines = [f"{k}: {v}" for k, v in payload.items()]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_build(args) -> int:
    provider, spec = _provider(args.affinity, args.affinity_default, args.seed)
    background = None
    if args.background:
        background = ds.read_smiles_lines(Path(args.background).read_text().splitlines())
    t0 = time.perf_counter()
    db = ds.build(args.db, provider, seed=args.seed, scale=args.scale, background=background,
                  ts_overrides=_ts_overrides(args.ts))
    ds.write_manifest(db.path, {"affinity": {"spec": spec, "default": args.affinity_default}})
    payload = {
        "models": [list(k) for k in sorted(db.models.models)],
        "absent": [list(k) for k in db.models.absent],
        "edges": sum(len(v) for v in db.graph.edges.values()),
        "seconds": round(time.perf_counter() - t0, 3),
    }
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in payload.items()))
    return 0


def cmd_fit(args) -> int:
    db = ds.load(args.db)
    subsets = [args.subset] if args.subset else [1, 2, 3]
    models = ds.fit_models(db, args.seed, args.scale, _ts_overrides(args.ts), subsets)
    text = models.to_json()
    if args.out:
        Path(args.out).write_text(text)
    if args.json or not args.out:
        print(text, end="")
    else:
        for m in models.models.values():
            print(f"subset {m.subset} {m.purpose}: ts={m.ts} mean={m.mean_curve.describe()} "
                  f"std={m.std_curve.describe()} n_db={m.n_db}")
    return 0


def cmd_select_ts(args) -> int:
    db = ds.load(args.db)
    grid = None
    if args.grid:
        grid = tuple(float(x) for x in args.grid.split(","))
    if args.purpose == "cumulative":
        if not args.cases:
            raise UsageError("select-ts --purpose cumulative needs --cases")
        best, curve = ds.select_cumulative_ts(db, read_cases(args.cases), args.subset, args.seed,
                                              args.scale, grid)
        payload = {"subset": args.subset, "purpose": "cumulative", "ts": best,
                   "recall": [[t, r] for t, r in curve]}
    else:
        best, curve = ds.select_clustering_ts(db, args.subset, args.seed, args.scale, grid)
        payload = {"subset": args.subset, "purpose": "clustering", "ts": best,
                   "gof_p": [[t, p] for t, p in curve]}
    _emit(args, payload, f"subset {args.subset} {args.purpose}: ts = {best}")
    return 0


def cmd_predict(args) -> int:
    db = ds.load(args.db)
    provider = _db_provider(args, db)
    results = [ds.predict(db, q, provider, top=args.top, expand_maxsim=args.expand_maxsim)
               for q in _queries(args)]
    payload = results[0] if len(results) == 1 else {"results": results}
    lines = []
    for r in results:
        lines.append(f"# {r['query']}  ({r['n_candidates']} candidates)")
        for c in r["candidates"]:
            lines.append(f"{c['rank']:>4}  {c['target_id']:<16} {100 * c['probability']:6.1f}%  "
                         f"max_sim={c['max_sim']:.3f}  p={c['p']:.3g}")
        if not r["candidates"]:
            lines.append("no candidates")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_train_rank(args) -> int:
    db = ds.load(args.db)
    provider = _db_provider(args, db)
    cases = read_cases(args.cases)
    hyper = dict(DEFAULT_FOREST_PARAMS)
    if args.n_estimators:
        hyper["n_estimators"] = args.n_estimators
    forest = ds.train_ranker(db, provider, cases, seed=args.seed, hyperparams=hyper,
                             expand_maxsim=args.expand_maxsim)
    ds.save_forest(args.db, forest)
    imp = feature_importance(forest)
    payload = {
        "trees": len(forest.trees),
        "hyperparams": forest.hyperparams,
        "importance": {n: float(v) for n, v in zip(forest.feature_names, imp)},
    }
    text = "\n".join([f"trained {len(forest.trees)} trees"] +
                     [f"{n:<22}{v:.4f}" for n, v in zip(forest.feature_names, imp)])
    _emit(args, payload, text)
    return 0


def cmd_evaluate(args) -> int:
    db = ds.load(args.db)
    if db.forest is None:
        raise ds.DatabaseError(f"{db.path}: no ranking forest (run train-rank first)")
    provider = _db_provider(args, db)
    cases = read_cases(args.cases)
    which = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in which:
        if m != "auc" and not (m.startswith("top") and m[3:].isdigit() and int(m[3:]) >= 1):
            raise UsageError(f"--metrics: unknown metric {m!r} (use auc or topN)")
    preds = []
    for c in cases:
        r = ds.predict(db, c.compound, provider, top=args.top, expand_maxsim=args.expand_maxsim)
        preds.append([x["target_id"] for x in r["candidates"]])
    X, y, groups, tids, n_true = ds.training_rows(db, provider, cases, args.expand_maxsim)
    metrics = {}
    for m in which:
        if m == "auc":
            metrics["auc"] = roc_auc(db.forest.predict_proba(X), y) if len(set(y.tolist())) == 2 else None
        else:
            k = int(m[3:])
            metrics[m] = top_k_recall(preds, cases, k) if k >= 100 else top_n_performance(preds, cases, k)
    payload = {"cases": len(cases), "metrics": metrics,
               "below_min_targets": sum(1 for c in cases if c.below_min_targets)}
    text = format_table(metrics)
    if args.ablate:
        masks = [_mask(a) for a in args.ablate]
        ks = tuple(int(m[3:]) for m in which if m.startswith("top"))
        max_sim = X[:, 0] if X.size else np.zeros(0)
        payload["ablation"] = ablate(db.forest, X, y, masks, groups, max_sim, tids, n_true, ks)
        for entry in payload["ablation"]["masks"]:
            text += "\n\nmask " + ",".join(entry["mask"]) + "\n" + format_table(entry["metrics"])
    _emit(args, payload, text)
    return 0


def cmd_report(args) -> int:
    if args.result:
        result = json.loads(Path(args.result).read_text())
    else:
        if not (args.db and (args.smiles or args.smiles_file)):
            raise UsageError("report needs --result, or --db with --smiles/--smiles-file")
        db = ds.load(args.db)
        result = ds.predict(db, _queries(args)[0], _db_provider(args, db), top=args.top)
    try:
        path = emit_report(result, args.out)
    except OSError as err:
        raise ds.DatabaseError(f"cannot write report to {args.out}: {err}") from err
    payload = {"report": str(path), "candidates": len(result.get("candidates", []))}
    _emit(args, payload, f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# parser


def _common(p, db=True, seed=True, affinity=False, out=True):
    if db:
        p.add_argument("--db", required=True, help="database directory")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    if affinity:
        p.add_argument("--affinity", help="affinity table TSV, or 'synthetic[:SEED]'")
        p.add_argument("--affinity-default", type=float, default=None,
                       help="score for compounds missing from the affinity table")
    if out:
        p.add_argument("--out", help="also write the JSON output to this file")
    p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _queries_args(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--smiles", help="query structure")
    g.add_argument("--smiles-file", help="file with one query structure per line")


def build_parser() -> Parser:
    parser = Parser(prog="simtarget", description="Ligand-based target prediction.")
    sub = parser.add_subparsers(dest="command", parser_class=Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("ingest", help="curate an interactions TSV into a database")
    p.add_argument("--interactions", required=True, help="interactions TSV")
    p.add_argument("--aliases", help="TSV mapping alias_target_id to canonical_target_id")
    _common(p, seed=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="fit models, association graph and affinity references")
    p.add_argument("--scale", type=float, default=1.0, help="sampling scale factor in (0, 1]")
    p.add_argument("--background", help="background compounds (.smi) for affinity references")
    p.add_argument("--ts", action="append", metavar="SUBSET:PURPOSE=VALUE",
                   help="override a similarity threshold (repeatable)")
    _common(p, affinity=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("fit", help="fit background models without touching the database")
    p.add_argument("--subset", type=int, choices=(1, 2, 3), help="only this subset")
    p.add_argument("--scale", type=float, default=1.0, help="sampling scale factor in (0, 1]")
    p.add_argument("--ts", action="append", metavar="SUBSET:PURPOSE=VALUE",
                   help="override a similarity threshold (repeatable)")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select-ts", help="choose a similarity threshold")
    p.add_argument("--subset", type=int, choices=(1, 2, 3), required=True, help="subset")
    p.add_argument("--purpose", choices=PURPOSES, default="cumulative", help="model purpose")
    p.add_argument("--cases", help="evaluation TSV (needed for the cumulative purpose)")
    p.add_argument("--grid", help="comma-separated thresholds (default 0.00..1.00 step 0.01)")
    p.add_argument("--scale", type=float, default=1.0, help="sampling scale factor in (0, 1]")
    _common(p)
    p.set_defaults(func=cmd_select_ts)

    p = sub.add_parser("predict", help="rank candidate targets for a query")
    _queries_args(p)
    p.add_argument("--top", type=int, default=100, help="number of ranked targets (default 100)")
    p.add_argument("--expand-maxsim", action="store_true",
                   help="also expand max-similarity hits through the association graph")
    _common(p, affinity=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("train-rank", help="train the ranking forest on labelled queries")
    p.add_argument("--cases", required=True, help="training TSV: compound, ';'-separated targets")
    p.add_argument("--n-estimators", type=int, help="override the number of trees")
    p.add_argument("--expand-maxsim", action="store_true",
                   help="also expand max-similarity hits through the association graph")
    _common(p, affinity=True)
    p.set_defaults(func=cmd_train_rank)

    p = sub.add_parser("evaluate", help="Top-K recall, Top-N performance, ROC-AUC and ablations")
    p.add_argument("--cases", required=True, help="evaluation TSV: compound, ';'-separated targets")
    p.add_argument("--metrics", default="top100,top15,auc", help="comma-separated metrics")
    p.add_argument("--ablate", action="append", metavar="FEATURE,...",
                   help="mask features (or families) by mean imputation; repeatable")
    p.add_argument("--top", type=int, default=100, help="ranked list length (default 100)")
    p.add_argument("--expand-maxsim", action="store_true",
                   help="also expand max-similarity hits through the association graph")
    _common(p, affinity=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="write a static HTML report")
    p.add_argument("--result", help="prediction result JSON")
    p.add_argument("--db", help="database directory (predict on the fly)")
    _queries_args(p, required=False)
    p.add_argument("--top", type=int, default=100, help="ranked list length (default 100)")
    p.add_argument("--out", required=True, help="HTML output path")
    _common(p, db=False, affinity=True, out=False)
    p.set_defaults(func=cmd_report)
    return parser


def _validate(args) -> None:
    scale = getattr(args, "scale", None)
    if scale is not None and not 0.0 < scale <= 1.0:
        raise UsageError(f"--scale must be in (0, 1], got {scale}")
    top = getattr(args, "top", None)
    if top is not None and top < 1:
        raise UsageError("--top must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as err:  # --help
        return 0 if err.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        # remaining value errors come from bad inputs reaching the numerics
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
