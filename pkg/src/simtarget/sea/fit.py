"""Turning background samples into fitted :class:`StatModel` objects."""

from __future__ import annotations

import logging

import numpy as np

from .curves import FitCurve, fit_curve, fit_power, group_statistics
from .evd import chi_square_gof, fit_gumbel
from .model import DEFAULT_FORMS, StatModel
from .sampling import BackgroundSample

log = logging.getLogger(__name__)


def fit_curves(s, raw, mean_form: str, std_form: str) -> tuple[FitCurve, FitCurve]:
    """Group raw scores by S, then fit the mean and std curves across groups."""
    uniq, means, stds, _ = group_statistics(s, raw)
    mean_curve = fit_curve(mean_form, uniq, means)
    ok = np.isfinite(stds)
    std_curve = fit_curve(std_form, uniq[ok], stds[ok])
    # queries are scored at S down to 1 x |actives|, below the sampled range
    lo, hi = 1.0, float(uniq.max())
    grid = np.unique(np.concatenate([uniq, np.geomspace(lo, hi, 128)]))
    if std_curve.form != "power" and np.any(std_curve(grid) <= 0):
        # offset curves can dip below zero at small S; the pure power law cannot
        log.warning("std curve %s not positive over [%g, %g]; refitting as power law",
                    std_curve.describe(), lo, hi)
        std_curve = fit_power(uniq[ok], stds[ok])
    return mean_curve, std_curve


def background_z(sample_s, sample_raw, model: StatModel) -> np.ndarray:
    s = np.asarray(sample_s, dtype=np.float64)
    return (np.asarray(sample_raw) - model.mean_curve(s)) / model.std_curve(s)


def fit_stat_model(
    sample: BackgroundSample,
    ts: float,
    purpose: str,
    n_db: int = 1,
    forms: tuple[str, str] | None = None,
    gof_bins: int = 20,
) -> StatModel:
    subset = sample.protocol.subset
    mean_form, std_form = forms or DEFAULT_FORMS[subset]
    raw = sample.column(float(ts))
    mean_curve, std_curve = fit_curves(sample.s, raw, mean_form, std_form)
    model = StatModel(
        subset,
        purpose,
        float(ts),
        mean_curve,
        std_curve,
        max(1, int(n_db)),
        sampling={
            "protocol": sample.protocol.to_dict(),
            "seed": sample.seed,
            "n_points": int(sample.s.size),
        },
    )
    if purpose == "clustering":
        z = background_z(sample.s, raw, model)
        try:
            g = fit_gumbel(z)
            gof = chi_square_gof(z, g, bins=gof_bins)
            model.gumbel = {"loc": g.loc, "scale": g.scale}
            model.gof = {"statistic": gof.statistic, "p": gof.p, "dof": gof.dof, "bins": gof.bins}
        except ValueError as err:
            log.warning("EVD fit skipped for subset %d clustering model: %s", subset, err)
            model.gof = {"error": str(err)}
    return model


def select_ts_by_gof(sample: BackgroundSample, n_db: int = 1, forms=None) -> tuple[float, list]:
    """Clustering threshold whose background Z-scores best match a Gumbel (largest chi-square p)."""
    scored = []
    for t in sample.ts:
        try:
            m = fit_stat_model(sample, t, "clustering", n_db, forms)
        except ValueError:
            continue
        if m.gof and "p" in m.gof:
            scored.append((m.gof["p"], t, m))
    if not scored:
        raise ValueError("no threshold produced a usable EVD fit")
    best = max(scored, key=lambda x: (x[0], x[1]))
    return best[1], scored


def select_ts(candidates, training_pairs, screen) -> float:
    """Threshold whose model recovers the most true targets on training pairs.

    ``candidates`` is a sequence of ``(ts, model)``; ``screen(model, query)``
    returns the set of predicted target ids. Ties go to the larger threshold.
    """
    candidates = list(candidates)
    training_pairs = list(training_pairs)
    if not candidates:
        raise ValueError("empty threshold grid")
    if not training_pairs:
        raise ValueError("empty training set")
    total = sum(len(set(t)) for _, t in training_pairs)
    if total == 0:
        raise ValueError("training pairs carry no true targets")
    best = None
    for ts, model in candidates:
        hit = 0
        for query, truth in training_pairs:
            hit += len(set(truth) & set(screen(model, query)))
        key = (hit / total, ts)
        if best is None or key > best[0]:
            best = (key, ts)
    return best[1]


TS_GRID = tuple(round(k * 0.01, 2) for k in range(101))
