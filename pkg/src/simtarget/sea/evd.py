"""Gumbel (right-skewed EVD) maximum-likelihood fitting and chi-square goodness of fit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats


@dataclass(frozen=True)
class Gumbel:
    loc: float
    scale: float

    def cdf(self, x):
        return np.exp(-np.exp(-(np.asarray(x, dtype=np.float64) - self.loc) / self.scale))

    def ppf(self, q):
        return self.loc - self.scale * np.log(-np.log(np.asarray(q, dtype=np.float64)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        return self.loc - self.scale * np.log(-np.log(u))


def _logsumexp(v: np.ndarray) -> float:
    m = float(v.max())
    return m + math.log(float(np.exp(v - m).sum()))


def fit_gumbel(samples, min_samples: int = 30, xtol: float = 1e-12) -> Gumbel:
    """Maximum-likelihood Gumbel fit.

    The scale solves the profile equation
    ``scale = mean(x) - sum(x w) / sum(w)`` with ``w = exp(-x / scale)``;
    the location then follows in closed form. Data are centred first so the
    fit is translation-equivariant to rounding precision.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x[np.isfinite(x)]
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    mean = float(x.mean())
    xc = x - mean
    sd = float(xc.std())
    if sd == 0.0 or np.ptp(xc) == 0.0:
        raise ValueError("zero-variance samples")

    def profile(beta):
        e = -xc / beta
        w = np.exp(e - e.max())
        return beta + float((xc * w).sum() / w.sum())

    lo, hi = sd * 1e-6, sd * 10.0
    while profile(hi) <= 0:
        hi *= 2.0
    while profile(lo) >= 0:
        lo /= 10.0
    beta = optimize.brentq(profile, lo, hi, xtol=xtol * sd, rtol=4 * np.finfo(float).eps, maxiter=500)
    loc_c = -beta * (_logsumexp(-xc / beta) - math.log(x.size))
    return Gumbel(mean + loc_c, float(beta))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p: float
    dof: int
    bins: int


def chi_square_gof(samples, dist: Gumbel, bins: int = 20, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square test of ``samples`` against a fitted Gumbel.

    Bin edges sit at equal-probability quantiles of the fitted distribution
    (open outer edges); sparse bins are merged inward from both tails until
    every expected count reaches ``min_expected``. Degrees of freedom are
    bins - 1 - 2.
    """
    x = np.asarray(samples, dtype=np.float64)
    x = x[np.isfinite(x)]
    if bins < 3:
        raise ValueError("bins must be >= 3")
    n = x.size
    if float(np.ptp(x)) == 0.0:
        raise ValueError("zero-variance samples")
    inner = dist.ppf(np.arange(1, bins) / bins)
    observed = np.bincount(np.searchsorted(inner, x, side="right"), minlength=bins).astype(float)
    expected = n * np.diff(np.concatenate([[0.0], dist.cdf(inner), [1.0]]))

    obs, exp_ = list(observed), list(expected)
    # merge from the left tail
    while len(exp_) > 1 and exp_[0] < min_expected:
        exp_[1] += exp_.pop(0)
        obs[1] += obs.pop(0)
    while len(exp_) > 1 and exp_[-1] < min_expected:
        exp_[-2] += exp_.pop()
        obs[-2] += obs.pop()
    # any interior sparse bin joins its smaller neighbour
    k = 1
    while k < len(exp_) - 1:
        if exp_[k] < min_expected:
            j = k - 1 if exp_[k - 1] <= exp_[k + 1] else k + 1
            exp_[j] += exp_[k]
            obs[j] += obs[k]
            del exp_[k], obs[k]
        else:
            k += 1
    dof = len(exp_) - 3
    if dof < 1:
        raise ValueError("too few samples for binning")
    o, e = np.array(obs), np.array(exp_)
    stat = float(((o - e) ** 2 / e).sum())
    return ChiSquareResult(stat, float(stats.chi2.sf(stat, dof)), dof, len(exp_))
