"""Background curves for raw-score mean and standard deviation versus set-pair size S.

Three forms are supported: ``power_offset`` (u*S**r + c), ``linear`` (mu*S)
and ``power`` (q*S**r). Nonlinear forms start from a log-space regression
and are refined by damped Gauss-Newton (Levenberg-Marquardt) iterations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

FORMS = ("power_offset", "linear", "power")
TOL = 1e-9
MAX_ITER = 200
R_GRID = np.round(np.arange(0.3, 1.2 + 1e-12, 0.001), 6)


class FitDegenerateError(ValueError):
    """Input does not identify the curve parameters."""


@dataclass(frozen=True)
class FitCurve:
    form: str
    coef: float
    r: float = 1.0
    c: float = 0.0
    residual: float = 0.0
    s_min: float = 1.0
    s_max: float = 1.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown curve form {self.form!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.form == "linear":
            out = self.coef * s
        elif self.form == "power":
            out = self.coef * s**self.r
        else:
            out = self.coef * s**self.r + self.c
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FitCurve:
        return cls(**d)

    def describe(self) -> str:
        if self.form == "linear":
            return f"{self.coef:.4g}*S"
        if self.form == "power":
            return f"{self.coef:.4g}*S^{self.r:.4g}"
        return f"{self.coef:.4g}*S^{self.r:.4g} {'+' if self.c >= 0 else '-'} {abs(self.c):.4g}"


def group_statistics(s, raw):
    """Per-S mean and sample standard deviation (ddof=1; NaN for singleton groups)."""
    s = np.asarray(s, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    order = np.argsort(s, kind="stable")
    s, raw = s[order], raw[order]
    uniq, start, counts = np.unique(s, return_index=True, return_counts=True)
    sums = np.add.reduceat(raw, start)
    means = sums / counts
    dev = raw - np.repeat(means, counts)
    ss = np.add.reduceat(dev * dev, start)
    with np.errstate(invalid="ignore", divide="ignore"):
        stds = np.where(counts > 1, np.sqrt(ss / (counts - 1)), np.nan)
    return uniq, means, stds, counts


def _prepare(s, y, min_distinct: int):
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("s and y must be 1-D arrays of equal length")
    ok = np.isfinite(s) & np.isfinite(y) & (s > 0)
    s, y = s[ok], y[ok]
    if np.unique(s).size < min_distinct:
        raise FitDegenerateError(f"need at least {min_distinct} distinct S values")
    return s, y


def _log_regression(s, y):
    pos = y > 0
    if np.unique(s[pos]).size < 2:
        return None
    ls, ly = np.log(s[pos]), np.log(y[pos])
    slope, intercept = np.polyfit(ls, ly, 1)
    return float(slope), float(intercept)


def _linear_given_r(t, y, r):
    """Least-squares (a, c) for y = a*t**r + c."""
    design = np.column_stack([t**r, np.ones_like(t)])
    (a, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ np.array([a, c]) - y
    return float(a), float(c), float(resid @ resid)


def _lm(fun, jac, p0, tol=TOL, max_iter=MAX_ITER):
    """Levenberg-Marquardt on a residual function; returns (params, cost, converged)."""
    p = np.array(p0, dtype=np.float64)
    f = fun(p)
    cost = float(f @ f)
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        J = jac(p)
        g = J.T @ f
        A = J.T @ J
        d = np.diag(A).copy()
        d[d <= 0] = 1e-300
        step_taken = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = p + delta
            ft = fun(trial)
            ct = float(ft @ ft)
            if np.all(np.isfinite(ft)) and ct <= cost:
                rel = np.max(np.abs(delta) / (np.abs(p) + 1e-12))
                p, f, prev, cost = trial, ft, cost, ct
                lam = max(lam / 10, 1e-12)
                step_taken = True
                if rel < tol or prev - ct <= tol * tol * max(prev, 1e-300):
                    converged = True
                break
            lam *= 10
        if not step_taken:
            converged = True  # no descent direction left: at a minimum within precision
        if converged:
            break
    return p, cost, converged


def fit_power_offset(s, y) -> FitCurve:
    """Least-squares fit of u*S**r + c."""
    s, y = _prepare(s, y, 3)
    if np.ptp(y) == 0:
        raise FitDegenerateError("constant statistic: exponent is unidentifiable")
    s_ref = math.exp(float(np.mean(np.log(s))))
    t = s / s_ref

    def fun(p):
        return p[0] * t ** p[1] + p[2] - y

    def jac(p):
        tr = t ** p[1]
        return np.column_stack([tr, p[0] * tr * np.log(t), np.ones_like(t)])

    init = _log_regression(s, y)
    r0 = init[0] if init is not None else 1.0
    a0, c0, _ = _linear_given_r(t, y, r0)
    p, cost, ok = _lm(fun, jac, [a0, r0, c0])
    if not (ok and np.all(np.isfinite(p)) and -5 < p[1] < 5):
        # divergence fallback: grid over the exponent, then polish
        best = min((_linear_given_r(t, y, r) + (r,) for r in R_GRID), key=lambda x: x[2])
        a0, c0, _, r0 = best
        p2, cost2, _ = _lm(fun, jac, [a0, r0, c0])
        if np.all(np.isfinite(p2)):
            p, cost = p2, cost2
        else:
            p, cost = np.array([a0, r0, c0]), best[2]
    a, r, c = (float(v) for v in p)
    return FitCurve(
        "power_offset", a / s_ref**r, r, c, cost, float(s.min()), float(s.max())
    )


def fit_linear_through_origin(s, y) -> FitCurve:
    """Least-squares mu for y = mu*S."""
    s, y = _prepare(s, y, 1)
    if not np.any(y):
        raise FitDegenerateError("all-zero statistic")
    mu = float(s @ y / (s @ s))
    resid = mu * s - y
    return FitCurve("linear", mu, 1.0, 0.0, float(resid @ resid), float(s.min()), float(s.max()))


def fit_power(s, y) -> FitCurve:
    """Least-squares (q, r) for y = q*S**r."""
    s, y = _prepare(s, y, 2)
    if not np.any(y):
        raise FitDegenerateError("all-zero statistic")
    init = _log_regression(s, y)
    if init is None:
        raise FitDegenerateError("need positive statistics at two or more S values")
    s_ref = math.exp(float(np.mean(np.log(s))))
    t = s / s_ref
    r0 = init[0]
    q0 = math.exp(init[1]) * s_ref**r0

    def fun(p):
        return p[0] * t ** p[1] - y

    def jac(p):
        tr = t ** p[1]
        return np.column_stack([tr, p[0] * tr * np.log(t)])

    p, cost, ok = _lm(fun, jac, [q0, r0])
    if not (ok and np.all(np.isfinite(p)) and -5 < p[1] < 5):
        grid = []
        for r in R_GRID:
            tr = t**r
            q = float(tr @ y / (tr @ tr))
            res = q * tr - y
            grid.append((float(res @ res), q, r))
        c0, q0, r0 = min(grid)
        p, cost, _ = _lm(fun, jac, [q0, r0])
    q, r = float(p[0]), float(p[1])
    return FitCurve("power", q / s_ref**r, r, 0.0, cost, float(s.min()), float(s.max()))


def fit_curve(form: str, s, y) -> FitCurve:
    if form == "power_offset":
        return fit_power_offset(s, y)
    if form == "linear":
        return fit_linear_through_origin(s, y)
    if form == "power":
        return fit_power(s, y)
    raise ValueError(f"unknown curve form {form!r}")
