"""Raw set-similarity scores and their conversion to Z, P and E values."""

from __future__ import annotations

import math

import numpy as np

from ..fingerprint import FingerprintSet, similarity_matrix

EULER_GAMMA = 0.577215665
_Z_SCALE = math.pi / math.sqrt(6.0)
SERIES_BRANCH_Z = 28.0


def thresholded_sum(sims: np.ndarray, ts: float) -> float:
    """Sum of similarities at or above ``ts``."""
    sims = np.asarray(sims, dtype=np.float64)
    return float(sims[sims >= ts].sum())


def raw_score(set_a, set_b, ts: float) -> float:
    """Sum of pairwise Tanimoto values >= ``ts`` between two fingerprint sets."""
    if not 0.0 <= ts <= 1.0:
        raise ValueError(f"threshold {ts} outside [0, 1]")
    if not isinstance(set_a, FingerprintSet):
        set_a = FingerprintSet.from_fingerprints(set_a)
    if not isinstance(set_b, FingerprintSet):
        set_b = FingerprintSet.from_fingerprints(set_b)
    if len(set_a) == 0 or len(set_b) == 0:
        raise ValueError("raw score needs two non-empty sets")
    return thresholded_sum(similarity_matrix(set_a, set_b), ts)


def z_score(raw: float, s: float, model) -> float:
    """(raw - mean(S)) / std(S) under a fitted background model."""
    std = model.std_curve(s)
    if not std > 0:
        raise ValueError(f"background std is not positive at S={s} ({std})")
    return (raw - model.mean_curve(s)) / std


def _evd_y(z: float) -> float:
    arg = -z * _Z_SCALE - EULER_GAMMA
    # exp overflows past ~709.8; P is exactly 1 in double precision long before that
    return math.inf if arg > 709.0 else math.exp(arg)


def p_value(z: float) -> float:
    """Extreme-value tail probability 1 - exp(-exp(-z*pi/sqrt(6) - gamma)).

    Above z = 28 the cubic series y - y^2/2 + y^3/6 is used; below it the
    closed form is evaluated through ``expm1`` so both branches keep full
    relative precision near the switch.
    """
    if not math.isfinite(z):
        if math.isnan(z):
            raise ValueError("z is NaN")
        return 0.0 if z > 0 else 1.0
    if z > SERIES_BRANCH_Z:
        y = _evd_y(z)
        return y - y * y / 2.0 + y**3 / 6.0
    return -math.expm1(-_evd_y(z))


def p_value_closed_form(z: float) -> float:
    """The closed form on its own, without the large-z series."""
    return -math.expm1(-_evd_y(z))


def p_value_series(z: float) -> float:
    y = _evd_y(z)
    return y - y * y / 2.0 + y**3 / 6.0


def e_value(p: float, n_db: int) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    return p * n_db


def neg_log10(p: float, cap: float = 300.0) -> float:
    """-log10(p) clipped to [0, cap]; p == 0 maps to the cap."""
    if p <= 0.0:
        return cap
    return min(cap, max(0.0, -math.log10(p)))
