"""Fitted background models and their JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .curves import FitCurve

MODEL_FILE_VERSION = 1
PURPOSES = ("cumulative", "clustering")

# similarity thresholds per (subset, purpose)
DEFAULT_TS = {
    (1, "clustering"): 0.19,
    (1, "cumulative"): 0.25,
    (2, "clustering"): 0.19,
    (2, "cumulative"): 0.18,
    (3, "clustering"): 0.50,
    (3, "cumulative"): 0.24,
}

# curve forms per subset: (mean form, std form)
DEFAULT_FORMS = {
    1: ("power_offset", "power_offset"),
    2: ("linear", "power"),
    3: ("power_offset", "power_offset"),
}

# published background curves, (form, coefficient, exponent, offset)
_PUBLISHED = {
    (1, "clustering"): (("power_offset", 1.23e-2, 0.999, -0.187), ("power_offset", 1.63e-2, 0.728, 1.36)),
    (1, "cumulative"): (("power_offset", 3.1e-3, 0.983, -0.818), ("power_offset", 1.45e-2, 0.652, 0.273)),
    (2, "clustering"): (("linear", 1.11e-2, 1.0, 0.0), ("power", 3.78e-2, 0.617, 0.0)),
    (2, "cumulative"): (("linear", 1.5e-2, 1.0, 0.0), ("power", 4.12e-2, 0.632, 0.0)),
    (3, "clustering"): (("power_offset", 9.54e-5, 0.999, -0.108), ("power_offset", 1.47e-3, 0.64, 0.108)),
    (3, "cumulative"): (("power_offset", 2.92e-3, 0.999, -1.61), ("power_offset", 5.6e-3, 0.725, 4.87)),
}

# S range covered by each subset's sampling protocol
PROTOCOL_S_RANGE = {1: (10**2, 300**2), 2: (100**2, 2000**2), 3: (1, 50**2)}


@dataclass
class StatModel:
    subset: int
    purpose: str
    ts: float
    mean_curve: FitCurve
    std_curve: FitCurve
    n_db: int = 1
    gumbel: dict | None = None
    gof: dict | None = None
    sampling: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subset not in (1, 2, 3):
            raise ValueError(f"subset must be 1, 2 or 3, got {self.subset}")
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {self.purpose!r}")
        if not 0.0 <= self.ts <= 1.0:
            raise ValueError(f"ts={self.ts} outside [0, 1]")
        if self.n_db < 1:
            raise ValueError("n_db must be >= 1")

    @property
    def key(self) -> tuple[int, str]:
        return (self.subset, self.purpose)

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "purpose": self.purpose,
            "ts": self.ts,
            "n_db": self.n_db,
            "mean_curve": self.mean_curve.to_dict(),
            "std_curve": self.std_curve.to_dict(),
            "gumbel": self.gumbel,
            "gof": self.gof,
            "sampling": self.sampling,
        }

    @classmethod
    def from_dict(cls, d: dict) -> StatModel:
        return cls(
            subset=int(d["subset"]),
            purpose=d["purpose"],
            ts=float(d["ts"]),
            mean_curve=FitCurve.from_dict(d["mean_curve"]),
            std_curve=FitCurve.from_dict(d["std_curve"]),
            n_db=int(d.get("n_db", 1)),
            gumbel=d.get("gumbel"),
            gof=d.get("gof"),
            sampling=d.get("sampling", {}),
        )


def published_model(subset: int, purpose: str, n_db: int = 1) -> StatModel:
    """Model with the published threshold and background-curve parameters."""
    lo, hi = PROTOCOL_S_RANGE[subset]
    mean, std = (
        FitCurve(form, coef, r, c, 0.0, lo, hi) for form, coef, r, c in _PUBLISHED[(subset, purpose)]
    )
    return StatModel(subset, purpose, DEFAULT_TS[(subset, purpose)], mean, std, n_db,
                     sampling={"source": "published"})


class ModelSet:
    """All fitted models of a database, keyed by (subset, purpose)."""

    def __init__(self, models=(), absent=()):
        self.models: dict[tuple[int, str], StatModel] = {m.key: m for m in models}
        self.absent = sorted(set(absent))

    def get(self, subset: int, purpose: str) -> StatModel | None:
        return self.models.get((subset, purpose))

    def __contains__(self, key) -> bool:
        return key in self.models

    def add(self, model: StatModel) -> None:
        self.models[model.key] = model

    def to_json(self) -> str:
        doc = {
            "version": MODEL_FILE_VERSION,
            "models": [self.models[k].to_dict() for k in sorted(self.models)],
            "absent": [list(k) for k in self.absent],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ModelSet:
        doc = json.loads(text)
        if doc.get("version") != MODEL_FILE_VERSION:
            raise ValueError(f"unsupported model file version {doc.get('version')}")
        return cls(
            [StatModel.from_dict(d) for d in doc["models"]],
            [tuple(k) for k in doc.get("absent", [])],
        )
