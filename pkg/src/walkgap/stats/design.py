"""Design matrices for the log-price model with unwalkability interactions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from walkgap.errors import DegenerateDesignError, InvalidInputError, InvalidRecordError

# Predictor symbols and their column labels.
TYPE, UNWALK, DIST = "X1", "X2", "X3"
LABELS = {TYPE: "Type", UNWALK: "Unwalkability", DIST: "DistCityCentre"}
MAIN_EFFECT_ORDER = (TYPE, DIST, UNWALK)
TYPE_LEVELS = (("New", 1), ("SecondHand", 0))

CODINGS = ("per_level", "reference")


@dataclass(frozen=True)
class Observation:
    price_eur: float
    dwelling_type: int
    dist_centre_km: float
    unwalkability_km: float

    def value(self, symbol: str) -> float:
        return {TYPE: float(self.dwelling_type), DIST: self.dist_centre_km, UNWALK: self.unwalkability_km}[symbol]


@dataclass(frozen=True)
class ModelSpec:
    """log(price) on Type, DistCityCentre, Unwalkability plus interactions.

    ``type_coding`` controls interactions with the binary Type predictor:
    ``per_level`` emits one column per level (X2*New, X2*SecondHand);
    ``reference`` emits only the New column. Note that per-level columns sum
    to the main effect, so a model containing both is rank deficient.
    """

    interactions: Tuple[Tuple[str, str], ...] = ((UNWALK, TYPE), (UNWALK, DIST))
    type_coding: str = "per_level"

    def __post_init__(self):
        if self.type_coding not in CODINGS:
            raise InvalidInputError(f"type_coding must be one of {CODINGS}")
        for a, b in self.interactions:
            if a not in LABELS or b not in LABELS or a == b:
                raise InvalidInputError(f"interaction ({a}, {b}) must pair two distinct declared predictors")


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    labels: Tuple[str, ...]

    @property
    def shape(self):
        return self.values.shape

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]


def _columns(spec: ModelSpec):
    """(label, function(observation) -> float) for every design column."""
    cols = [("const", lambda o: 1.0)]
    for s in MAIN_EFFECT_ORDER:
        cols.append((LABELS[s], lambda o, s=s: o.value(s)))
    for a, b in spec.interactions:
        if TYPE in (a, b):
            other = b if a == TYPE else a
            levels = TYPE_LEVELS if spec.type_coding == "per_level" else TYPE_LEVELS[:1]
            for level_name, level in levels:
                cols.append((f"{LABELS[other]}:{level_name}",
                             lambda o, other=other, level=level: o.value(other) * (o.dwelling_type == level)))
        else:
            cols.append((f"{LABELS[a]}:{LABELS[b]}", lambda o, a=a, b=b: o.value(a) * o.value(b)))
    return cols


def build_design_matrix(records: Sequence[Observation], spec: ModelSpec = ModelSpec()):
    """Return ``(DesignMatrix, log_price)``.

    Raises InvalidRecordError for non-positive prices or incomplete records and,
    given two or more rows, DegenerateDesignError for an all-zero or constant
    predictor column.
    """
    if not records:
        raise InvalidRecordError("no records")
    for i, r in enumerate(records):
        vals = (r.price_eur, r.dist_centre_km, r.unwalkability_km)
        if any(v is None or not math.isfinite(v) for v in vals):
            raise InvalidRecordError(f"record {i} is incomplete: {r}")
        if r.price_eur <= 0:
            raise InvalidRecordError(f"record {i} has non-positive price {r.price_eur}")
        if r.dwelling_type not in (0, 1):
            raise InvalidRecordError(f"record {i} has dwelling type {r.dwelling_type}")
    cols = _columns(spec)
    X = np.array([[f(r) for _, f in cols] for r in records], dtype=float)
    labels = tuple(name for name, _ in cols)
    y = np.log(np.array([r.price_eur for r in records], dtype=float))

    bad = []
    # a single row is a construction check only; degeneracy needs two or more rows
    for j, name in enumerate(labels[1:] if len(records) > 1 else (), start=1):
        col = X[:, j]
        if not np.any(col):
            bad.append((name, "all zero"))
        elif np.all(col == col[0]):
            bad.append((name, "constant"))
    if bad:
        detail = ", ".join(f"{n!r} ({why})" for n, why in bad)
        raise DegenerateDesignError(f"degenerate design columns: {detail}", columns=[n for n, _ in bad])
    return DesignMatrix(X, labels), y
