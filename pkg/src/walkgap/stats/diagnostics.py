"""Residual and design diagnostics: Durbin-Watson, VIF, White's test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from walkgap.errors import InsufficientDataError, UndefinedStatisticError
from walkgap.stats.design import DesignMatrix
from walkgap.stats.distributions import chi2_sf, f_sf


def durbin_watson(residuals) -> float:
    e = np.asarray(residuals, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise InsufficientDataError("Durbin-Watson needs at least two residuals")
    den = float(e @ e)
    if den == 0.0:
        raise UndefinedStatisticError("Durbin-Watson is undefined for all-zero residuals")
    d = np.diff(e)
    return min(max(float(d @ d) / den, 0.0), 4.0)


def durbin_watson_or_nan(residuals) -> float:
    try:
        return durbin_watson(residuals)
    except (InsufficientDataError, UndefinedStatisticError):
        return float("nan")


@dataclass
class VifResult:
    values: Dict[str, float] = field(default_factory=dict)
    note: Optional[str] = None

    def __getitem__(self, label):
        return self.values[label]

    def __len__(self):
        return len(self.values)


def _is_binary(col: np.ndarray) -> bool:
    return bool(np.all((col == 0) | (col == 1)))


def vif(X: DesignMatrix) -> VifResult:
    """VIF for every continuous column (the intercept and 0/1 columns are skipped).

    Each continuous column is regressed on an intercept and all other
    non-intercept columns. Perfect collinearity is reported as ``inf``.
    """
    A = np.asarray(X.values, dtype=float)
    n = A.shape[0]
    const = [j for j in range(A.shape[1]) if np.all(A[:, j] == 1.0)]
    others = [j for j in range(A.shape[1]) if j not in const]
    continuous = [j for j in others if not _is_binary(A[:, j])]
    if len(continuous) < 2:
        return VifResult({}, note="VIF needs at least two continuous predictors")
    out = {}
    for j in continuous:
        y = A[:, j]
        Z = np.column_stack([np.ones(n)] + [A[:, k] for k in others if k != j])
        beta, *_ = np.linalg.lstsq(Z, y, rcond=None)
        resid = y - Z @ beta
        sst = float(np.sum((y - y.mean()) ** 2))
        sse = float(resid @ resid)
        one_minus_r2 = sse / sst if sst > 0 else 0.0
        out[X.labels[j]] = math.inf if one_minus_r2 <= 1e-12 else max(1.0 / one_minus_r2, 1.0)
    return VifResult(out)


@dataclass(frozen=True)
class WhiteTestResult:
    lm_statistic: float
    lm_p: float
    f_statistic: float
    f_p: float
    aux_r_squared: float
    nobs: int

    # (n - 2) R^2 / (1 - R^2): an alternative F form kept for comparison only.
    # It is not F(2, n - 3) distributed; ``f_statistic`` is the one to use.
    def alternative_f(self) -> float:
        r2 = self.aux_r_squared
        return math.inf if r2 >= 1 else (self.nobs - 2) * r2 / (1 - r2)


def white_test(fit) -> WhiteTestResult:
    """White's heteroscedasticity test on a fit's residuals.

    Auxiliary OLS of squared residuals on (1, fitted, fitted^2). For a
    weighted fit the residuals and fitted values are the sqrt(weight)-scaled
    ones, which coincide with the raw values for OLS.
    """
    sw = np.sqrt(fit.weights)
    e = sw * fit.residuals
    yhat = sw * fit.fitted
    n = e.size
    if n <= 3:
        raise InsufficientDataError("White test needs more than 3 observations")
    sd = float(np.std(yhat))
    if not sd > 0:
        raise UndefinedStatisticError("White test is undefined for constant fitted values")
    z = (yhat - yhat.mean()) / sd
    Z = np.column_stack([np.ones(n), z, z * z])
    e2 = e * e
    beta, *_ = np.linalg.lstsq(Z, e2, rcond=None)
    resid = e2 - Z @ beta
    sst = float(np.sum((e2 - e2.mean()) ** 2))
    r2 = 0.0 if sst <= 0 else min(max(1.0 - float(resid @ resid) / sst, 0.0), 1.0)
    lm = n * r2
    f = math.inf if r2 >= 1 else (r2 / 2.0) / ((1.0 - r2) / (n - 3))
    return WhiteTestResult(lm, float(chi2_sf(lm, 2)), f, float(f_sf(f, 2, n - 3)), r2, n)
