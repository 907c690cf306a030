"""Ordinary and weighted least squares via pivoted QR, plus feasible-WLS weights."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from walkgap.errors import InsufficientDataError, InvalidWeightError, SingularDesignError
from walkgap.stats.design import DesignMatrix
from walkgap.stats.distributions import coef_p_values, critical_value, f_sf

logger = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-12


@dataclass
class FitResult:
    method: str
    labels: Tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    conf_int: np.ndarray  # (p, 2), 95%
    r_squared: float
    adj_r_squared: float
    f_statistic: float
    f_pvalue: float
    df_model: int
    df_resid: int
    sse: float
    sigma2: float
    residuals: np.ndarray
    fitted: np.ndarray
    weights: np.ndarray
    durbin_watson: float
    cov_params: np.ndarray = field(repr=False)

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    @property
    def weighted_residuals(self) -> np.ndarray:
        return np.sqrt(self.weights) * self.residuals

    def coef(self, label: str) -> float:
        return float(self.coefficients[self.labels.index(label)])

    def se(self, label: str) -> float:
        return float(self.std_errors[self.labels.index(label)])


def _as_design(X, labels=None) -> Tuple[np.ndarray, Tuple[str, ...]]:
    if isinstance(X, DesignMatrix):
        return np.asarray(X.values, dtype=float), X.labels
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X, tuple(labels) if labels is not None else tuple(f"x{j}" for j in range(X.shape[1]))


def _collinear_columns(A: np.ndarray, labels: Sequence[str]) -> list:
    # columns with weight in the numerical null space
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    tol = s.max() * max(A.shape) * np.finfo(float).eps if s.size else 0.0
    null = vt[s <= tol]
    if null.size == 0:
        return []
    involved = np.any(np.abs(null) > 1e-8, axis=0)
    return [labels[j] for j in np.flatnonzero(involved)]


def solve_least_squares(A: np.ndarray, b: np.ndarray, labels: Sequence[str]):
    """Return ``(beta, inv(A'A))`` from a column-pivoted QR of A.

    Raises SingularDesignError when A is numerically rank deficient.
    """
    n, p = A.shape
    Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, p) * np.finfo(float).eps if p else 0.0
    rank = int(np.sum(diag > tol))
    if rank < p:
        cols = _collinear_columns(A, labels) or [labels[j] for j in piv[rank:]]
        raise SingularDesignError(
            f"design matrix has rank {rank} < {p} columns; collinear columns: {', '.join(cols)}", columns=cols)
    beta_p = linalg.solve_triangular(R, Q.T @ b)
    r_inv = linalg.solve_triangular(R, np.eye(p))
    cov_p = r_inv @ r_inv.T
    beta = np.empty(p)
    beta[piv] = beta_p
    cov = np.empty((p, p))
    cov[np.ix_(piv, piv)] = cov_p
    return beta, cov


def _fit(method: str, X, y, w: np.ndarray, labels=None) -> FitResult:
    from walkgap.stats.diagnostics import durbin_watson_or_nan

    A, labels = _as_design(X, labels)
    y = np.asarray(y, dtype=float)
    n, p = A.shape
    if y.shape != (n,):
        raise ValueError(f"response length {y.shape} does not match design rows {n}")
    if n <= p:
        raise InsufficientDataError(f"need more observations ({n}) than columns ({p})")
    sw = np.sqrt(w)
    beta, xtx_inv = solve_least_squares(A * sw[:, None], y * sw, labels)

    fitted = A @ beta
    resid = y - fitted
    wres = sw * resid
    sse = float(wres @ wres)
    df_resid = n - p
    sigma2 = sse / df_resid
    cov = sigma2 * xtx_inv
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    p_vals = coef_p_values(t, df_resid)
    q = critical_value(df_resid)
    ci = np.column_stack([beta - q * se, beta + q * se])

    has_const = bool(np.any(np.all(A == 1.0, axis=0)))
    if has_const:
        ybar = float(np.sum(w * y) / np.sum(w))
        sst = float(np.sum(w * (y - ybar) ** 2))
    else:
        sst = float(np.sum(w * y * y))
    r2 = 0.0 if sst <= 0 else min(max(1.0 - sse / sst, 0.0), 1.0)
    df_model = p - 1 if has_const else p
    if df_model > 0:
        adj = 1.0 - (1.0 - r2) * (n - (1 if has_const else 0)) / df_resid
        with np.errstate(divide="ignore", invalid="ignore"):
            f_stat = float((r2 / df_model) / ((1.0 - r2) / df_resid)) if r2 < 1 else float("inf")
        f_p = float(f_sf(f_stat, df_model, df_resid))
    else:
        adj, f_stat, f_p = r2, float("nan"), float("nan")

    return FitResult(
        method=method, labels=labels, coefficients=beta, std_errors=se, t_values=np.asarray(t),
        p_values=np.asarray(p_vals), conf_int=ci, r_squared=r2, adj_r_squared=adj,
        f_statistic=f_stat, f_pvalue=f_p, df_model=df_model, df_resid=df_resid, sse=sse,
        sigma2=sigma2, residuals=resid, fitted=fitted, weights=w.copy(),
        durbin_watson=durbin_watson_or_nan(wres), cov_params=cov,
    )


def ols_fit(X, y, labels=None) -> FitResult:
    n = np.asarray(y).shape[0]
    return _fit("OLS", X, y, np.ones(n), labels)


def wls_fit(X, y, weights, labels=None) -> FitResult:
    """Weighted least squares; R-squared is the weighted (centred) R-squared."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] != np.asarray(y).shape[0]:
        raise InvalidWeightError("weights must be a vector with one entry per observation")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidWeightError("all weights must be positive and finite")
    return _fit("WLS", X, y, w, labels)


def _scaled_powers(v: np.ndarray) -> Optional[np.ndarray]:
    """Columns [1, z, z^2] with z the standardised ``v``; None if ``v`` is constant."""
    sd = float(np.std(v))
    if not sd > 0:
        return None
    z = (v - v.mean()) / sd
    return np.column_stack([np.ones_like(z), z, z * z])


def estimate_weights(ols_result: FitResult) -> np.ndarray:
    """Feasible-WLS weights from an OLS fit.

    log(resid^2 + floor) is regressed on the fitted values and their squares;
    the exponentiated prediction estimates each observation's error variance
    and the weight is its reciprocal. Standardising the fitted values leaves
    the predictions unchanged but keeps the auxiliary fit well conditioned.
    """
    e2 = ols_result.residuals ** 2
    n = len(e2)
    aux = _scaled_powers(ols_result.fitted)
    if aux is None or n <= 3:
        warnings.warn("variance function is not estimable; using unit weights", RuntimeWarning, stacklevel=2)
        return np.ones(n)
    try:
        beta, _ = solve_least_squares(aux, np.log(e2 + RESIDUAL_FLOOR), ("const", "fitted", "fitted^2"))
    except SingularDesignError:
        warnings.warn("degenerate variance regression; using unit weights", RuntimeWarning, stacklevel=2)
        return np.ones(n)
    log_var = aux @ beta
    w = np.exp(-log_var)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        warnings.warn("variance regression produced unusable weights; using unit weights",
                      RuntimeWarning, stacklevel=2)
        return np.ones(n)
    return w
