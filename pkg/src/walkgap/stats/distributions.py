"""Tail probabilities and quantiles via regularized incomplete gamma/beta functions."""

import math

import numpy as np
from scipy import special

NORMAL_APPROX_DF = 200


def chi2_sf(x, df):
    """P(X > x) for X ~ chi-square(df)."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, 1.0, special.gammaincc(df / 2.0, np.maximum(x, 0) / 2.0))[()]


def f_sf(x, dfn, dfd):
    """P(X > x) for X ~ F(dfn, dfd)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = dfd / (dfd + dfn * np.maximum(x, 0))
        p = special.betainc(dfd / 2.0, dfn / 2.0, z)
    p = np.where(np.isinf(x), 0.0, p)
    return np.where(x <= 0, 1.0, p)[()]


def t_two_sided(t, df):
    """Two-sided p value for Student's t with ``df`` degrees of freedom."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return np.where(np.isinf(t), 0.0, p)[()]


def normal_two_sided(z):
    z = np.asarray(z, dtype=float)
    return special.erfc(np.abs(z) / math.sqrt(2.0))[()]


def coef_p_values(t, df_resid):
    """Normal approximation beyond ``NORMAL_APPROX_DF`` residual dof, exact t otherwise."""
    if df_resid > NORMAL_APPROX_DF:
        return normal_two_sided(t)
    return t_two_sided(t, df_resid)


def critical_value(df_resid, level=0.95):
    q = 0.5 + level / 2.0
    if df_resid > NORMAL_APPROX_DF:
        return float(special.ndtri(q))
    return float(special.stdtrit(df_resid, q))
