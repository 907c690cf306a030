"""Fit summaries as JSON-ready dicts and fixed-width text tables."""

from __future__ import annotations

import math
from typing import Optional

from walkgap.stats.diagnostics import VifResult, WhiteTestResult
from walkgap.stats.linear import FitResult


def _num(x):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def fit_to_dict(fit: FitResult, white: Optional[WhiteTestResult] = None,
                vif: Optional[VifResult] = None) -> dict:
    rows = []
    for j, label in enumerate(fit.labels):
        rows.append({
            "term": label,
            "coef": _num(fit.coefficients[j]),
            "std_err": _num(fit.std_errors[j]),
            "t": _num(fit.t_values[j]),
            "p": _num(fit.p_values[j]),
            "ci_low": _num(fit.conf_int[j, 0]),
            "ci_high": _num(fit.conf_int[j, 1]),
        })
    out = {
        "method": fit.method,
        "nobs": fit.nobs,
        "df_model": fit.df_model,
        "df_resid": fit.df_resid,
        "r_squared": _num(fit.r_squared),
        "adj_r_squared": _num(fit.adj_r_squared),
        "f_statistic": _num(fit.f_statistic),
        "f_pvalue": _num(fit.f_pvalue),
        "durbin_watson": _num(fit.durbin_watson),
        "coefficients": rows,
    }
    if white is not None:
        out["white_test"] = {
            "lm_statistic": _num(white.lm_statistic), "lm_p": _num(white.lm_p),
            "f_statistic": _num(white.f_statistic), "f_p": _num(white.f_p),
            "aux_r_squared": _num(white.aux_r_squared),
        }
    if vif is not None:
        out["vif"] = {k: _num(v) for k, v in vif.values.items()}
        if vif.note:
            out["vif_note"] = vif.note
    return out


def _fmt(x, width=11, prec=4):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan".rjust(width)
    if isinstance(x, str):
        return x.rjust(width)
    return f"{x:{width}.{prec}f}"


def format_table(fit: FitResult, white: Optional[WhiteTestResult] = None,
                 vif: Optional[VifResult] = None) -> str:
    d = fit_to_dict(fit, white, vif)
    name_w = max(12, max(len(r["term"]) for r in d["coefficients"]) + 1)
    bar = "=" * (name_w + 6 * 11)
    lines = [f"{fit.method} regression results (n = {fit.nobs})", bar,
             "term".ljust(name_w) + "".join(h.rjust(11) for h in
                                            ("coef", "std err", "t", "P>|t|", "[0.025", "0.975]")),
             "-" * len(bar)]
    for r in d["coefficients"]:
        lines.append(r["term"].ljust(name_w) + _fmt(r["coef"]) + _fmt(r["std_err"]) + _fmt(r["t"], prec=3)
                     + _fmt(r["p"], prec=3) + _fmt(r["ci_low"], prec=3) + _fmt(r["ci_high"], prec=3))
    lines.append(bar)
    lines.append(f"R-squared: {fit.r_squared:.4f}   Adj. R-squared: {fit.adj_r_squared:.4f}")
    lines.append(f"F-statistic: {fit.f_statistic:.4f}   Prob (F): {fit.f_pvalue:.4g}")
    lines.append(f"Durbin-Watson: {fit.durbin_watson:.5f}")
    if white is not None:
        lines.append(f"White test: LM = {white.lm_statistic:.4f} (p = {white.lm_p:.4g}), "
                     f"F = {white.f_statistic:.4f} (p = {white.f_p:.4g})")
    if vif is not None:
        if vif.values:
            lines.append("VIF: " + ", ".join(f"{k} = {v:.3f}" for k, v in vif.values.items()))
        if vif.note:
            lines.append(f"VIF: {vif.note}")
    return "\n".join(lines) + "\n"
