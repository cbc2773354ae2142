"""Correlation measures, regression batteries, and session-level aggregation.

The regressions compare total covariation against its continuous part across
days: an intercept/slope pair of (0, 1) means the continuous component fully
explains daily covariation.  Inference uses heteroskedasticity-robust
covariances throughout.
"""

import math
from dataclasses import dataclass
from datetime import timedelta

import numpy as np
from scipy.special import expit
from scipy.stats import chi2

from .errors import EstimatorError, NumericalError


def matrix_correlation(matrix: np.ndarray) -> float:
    """Off-diagonal correlation implied by a symmetric 2x2 covariation matrix.

    Raises
    ------
    NumericalError
        If either diagonal entry is not strictly positive.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (2, 2):
        raise EstimatorError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not (m[0, 0] > 0.0 and m[1, 1] > 0.0):
        raise NumericalError(
            f"correlation undefined: diagonal ({m[0, 0]!r}, {m[1, 1]!r}) not positive"
        )
    return float(m[0, 1] / math.sqrt(m[0, 0] * m[1, 1]))


@dataclass(frozen=True)
class RegressionResult:
    """Coefficients and robust inference for a two-parameter regression.

    ``coef`` is ordered (intercept, slope) for the linear model in levels;
    ``wald`` tests the stated null (see ``null_value``) against a chi-squared
    distribution with two degrees of freedom.
    """

    method: str
    coef: np.ndarray
    cov: np.ndarray
    null_value: np.ndarray
    wald: float
    wald_pvalue: float
    wald_dof: int
    r_squared: float
    n: int
    converged: bool = True
    iterations: int = 0


def _wald_two_dof(coef, cov, null_value):
    delta = np.asarray(coef, dtype=np.float64) - np.asarray(null_value, dtype=np.float64)
    if not np.any(delta):
        return 0.0, 1.0
    cov = np.asarray(cov, dtype=np.float64)
    if not np.any(cov):
        # Zero sampling variance with a nonzero deviation: reject at any level.
        return float("inf"), 0.0
    try:
        solved = np.linalg.solve(cov, delta)
    except np.linalg.LinAlgError:
        solved = np.linalg.pinv(cov) @ delta
    wald = float(delta @ solved)
    if wald < 0.0:
        raise NumericalError(f"Wald statistic {wald!r} negative; covariance not PSD")
    return wald, float(chi2.sf(wald, 2))


def _simple_ols(y, x):
    """Centered closed-form fit of y on (1, x) with HC0 robust covariance."""
    n = y.size
    x_mean = float(np.mean(x))
    y_mean = float(np.mean(y))
    xc = x - x_mean
    yc = y - y_mean
    sxx = float(xc @ xc)
    if sxx <= 0.0:
        raise NumericalError("regressor has zero variance; slope undefined")
    slope = float(xc @ yc) / sxx
    intercept = y_mean - slope * x_mean
    resid = y - (intercept + slope * x)
    ssr = float(resid @ resid)
    sst = float(yc @ yc)
    if sst > 0.0:
        r_squared = 1.0 - ssr / sst
    else:
        r_squared = 1.0 if ssr == 0.0 else float("nan")

    if ssr == 0.0:
        cov = np.zeros((2, 2))
    else:
        e2 = resid * resid
        s0 = float(np.sum(e2))
        s1 = float(e2 @ x)
        s2 = float(e2 @ (x * x))
        meat = np.array([[s0, s1], [s1, s2]])
        sum_x = float(np.sum(x))
        sum_x2 = float(x @ x)
        det = n * sxx
        bread = np.array([[sum_x2, -sum_x], [-sum_x, float(n)]]) / det
        cov = bread @ meat @ bread
    return np.array([intercept, slope]), cov, r_squared, ssr


def ols_wald(y, x) -> RegressionResult:
    """OLS of y on (1, x) with a robust Wald test of intercept 0, slope 1.

    When y equals x elementwise the fit is exact: the coefficients are
    exactly (0.0, 1.0), the robust covariance is the zero matrix, and the
    Wald statistic is exactly 0.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape or y.ndim != 1:
        raise EstimatorError(f"y and x must be equal-length 1-D arrays, got {y.shape} and {x.shape}")
    if y.size < 3:
        raise EstimatorError(f"need at least 3 observations, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise NumericalError("regression inputs contain non-finite values")
    coef, cov, r_squared, _ = _simple_ols(y, x)
    null = np.array([0.0, 1.0])
    wald, pvalue = _wald_two_dof(coef, cov, null)
    return RegressionResult(
        method="ols", coef=coef, cov=cov, null_value=null,
        wald=wald, wald_pvalue=pvalue, wald_dof=2, r_squared=r_squared, n=y.size,
    )


def gls_ratio_regression(y, x) -> RegressionResult:
    """Weighted fit of y on (1, x) with weights 1/x, via the ratio transform.

    Dividing the model y = a + b*x through by x gives y/x regressed on
    (1/x, 1); OLS on the transformed system downweights days with large x.
    ``coef`` is reported in the original (intercept a, slope b) order and the
    Wald test again targets (0, 1).  Requires x strictly positive.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape or y.ndim != 1:
        raise EstimatorError(f"y and x must be equal-length 1-D arrays, got {y.shape} and {x.shape}")
    if y.size < 3:
        raise EstimatorError(f"need at least 3 observations, got {y.size}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise NumericalError("regression inputs contain non-finite values")
    if not np.all(x > 0.0):
        raise NumericalError("ratio regression requires strictly positive x")
    w = y / x
    u = 1.0 / x
    # Transformed system: w = a*u + b.  The closed form below is the simple
    # OLS of w on (1, u), whose slope is a and intercept is b.
    coef_t, cov_t, r_squared, _ = _simple_ols(w, u)
    coef = np.array([coef_t[1], coef_t[0]])
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    cov = swap @ cov_t @ swap
    null = np.array([0.0, 1.0])
    wald, pvalue = _wald_two_dof(coef, cov, null)
    return RegressionResult(
        method="gls_ratio", coef=coef, cov=cov, null_value=null,
        wald=wald, wald_pvalue=pvalue, wald_dof=2, r_squared=r_squared, n=y.size,
    )


def _log_likelihood(y, eta):
    # log p with p = expit(eta): y*eta - log(1+exp(eta)), stable via logaddexp
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logit_cojump(indicator, covariate, max_iter: int = 100, tol: float = 1e-8) -> RegressionResult:
    """Logistic regression of a 0/1 day indicator on (1, covariate).

    Fit by Newton iterations with step halving; inference uses the robust
    sandwich covariance and a one-degree Wald test of a zero slope (the
    covariate carries no information about the indicator).  ``r_squared``
    holds McFadden's likelihood ratio index.

    Raises
    ------
    EstimatorError
        If the indicator never varies.
    NumericalError
        If the fit diverges (perfect separation) or fails to converge.
    """
    y = np.asarray(indicator, dtype=np.float64)
    x = np.asarray(covariate, dtype=np.float64)
    if y.shape != x.shape or y.ndim != 1:
        raise EstimatorError(f"indicator and covariate must match, got {y.shape} and {x.shape}")
    if y.size < 3:
        raise EstimatorError(f"need at least 3 observations, got {y.size}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise EstimatorError("indicator must be 0/1 valued")
    if not np.all(np.isfinite(x)):
        raise NumericalError("covariate contains non-finite values")
    p_bar = float(np.mean(y))
    if p_bar == 0.0 or p_bar == 1.0:
        raise EstimatorError("indicator has no variation; logit undefined")
    if float(np.var(x)) == 0.0:
        raise NumericalError("covariate has zero variance; slope undefined")

    design = np.column_stack([np.ones(y.size), x])
    beta = np.zeros(2)
    eta = design @ beta
    loglik = _log_likelihood(y, eta)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        prob = expit(eta)
        grad = design.T @ (y - prob)
        if float(np.max(np.abs(grad))) <= tol:
            converged = True
            break
        weight = prob * (1.0 - prob)
        hess = design.T @ (design * weight[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular Hessian in logit fit") from exc
        if float(np.max(np.abs(step))) <= 1e-12 * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
            break
        # Accept any step that does not worsen the objective beyond its own
        # floating-point resolution; a strictly monotone test can stall once
        # per-step gains drop below one ulp of the log-likelihood.
        slack = 1e-12 * (1.0 + abs(loglik))
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            cand_eta = design @ candidate
            cand_ll = _log_likelihood(y, cand_eta)
            if cand_ll >= loglik - slack:
                break
            scale *= 0.5
        beta = beta + scale * step
        eta = design @ beta
        loglik = _log_likelihood(y, eta)
        if float(np.max(np.abs(eta))) > 30.0:
            raise NumericalError(
                "logit fit diverged; the covariate separates the indicator perfectly"
            )
    if not converged:
        raise NumericalError(f"logit fit did not converge in {max_iter} iterations")

    prob = expit(eta)
    weight = prob * (1.0 - prob)
    a_mat = design.T @ (design * weight[:, None])
    score = (y - prob)
    b_mat = design.T @ (design * (score * score)[:, None])
    try:
        a_inv = np.linalg.inv(a_mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular information matrix in logit fit") from exc
    cov = a_inv @ b_mat @ a_inv
    slope_var = float(cov[1, 1])
    if slope_var > 0.0:
        wald = float(beta[1] * beta[1] / slope_var)
        pvalue = float(chi2.sf(wald, 1))
    elif beta[1] == 0.0:
        wald, pvalue = 0.0, 1.0
    else:
        wald, pvalue = float("inf"), 0.0
    ll_null = y.size * (p_bar * math.log(p_bar) + (1.0 - p_bar) * math.log(1.0 - p_bar))
    pseudo_r2 = 1.0 - loglik / ll_null if ll_null != 0.0 else float("nan")
    return RegressionResult(
        method="logit", coef=beta, cov=cov, null_value=np.array([0.0]),
        wald=wald, wald_pvalue=pvalue, wald_dof=1, r_squared=pseudo_r2, n=y.size,
        converged=converged, iterations=iterations,
    )


SESSION_ORDER = ("asia", "eu", "us", "total")


def session_report(results) -> dict:
    """Aggregate day results into per-session and per-year summary tables.

    For each session label present: day counts, flagged co-jump day counts,
    summed off-diagonal jump and total covariation with their percentage
    ratio, unconditional correlations rebuilt from summed matrices, and the
    median gap between total and continuous correlation.  Yearly ratios key
    days by the year of the day the session originated in (the label's
    previous calendar day).
    """
    sessions = {}
    for res in results:
        sessions.setdefault(res.session, []).append(res)
    report = {"sessions": {}, "yearly": {}}
    order = [s for s in SESSION_ORDER if s in sessions]
    order += sorted(set(sessions) - set(order))
    for name in order:
        rows = sessions[name]
        qv_sum = np.sum([r.qv for r in rows], axis=0)
        cj_sum = np.sum([r.cj for r in rows], axis=0)
        ic_sum = np.array([
            [sum(r.ic[0, 0] for r in rows), sum(r.ic12_star for r in rows)],
            [sum(r.ic12_star for r in rows), sum(r.ic[1, 1] for r in rows)],
        ])
        corr_gap = np.array([r.total_corr - r.cont_corr for r in rows], dtype=np.float64)
        finite_gap = corr_gap[np.isfinite(corr_gap)]
        entry = {
            "days": len(rows),
            "cojump_days": int(sum(r.cojump_day for r in rows)),
            "rejected_days": int(sum(r.rejected for r in rows)),
            "cj12_sum": float(cj_sum[0, 1]),
            "qv12_sum": float(qv_sum[0, 1]),
            "cj_share_pct": (100.0 * cj_sum[0, 1] / qv_sum[0, 1]
                             if qv_sum[0, 1] != 0.0 else float("nan")),
            "total_corr_unconditional": (
                float(qv_sum[0, 1] / math.sqrt(qv_sum[0, 0] * qv_sum[1, 1]))
                if qv_sum[0, 0] > 0.0 and qv_sum[1, 1] > 0.0 else float("nan")),
            "cont_corr_unconditional": (
                float(ic_sum[0, 1] / math.sqrt(ic_sum[0, 0] * ic_sum[1, 1]))
                if ic_sum[0, 0] > 0.0 and ic_sum[1, 1] > 0.0 else float("nan")),
            "median_corr_gap": (float(np.median(finite_gap))
                                if finite_gap.size else float("nan")),
        }
        report["sessions"][name] = entry

        yearly = {}
        for res in rows:
            origin_year = (res.date - timedelta(days=1)).year
            cell = yearly.setdefault(origin_year, {"days": 0, "cojump_days": 0,
                                                   "cj12_sum": 0.0, "qv12_sum": 0.0})
            cell["days"] += 1
            cell["cojump_days"] += int(res.cojump_day)
            cell["cj12_sum"] += float(res.cj[0, 1])
            cell["qv12_sum"] += float(res.qv[0, 1])
        for year, cell in yearly.items():
            cell["cj_share_pct"] = (100.0 * cell["cj12_sum"] / cell["qv12_sum"]
                                    if cell["qv12_sum"] != 0.0 else float("nan"))
        report["yearly"][name] = {str(y): yearly[y] for y in sorted(yearly)}
    return report


def regression_battery(results, min_days: int = 10) -> dict:
    """Run the day-level regressions per session on valid day results.

    For each session with at least ``min_days`` usable days: OLS and ratio
    regressions of total on continuous off-diagonal covariation, and the
    logistic regression of the flagged co-jump day indicator on total
    covariation.  Sessions with degenerate inputs record the reason instead.
    """
    sessions = {}
    for res in results:
        sessions.setdefault(res.session, []).append(res)
    battery = {}
    for name in sorted(sessions):
        rows = [r for r in sessions[name]
                if np.isfinite(r.qv[0, 1]) and np.isfinite(r.ic12_star)]
        entry = {}
        if len(rows) < min_days:
            battery[name] = {"skipped": f"only {len(rows)} usable days (need {min_days})"}
            continue
        y = np.array([r.qv[0, 1] for r in rows])
        x = np.array([r.ic12_star for r in rows])
        flags = np.array([float(r.cojump_day) for r in rows])
        for method, runner, args in (
            ("ols", ols_wald, (y, x)),
            ("gls_ratio", gls_ratio_regression, (y, x)),
            ("logit", logit_cojump, (flags, y)),
        ):
            try:
                fit = runner(*args)
                entry[method] = {
                    "coef": [float(c) for c in fit.coef],
                    "wald": fit.wald,
                    "wald_pvalue": fit.wald_pvalue,
                    "r_squared": fit.r_squared,
                    "n": fit.n,
                }
            except (EstimatorError, NumericalError) as exc:
                entry[method] = {"skipped": str(exc)}
        battery[name] = entry
    return battery
