"""Adequacy tests for extracted innovations.

If the volatility model is right, the extracted increments should look
i.i.d.; leftover serial dependence or conditional heteroskedasticity says
otherwise. Ljung-Box covers the first, Engle's ARCH-LM the second; both are
chi-square tests and both are reported with their statistic, degrees of
freedom and p-value so a report can be rechecked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .errors import ConstraintViolation, ZeroVariance


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    df: int
    p_value: float
    lags: int


DEFAULT_LAGS = 10


def ljung_box(x, lags: int = DEFAULT_LAGS) -> TestResult:
    """Ljung-Box portmanteau test for serial dependence.

    Q = n (n+2) sum_{k=1}^{h} acf_k^2 / (n - k), with acf_k the sample
    autocorrelation (mean-subtracted, biased denominator); the p-value is
    the chi-square(h) survival function. A constant input has no defined
    autocorrelation and raises ZeroVariance.
    """
    xv = np.asarray(x, dtype=float).ravel()
    n = len(xv)
    if not 1 <= lags < n:
        raise ConstraintViolation(f"need n > lags >= 1, got n={n}, lags={lags}")
    xc = xv - xv.mean()
    denom = float(np.dot(xc, xc))
    if denom == 0.0:
        raise ZeroVariance("autocorrelation undefined: input is constant")
    q = 0.0
    for k in range(1, lags + 1):
        rho = float(np.dot(xc[k:], xc[:-k])) / denom
        q += rho * rho / (n - k)
    q *= n * (n + 2.0)
    return TestResult(
        name="ljung_box",
        statistic=q,
        df=int(lags),
        p_value=float(chi2.sf(q, lags)),
        lags=int(lags),
    )


def arch_lm(x, lags: int = DEFAULT_LAGS) -> TestResult:
    """Engle's LM test for conditional heteroskedasticity.

    Regresses the squared (demeaned) series on a constant and its own first
    h lags; the statistic is n_eff * R^2 against chi-square(h). A regressand
    with zero variance (constant |x|) is degenerate by convention: statistic
    0, p-value 1.
    """
    xv = np.asarray(x, dtype=float).ravel()
    n = len(xv)
    if n <= 2 * lags + 1:
        raise ConstraintViolation(f"need n > 2*lags + 1, got n={n}, lags={lags}")
    s = np.square(xv - xv.mean())
    y = s[lags:]
    n_eff = len(y)
    sst = float(np.sum(np.square(y - y.mean())))
    if sst == 0.0:
        stat = 0.0
    else:
        cols = [np.ones(n_eff)]
        cols.extend(s[lags - j: n - j] for j in range(1, lags + 1))
        X = np.column_stack(cols)
        xtx = X.T @ X
        # tiny ridge keeps collinear/degenerate inputs solvable
        ridge = 1e-12 * float(np.trace(xtx))
        beta = np.linalg.solve(xtx + ridge * np.eye(lags + 1), X.T @ y)
        ssr = float(np.sum(np.square(y - X @ beta)))
        stat = n_eff * max(1.0 - ssr / sst, 0.0)
    return TestResult(
        name="arch_lm",
        statistic=stat,
        df=int(lags),
        p_value=float(chi2.sf(stat, lags)),
        lags=int(lags),
    )


def run_diagnostics(x, lags: int = DEFAULT_LAGS, significance: float = 0.05) -> dict:
    """Run both tests and summarise with a verdict.

    verdict "fail" if any computed p-value is below the significance level,
    "warn" if a test could not be computed (degenerate input), else "pass".
    """
    if not 0.0 < significance < 1.0:
        raise ConstraintViolation(f"significance must be in (0, 1), got {significance}")
    results: list[dict] = []
    errors = 0
    failures = 0
    for test in (ljung_box, arch_lm):
        try:
            res = test(x, lags=lags)
        except ZeroVariance as exc:
            results.append({"name": test.__name__, "error": exc.kind, "message": str(exc)})
            errors += 1
            continue
        results.append(
            {
                "name": res.name,
                "statistic": res.statistic,
                "df": res.df,
                "p_value": res.p_value,
                "lags": res.lags,
            }
        )
        if res.p_value < significance:
            failures += 1
    verdict = "fail" if failures else ("warn" if errors else "pass")
    return {
        "results": results,
        "verdict": verdict,
        "significance": float(significance),
        "lags": int(lags),
    }
