"""VaR, stressed VaR and exception backtesting on scenario sets.

VaR is a positive loss number: minus the empirical quantile of the one-step
P&L sample at level 1 - confidence. The default quantile rule is the lower
order statistic (no interpolation), matching common historical-simulation
practice; linear interpolation is available behind a flag and the rule in
force is always declared in the report.
"""

from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .errors import ConstraintViolation, EmptyScenarios
from .innovations import ScenarioSet, extract_innovations, simulate_stressed_scenarios
from .timeseries import PriceSeries
from .volatility import LocalVolSpec, NoStochVol


@dataclass(frozen=True)
class VaRReport:
    confidence: float
    var_value: float
    n_scenarios: int
    mode: str
    quantile_rule: str


@dataclass(frozen=True)
class BacktestReport:
    n: int
    exceptions: int
    confidence: float
    lr_pof: float
    p_value: float


def pnl(scen: ScenarioSet) -> np.ndarray:
    """One-step P&L of each scenario relative to the base level."""
    return scen.scenarios - scen.base_s0


def var(scen: ScenarioSet, confidence: float, interpolate: bool = False) -> VaRReport:
    """Empirical VaR of the scenario P&L at the given confidence level.

    Lower-order-statistic rule: with n scenarios, the quantile is the
    ceil((1 - confidence) * n)-th smallest P&L; VaR is its negative. Warns
    when n is too small to resolve the requested tail.
    """
    _check_confidence(confidence)
    pl = pnl(scen)
    n = len(pl)
    if n == 0:
        raise EmptyScenarios("cannot compute VaR of an empty scenario set")
    tail = 1.0 - confidence
    resolution = _snap_ceil(1.0 / tail)
    if n < resolution:
        warnings.warn(
            f"{n} scenarios cannot resolve the {confidence:g} quantile "
            f"(need at least {resolution})",
            stacklevel=2,
        )
    if interpolate:
        q = float(np.quantile(pl, tail))
        rule = "interpolated"
    else:
        q = float(np.sort(pl)[_lower_order_index(tail, n) - 1])
        rule = "lower_empirical"
    return VaRReport(
        confidence=float(confidence),
        var_value=-q,
        n_scenarios=n,
        mode=scen.mode,
        quantile_rule=rule,
    )


def _snap_ceil(q: float) -> int:
    """ceil with a guard: quantities like (1 - 0.99) * 1000 land a hair above
    an exact integer and would wrongly bump the ceiling by one."""
    nearest = round(q)
    if abs(q - nearest) <= 1e-9 * max(1.0, abs(q)):
        q = nearest
    return int(math.ceil(q))


def _lower_order_index(tail: float, n: int) -> int:
    """1-based order statistic index ceil(tail * n)."""
    return min(max(_snap_ceil(tail * n), 1), n)


def stressed_var(
    series: PriceSeries,
    lv: LocalVolSpec,
    window: tuple[dt.date | str | None, dt.date | str | None],
    base_s0: float | None = None,
    confidence: float = 0.99,
    interpolate: bool = False,
) -> VaRReport:
    """VaR over a stressed historical window, deliberately not rescaled.

    Restricts the series to the window, generates stressed scenarios from
    the base level (default: the full series' last observation, i.e. the
    current market state) and applies the quantile rule. The caller chooses
    the window; no crisis auto-detection is attempted.
    """
    sub = series.restrict(window[0], window[1])
    s0 = float(series.values[-1]) if base_s0 is None else float(base_s0)
    innov, _ = extract_innovations(sub, lv, NoStochVol())
    scen = simulate_stressed_scenarios(innov, sub, lv, base_s0=s0)
    return var(scen, confidence, interpolate=interpolate)


def kupiec_backtest(exceptions: int, n: int, confidence: float) -> BacktestReport:
    """Kupiec proportion-of-failures likelihood-ratio test.

    LR = -2 ln[ (1-p)^(n-x) p^x / ((1-x/n)^(n-x) (x/n)^x) ] with
    p = 1 - confidence and x the exception count; x in {0, n} uses the
    boundary limits. The p-value is the chi-square(1) survival function.
    """
    if n < 1:
        raise ConstraintViolation(f"backtest needs n >= 1, got {n}")
    if not 0 <= exceptions <= n:
        raise ConstraintViolation(f"exceptions must be in [0, {n}], got {exceptions}")
    _check_confidence(confidence)
    p = 1.0 - confidence
    x = int(exceptions)
    phat = x / n
    # log(ratio) form keeps LR exactly 0 when the observed rate equals p,
    # and the x * log(...) terms vanish at the boundaries by their limits.
    lr = 0.0
    if x < n:
        lr += 2.0 * (n - x) * math.log((1.0 - phat) / (1.0 - p))
    if x > 0:
        lr += 2.0 * x * math.log(phat / p)
    return BacktestReport(
        n=int(n),
        exceptions=x,
        confidence=float(confidence),
        lr_pof=lr,
        p_value=float(chi2.sf(lr, 1)),
    )


def pnl_to_csv(scen: ScenarioSet) -> str:
    """Sorted (ascending) P&L sample as a one-column CSV."""
    lines = ["pnl"]
    for value in np.sort(pnl(scen)):
        lines.append(repr(float(value)))
    return "\n".join(lines) + "\n"


def _check_confidence(confidence: float):
    if not 0.5 < confidence < 1.0:
        raise ConstraintViolation(f"confidence must be in (0.5, 1), got {confidence}")
