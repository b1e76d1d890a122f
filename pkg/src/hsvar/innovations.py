"""Innovation extraction and one-step scenario generation.

The engine views the observed series as S_k = S_{k-1} + v_{k-1} * vol(S_{k-1}) * dW_k,
where ``vol`` is the local volatility function and ``v`` the filtered
stochastic volatility (identically 1 when no filter is specified). Dividing
each observed increment by its model scale recovers the innovation
increments dW_k; replaying them from a base state (S_0, v_0) at the base's
own scale produces the one-step scenario set

    scenario_k = S_0 + (v_0 * vol(S_0)) / (v_{k-1} * vol(S_{k-1})) * (S_k - S_{k-1}).

Constant local volatility reduces this to the absolute shift rule,
proportional local volatility to the relative shift rule, and proportional
plus a GARCH/EWMA filter to filtered historical simulation. Stressed
scenarios drop the v_0 / v_{k-1} rescaling on purpose: the elevated
volatility of the stress window is the point.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConstraintViolation, DenominatorTooSmall
from .timeseries import PriceSeries, default_eps, relative_shifts
from .volatility import (
    DEFAULT_INIT,
    InitRule,
    LocalVolSpec,
    NoStochVol,
    ProportionalVol,
    StochVolSpec,
    VolPath,
    filter_volatility,
    local_volatility,
)


@dataclass(frozen=True)
class InnovationSeries:
    """Extracted innovation increments dW_1..dW_N with model provenance.

    Entry k is dated at day k, the later day of the increment's pair.
    """

    values: np.ndarray
    dates: tuple[dt.date, ...]
    local_vol: LocalVolSpec
    stoch_vol: StochVolSpec
    source_label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != len(arr):
            raise ConstraintViolation("innovation dates and values must align")
        if not np.isfinite(arr).all():
            raise ConstraintViolation("innovations must be finite")

    @property
    def model(self) -> tuple[LocalVolSpec, StochVolSpec]:
        return self.local_vol, self.stoch_vol

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ScenarioSet:
    """One-step simulated levels from a base state, one per innovation."""

    base_s0: float
    base_v0: float
    scenarios: np.ndarray
    dates: tuple[dt.date, ...]
    mode: str  # "standard" | "stressed"
    local_vol: LocalVolSpec | None
    stoch_vol: StochVolSpec | None

    def __post_init__(self):
        arr = np.asarray(self.scenarios, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "scenarios", arr)
        object.__setattr__(self, "dates", tuple(self.dates))
        if self.mode not in ("standard", "stressed"):
            raise ConstraintViolation(f"unknown scenario mode {self.mode!r}")
        if len(self.dates) != len(arr):
            raise ConstraintViolation("scenario dates and values must align")
        if not np.isfinite(arr).all():
            raise ConstraintViolation("scenarios must be finite")
        if not self.base_v0 > 0:
            raise ConstraintViolation(f"base v0 must be > 0, got {self.base_v0}")

    def __len__(self) -> int:
        return len(self.scenarios)


def extract_innovations(
    series: PriceSeries,
    lv: LocalVolSpec,
    sv: StochVolSpec = NoStochVol(),
    init: InitRule = DEFAULT_INIT,
) -> tuple[InnovationSeries, VolPath]:
    """Extract dW_k = (S_k - S_{k-1}) / (v_{k-1} * vol(S_{k-1})) and the path used.

    The filter runs on the locally rescaled returns r_k = (S_k - S_{k-1}) / vol(S_{k-1});
    with no stochastic volatility the path is identically 1 and the
    innovations are just the rescaled returns.

    The proportional kind is the relative-shift model: its denominators get
    the same positivity threshold as relative shifts, so zero, negative or
    vanishing levels raise DenominatorTooSmall rather than producing
    arbitrarily large innovations.
    """
    s = series.values
    if isinstance(lv, ProportionalVol):
        eps = default_eps(series)
        bad = s[:-1] <= eps
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise DenominatorTooSmall(idx, float(s[idx]), eps)
    g = local_volatility(lv, s[:-1])
    r = np.diff(s) / g
    path = filter_volatility(sv, r, init)
    dw = r / path.values[:-1]
    innov = InnovationSeries(
        values=dw,
        dates=series.dates[1:],
        local_vol=lv,
        stoch_vol=sv,
        source_label=series.label,
    )
    return innov, path


def simulate_scenarios(
    innov: InnovationSeries,
    volpath: VolPath,
    series: PriceSeries,
    base: tuple[float, float] | None = None,
) -> ScenarioSet:
    """Replay extracted innovations one step ahead of a base state.

    ``base`` is (S_0, v_0); by default the last observation of the series
    and the final filtered volatility, i.e. the valuation-date state.
    """
    if len(innov) != len(series) - 1 or len(volpath) != len(series):
        raise ConstraintViolation("innovations, volatility path and series must align")
    if base is None:
        base = (float(series.values[-1]), float(volpath.values[-1]))
    s0, v0 = float(base[0]), float(base[1])
    if not v0 > 0:
        raise ConstraintViolation(f"base v0 must be > 0, got {v0}")
    g0 = local_volatility(innov.local_vol, s0)
    scen = s0 + (v0 * g0) * innov.values
    return ScenarioSet(
        base_s0=s0,
        base_v0=v0,
        scenarios=scen,
        dates=innov.dates,
        mode="standard",
        local_vol=innov.local_vol,
        stoch_vol=innov.stoch_vol,
    )


def simulate_stressed_scenarios(
    innov: InnovationSeries,
    series: PriceSeries,
    lv: LocalVolSpec,
    base_s0: float | None = None,
) -> ScenarioSet:
    """Stressed replay: local rescaling only, historical volatility kept.

    scenario_k = S_0 + vol(S_0) / vol(S_{k-1}) * (S_k - S_{k-1}); the
    stochastic-volatility ratio cancels by construction, so a stressed run
    coincides with an unfiltered one on the same window.
    """
    if len(innov) != len(series) - 1:
        raise ConstraintViolation("innovations and series must align")
    s0 = float(series.values[-1]) if base_s0 is None else float(base_s0)
    g = local_volatility(lv, series.values[:-1])
    g0 = local_volatility(lv, s0)
    r = np.diff(series.values) / g
    scen = s0 + g0 * r
    return ScenarioSet(
        base_s0=s0,
        base_v0=1.0,
        scenarios=scen,
        dates=innov.dates,
        mode="stressed",
        local_vol=lv,
        stoch_vol=innov.stoch_vol,
    )


def hybrid_shift_scenarios(
    series: PriceSeries,
    base_s0: float,
    mix_weight: Callable[[float], float],
    eps: float | None = None,
) -> ScenarioSet:
    """Blend absolute and relative shifts with a state-dependent weight.

    scenario_k = S_0 + w(S_{k-1}) * S_0 * r_rel_k + (1 - w(S_{k-1})) * r_abs_k.
    A constant weight of 0 reproduces pure absolute shifts, a constant 1
    pure relative shifts. Requires well-defined relative shifts (positive
    denominators).
    """
    rel = relative_shifts(series, eps).values
    rabs = np.diff(series.values)
    w = np.array([float(mix_weight(float(x))) for x in series.values[:-1]])
    scen = base_s0 + w * base_s0 * rel + (1.0 - w) * rabs
    return ScenarioSet(
        base_s0=float(base_s0),
        base_v0=1.0,
        scenarios=scen,
        dates=series.dates[1:],
        mode="standard",
        local_vol=None,
        stoch_vol=None,
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def scenarios_to_csv(scen: ScenarioSet) -> str:
    """CSV export with columns k,date,s_tilde (k = 1..N)."""
    lines = ["k,date,s_tilde"]
    for k, (day, value) in enumerate(zip(scen.dates, scen.scenarios), start=1):
        lines.append(f"{k},{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def innovations_to_csv(innov: InnovationSeries) -> str:
    """CSV export with columns k,date,dw (k = 1..N)."""
    lines = ["k,date,dw"]
    for k, (day, value) in enumerate(zip(innov.dates, innov.values), start=1):
        lines.append(f"{k},{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def volpath_to_csv(path: VolPath, dates: tuple[dt.date, ...]) -> str:
    """CSV export with columns k,date,v (k = 0..N, one row per sample date)."""
    if len(dates) != len(path):
        raise ConstraintViolation("volatility path and dates must align")
    lines = ["k,date,v"]
    for k, (day, value) in enumerate(zip(dates, path.values)):
        lines.append(f"{k},{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"
