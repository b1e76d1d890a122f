"""Local volatility functions and stochastic volatility filters.

Local volatility specs describe how the scale of one-step moves depends on
the level:

* ``ConstantVol``      -- level-independent moves (normal / ABM style),
  which is what the absolute shift rule implicitly assumes;
* ``ProportionalVol``  -- moves proportional to the level (log-normal / GBM
  style), matching the relative shift rule;
* ``DisplacedVol``     -- a mixture of the two, ((1-|alpha|)*x + alpha*beta)*sigma.

Stochastic volatility specs describe a conditional-variance filter run on
the locally rescaled returns: ``NoStochVol`` (flat), ``Ewma`` (RiskMetrics
recursion) or ``Garch`` (GARCH(1,1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
from scipy.signal import lfilter

from .errors import (
    ConstraintViolation,
    DegenerateBase,
    NonpositiveVolatility,
    ZeroVariance,
)

def _require(cond: bool, message: str):
    if not cond:
        raise ConstraintViolation(message)


# ---------------------------------------------------------------------------
# Local volatility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantVol:
    """Level-independent move scale: vol(x) = sigma."""

    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")

    kind = "constant"


@dataclass(frozen=True)
class ProportionalVol:
    """Move scale proportional to the level: vol(x) = sigma * x (x > 0)."""

    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")

    kind = "proportional"


@dataclass(frozen=True)
class DisplacedVol:
    """Normal/log-normal mixture: vol(x) = ((1-|alpha|)*x + alpha*beta) * sigma.

    alpha in [-1, 1] sets the mix; |alpha| = 1 collapses to a constant scale
    beta*sigma, alpha = 0 to the proportional scale sigma*x. Positivity of
    the bracket is checked lazily at evaluation, over whatever levels are
    actually passed in.
    """

    alpha: float
    beta: float
    sigma: float

    def __post_init__(self):
        _require(self.sigma > 0, f"sigma must be > 0, got {self.sigma}")
        _require(-1.0 <= self.alpha <= 1.0, f"alpha must be in [-1, 1], got {self.alpha}")

    kind = "displaced"


LocalVolSpec = Union[ConstantVol, ProportionalVol, DisplacedVol]


def local_volatility(spec: LocalVolSpec, x):
    """Evaluate the local volatility function at level(s) ``x``.

    Scalar in, float out; array in, array out. Raises NonpositiveVolatility
    if the function is not strictly positive anywhere in ``x`` (the chosen
    model is ill-posed at that level).
    """
    scalar = np.isscalar(x) or getattr(x, "ndim", 1) == 0
    xv = np.asarray(x, dtype=float)
    if isinstance(spec, ConstantVol):
        out = np.full_like(xv, spec.sigma)
    elif isinstance(spec, ProportionalVol):
        out = spec.sigma * xv
    else:
        out = ((1.0 - abs(spec.alpha)) * xv + spec.alpha * spec.beta) * spec.sigma
    bad = out <= 0.0
    if bad.any():
        idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
        val = float(np.atleast_1d(xv)[idx])
        raise NonpositiveVolatility(val, None if scalar else idx)
    return float(out) if scalar else out


def local_volatility_grad(spec: LocalVolSpec, x) -> dict[str, np.ndarray]:
    """Partial derivatives of local_volatility(spec, x) w.r.t. each parameter."""
    xv = np.asarray(x, dtype=float)
    if isinstance(spec, ConstantVol):
        return {"sigma": np.ones_like(xv)}
    if isinstance(spec, ProportionalVol):
        return {"sigma": xv.copy()}
    sgn = math.copysign(1.0, spec.alpha) if spec.alpha != 0.0 else 0.0
    return {
        "sigma": (1.0 - abs(spec.alpha)) * xv + spec.alpha * spec.beta,
        "alpha": (spec.beta - sgn * xv) * spec.sigma,
        "beta": np.full_like(xv, spec.alpha * spec.sigma),
    }


def shift_mix_weight(x: float, alpha: float, beta: float) -> float:
    """State-dependent weight x / (x + a), a = alpha/(1-alpha) * beta.

    The weight interpolates between a pure absolute shift (weight 0) and a
    pure relative shift (weight 1) in the hybrid shift rule. Restricted to
    alpha in [0, 1]; alpha = 0 gives exactly 1, alpha = 1 is the constant-
    scale limit and gives 0.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConstraintViolation(f"mix weight defined for alpha in [0, 1], got {alpha}")
    if alpha == 0.0:
        return 1.0
    if alpha == 1.0:
        return 0.0
    a = alpha / (1.0 - alpha) * beta
    if x + a == 0.0:
        raise ZeroDivisionError(f"mix weight undefined at x = {x} (x + a = 0)")
    return x / (x + a)


def implied_mix_weight(s0: float, s_prev: float, spec: LocalVolSpec) -> float:
    """Mix weight implied by a volatility ratio.

    Returns (s_prev / (s0 - s_prev)) * (vol(s0)/vol(s_prev) - 1), the unique
    weight for which the hybrid shift from base s0 over a historical step at
    s_prev reproduces the volatility-scaled scenario. Undefined at
    s0 == s_prev (DegenerateBase); note the one-step identity needs no
    weight there, since the scaling ratio is 1.
    """
    if s0 == s_prev:
        raise DegenerateBase(f"implied mix weight undefined at s0 == s_prev == {s0}")
    g0 = local_volatility(spec, s0)
    gp = local_volatility(spec, s_prev)
    return s_prev / (s0 - s_prev) * (g0 / gp - 1.0)


# ---------------------------------------------------------------------------
# Stochastic volatility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoStochVol:
    """Flat unit volatility path (no conditional heteroskedasticity)."""

    kind = "none"


@dataclass(frozen=True)
class Ewma:
    """RiskMetrics filter v_k^2 = (1-lam) * r_{k-1}^2 + lam * v_{k-1}^2."""

    lam: float

    def __post_init__(self):
        _require(0.0 < self.lam < 1.0, f"lambda must be in (0, 1), got {self.lam}")

    kind = "ewma"


@dataclass(frozen=True)
class Garch:
    """GARCH(1,1) filter v_k^2 = a0 + a1 * r_{k-1}^2 + b1 * v_{k-1}^2.

    Requires a0 > 0, a1 >= 0, b1 >= 0 and a1 + b1 < 1 (covariance
    stationarity, so the unconditional variance a0/(1-a1-b1) used for
    initialization is finite).
    """

    a0: float
    a1: float
    b1: float

    def __post_init__(self):
        _require(self.a0 > 0, f"a0 must be > 0, got {self.a0}")
        _require(self.a1 >= 0, f"a1 must be >= 0, got {self.a1}")
        _require(self.b1 >= 0, f"b1 must be >= 0, got {self.b1}")
        _require(
            self.a1 + self.b1 < 1.0,
            f"a1 + b1 must be < 1 for stationarity, got {self.a1 + self.b1}",
        )

    @property
    def unconditional_variance(self) -> float:
        return self.a0 / (1.0 - self.a1 - self.b1)

    kind = "garch"


StochVolSpec = Union[NoStochVol, Ewma, Garch]


@dataclass(frozen=True)
class InitRule:
    """How the filter's starting volatility v_0 is chosen.

    kind "default": unconditional variance for GARCH, sample second moment
    of the first min(sample_window, N) returns for EWMA, 1 for none.
    kind "unconditional": force a0/(1-a1-b1) (GARCH only).
    kind "sample": second moment of the first min(sample_window, N) returns.
    kind "fixed": v_0 = value (a volatility, not a variance).
    """

    kind: str = "default"
    value: float | None = None
    sample_window: int = 20

    def __post_init__(self):
        _require(
            self.kind in ("default", "unconditional", "sample", "fixed"),
            f"unknown init rule {self.kind!r}",
        )
        if self.kind == "fixed":
            _require(
                self.value is not None and self.value > 0,
                "fixed init requires a positive value",
            )


DEFAULT_INIT = InitRule()


@dataclass(frozen=True)
class VolPath:
    """Conditional volatility v_0..v_N produced by a filter over a sample.

    Length is one more than the number of returns (one value per sample
    date); all entries are strictly positive.
    """

    values: np.ndarray
    spec: StochVolSpec

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if not (arr > 0).all():
            idx = int(np.flatnonzero(~(arr > 0))[0])
            raise NonpositiveVolatility(float(arr[idx]), idx)

    def __len__(self) -> int:
        return len(self.values)


def initial_variance(spec: StochVolSpec, returns: np.ndarray, init: InitRule) -> float:
    """Resolve the starting variance v_0^2 for a filter run."""
    if init.kind == "fixed":
        return float(init.value) ** 2
    if isinstance(spec, NoStochVol):
        return 1.0
    if init.kind == "unconditional" or (init.kind == "default" and isinstance(spec, Garch)):
        if not isinstance(spec, Garch):
            raise ConstraintViolation("unconditional init is only defined for GARCH")
        return spec.unconditional_variance
    # sample rule (also the EWMA default): second moment of the head of the
    # sample; drift is zero by model assumption, so no demeaning.
    m = min(int(init.sample_window), len(returns))
    w0 = float(np.mean(np.square(returns[:m])))
    if w0 <= 0.0:
        raise ZeroVariance(
            "sample initialization is zero (flat series); "
            "use a fixed init rule to filter such data"
        )
    return w0


def _recurse_variance(x: np.ndarray, coeff: float, w0: float) -> np.ndarray:
    """Solve w_j = x_j + coeff * w_{j-1} for j = 1..n with w_0 given.

    Returns the full path [w_0, w_1, ..., w_n]. The IIR filter computes
    exactly the same floating-point operations as the scalar loop.
    """
    out = np.empty(len(x) + 1)
    out[0] = w0
    if len(x):
        out[1:], _ = lfilter([1.0], [1.0, -coeff], x, zi=np.array([coeff * w0]))
    return out


def variance_path(spec: StochVolSpec, returns: np.ndarray, init: InitRule = DEFAULT_INIT) -> np.ndarray:
    """Variance path w_0..w_N for the filtered returns (length N+1)."""
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or len(r) == 0:
        raise ConstraintViolation("filtered returns must be a nonempty 1-d sequence")
    if isinstance(spec, NoStochVol):
        return np.ones(len(r) + 1)
    w0 = initial_variance(spec, r, init)
    r2 = np.square(r)
    if isinstance(spec, Ewma):
        return _recurse_variance((1.0 - spec.lam) * r2, spec.lam, w0)
    return _recurse_variance(spec.a0 + spec.a1 * r2, spec.b1, w0)


def filter_volatility(
    spec: StochVolSpec, returns, init: InitRule = DEFAULT_INIT
) -> VolPath:
    """Run the conditional volatility filter over filtered returns.

    The path has one more entry than ``returns``: v_0 comes from the init
    rule and v_k (k >= 1) applies the recursion to the return observed over
    step k. ``NoStochVol`` yields the all-ones path.
    """
    w = variance_path(spec, np.asarray(returns, dtype=float), init)
    return VolPath(values=np.sqrt(w), spec=spec)


# ---------------------------------------------------------------------------
# Key-value serialization of model specs
# ---------------------------------------------------------------------------

_LV_KINDS = {"constant": ConstantVol, "proportional": ProportionalVol, "displaced": DisplacedVol}
_SV_KINDS = {"none": NoStochVol, "ewma": Ewma, "garch": Garch}


def spec_to_config(lv: LocalVolSpec, sv: StochVolSpec) -> dict[str, str]:
    """Flatten a model to the dotted key-value block used by config files."""
    out = {"localvol.kind": lv.kind}
    out["localvol.sigma"] = repr(float(lv.sigma))
    if isinstance(lv, DisplacedVol):
        out["localvol.alpha"] = repr(float(lv.alpha))
        out["localvol.beta"] = repr(float(lv.beta))
    out["stochvol.kind"] = sv.kind
    if isinstance(sv, Ewma):
        out["stochvol.lambda"] = repr(float(sv.lam))
    elif isinstance(sv, Garch):
        out["stochvol.a0"] = repr(float(sv.a0))
        out["stochvol.a1"] = repr(float(sv.a1))
        out["stochvol.b1"] = repr(float(sv.b1))
    return out


def spec_from_config(kv: Mapping[str, str]) -> tuple[LocalVolSpec, StochVolSpec]:
    """Build model specs from a dotted key-value block (inverse of spec_to_config)."""
    lv_kind = str(kv.get("localvol.kind", "")).lower()
    if lv_kind not in _LV_KINDS:
        raise ConstraintViolation(f"localvol.kind must be one of {sorted(_LV_KINDS)}, got {lv_kind!r}")
    sigma = _get_float(kv, "localvol.sigma", required=True)
    if lv_kind == "displaced":
        lv: LocalVolSpec = DisplacedVol(
            alpha=_get_float(kv, "localvol.alpha", required=True),
            beta=_get_float(kv, "localvol.beta", required=True),
            sigma=sigma,
        )
    else:
        lv = _LV_KINDS[lv_kind](sigma=sigma)

    sv_kind = str(kv.get("stochvol.kind", "none")).lower()
    if sv_kind not in _SV_KINDS:
        raise ConstraintViolation(f"stochvol.kind must be one of {sorted(_SV_KINDS)}, got {sv_kind!r}")
    if sv_kind == "ewma":
        sv: StochVolSpec = Ewma(lam=_get_float(kv, "stochvol.lambda", required=True))
    elif sv_kind == "garch":
        sv = Garch(
            a0=_get_float(kv, "stochvol.a0", required=True),
            a1=_get_float(kv, "stochvol.a1", required=True),
            b1=_get_float(kv, "stochvol.b1", required=True),
        )
    else:
        sv = NoStochVol()
    return lv, sv


def _get_float(kv: Mapping[str, str], key: str, required: bool = False) -> float:
    if key not in kv:
        if required:
            raise ConstraintViolation(f"missing config key {key!r}")
        return math.nan
    try:
        return float(kv[key])
    except (TypeError, ValueError):
        raise ConstraintViolation(f"config key {key!r} is not a number: {kv[key]!r}") from None
