"""Quasi-maximum-likelihood estimation of the volatility model.

The conditional Gaussian quasi-log-likelihood of the observed increments is

    ll = -1/2 * sum_k [ log v_{k-1}^2 + log vol(S_{k-1})^2
                        + (S_k - S_{k-1})^2 / (v_{k-1}^2 vol(S_{k-1})^2) ]

with the variance path built by the chosen filter on the locally rescaled
returns. The likelihood is quasi: it stays a valid M-estimator even when
the innovations are not Gaussian.

Gradients are computed analytically by differentiating the filter recursion
(each sensitivity is itself a first-order recursion, so everything runs as
vectorized IIR filters). Optimization happens in an unconstrained space:
log for positive parameters, logistic maps keeping a1 + b1 < 1, so every
iterate satisfies the model constraints by construction.

Identifiability note: the overall scale of the local volatility trades off
exactly against the filter's variance scale (sigma, a0) -> (c*sigma, a0/c^2);
fit either one, not both. The default masks therefore free only the
stochastic-volatility parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .errors import ConstraintViolation, NonpositiveVolatility, NumericalFailure, ZeroVariance
from .timeseries import PriceSeries
from .volatility import (
    DEFAULT_INIT,
    ConstantVol,
    DisplacedVol,
    Ewma,
    Garch,
    InitRule,
    LocalVolSpec,
    NoStochVol,
    ProportionalVol,
    StochVolSpec,
    _recurse_variance,
    local_volatility,
    local_volatility_grad,
    variance_path,
)

_BIG = 1e30

_LV_PARAMS = {"constant": ("sigma",), "proportional": ("sigma",), "displaced": ("alpha", "beta", "sigma")}
_SV_PARAMS = {"none": (), "ewma": ("lam",), "garch": ("a0", "a1", "b1")}


@dataclass(frozen=True)
class OptimOptions:
    """Knobs for fit_qmle; defaults follow the documented contract."""

    max_iter: int = 500
    param_tol: float = 1e-8
    n_starts: int = 5
    seed: int = 0
    min_length: int = 100
    drop_first: bool = False


@dataclass(frozen=True)
class QmleFit:
    """Result of a quasi-likelihood fit."""

    local_vol: LocalVolSpec
    stoch_vol: StochVolSpec
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    n_obs: int
    starts: tuple[dict, ...]

    @property
    def params(self) -> dict[str, float]:
        return _natural_params(self.local_vol, self.stoch_vol)


def _coerce_sv(sv) -> StochVolSpec:
    """Accept a (a0, a1, b1) triple anywhere a StochVolSpec is expected."""
    if isinstance(sv, (tuple, list)) and len(sv) == 3:
        return Garch(*map(float, sv))
    if isinstance(sv, (NoStochVol, Ewma, Garch)):
        return sv
    raise ConstraintViolation(f"expected a stochastic-vol spec or (a0, a1, b1), got {sv!r}")


def _natural_params(lv: LocalVolSpec, sv: StochVolSpec) -> dict[str, float]:
    out = {name: float(getattr(lv, name)) for name in _LV_PARAMS[lv.kind]}
    out.update({name: float(getattr(sv, name)) for name in _SV_PARAMS[sv.kind]})
    return out


# ---------------------------------------------------------------------------
# Objective and analytic gradient
# ---------------------------------------------------------------------------


def qmle_objective(
    series: PriceSeries,
    lv: LocalVolSpec,
    sv,
    init: InitRule = DEFAULT_INIT,
    drop_first: bool = False,
) -> float:
    """Exact conditional quasi-log-likelihood at the given parameters.

    ``sv`` may be a StochVolSpec or a plain (a0, a1, b1) triple. The k = 1
    term uses the init rule's v_0 by default; ``drop_first`` conditions on
    the first observation instead.
    """
    value, _ = _loglik(series, lv, _coerce_sv(sv), init, drop_first, grad_params=())
    return value


def qmle_gradient(
    series: PriceSeries,
    lv: LocalVolSpec,
    sv,
    params: tuple[str, ...] | None = None,
    init: InitRule = DEFAULT_INIT,
    drop_first: bool = False,
) -> tuple[float, dict[str, float]]:
    """Objective value plus its analytic gradient w.r.t. natural parameters.

    ``params`` defaults to every parameter of the given specs.
    """
    sv = _coerce_sv(sv)
    if params is None:
        params = _LV_PARAMS[lv.kind] + _SV_PARAMS[sv.kind]
    return _loglik(series, lv, sv, init, drop_first, grad_params=tuple(params))


def _loglik(series, lv, sv, init, drop_first, grad_params):
    s = series.values
    s_prev = s[:-1]
    ds = np.diff(s)
    n = len(ds)
    g = local_volatility(lv, s_prev)
    r = ds / g
    r2 = np.square(r)
    w = variance_path(sv, r, init)
    wl = w[:n]  # v_{k-1}^2 entering term k
    j0 = 1 if drop_first else 0
    if j0 >= n:
        raise ConstraintViolation("drop_first leaves no likelihood terms")
    terms = np.log(wl[j0:]) + 2.0 * np.log(g[j0:]) + r2[j0:] / wl[j0:]
    value = -0.5 * float(np.sum(terms))
    if not grad_params:
        return value, {}

    # dll/dw_j, zero outside the summed range
    A = np.zeros(n)
    A[j0:] = -0.5 * (1.0 / wl[j0:] - r2[j0:] / np.square(wl[j0:]))

    lv_grads = local_volatility_grad(lv, s_prev)
    sample_init = init.kind == "sample" or (init.kind == "default" and isinstance(sv, Ewma))
    m = min(int(init.sample_window), n)

    grads: dict[str, float] = {}
    for name in grad_params:
        if name in lv_grads:
            h = lv_grads[name]
            q = -2.0 * r2 * h / g  # d r_j^2 / d theta
            direct = float(np.sum((h[j0:] / g[j0:]) * (r2[j0:] / wl[j0:] - 1.0)))
            if isinstance(sv, NoStochVol):
                grads[name] = direct
                continue
            dw0 = float(np.mean(q[:m])) if sample_init else 0.0
            if isinstance(sv, Ewma):
                dw = _recurse_variance((1.0 - sv.lam) * q[: n - 1], sv.lam, dw0)
            else:
                dw = _recurse_variance(sv.a1 * q[: n - 1], sv.b1, dw0)
            grads[name] = direct + float(np.dot(A, dw))
        elif name == "lam":
            dw = _recurse_variance(wl[: n - 1] - r2[: n - 1], sv.lam, 0.0)
            grads[name] = float(np.dot(A, dw))
        elif name in ("a0", "a1", "b1"):
            uncond = init.kind == "unconditional" or (init.kind == "default" and isinstance(sv, Garch))
            u = 1.0 / (1.0 - sv.a1 - sv.b1)
            if name == "a0":
                dw0 = u if uncond else 0.0
                dw = _recurse_variance(np.ones(n - 1), sv.b1, dw0)
            elif name == "a1":
                dw0 = sv.a0 * u * u if uncond else 0.0
                dw = _recurse_variance(r2[: n - 1], sv.b1, dw0)
            else:
                dw0 = sv.a0 * u * u if uncond else 0.0
                dw = _recurse_variance(wl[: n - 1], sv.b1, dw0)
            grads[name] = float(np.dot(A, dw))
        else:
            raise ConstraintViolation(f"unknown parameter {name!r} for this model")
    return value, grads


# ---------------------------------------------------------------------------
# Unconstrained reparametrization
# ---------------------------------------------------------------------------


def _sigmoid(u: float) -> float:
    if u >= 0:
        z = math.exp(-u)
        p = 1.0 / (1.0 + z)
    else:
        z = math.exp(u)
        p = z / (1.0 + z)
    return min(max(p, 1e-12), 1.0 - 1e-12)


def _logit(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ConstraintViolation(f"value {p} outside (0, 1); cannot start optimization there")
    return math.log(p / (1.0 - p))


class _ParamPack:
    """Maps between free natural parameters and an unconstrained vector.

    sigma, a0: log; lam: logit; alpha: atanh; beta: identity. When a1 and b1
    are both free they are parametrized as total persistence s = a1 + b1 in
    (0, 1) and split f = a1 / s in (0, 1); when only one is free it is
    squashed into (0, 1 - other).
    """

    def __init__(self, lv_template: LocalVolSpec, sv_template: StochVolSpec, free: tuple[str, ...]):
        allowed = _LV_PARAMS[lv_template.kind] + _SV_PARAMS[sv_template.kind]
        for name in free:
            if name not in allowed:
                raise ConstraintViolation(
                    f"parameter {name!r} is not part of a {lv_template.kind}/{sv_template.kind} model"
                )
        if len(set(free)) != len(free):
            raise ConstraintViolation(f"duplicate names in free mask {free!r}")
        if not free:
            raise ConstraintViolation("free mask is empty: nothing to fit")
        self.lv_template = lv_template
        self.sv_template = sv_template
        self.free = tuple(free)
        self.both_ab = "a1" in free and "b1" in free

    def vector(self, nat: dict[str, float]) -> np.ndarray:
        u = np.empty(len(self.free))
        for i, name in enumerate(self.free):
            if name in ("sigma", "a0"):
                if nat[name] <= 0:
                    raise ConstraintViolation(f"{name} must be > 0, got {nat[name]}")
                u[i] = math.log(nat[name])
            elif name == "lam":
                u[i] = _logit(nat[name])
            elif name == "alpha":
                u[i] = math.atanh(min(max(nat[name], -1 + 1e-12), 1 - 1e-12))
            elif name == "beta":
                u[i] = nat[name]
            elif name == "a1":
                if self.both_ab:
                    u[i] = _logit(nat["a1"] + nat["b1"])
                else:
                    u[i] = _logit(nat["a1"] / (1.0 - nat["b1"]))
            elif name == "b1":
                if self.both_ab:
                    u[i] = _logit(nat["a1"] / (nat["a1"] + nat["b1"]))
                else:
                    u[i] = _logit(nat["b1"] / (1.0 - nat["a1"]))
        return u

    def natural(self, u: np.ndarray) -> tuple[dict[str, float], dict[str, dict[str, float]]]:
        """Natural values and the jacobian d(natural)/d(u component)."""
        nat = _natural_params(self.lv_template, self.sv_template)
        jac: dict[str, dict[str, float]] = {name: {} for name in self.free}
        for i, name in enumerate(self.free):
            ui = float(u[i])
            if name in ("sigma", "a0"):
                v = math.exp(min(ui, 700.0))
                nat[name] = v
                jac[name][name] = v
            elif name == "lam":
                p = _sigmoid(ui)
                nat[name] = p
                jac[name][name] = p * (1.0 - p)
            elif name == "alpha":
                a = math.tanh(ui)
                nat[name] = a
                jac[name][name] = 1.0 - a * a
            elif name == "beta":
                nat[name] = ui
                jac[name][name] = 1.0
        if self.both_ab:
            i_s = self.free.index("a1")
            i_f = self.free.index("b1")
            s = _sigmoid(float(u[i_s]))
            f = _sigmoid(float(u[i_f]))
            nat["a1"] = s * f
            nat["b1"] = s * (1.0 - f)
            ds = s * (1.0 - s)
            df = f * (1.0 - f)
            jac["a1"] = {"a1": ds * f, "b1": ds * (1.0 - f)}
            jac["b1"] = {"a1": s * df, "b1": -s * df}
        elif "a1" in self.free:
            i = self.free.index("a1")
            cap = 1.0 - nat["b1"]
            p = _sigmoid(float(u[i]))
            nat["a1"] = cap * p
            jac["a1"] = {"a1": cap * p * (1.0 - p)}
        elif "b1" in self.free:
            i = self.free.index("b1")
            cap = 1.0 - nat["a1"]
            p = _sigmoid(float(u[i]))
            nat["b1"] = cap * p
            jac["b1"] = {"b1": cap * p * (1.0 - p)}
        return nat, jac

    def specs(self, nat: dict[str, float]) -> tuple[LocalVolSpec, StochVolSpec]:
        lv_kw = {name: nat[name] for name in _LV_PARAMS[self.lv_template.kind]}
        lv = replace(self.lv_template, **lv_kw)
        sv_kw = {name: nat[name] for name in _SV_PARAMS[self.sv_template.kind]}
        sv = replace(self.sv_template, **sv_kw) if sv_kw else self.sv_template
        return lv, sv


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def default_free_mask(sv: StochVolSpec) -> tuple[str, ...]:
    """Fit the filter parameters when a filter is present, else the scale."""
    sv = _coerce_sv(sv)
    if isinstance(sv, Garch):
        return ("a0", "a1", "b1")
    if isinstance(sv, Ewma):
        return ("lam",)
    return ("sigma",)


def fit_qmle(
    series: PriceSeries,
    lv_template: LocalVolSpec,
    sv_template=NoStochVol(),
    free: tuple[str, ...] | None = None,
    init: InitRule = DEFAULT_INIT,
    opts: OptimOptions = OptimOptions(),
) -> QmleFit:
    """Maximize the quasi-log-likelihood over the free parameters.

    Multi-start constrained local search: the documented default start plus
    jittered replicas, each run through L-BFGS-B in the unconstrained space
    with analytic gradients. Returns the best local maximizer found;
    ``converged`` is False when the iteration/tolerance budget ran out.
    """
    sv_template = _coerce_sv(sv_template)
    if len(series) < opts.min_length:
        raise ConstraintViolation(
            f"series has {len(series)} observations; fitting needs at least {opts.min_length}"
        )
    ds = np.diff(series.values)
    if not ds.any():
        raise NumericalFailure("flat series: every increment is zero, likelihood is degenerate")
    if free is None:
        free = default_free_mask(sv_template)
    pack = _ParamPack(lv_template, sv_template, tuple(free))

    start_nat = _start_params(series, lv_template, sv_template, pack.free)
    try:
        u0 = pack.vector(start_nat)
    except ConstraintViolation as exc:
        raise ConstraintViolation(f"infeasible start: {exc}") from None

    def objective(u):
        nat, jac = pack.natural(u)
        try:
            lv, sv = pack.specs(nat)
            value, grads = _loglik(
                series, lv, sv, init, opts.drop_first, grad_params=tuple(jac)
            )
        except (NonpositiveVolatility, ZeroVariance, ConstraintViolation):
            return _BIG, np.zeros(len(u))
        if not math.isfinite(value):
            return _BIG, np.zeros(len(u))
        gu = np.array(
            [sum(dnat * grads[p] for p, dnat in jac[name].items()) for name in pack.free]
        )
        return -value, -gu

    f0, _ = objective(u0)
    if f0 >= _BIG:
        raise ConstraintViolation(
            f"infeasible start: objective undefined at {start_nat}"
        )

    rng = np.random.default_rng(opts.seed)
    start_vectors = [u0]
    for _ in range(max(opts.n_starts, 1) - 1):
        start_vectors.append(u0 + rng.normal(scale=0.5, size=len(u0)))

    best = None
    best_u = None
    starts_used = []
    for u_start in start_vectors:
        nat_start, _ = pack.natural(u_start)
        starts_used.append({name: nat_start[name] for name in pack.free})
        res = minimize(
            objective,
            u_start,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": opts.max_iter, "ftol": 1e-14, "gtol": opts.param_tol},
        )
        if not math.isfinite(res.fun) or res.fun >= _BIG:
            continue
        if best is None or res.fun < best.fun:
            best = res
            best_u = res.x
    if best is None:
        raise NumericalFailure(
            "every optimization start produced a non-finite objective", params=start_nat
        )

    nat, _ = pack.natural(best_u)
    lv_fit, sv_fit = pack.specs(nat)
    _, grad_u = objective(best_u)
    loglik = qmle_objective(series, lv_fit, sv_fit, init=init, drop_first=opts.drop_first)
    return QmleFit(
        local_vol=lv_fit,
        stoch_vol=sv_fit,
        loglik=loglik,
        converged=bool(best.success),
        iterations=int(best.nit),
        gradient_norm=float(np.max(np.abs(grad_u))) if len(grad_u) else 0.0,
        n_obs=len(series),
        starts=tuple(starts_used),
    )


def _start_params(series, lv_template, sv_template, free) -> dict[str, float]:
    """Documented default start: template values, GARCH at
    (a0, a1, b1) = (0.1 * var(r), 0.05, 0.90), EWMA at lambda = 0.94."""
    nat = _natural_params(lv_template, sv_template)
    if isinstance(sv_template, Garch):
        g = local_volatility(lv_template, series.values[:-1])
        r = np.diff(series.values) / g
        var_r = float(np.var(r))
        if "a0" in free:
            nat["a0"] = 0.1 * var_r if var_r > 0 else 0.1
        if "a1" in free:
            nat["a1"] = 0.05
        if "b1" in free:
            nat["b1"] = 0.90
    elif isinstance(sv_template, Ewma) and "lam" in free:
        nat["lam"] = 0.94
    return nat
