"""GARCH(p, q), EGARCH and GJR-GARCH: recursions, Gaussian MLE, one-step forecasts.

The conditional-variance recursions are linear filters (in the variance for
vanilla/GJR, in the log-variance for EGARCH), so whole paths are computed
with ``scipy.signal.lfilter``; the single-step functions below evaluate the
same recursion term by term for online use.

Online state convention: a ``GarchState`` holds the returns observed so far
and the conditional variances that were forecast for them, aligned in time
(``variances[-1]`` is the variance of ``returns[-1]``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter, lfiltic

from .optim import SimplexConfig, nelder_mead

log = logging.getLogger(__name__)

VARIANTS = ("Vanilla", "EGarch", "Gjr")
MIN_FIT_LENGTH = 50
_LOG_2PI = np.log(2 * np.pi)


class ConstraintViolation(ValueError):
    pass


class FitFailed(RuntimeError):
    def __init__(self, msg, best=None, diagnostics=None):
        super().__init__(msg)
        self.best = best
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class GarchSpec:
    variant: str = "Vanilla"
    p: int = 1
    q: int = 1
    r: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown GARCH variant {self.variant!r}")
        r = self.r if self.r is not None else (1 if self.variant == "Gjr" else 0)
        if self.variant != "Gjr":
            r = 0
        object.__setattr__(self, "r", r)
        if self.p < 0 or self.q < 1 or r > self.q:
            raise ValueError(f"invalid orders p={self.p}, q={self.q}, r={r}")

    @property
    def n_lags(self) -> int:
        return max(self.q, self.r, self.p, 1)


@dataclass(frozen=True)
class GarchParams:
    alpha0: float
    alpha: tuple = ()
    beta: tuple = ()
    gamma: tuple = ()
    theta: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, tuple(float(v) for v in np.ravel(getattr(self, name))))
        for name in ("alpha0", "theta", "lam"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def persistence(self) -> float:
        return sum(self.alpha) + sum(self.beta) + 0.5 * sum(self.gamma)

    def unconditional_variance(self) -> float:
        return self.alpha0 / (1.0 - self.persistence)

    def check(self, spec: GarchSpec):
        if len(self.alpha) != spec.q or len(self.beta) != spec.p or len(self.gamma) != spec.r:
            raise ValueError(f"parameter lengths do not match {spec}")
        if spec.variant == "EGarch":
            if not abs(sum(self.beta)) < 1:
                raise ConstraintViolation(f"EGARCH needs |sum(beta)| < 1, got {sum(self.beta)}")
            return
        if not self.alpha0 > 0:
            raise ConstraintViolation("alpha0 must be positive")
        if min(self.alpha + self.beta + self.gamma, default=0.0) < 0:
            raise ConstraintViolation("ARCH/GARCH/leverage coefficients must be non-negative")
        if not self.persistence < 1:
            raise ConstraintViolation(f"non-stationary: persistence {self.persistence:.4f} >= 1")

    def as_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "gamma": list(self.gamma),
            "theta": self.theta,
            "lambda": self.lam,
        }


@dataclass(frozen=True)
class GarchState:
    returns: tuple = field(default=())
    variances: tuple = field(default=())

    @property
    def current(self) -> float:
        return self.variances[-1]


def egarch_g(params: GarchParams, x):
    return params.theta * np.asarray(x) + params.lam * np.abs(x)


def init_state(spec: GarchSpec, r) -> GarchState:
    """Pre-sample state: variances and squared returns set to the sample variance of ``r``.

    Pre-sample returns are stored as +sqrt(variance).
    """
    v = float(np.var(r))
    if not v > 0:
        v = np.finfo(float).tiny
    k = spec.n_lags
    return GarchState((np.sqrt(v),) * k, (v,) * k)


def variance_step(spec: GarchSpec, params: GarchParams, state: GarchState, r_prev: float) -> float:
    """Next conditional variance given the newest return ``r_prev``.

    ``state.returns`` holds the returns before ``r_prev``; ``state.variances``
    ends with the variance of ``r_prev``.
    """
    rets = tuple(state.returns) + (float(r_prev),)
    lag_r = rets[::-1]
    lag_v = tuple(state.variances)[::-1]
    if spec.variant == "EGarch":
        h = params.alpha0
        h += sum(a * egarch_g(params, lag_r[j]) for j, a in enumerate(params.alpha))
        h += sum(b * np.log(lag_v[i]) for i, b in enumerate(params.beta))
        return float(np.exp(h))
    s2 = params.alpha0
    s2 += sum(a * lag_r[j] ** 2 for j, a in enumerate(params.alpha))
    s2 += sum(b * lag_v[i] for i, b in enumerate(params.beta))
    s2 += sum(g * lag_r[k] ** 2 * (lag_r[k] < 0) for k, g in enumerate(params.gamma))
    if not s2 > 0:
        raise ConstraintViolation(f"non-positive conditional variance {s2}")
    return float(s2)


def forecast_one_step(spec: GarchSpec, params: GarchParams, state: GarchState) -> float:
    """Variance forecast for the return after ``state.returns[-1]``."""
    prior = GarchState(state.returns[:-1], state.variances)
    return variance_step(spec, params, prior, state.returns[-1])


def observe(spec: GarchSpec, params: GarchParams, state: GarchState, r_new: float) -> GarchState:
    """Forecast the next variance, then record ``r_new`` as its realization."""
    s2 = forecast_one_step(spec, params, state)
    k = spec.n_lags
    return GarchState((tuple(state.returns) + (float(r_new),))[-k:], (tuple(state.variances) + (s2,))[-k:])


def warm_state(spec: GarchSpec, params: GarchParams, r, init: GarchState | None = None) -> GarchState:
    """Run the recursion through ``r``; the result is aligned at ``r[-1]``."""
    r = np.asarray(r, dtype=float)
    init = init or init_state(spec, r)
    s2 = variance_path(spec, params, r, init)
    k = spec.n_lags
    rets = (tuple(init.returns) + tuple(r))[-k:]
    var = (tuple(init.variances) + tuple(s2[:-1]))[-k:]
    return GarchState(rets, var)


def variance_path(spec: GarchSpec, params: GarchParams, r, init: GarchState) -> np.ndarray:
    """Conditional variances of r[0], ..., r[n-1] and the forecast for r[n] (length n+1).

    ``init`` is a pre-sample state aligned just before r[0]: its last variance
    is the variance of its last return, both preceding r[0].
    """
    r = np.asarray(r, dtype=float)
    k = spec.n_lags
    pre_r = np.asarray(init.returns[-k:], dtype=float)
    pre_v = np.asarray(init.variances[-k:], dtype=float)
    ext = np.concatenate([pre_r, r])
    m = pre_r.size
    n = r.size
    # u[t] for t = 0..n, where index t predicts the variance of r[t] (t = n is the forecast)
    u = np.full(n + 1, params.alpha0, dtype=float)
    if spec.variant == "EGarch":
        g = egarch_g(params, ext)
        for j, a in enumerate(params.alpha, start=1):
            u += a * g[m - j : m - j + n + 1]
        pre = np.log(pre_v)
    else:
        x = ext**2
        for j, a in enumerate(params.alpha, start=1):
            u += a * x[m - j : m - j + n + 1]
        lev = x * (ext < 0)
        for j, gm in enumerate(params.gamma, start=1):
            u += gm * lev[m - j : m - j + n + 1]
        pre = pre_v
    a_coef = np.concatenate(([1.0], -np.asarray(params.beta)))
    if params.beta:
        zi = lfiltic([1.0], a_coef, y=pre[::-1][: len(params.beta)])
        h, _ = lfilter([1.0], a_coef, u, zi=zi)
    else:
        h = u
    if spec.variant == "EGarch":
        return np.exp(np.clip(h, -700, 700))
    return h


def log_likelihood(spec: GarchSpec, params: GarchParams, r, init: GarchState | None = None) -> float:
    r = np.asarray(r, dtype=float)
    init = init or init_state(spec, r)
    s2 = variance_path(spec, params, r, init)[:-1]
    if np.any(~(s2 > 0)) or not np.all(np.isfinite(s2)):
        return -np.inf
    return float(-0.5 * np.sum(_LOG_2PI + np.log(s2) + r * r / s2))


# unconstrained <-> constrained maps


def _unpack(spec: GarchSpec, x) -> GarchParams:
    x = np.asarray(x, dtype=float)
    if spec.variant == "EGarch":
        q, p = spec.q, spec.p
        alpha = np.concatenate(([1.0], x[1:q]))
        beta = np.tanh(x[q : q + p]) / max(p, 1)
        theta, lam = x[q + p], x[q + p + 1]
        return GarchParams(x[0], alpha, beta, (), theta, lam)
    k = spec.q + spec.p + spec.r
    e = np.exp(np.clip(x[1 : 1 + k], -700, 700))
    c = e / (1.0 + e.sum())
    alpha = c[: spec.q]
    beta = c[spec.q : spec.q + spec.p]
    gamma = 2.0 * c[spec.q + spec.p :]
    return GarchParams(float(np.exp(x[0])), alpha, beta, gamma)


def _pack(spec: GarchSpec, params: GarchParams) -> np.ndarray:
    if spec.variant == "EGarch":
        p = max(spec.p, 1)
        scale = params.alpha[0] if params.alpha and params.alpha[0] != 0 else 1.0
        beta = np.arctanh(np.clip(np.asarray(params.beta) * p, -0.999999, 0.999999))
        rest = np.asarray(params.alpha[1:]) / scale
        return np.concatenate(([params.alpha0], rest, beta, [params.theta * scale, params.lam * scale]))
    c = np.concatenate([params.alpha, params.beta, 0.5 * np.asarray(params.gamma)])
    c = np.maximum(c, 1e-12)
    slack = max(1.0 - c.sum(), 1e-12)
    return np.concatenate(([np.log(params.alpha0)], np.log(c / slack)))


def _starting_points(spec: GarchSpec, v: float) -> list[GarchParams]:
    starts = []
    for pers, share in ((0.9, 0.1), (0.97, 0.05), (0.5, 0.5)):
        a_tot = pers * share
        b_tot = pers - a_tot
        alpha = [a_tot / spec.q] * spec.q
        beta = [b_tot / spec.p] * spec.p if spec.p else []
        gamma = [0.5 * a_tot / spec.r] * spec.r if spec.r else []
        if spec.variant == "EGarch":
            b = min(pers, 0.95)
            starts.append(GarchParams((1 - b) * np.log(v), [1.0] + [0.0] * (spec.q - 1), [b / max(spec.p, 1)] * spec.p, (), 0.0, share))
        else:
            total = sum(alpha) + sum(beta) + 0.5 * sum(gamma)
            a0 = v * max(1 - total, 0.01)
            starts.append(GarchParams(a0, alpha, beta, gamma))
    return starts


def fit(
    spec: GarchSpec,
    returns,
    optimizer: SimplexConfig = SimplexConfig(max_iter=2000, xtol=1e-6),
    start: GarchParams | None = None,
) -> GarchParams:
    """Gaussian maximum likelihood via Nelder-Mead on unconstrained parameters.

    EGARCH fixes alpha_1 = 1: with ``g(x) = theta x + lambda |x|`` the scale of
    alpha_1 and (theta, lambda) are not separately identified.
    """
    r = np.asarray(getattr(returns, "values", returns), dtype=float)
    if r.size < MIN_FIT_LENGTH:
        raise ValueError(f"GARCH fitting needs at least {MIN_FIT_LENGTH} returns, got {r.size}")
    v = float(np.var(r))
    if not v > 0:
        raise FitFailed("returns have zero variance; GARCH is degenerate", diagnostics={"n": r.size})
    init = init_state(spec, r)

    def nll(x):
        try:
            params = _unpack(spec, x)
        except (ValueError, FloatingPointError):
            return np.inf
        ll = log_likelihood(spec, params, r, init)
        return -ll if np.isfinite(ll) else np.inf

    starts = [start] if start is not None else _starting_points(spec, v)
    best = None
    for s in starts:
        step = optimizer.warm_step if start is not None else optimizer.init_step
        res = nelder_mead(nll, _pack(spec, s), optimizer, step=step)
        if best is None or res.fun < best.fun:
            best = res
    params = _unpack(spec, best.x)
    if not np.isfinite(best.fun):
        raise FitFailed("likelihood was not finite at any visited point", best=params)
    if not best.converged:
        raise FitFailed(
            f"Nelder-Mead did not converge in {optimizer.max_iter} iterations",
            best=params,
            diagnostics={"nll": best.fun, "nit": best.nit},
        )
    return params


def fit_or_best(spec: GarchSpec, returns, optimizer=None, start=None) -> tuple[GarchParams, tuple]:
    """``fit`` that degrades to the best-so-far parameters on non-convergence."""
    kw = {} if optimizer is None else {"optimizer": optimizer}
    try:
        return fit(spec, returns, start=start, **kw), ()
    except FitFailed as err:
        if err.best is None:
            raise
        log.warning("GARCH fit: %s; using best-so-far parameters", err)
        return err.best, ("garch-nonconverged",)
