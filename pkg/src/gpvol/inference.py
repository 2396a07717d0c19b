"""MAP estimation of GP hyperparameters with a Gaussian prior on log-hyperparameters."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .gp import _LOG_2PI, N_PARAMS, KernelSpec, latent_cov_theta
from .optim import SimplexConfig, nelder_mead

log = logging.getLogger(__name__)

MIN_WINDOW = 8
PRIOR_STD = 1.5


class EstimationFailed(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class HyperPrior:
    mean: tuple
    std: tuple

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        std = tuple(float(v) for v in self.std)
        if len(mean) != len(std):
            raise ValueError("prior mean and std must have the same length")
        if any(not s > 0 for s in std):
            raise ValueError("prior standard deviations must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self):
        return len(self.mean)

    def penalty(self, theta) -> float:
        z = (np.asarray(theta) - self._mean) / self._std
        return float(0.5 * z @ z)

    @property
    def _mean(self):
        return np.array(self.mean)

    @property
    def _std(self):
        return np.array(self.std)

    @classmethod
    def from_window(cls, family: str, times, y, std: float = PRIOR_STD) -> "HyperPrior":
        """Data-scaled default prior for a window of log-proxy observations."""
        times = np.asarray(times, dtype=float)
        sd = float(np.std(y))
        if not sd > 0:
            sd = 1.0
        span = float(times[-1] - times[0]) if times.size > 1 else 1.0
        span = max(span, 1.0)
        mean = [np.log(sd), np.log(span / 10), np.log(0.1 * sd)]
        if family == "QuasiPeriodic":
            mean += [np.log(span / 4), 0.0]
        return cls(tuple(mean), (std,) * len(mean))


@dataclass(frozen=True)
class MapResult:
    spec: KernelSpec
    nlp: float
    iterations: int = 0
    restart: int = 0
    n_rejected: int = 0
    warnings: tuple = ()


class _Objective:
    """Negative log posterior over log-parameters for one fixed window.

    Returns +inf where V is not positive definite so the simplex rejects the point.
    """

    def __init__(self, family, times, y, prior: HyperPrior):
        times = np.asarray(times, dtype=float)
        self.family = family
        d = np.abs(times[:, None] - times[None, :])
        # on integer time grids the kernel is evaluated once per distinct lag
        span = d.max() if d.size else 0.0
        if span < 1e6 and np.array_equal(times, np.round(times)):
            self.lags = np.arange(int(span) + 1, dtype=float)
            self.d = d.astype(np.intp)
        else:
            self.lags = None
            self.d = d
        self.diag = np.diag_indices(times.size)
        self.r = np.asarray(y, dtype=float) - np.mean(y)
        self.const = 0.5 * times.size * _LOG_2PI
        self.prior = prior

    def __call__(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > 50:
            return np.inf
        if self.lags is None:
            V = latent_cov_theta(self.family, theta, self.d)
        else:
            V = latent_cov_theta(self.family, theta, self.lags)[self.d]
        V[self.diag] += np.exp(2 * theta[2])
        L, info = dpotrf(V, lower=1, clean=0, overwrite_a=1)
        if info != 0:
            return np.inf
        a = solve_triangular(L, self.r, lower=True, check_finite=False)
        val = 0.5 * a @ a + np.sum(np.log(np.diag(L))) + self.const
        return float(val) + self.prior.penalty(theta)


def neg_log_posterior(spec: KernelSpec, times, y, prior: HyperPrior) -> float:
    """Marginal NLL (constant mean = sample mean of y) plus the Gaussian log-prior penalty.

    The prior's normalising constant is omitted.
    """
    if prior.dim != N_PARAMS[spec.family]:
        raise ValueError(f"prior has {prior.dim} dims, {spec.family} needs {N_PARAMS[spec.family]}")
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    return _Objective(spec.family, times, y, prior)(spec.theta)


def _degenerate(y) -> bool:
    return np.ptp(y) < 1e-12


def map_estimate(
    times,
    y,
    family: str = "Matern32",
    prior: HyperPrior | None = None,
    cfg: SimplexConfig = SimplexConfig(),
    starts=None,
) -> MapResult:
    """Multi-start Nelder-Mead on the negative log posterior.

    Starts are drawn uniformly from the prior's +/-2 sd box unless ``starts``
    gives them explicitly.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < MIN_WINDOW:
        raise ValueError(f"MAP estimation needs at least {MIN_WINDOW} points, got {y.size}")
    prior = prior or HyperPrior.from_window(family, times, y)
    if prior.dim != N_PARAMS[family]:
        raise ValueError("prior dimension does not match kernel family")
    if _degenerate(y):
        log.warning("constant window; returning prior mean hyperparameters")
        spec = KernelSpec(family, prior.mean)
        return MapResult(spec, np.inf, warnings=("degenerate-window",))

    if starts is None:
        rng = np.random.default_rng(cfg.seed)
        u = rng.uniform(-2.0, 2.0, size=(cfg.restarts, prior.dim))
        starts = np.asarray(prior.mean) + u * np.asarray(prior.std)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))

    f = _Objective(family, times, y, prior)

    best, best_i, rejected = None, -1, 0
    for i, x0 in enumerate(starts):
        res = nelder_mead(f, x0, cfg)
        if not np.isfinite(res.fun):
            rejected += 1
            continue
        if best is None or res.fun < best.fun:
            best, best_i = res, i
    if best is None:
        raise EstimationFailed(
            "every restart was rejected", {"restarts": len(starts), "n": y.size, "family": family}
        )
    return MapResult(KernelSpec(family, best.x), best.fun, best.nit, best_i, rejected)


def warm_update(prev: MapResult, times, y, prior: HyperPrior | None = None, cfg: SimplexConfig = SimplexConfig()) -> MapResult:
    """One descent from the previous optimum; never worse than ``prev`` on the new data."""
    family = prev.spec.family
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    prior = prior or HyperPrior.from_window(family, times, y)
    if _degenerate(y):
        return MapResult(prev.spec, np.inf, warnings=("degenerate-window",))

    f = _Objective(family, times, y, prior)

    start = prev.spec.theta
    f0 = f(start)
    res = nelder_mead(f, start, cfg, step=cfg.warm_step)
    if not np.isfinite(res.fun) and not np.isfinite(f0):
        raise EstimationFailed("warm update rejected at and around the previous optimum", {"n": y.size})
    if res.fun < f0:
        return MapResult(KernelSpec(family, res.x), res.fun, res.nit, 0)
    return MapResult(prev.spec, f0, res.nit, 0)
