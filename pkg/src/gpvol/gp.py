"""Covariance kernels and a GP whose Cholesky factor is maintained incrementally.

Hyperparameters live in log-space.  The parameter vector is
``[log output_scale, log length_scale, log noise_std]`` for SE and Matern32,
with ``[log period, log roughness]`` appended for QuasiPeriodic.

The observation covariance over a window is ``V = K + noise_std**2 * I``.  For
the quasi-periodic kernel the noise term is part of the kernel itself, so
``kernel_eval`` reports it on the diagonal; it is still only added once to V.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular

log = logging.getLogger(__name__)

FAMILIES = ("SE", "Matern32", "QuasiPeriodic")
N_PARAMS = {"SE": 3, "Matern32": 3, "QuasiPeriodic": 5}
PARAM_NAMES = ("output_scale", "length_scale", "noise_std", "period", "roughness")

JITTER_START = 1e-10
JITTER_STOP = 1e-4

_SQRT3 = np.sqrt(3.0)
_LOG_2PI = np.log(2 * np.pi)
_FLUSH = 1e-150


class NumericalError(ArithmeticError):
    """A covariance matrix could not be factorized even after adding jitter."""


@dataclass(frozen=True)
class KernelSpec:
    family: str
    log_params: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        theta = tuple(float(v) for v in np.ravel(self.log_params))
        if len(theta) != N_PARAMS[self.family]:
            raise ValueError(f"{self.family} takes {N_PARAMS[self.family]} log-parameters, got {len(theta)}")
        if not all(np.isfinite(theta)):
            raise ValueError(f"non-finite log-parameters {theta}")
        object.__setattr__(self, "log_params", theta)

    @classmethod
    def from_natural(cls, family, output_scale, length_scale, noise_std, period=None, roughness=None):
        vals = [output_scale, length_scale, noise_std]
        if family == "QuasiPeriodic":
            if period is None or roughness is None:
                raise ValueError("QuasiPeriodic needs period and roughness")
            vals += [period, roughness]
        if any(v <= 0 for v in vals):
            raise ValueError(f"hyperparameters must be positive, got {vals}")
        return cls(family, tuple(np.log(vals)))

    def with_log_params(self, theta) -> "KernelSpec":
        return replace(self, log_params=tuple(theta))

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.log_params)

    @property
    def natural(self) -> dict:
        return {k: float(np.exp(v)) for k, v in zip(PARAM_NAMES, self.log_params)}

    @property
    def output_scale(self):
        return np.exp(self.log_params[0])

    @property
    def length_scale(self):
        return np.exp(self.log_params[1])

    @property
    def noise_std(self):
        return np.exp(self.log_params[2])

    @property
    def noise_var(self):
        return np.exp(2 * self.log_params[2])

    @property
    def prior_var(self):
        """Latent variance k(x, x) without the noise term."""
        return np.exp(2 * self.log_params[0])


def latent_cov_theta(family: str, theta, d) -> np.ndarray:
    """Noise-free covariance at distances ``d >= 0`` for raw log-parameters ``theta``."""
    s2 = np.exp(2 * theta[0])
    ell = np.exp(theta[1])
    if family == "SE":
        k = s2 * np.exp(-((d / (np.sqrt(2.0) * ell)) ** 2))
    elif family == "Matern32":
        a = (_SQRT3 / ell) * d
        k = s2 * (1.0 + a) * np.exp(-a)
    else:
        period = np.exp(theta[3])
        w = np.exp(theta[4])
        k = s2 * np.exp(-np.sin((np.pi / period) * d) ** 2 / (2 * w * w) - (d / ell) ** 2)
    # far-apart entries underflow to subnormals, which make LAPACK several times slower
    if np.ndim(k):
        k[k < _FLUSH * s2] = 0.0
    return k


def latent_cov(spec: KernelSpec, d) -> np.ndarray:
    """Noise-free covariance as a function of distance ``d = |xi - xj|``."""
    return latent_cov_theta(spec.family, spec.log_params, np.abs(np.asarray(d, dtype=float)))


def kernel_eval(spec: KernelSpec, xi, xj) -> float:
    k = float(latent_cov(spec, xi - xj))
    if spec.family == "QuasiPeriodic" and xi == xj:
        k += spec.noise_var
    return k


def cross_cov(spec: KernelSpec, xa, xb) -> np.ndarray:
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    return latent_cov(spec, xa[:, None] - xb[None, :])


def noisy_cov(spec: KernelSpec, times, jitter: float = 0.0) -> np.ndarray:
    V = cross_cov(spec, times, times)
    V[np.diag_indices_from(V)] += spec.noise_var + jitter
    return V


def factorize(V: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of V with the escalating jitter ladder.

    Returns ``(L, jitter)`` where jitter is the absolute amount added to the
    diagonal (0 when the plain factorization succeeded).
    """
    try:
        return np.linalg.cholesky(V), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(V))) if V.size else 1.0
    rel = JITTER_START
    while rel <= JITTER_STOP * (1 + 1e-9):
        jitter = rel * scale
        try:
            L = np.linalg.cholesky(V + jitter * np.eye(V.shape[0]))
            log.debug("cholesky needed jitter %.3g", jitter)
            return L, jitter
        except np.linalg.LinAlgError:
            rel *= 10
    eig = np.linalg.eigvalsh(V)
    raise NumericalError(
        f"covariance not positive definite after jitter {JITTER_STOP:g}*mean(diag); "
        f"n={V.shape[0]}, min eig={eig[0]:.3g}, max eig={eig[-1]:.3g}"
    )


@dataclass(frozen=True)
class CholeskyState:
    """A time-ordered window of observations and the lower factor of its covariance."""

    spec: KernelSpec
    times: np.ndarray
    y: np.ndarray
    L: np.ndarray
    jitter: float = 0.0

    def __len__(self):
        return self.times.size

    @property
    def mean(self) -> float:
        """Constant prior mean: the window's sample mean of y."""
        return float(np.mean(self.y)) if self.y.size else 0.0

    def covariance(self) -> np.ndarray:
        return noisy_cov(self.spec, self.times, self.jitter)


def empty_state(spec: KernelSpec) -> CholeskyState:
    return CholeskyState(spec, np.empty(0), np.empty(0), np.empty((0, 0)))


def build_covariance(spec: KernelSpec, times, y=None) -> CholeskyState:
    times = np.asarray(times, dtype=float)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    y = np.zeros(times.size) if y is None else np.asarray(y, dtype=float)
    if y.shape != times.shape:
        raise ValueError("y and times must have the same length")
    L, jitter = factorize(noisy_cov(spec, times))
    return CholeskyState(spec, times.copy(), y.copy(), L, jitter)


def chol_append(state: CholeskyState, t_new, y_new) -> CholeskyState:
    """Extend the factor by one row with a single triangular solve."""
    n = len(state)
    if n and t_new <= state.times[-1]:
        raise ValueError(f"t_new={t_new} must exceed the newest window time {state.times[-1]}")
    spec = state.spec
    k = latent_cov(spec, state.times - t_new)
    row = solve_triangular(state.L, k, lower=True, check_finite=False) if n else k
    pivot = spec.prior_var + spec.noise_var + state.jitter - row @ row
    times = np.append(state.times, float(t_new))
    y = np.append(state.y, float(y_new))
    if not pivot > 0:
        log.info("append pivot %.3g not positive; refactorizing with jitter", pivot)
        return build_covariance(spec, times, y)
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = state.L
    L[n, :n] = row
    L[n, n] = np.sqrt(pivot)
    return CholeskyState(spec, times, y, L, state.jitter)


def _rank_one_update(L: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return the lower factor of ``L @ L.T + x x^T`` via Givens rotations."""
    L = L.copy()
    x = x.copy()
    n = x.size
    for k in range(n):
        lkk = L[k, k]
        r = np.hypot(lkk, x[k])
        c = r / lkk
        s = x[k] / lkk
        L[k, k] = r
        if k + 1 < n:
            col = (L[k + 1 :, k] + s * x[k + 1 :]) / c
            x[k + 1 :] = c * x[k + 1 :] - s * col
            L[k + 1 :, k] = col
    return L


def chol_drop_oldest(state: CholeskyState) -> CholeskyState:
    """Remove the first observation.

    With ``L = [[l11, 0], [l21, L22]]`` the trailing block of V equals
    ``L22 L22^T + l21 l21^T``, so dropping the oldest point is a rank-one
    update of ``L22``, which rotations handle without loss of positivity.
    """
    if len(state) < 2:
        raise ValueError("window must hold at least 2 points to drop one")
    L = _rank_one_update(state.L[1:, 1:], state.L[1:, 0])
    times, y = state.times[1:].copy(), state.y[1:].copy()
    diag = np.diag(L)
    if not np.all(np.isfinite(L)) or np.any(diag <= 0):
        log.warning("downdate produced an invalid factor; refactorizing")
        return build_covariance(state.spec, times, y)
    return CholeskyState(state.spec, times, y, L, state.jitter)


def chol_drop_newest(state: CholeskyState) -> CholeskyState:
    """Remove the last observation; the leading block of L is already its factor."""
    if len(state) < 1:
        raise ValueError("window is empty")
    n = len(state) - 1
    return CholeskyState(state.spec, state.times[:n].copy(), state.y[:n].copy(), state.L[:n, :n].copy(), state.jitter)


def with_spec(state: CholeskyState, spec: KernelSpec) -> CholeskyState:
    """Refactorize the same window under new hyperparameters."""
    if spec == state.spec:
        return state
    return build_covariance(spec, state.times, state.y)


@dataclass(frozen=True)
class Posterior:
    mean: float
    var: float
    interpolating: bool = False
    flags: tuple = ()

    @property
    def std(self) -> float:
        return float(np.sqrt(self.var))


def posterior_at(state: CholeskyState, x_star, y=None, mean=None, noisy: bool = False) -> Posterior:
    """Predictive mean and variance at ``x_star``.

    ``noisy=True`` returns the variance of a new noisy observation rather than
    of the latent function.  ``mean`` defaults to the window sample mean.
    """
    spec = state.spec
    y = state.y if y is None else np.asarray(y, dtype=float)
    mu = (float(np.mean(y)) if y.size else 0.0) if mean is None else float(mean)
    prior = spec.prior_var + (spec.noise_var if noisy else 0.0)
    if len(state) == 0:
        return Posterior(mu, prior, flags=("empty-window",))
    k = latent_cov(spec, state.times - x_star)
    v = solve_triangular(state.L, k, lower=True, check_finite=False)
    alpha = solve_triangular(state.L, y - mu, lower=True, check_finite=False)
    m = mu + v @ alpha
    var = max(prior - v @ v, 0.0)
    interp = bool(x_star <= state.times[-1])
    return Posterior(float(m), float(var), interp, ("interpolation",) if interp else ())


def neg_log_marginal(state: CholeskyState, y=None, mean=None) -> float:
    y = state.y if y is None else np.asarray(y, dtype=float)
    mu = (float(np.mean(y)) if y.size else 0.0) if mean is None else float(mean)
    alpha = solve_triangular(state.L, y - mu, lower=True, check_finite=False)
    n = y.size
    return float(0.5 * alpha @ alpha + np.sum(np.log(np.diag(state.L))) + 0.5 * n * _LOG_2PI)


def posterior_path(state: CholeskyState, x_star, mean=None, noisy=False) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised posterior over many query points (means, variances)."""
    spec = state.spec
    x_star = np.asarray(x_star, dtype=float)
    mu = state.mean if mean is None else float(mean)
    Ks = cross_cov(spec, state.times, x_star)
    v = solve_triangular(state.L, Ks, lower=True, check_finite=False)
    alpha = solve_triangular(state.L, state.y - mu, lower=True, check_finite=False)
    means = mu + v.T @ alpha
    prior = spec.prior_var + (spec.noise_var if noisy else 0.0)
    var = np.maximum(prior - np.einsum("ij,ij->j", v, v), 0.0)
    return means, var
