"""Synthetic data: GP draws, GARCH paths, sinusoidal-volatility returns, and the
hyperparameter-recovery experiment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import garch as G
from .gp import KernelSpec, build_covariance, cross_cov, factorize, posterior_path
from .inference import EstimationFailed, HyperPrior, map_estimate, warm_update
from .optim import SimplexConfig
from .returns import PriceSeries, ReturnSeries

log = logging.getLogger(__name__)

GARCH_BURN_IN = 500


@dataclass(frozen=True)
class GpDraw:
    spec: KernelSpec
    noisy: bool = True
    mean: float = 0.0


@dataclass(frozen=True)
class GarchSim:
    params: G.GarchParams
    spec: G.GarchSpec = G.GarchSpec()


@dataclass(frozen=True)
class SinVol:
    amplitude: float
    period: float
    base: float

    def __post_init__(self):
        if not self.base > abs(self.amplitude):
            raise ValueError("SinVol needs base > |amplitude| so volatility stays positive")
        if not self.period > 0:
            raise ValueError("period must be positive")

    def volatility(self, t):
        return self.base + self.amplitude * np.sin(2 * np.pi * np.asarray(t, dtype=float) / self.period)


@dataclass(frozen=True)
class SynthSpec:
    generator: object
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")


def sample_gp(spec: KernelSpec, times, seed=None, noisy: bool = True, mean: float = 0.0) -> np.ndarray:
    """One draw of f(times) from the GP prior, plus i.i.d. N(0, noise_std^2) noise if ``noisy``."""
    rng = np.random.default_rng(seed)
    times = np.asarray(times, dtype=float)
    K = cross_cov(spec, times, times)
    L, _ = factorize(K)
    f = mean + L @ rng.standard_normal(times.size)
    if noisy:
        f = f + spec.noise_std * rng.standard_normal(times.size)
    return f


def simulate_garch(params: G.GarchParams, n: int, seed=None, spec: G.GarchSpec = G.GarchSpec(), return_variance=False):
    """Generate ``n`` returns after a 500-step burn-in."""
    params.check(spec)
    rng = np.random.default_rng(seed)
    total = n + GARCH_BURN_IN
    z = rng.standard_normal(total)
    if spec.variant == "EGarch":
        v0 = float(np.exp(params.alpha0 / (1 - sum(params.beta))))
    else:
        v0 = params.unconditional_variance()
    k = spec.n_lags
    rets = [np.sqrt(v0)] * k
    var = [v0] * k
    out = np.empty(total)
    s2 = np.empty(total)
    state = G.GarchState(tuple(rets), tuple(var))
    for t in range(total):
        v = G.forecast_one_step(spec, params, state)
        x = np.sqrt(v) * z[t]
        out[t], s2[t] = x, v
        state = G.GarchState((state.returns + (x,))[-k:], (state.variances + (v,))[-k:])
    r = ReturnSeries(out[GARCH_BURN_IN:])
    if return_variance:
        return r, s2[GARCH_BURN_IN:]
    return r


def simulate_sinvol(gen: SinVol, n: int, seed=None) -> tuple[ReturnSeries, np.ndarray]:
    """Returns ``r_t ~ N(0, vol_t^2)`` with a sinusoidal volatility, and vol itself."""
    rng = np.random.default_rng(seed)
    vol = gen.volatility(np.arange(n))
    return ReturnSeries(vol * rng.standard_normal(n)), vol


def simulate_gp_log_abs(spec: KernelSpec, n: int, seed=None, mean: float = -6.0) -> tuple[ReturnSeries, np.ndarray]:
    """Returns whose log absolute values are a noisy GP draw (random signs)."""
    rng = np.random.default_rng(seed)
    y = sample_gp(spec, np.arange(n), rng, noisy=True, mean=mean)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return ReturnSeries(sign * np.exp(y)), y


def generate(s: SynthSpec) -> ReturnSeries:
    g = s.generator
    if isinstance(g, GpDraw):
        return ReturnSeries(sample_gp(g.spec, np.arange(s.n), s.seed, g.noisy, g.mean))
    if isinstance(g, GarchSim):
        return simulate_garch(g.params, s.n, s.seed, g.spec)
    if isinstance(g, SinVol):
        return simulate_sinvol(g, s.n, s.seed)[0]
    raise TypeError(f"unknown generator {type(g).__name__}")


def prices_from_returns(r: ReturnSeries, p0: float = 100.0) -> PriceSeries:
    """Price path whose log returns are ``r``."""
    lp = np.log(p0) + np.concatenate(([0.0], np.cumsum(r.values)))
    return PriceSeries(np.exp(lp))


def random_hyperparameters(family: str = "SE", seed=None) -> KernelSpec:
    """A random, well-identified hyperparameter set for 1000-point recovery studies."""
    rng = np.random.default_rng(seed)
    out = float(np.exp(rng.uniform(np.log(0.5), np.log(2.0))))
    ell = float(np.exp(rng.uniform(np.log(15.0), np.log(40.0))))
    noise = float(np.exp(rng.uniform(np.log(0.05), np.log(0.2)))) * out
    return KernelSpec.from_natural(family, out, ell, noise)


@dataclass
class RecoveryReport:
    truth: KernelSpec
    fractions: tuple
    recovered: dict  # fraction -> (n_sets, d) log-parameters (nan rows for failures)
    rmse: dict  # fraction -> (n_sets,) RMSE
    full_rmse: np.ndarray
    failures: list = field(default_factory=list)

    def median_rmse(self) -> dict:
        return {f: float(np.nanmedian(v)) for f, v in self.rmse.items()}

    def summary(self) -> dict:
        med = self.median_rmse()
        return {
            "truth": self.truth.natural,
            "fractions": list(self.fractions),
            "median_rmse": {str(k): v for k, v in med.items()},
            "median_full_rmse": float(np.nanmedian(self.full_rmse)),
            "median_recovered": {
                str(f): dict(zip(self.truth.natural, np.exp(np.nanmedian(v, axis=0)).tolist()))
                for f, v in self.recovered.items()
            },
            "n_failures": len(self.failures),
        }


def _fit_and_score(times, data, idx, family, prev, cfg):
    t, y = times[idx], data[idx]
    prior = HyperPrior.from_window(family, t, y)
    res = map_estimate(t, y, family, prior, cfg) if prev is None else warm_update(prev, t, y, prior, cfg)
    state = build_covariance(res.spec, t, y)
    m, _ = posterior_path(state, times)
    return res, float(np.sqrt(np.mean((m - data) ** 2)))


def recovery_experiment(
    spec: KernelSpec,
    n_sets: int = 100,
    n_points: int = 1000,
    fractions=(0.05, 0.2, 0.5, 0.95),
    cfg: SimplexConfig = SimplexConfig(restarts=8, ftol=1e-4, xtol=1e-3),
    seed: int = 0,
    chain: bool = True,
) -> RecoveryReport:
    """Subsample GP draws, re-estimate hyperparameters, and score the posterior mean.

    For each of ``n_sets`` draws (with noise) over ``n_points`` unit-spaced
    times, a uniformly random subset of each fraction is observed, MAP
    hyperparameters are estimated from it, and the posterior mean over all
    times is scored by RMSE against the full draw.  Fraction 1.0 is always run
    as the full-data reference.  With ``chain`` the smallest fraction gets the
    multi-start search and each larger fraction a warm-started descent from
    the previous estimate; otherwise every fraction is a full multi-start.
    """
    fractions = tuple(sorted(float(f) for f in fractions))
    if not fractions or fractions[0] <= 0 or fractions[-1] > 1:
        raise ValueError("fractions must be non-empty and lie in (0, 1]")
    ladder = fractions + ((1.0,) if fractions[-1] < 1.0 else ())
    times = np.arange(n_points, dtype=float)
    d = len(spec.log_params)
    recovered = {f: np.full((n_sets, d), np.nan) for f in ladder}
    rmse = {f: np.full(n_sets, np.nan) for f in ladder}
    failures = []
    seeds = np.random.SeedSequence(seed).spawn(n_sets)
    for k in range(n_sets):
        rng = np.random.default_rng(seeds[k])
        data = sample_gp(spec, times, rng, noisy=True)
        prev = None
        for f in ladder:
            m = max(int(round(f * n_points)), 8)
            idx = np.sort(rng.choice(n_points, size=m, replace=False))
            try:
                res, err = _fit_and_score(times, data, idx, spec.family, prev if chain else None, cfg)
            except (EstimationFailed, np.linalg.LinAlgError, ArithmeticError) as exc:
                failures.append({"set": k, "fraction": f, "error": str(exc)})
                continue
            recovered[f][k] = res.spec.theta
            rmse[f][k] = err
            prev = res
    full = rmse[1.0]
    rep_rmse = {f: rmse[f] for f in fractions}
    rep_rec = {f: recovered[f] for f in fractions}
    if 1.0 in fractions:
        rep_rmse[1.0] = full
    return RecoveryReport(spec, fractions, rep_rec, rep_rmse, full, failures)
