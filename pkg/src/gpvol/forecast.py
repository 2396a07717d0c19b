"""Rolling one-step-ahead volatility forecasting.

Every strategy works on a return series ``r[0..n-1]``.  The first
``cfg.train`` returns fit the model; afterwards, for each ``i >= train`` the
forecast of the proxy at ``i`` is made from ``r[:i]`` only, then ``r[i]`` is
revealed and absorbed.

GP strategies regress the log of a positive proxy over integer time and
back-transform with ``exp``.  Envelope strategies regress only the envelope
points seen so far; the newest raw point is always a provisional envelope
endpoint and is withdrawn once its right neighbour shows it is not a local
maximum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import garch as G
from .gp import (
    CholeskyState,
    KernelSpec,
    NumericalError,
    Posterior,
    build_covariance,
    chol_append,
    chol_drop_newest,
    chol_drop_oldest,
    posterior_at,
)
from .inference import MIN_WINDOW, EstimationFailed, HyperPrior, MapResult, map_estimate, warm_update
from .metrics import ABS_MEAN_FACTOR, LOG_ABS_FACTOR, MetricSuite, ResidualStats, compute_suite, residual_stats
from .optim import SimplexConfig
from .returns import PriceSeries, ReturnSeries, default_floor, log_returns

log = logging.getLogger(__name__)

GP_TAGS = ("GpAbs", "GpSquared", "GpAbsEnvelope", "GpCombinedEnvelope")
GARCH_TAGS = {"Garch": "Vanilla", "EGarch": "EGarch", "GjrGarch": "Gjr"}
TAGS = GP_TAGS + tuple(GARCH_TAGS)


@dataclass(frozen=True)
class Strategy:
    """What to forecast and how.

    ``proxy`` selects absolute or squared returns for the envelope and GARCH
    strategies; GpAbs and GpSquared fix it themselves.
    """

    tag: str
    kernel: str | None = "Matern32"
    hyper_update: bool = False
    proxy: str = "abs"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown strategy {self.tag!r}; choose from {TAGS}")
        if self.tag in GARCH_TAGS:
            object.__setattr__(self, "kernel", None)
        elif self.kernel is None:
            raise ValueError(f"{self.tag} needs a kernel family")
        if self.tag == "GpAbs":
            object.__setattr__(self, "proxy", "abs")
        elif self.tag == "GpSquared":
            object.__setattr__(self, "proxy", "squared")
        if self.proxy not in ("abs", "squared"):
            raise ValueError(f"proxy must be 'abs' or 'squared', not {self.proxy!r}")

    @property
    def is_gp(self) -> bool:
        return self.tag in GP_TAGS

    @property
    def name(self) -> str:
        parts = [self.tag]
        if self.kernel:
            parts.append(self.kernel)
        if self.tag not in ("GpAbs", "GpSquared"):
            parts.append(self.proxy)
        if self.hyper_update:
            parts.append("update")
        return "/".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Inverse of ``name``: ``Tag[/Kernel][/abs|squared][/update]``."""
        parts = text.split("/")
        tag, rest = parts[0], parts[1:]
        kw = {"hyper_update": "update" in rest}
        rest = [p for p in rest if p != "update"]
        for p in rest:
            if p in ("abs", "squared"):
                kw["proxy"] = p
            else:
                kw["kernel"] = p
        return cls(tag, **kw)


@dataclass(frozen=True)
class RollingConfig:
    train: int = 100
    window: int = 100
    segment: int = 3140
    z: float = 1.96
    floor: float | None = None
    seed: int = 0
    simplex: SimplexConfig = SimplexConfig()
    prior_std: float = 1.5
    prior_mean: tuple | None = None  # log-hyperparameters; None scales the prior to each window
    envelope_tail: str = "always"

    def __post_init__(self):
        if not (0 < self.train <= self.window <= self.segment):
            raise ValueError("need 0 < train <= window <= segment")
        if not self.z > 0:
            raise ValueError("interval multiplier must be positive")
        if self.floor is not None and not self.floor > 0:
            raise ValueError("floor must be positive")
        if self.prior_mean is not None:
            object.__setattr__(self, "prior_mean", tuple(float(x) for x in self.prior_mean))


@dataclass(frozen=True)
class ForecastRecord:
    t: int
    forecast: float
    low: float
    up: float
    realized: float
    ret: float
    log_mean: float
    log_var: float
    flags: tuple = ()


@dataclass
class BacktestReport:
    strategy: Strategy
    records: list
    metrics: MetricSuite
    residuals: ResidualStats
    floor: float
    hyperparameters: list = field(default_factory=list)
    flags: tuple = ()

    @property
    def forecasts(self) -> np.ndarray:
        return np.array([rec.forecast for rec in self.records])

    @property
    def realized(self) -> np.ndarray:
        return np.array([rec.realized for rec in self.records])

    def coverage(self) -> float:
        hit = [rec.low <= rec.realized <= rec.up for rec in self.records]
        return float(np.mean(hit)) if hit else float("nan")

    def summary(self) -> dict:
        res = self.residuals.summary()
        res["std_abs_mean_calibrated"] = ABS_MEAN_FACTOR * self.residuals.std
        return {
            "strategy": self.strategy.name,
            "n_forecasts": len(self.records),
            "floor": self.floor,
            "metrics": self.metrics.as_dict(),
            "residuals": res,
            "coverage": self.coverage(),
            "flags": list(self.flags),
            "hyperparameters": self.hyperparameters,
        }


def back_transform(post: Posterior, z: float = 1.96) -> tuple[float, float, float]:
    """Point forecast and asymmetric interval in natural space."""
    s = post.std
    return float(np.exp(post.mean)), float(np.exp(post.mean - z * s)), float(np.exp(post.mean + z * s))


def combine_envelopes(pos: float | None, neg: float | None) -> tuple[float, bool]:
    """Average the two one-sided forecasts; returns ``(value, fell_back)``."""
    if pos is None and neg is None:
        raise ValueError("both envelope forecasts are missing")
    if pos is None:
        return float(neg), True
    if neg is None:
        return float(pos), True
    if not (pos > 0 and neg > 0):
        raise ValueError("envelope forecasts must be positive")
    return 0.5 * (pos + neg), False


def envelope_forecast_step(state: CholeskyState, x_next, noisy: bool = True) -> Posterior:
    """GP posterior at the next raw time index given an envelope window."""
    if len(state) == 0:
        raise ValueError("empty envelope window")
    if np.ptp(state.y) == 0:
        var = state.spec.prior_var + (state.spec.noise_var if noisy else 0.0)
        return Posterior(float(state.y[0]), float(var), flags=("degenerate-envelope",))
    return posterior_at(state, x_next, noisy=noisy)


class RollingGP:
    """A fixed-length window of log-proxy observations with a maintained factor."""

    def __init__(self, family: str, cfg: RollingConfig, hyper_update: bool = False):
        self.family = family
        self.cfg = cfg
        self.hyper_update = hyper_update
        self.state: CholeskyState | None = None
        self.map: MapResult | None = None
        self.flags: list = []

    def _prior(self, times, y):
        if self.cfg.prior_mean is not None:
            return HyperPrior(np.array(self.cfg.prior_mean), np.full(len(self.cfg.prior_mean), self.cfg.prior_std))
        return HyperPrior.from_window(self.family, times, y, std=self.cfg.prior_std)

    def fit(self, times, y):
        times = np.asarray(times, dtype=float)[-self.cfg.window :]
        y = np.asarray(y, dtype=float)[-self.cfg.window :]
        if y.size >= MIN_WINDOW:
            try:
                self.map = map_estimate(times, y, self.family, self._prior(times, y), self.cfg.simplex)
            except EstimationFailed as err:
                log.warning("initial MAP failed: %s", err)
                self.flags.append("map-failed")
        if self.map is None:
            if y.size < MIN_WINDOW:
                self.flags.append("short-training-window")
            prior = self._prior(times, y) if y.size >= 2 else HyperPrior.from_window(self.family, [0, 1], [0, 1])
            self.map = MapResult(KernelSpec(self.family, prior.mean), np.inf, warnings=("prior-mean",))
        self.state = build_covariance(self.map.spec, times, y)

    @property
    def spec(self) -> KernelSpec:
        return self.map.spec

    def __len__(self):
        return 0 if self.state is None else len(self.state)

    def predict(self, x_next) -> Posterior:
        if len(self) == 0:
            return Posterior(0.0, self.spec.prior_var + self.spec.noise_var, flags=("empty-window",))
        return envelope_forecast_step(self.state, x_next)

    def push(self, t, y):
        try:
            self.state = chol_append(self.state, t, y)
        except NumericalError:
            self.state = build_covariance(self.spec, np.append(self.state.times, t), np.append(self.state.y, y))
        while len(self.state) > self.cfg.window:
            self.state = chol_drop_oldest(self.state)

    def pop_newest(self):
        self.state = chol_drop_newest(self.state)

    def refresh_hyperparameters(self):
        if not self.hyper_update or len(self) < MIN_WINDOW:
            return
        times, y = self.state.times, self.state.y
        try:
            new = warm_update(self.map, times, y, self._prior(times, y), self.cfg.simplex)
        except EstimationFailed as err:
            log.warning("warm update failed, keeping last-good hyperparameters: %s", err)
            self.flags.append("warm-update-failed")
            return
        if new.spec != self.map.spec:
            self.state = build_covariance(new.spec, times, y)
        self.map = new


class _EnvelopeStream:
    """Causal maxima envelope of a stream, mirrored into a RollingGP.

    Interior points are judged once both neighbours are known.  The newest
    point has only a left neighbour: with ``tail="always"`` it is kept as an
    endpoint unconditionally; with ``tail="rising"`` only while it is >= that
    neighbour, i.e. while it can still turn out to be a maximum.
    """

    def __init__(self, gp: RollingGP, tail: str = "always"):
        if tail not in ("always", "rising"):
            raise ValueError(f"tail must be 'always' or 'rising', not {tail!r}")
        self.gp = gp
        self.tail = tail
        self.values: list = []  # full history of the underlying stream
        self.times: list = []
        self.tail_in = False

    def _is_peak(self, k) -> bool:
        v = self.values
        return v[k] >= v[k - 1] and v[k] >= v[k + 1]

    def _keep_tail(self, k) -> bool:
        return self.tail == "always" or k == 0 or self.values[k] >= self.values[k - 1]

    def initial(self, times, values):
        self.times = list(times)
        self.values = list(values)
        n = len(self.values)
        keep = [k for k in range(n - 1) if k == 0 or self._is_peak(k)]
        self.tail_in = self._keep_tail(n - 1)
        if self.tail_in:
            keep.append(n - 1)
        t = np.array([self.times[k] for k in keep], dtype=float)
        y = np.log([self.values[k] for k in keep])
        self.gp.fit(t, y)

    def add(self, t, value):
        self.times.append(t)
        self.values.append(value)
        k = len(self.values) - 2
        changed = False
        if self.tail_in and k >= 1 and not self._is_peak(k):
            self.gp.pop_newest()
            changed = True
        self.tail_in = self._keep_tail(k + 1)
        if self.tail_in:
            self.gp.push(t, np.log(value))
            changed = True
        if changed:
            self.gp.refresh_hyperparameters()

    def __len__(self):
        return len(self.gp)


def _proxy_values(r: np.ndarray, kind: str, floor: float) -> np.ndarray:
    if kind == "abs":
        return np.maximum(np.abs(r), floor)
    return np.maximum(r * r, floor * floor)


def _gp_record(i, post, z, realized, ret, flags=()):
    f, lo, up = back_transform(post, z)
    return ForecastRecord(i, f, lo, up, realized, ret, post.mean, post.var, tuple(flags) + post.flags)


def _run_gp_plain(r, times, strategy, cfg, floor):
    proxy = _proxy_values(r, strategy.proxy, floor)
    y = np.log(proxy)
    T = cfg.train
    gp = RollingGP(strategy.kernel, cfg, strategy.hyper_update)
    gp.fit(times[:T], y[:T])
    records, hypers = [], [gp.spec.natural]
    for i in range(T, r.size):
        post = gp.predict(times[i])
        records.append(_gp_record(int(times[i]), post, cfg.z, proxy[i], r[i]))
        gp.push(times[i], y[i])
        gp.refresh_hyperparameters()
        if strategy.hyper_update:
            hypers.append(gp.spec.natural)
    return records, hypers, gp.flags


def _run_gp_envelope(r, times, strategy, cfg, floor):
    proxy = _proxy_values(r, strategy.proxy, floor)
    T = cfg.train
    stream = _EnvelopeStream(RollingGP(strategy.kernel, cfg, strategy.hyper_update), cfg.envelope_tail)
    stream.initial(times[:T], proxy[:T])
    records, hypers = [], [stream.gp.spec.natural]
    for i in range(T, r.size):
        post = stream.gp.predict(times[i])
        records.append(_gp_record(int(times[i]), post, cfg.z, proxy[i], r[i]))
        stream.add(times[i], proxy[i])
        if strategy.hyper_update:
            hypers.append(stream.gp.spec.natural)
    return records, hypers, stream.gp.flags


def run_side(r, times, side: str, strategy: Strategy, cfg: RollingConfig, floor: float):
    """One-sided envelope forecasts for every step after training.

    Returns a list with, per step, either ``None`` (side has no data yet) or
    ``(forecast, low, up, posterior)``, plus the side's hyperparameter trace
    and flags.
    """
    mask = r >= 0 if side == "positive" else r < 0
    mag = np.where(r >= 0, r, -r)
    vals = np.maximum(mag, floor) if strategy.proxy == "abs" else np.maximum(mag * mag, floor * floor)
    T = cfg.train
    stream = _EnvelopeStream(RollingGP(strategy.kernel, cfg, strategy.hyper_update), cfg.envelope_tail)
    idx0 = np.flatnonzero(mask[:T])
    started = False
    if idx0.size >= 3:
        stream.initial(times[idx0], vals[idx0])
        started = True
    else:
        stream.times = list(times[idx0])
        stream.values = list(vals[idx0])
    out, hypers = [], []
    if started:
        hypers.append(stream.gp.spec.natural)
    for i in range(T, r.size):
        if started:
            post = stream.gp.predict(times[i])
            f, lo, up = back_transform(post, cfg.z)
            out.append((f, lo, up, post))
        else:
            out.append(None)
        if mask[i]:
            if started:
                stream.add(times[i], vals[i])
                if strategy.hyper_update:
                    hypers.append(stream.gp.spec.natural)
            else:
                stream.times.append(times[i])
                stream.values.append(vals[i])
                if len(stream.values) >= 3:
                    stream.initial(np.array(stream.times), np.array(stream.values))
                    started = True
                    hypers.append(stream.gp.spec.natural)
    return out, hypers, stream.gp.flags


def _run_gp_combined(r, times, strategy, cfg, floor):
    realized = _proxy_values(r, strategy.proxy, floor)
    pos, hp, fp = run_side(r, times, "positive", strategy, cfg, floor)
    neg, hn, fn = run_side(r, times, "negative", strategy, cfg, floor)
    records = []
    T = cfg.train
    for k, i in enumerate(range(T, r.size)):
        a, b = pos[k], neg[k]
        if a is None and b is None:
            raise EstimationFailed("neither envelope side has data", {"step": int(times[i])})
        f, fell = combine_envelopes(a[0] if a else None, b[0] if b else None)
        sides = [s for s in (a, b) if s is not None]
        lo = float(np.mean([s[1] for s in sides]))
        up = float(np.mean([s[2] for s in sides]))
        var = float(np.mean([s[3].var for s in sides]))
        flags = ("one-sided",) if fell else ()
        records.append(ForecastRecord(int(times[i]), f, lo, up, realized[i], r[i], float(np.log(f)), var, flags))
    hypers = [{"positive": hp, "negative": hn}]
    return records, hypers, fp + fn


def _garch_interval(s2: float, z: float, proxy: str) -> tuple[float, float]:
    """Central interval of |r| (or r^2) under r ~ N(0, s2) with the coverage of +/-z."""
    cover = 2 * norm.cdf(z) - 1
    # P(|Z| <= q) = 2 Phi(q) - 1
    lo_q = norm.ppf(0.5 + 0.25 * (1 - cover))
    up_q = norm.ppf(0.5 + 0.25 * (1 + cover))
    s = np.sqrt(s2)
    if proxy == "abs":
        return s * lo_q, s * up_q
    return s2 * lo_q**2, s2 * up_q**2


def _run_garch(r, times, strategy, cfg, floor):
    spec = G.GarchSpec(GARCH_TAGS[strategy.tag])
    T = cfg.train
    realized = _proxy_values(r, strategy.proxy, floor)
    params, flags = G.fit_or_best(spec, r[:T])
    state = G.warm_state(spec, params, r[:T])
    records, hypers = [], [params.as_dict()]
    flags = list(flags)
    for i in range(T, r.size):
        s2 = G.forecast_one_step(spec, params, state)
        h = np.sqrt(s2) if strategy.proxy == "abs" else s2
        lo, up = _garch_interval(s2, cfg.z, strategy.proxy)
        lo = min(lo, h)
        records.append(ForecastRecord(int(times[i]), float(h), float(lo), float(up), realized[i], r[i], float(np.log(h)), float("nan")))
        k = spec.n_lags
        state = G.GarchState((state.returns + (float(r[i]),))[-k:], (state.variances + (s2,))[-k:])
        if strategy.hyper_update:
            lo_i = max(0, i + 1 - cfg.window)
            new, f = G.fit_or_best(spec, r[lo_i : i + 1], start=params)
            flags.extend(f)
            params = new
            hypers.append(params.as_dict())
    return records, hypers, sorted(set(flags))


def _calibration(strategy: Strategy) -> float:
    if strategy.tag in GARCH_TAGS:
        return 1.0
    if strategy.tag in ("GpAbs", "GpSquared"):
        return LOG_ABS_FACTOR
    return ABS_MEAN_FACTOR


def run_backtest_returns(r: ReturnSeries, strategy: Strategy, cfg: RollingConfig = RollingConfig()) -> BacktestReport:
    """Backtest on a return series (see module docstring for the timing)."""
    vals = np.asarray(r.values, dtype=float)
    times = np.asarray(r.timestamps)
    if vals.size <= cfg.train:
        raise ValueError(f"need more than train={cfg.train} returns, got {vals.size}")
    floor = cfg.floor if cfg.floor is not None else default_floor(vals[: cfg.train])
    if strategy.tag in ("GpAbs", "GpSquared"):
        records, hypers, flags = _run_gp_plain(vals, times, strategy, cfg, floor)
    elif strategy.tag == "GpAbsEnvelope":
        records, hypers, flags = _run_gp_envelope(vals, times, strategy, cfg, floor)
    elif strategy.tag == "GpCombinedEnvelope":
        records, hypers, flags = _run_gp_combined(vals, times, strategy, cfg, floor)
    else:
        records, hypers, flags = _run_garch(vals, times, strategy, cfg, floor)

    h = np.array([rec.forecast for rec in records])
    sigma = np.array([rec.realized for rec in records])
    prev = _proxy_values(vals[cfg.train - 1 : cfg.train], strategy.proxy, floor)[0]
    suite = compute_suite(sigma, h, prev=prev)
    vol = h if strategy.proxy == "abs" else np.sqrt(h)
    res = residual_stats(vals[cfg.train :], vol, _calibration(strategy))
    return BacktestReport(strategy, records, suite, res, floor, hypers, tuple(sorted(set(flags))))


def run_backtest(prices: PriceSeries, strategy: Strategy, cfg: RollingConfig = RollingConfig()) -> BacktestReport:
    """Backtest a price segment using its log returns."""
    return run_backtest_returns(log_returns(prices), strategy, cfg)


def no_change_forecasts(r: ReturnSeries, cfg: RollingConfig = RollingConfig(), proxy: str = "abs"):
    """Realized proxy and the naive forecast ``h_i = proxy_{i-1}`` on the backtest steps."""
    vals = np.asarray(r.values, dtype=float)
    floor = cfg.floor if cfg.floor is not None else default_floor(vals[: cfg.train])
    p = _proxy_values(vals, proxy, floor)
    return p[cfg.train :], p[cfg.train - 1 : -1]
