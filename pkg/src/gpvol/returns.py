"""Returns, volatility proxies, signed splits and envelopes.

All series carry integer time indices so that envelopes and signed splits,
which drop points, keep their position on the original time axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROXY_KINDS = ("abs", "squared", "abs-envelope", "pos-envelope", "neg-envelope")
DEFAULT_FLOOR = 1e-12
# smallest floor whose square is still a normal positive float
MIN_FLOOR = float(np.sqrt(np.finfo(float).tiny))


class InvalidInput(ValueError):
    """Raised when a series violates its structural invariants."""


def _as_times(timestamps, n: int) -> np.ndarray:
    if timestamps is None:
        return np.arange(n, dtype=np.int64)
    t = np.asarray(timestamps, dtype=np.int64)
    if t.shape != (n,):
        raise InvalidInput(f"expected {n} timestamps, got shape {t.shape}")
    if n > 1 and np.any(np.diff(t) <= 0):
        raise InvalidInput("timestamps must be strictly increasing")
    return t


@dataclass(frozen=True)
class PriceSeries:
    prices: np.ndarray
    timestamps: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.prices, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise InvalidInput("a price series needs at least 2 points")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            bad = np.flatnonzero(~(p > 0))
            raise InvalidInput(f"prices must be strictly positive (first bad index {bad[0]})")
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "timestamps", _as_times(self.timestamps, p.size))

    def __len__(self):
        return self.prices.size

    def slice(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.prices[start:stop], self.timestamps[start:stop])


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    timestamps: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise InvalidInput("returns must be one-dimensional")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "timestamps", _as_times(self.timestamps, v.size))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ProxySeries:
    values: np.ndarray
    timestamps: np.ndarray
    kind: str
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.kind not in PROXY_KINDS:
            raise InvalidInput(f"unknown proxy kind {self.kind!r}")
        if v.size and np.any(v <= 0):
            raise InvalidInput("proxy values must be strictly positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "timestamps", _as_times(self.timestamps, v.size))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class SignedSplit:
    positive: ProxySeries
    negative: ProxySeries
    empty_sides: tuple = field(default=())


def arithmetic_returns(p: PriceSeries) -> ReturnSeries:
    x = p.prices
    return ReturnSeries((x[1:] - x[:-1]) / x[:-1], p.timestamps[1:])


def log_returns(p: PriceSeries) -> ReturnSeries:
    lp = np.log(p.prices)
    return ReturnSeries(np.diff(lp), p.timestamps[1:])


def default_floor(r) -> float:
    """Half the smallest non-zero absolute return, or 1e-12 if there is none.

    The result is never below ``MIN_FLOOR`` so that squared proxies stay positive.
    """
    a = np.abs(np.asarray(getattr(r, "values", r), dtype=float))
    nz = a[a > 0]
    if nz.size == 0:
        return DEFAULT_FLOOR
    return max(0.5 * float(nz.min()), MIN_FLOOR)


def _check_floor(floor):
    if not floor > 0:
        raise InvalidInput(f"floor must be positive, got {floor}")


def make_proxy(r: ReturnSeries, kind: str = "abs", floor: float = DEFAULT_FLOOR) -> ProxySeries:
    _check_floor(floor)
    if kind == "abs":
        v = np.maximum(np.abs(r.values), floor)
    elif kind == "squared":
        v = np.maximum(r.values**2, floor**2)
    else:
        raise InvalidInput(f"make_proxy supports 'abs' and 'squared', not {kind!r}")
    return ProxySeries(v, r.timestamps.copy(), kind, floor)


def split_signed(r: ReturnSeries, floor: float = DEFAULT_FLOOR) -> SignedSplit:
    """Partition returns into g+ (r >= 0) and g- (-r where r < 0), both floored."""
    _check_floor(floor)
    pos = r.values >= 0
    neg = ~pos
    positive = ProxySeries(np.maximum(r.values[pos], floor), r.timestamps[pos], "pos-envelope", floor)
    negative = ProxySeries(np.maximum(-r.values[neg], floor), r.timestamps[neg], "neg-envelope", floor)
    empty = tuple(name for name, s in (("positive", positive), ("negative", negative)) if len(s) == 0)
    return SignedSplit(positive, negative, empty)


def envelope_mask(values, which: str = "maxima") -> np.ndarray:
    """Boolean mask of envelope points; endpoints are always kept.

    Ties count as extrema (non-strict comparisons), so plateaus are kept whole.
    """
    g = np.asarray(values, dtype=float)
    if g.size < 3:
        raise InvalidInput("envelope extraction needs at least 3 points")
    mid = g[1:-1]
    if which == "maxima":
        inner = (mid >= g[:-2]) & (mid >= g[2:])
    elif which == "minima":
        inner = (mid <= g[:-2]) & (mid <= g[2:])
    else:
        raise InvalidInput(f"which must be 'maxima' or 'minima', not {which!r}")
    return np.concatenate(([True], inner, [True]))


def extract_envelope(s: ProxySeries, which: str = "maxima") -> ProxySeries:
    keep = envelope_mask(s.values, which)
    kind = s.kind if s.kind.endswith("envelope") else "abs-envelope"
    return ProxySeries(s.values[keep], s.timestamps[keep], kind, s.floor)


def to_log_space(s: ProxySeries) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(times, log(values))``."""
    if np.any(s.values <= 0):
        raise AssertionError("non-positive proxy value reached the log transform")
    return s.timestamps.copy(), np.log(s.values)
