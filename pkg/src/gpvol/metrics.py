"""Loss functions, accuracy measures and the residual unbiasedness check."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

METRICS = ("mse1", "mse2", "mae1", "mae2", "mdrae", "smape")

# E|z| for z ~ N(0, 1): converts a forecast of E|r| into one of sigma.
ABS_MEAN_FACTOR = float(np.sqrt(2.0 / np.pi))
# exp(E log|z|): converts a forecast of exp(E log|r|) (the log-space point
# forecast of |r|) into one of sigma.
LOG_ABS_FACTOR = float(np.exp(-0.5 * (np.euler_gamma + np.log(2.0))))


@dataclass(frozen=True)
class MetricSuite:
    mse1: float
    mse2: float
    mae1: float
    mae2: float
    mdrae: float | None
    smape: float
    n: int
    n_effective: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    def get(self, name):
        return getattr(self, name)


def compute_suite(sigma, h, prev: float | None = None) -> MetricSuite:
    """All six measures of forecasts ``h`` against the realized proxy ``sigma``.

    MdRAE compares against the no-change forecast ``sigma[t-1]``; ``prev`` is
    the proxy value observed just before ``sigma[0]`` so the first step also
    gets a denominator.  Terms with a zero denominator are excluded and the
    count is reported in ``n_effective``; if every term is excluded MdRAE is
    ``None``.
    """
    s = np.asarray(sigma, dtype=float)
    f = np.asarray(h, dtype=float)
    if s.shape != f.shape or s.ndim != 1:
        raise ValueError("sigma and h must be 1-d and of equal length")
    if s.size < 2:
        raise ValueError("need at least 2 forecasts")
    n = s.size
    err = s - f
    err2 = s * s - f * f

    if prev is None:
        num, den = err[1:], s[1:] - s[:-1]
    else:
        num, den = err, s - np.concatenate(([prev], s[:-1]))
    ok = den != 0
    mdrae = float(np.median(np.abs(num[ok] / den[ok]))) if ok.any() else None

    tot = s + f
    ok_s = tot > 0
    smape = float(np.mean(200.0 * np.abs(err[ok_s]) / tot[ok_s])) if ok_s.any() else 0.0

    return MetricSuite(
        mse1=float(np.mean(err * err)),
        mse2=float(np.mean(err2 * err2)),
        mae1=float(np.mean(np.abs(err))),
        mae2=float(np.mean(np.abs(err2))),
        mdrae=mdrae,
        smape=smape,
        n=n,
        n_effective={"mse1": n, "mse2": n, "mae1": n, "mae2": n, "mdrae": int(ok.sum()), "smape": int(ok_s.sum())},
    )


@dataclass(frozen=True)
class ResidualStats:
    residuals: np.ndarray
    mean: float
    std: float
    calibration: float
    calibrated_std: float
    calibrated_mean: float
    excluded: int = 0

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("residuals")
        d["n"] = int(self.residuals.size)
        return d


def residual_stats(r, h, calibration: float = ABS_MEAN_FACTOR) -> ResidualStats:
    """Normalized returns ``e_t = r_t / h_t`` and their moments.

    The calibrated moments use forecasts divided by ``calibration`` (so the
    calibrated residuals are ``calibration * e_t``).  Non-positive forecasts
    are excluded.
    """
    r = np.asarray(getattr(r, "values", r), dtype=float)
    h = np.asarray(h, dtype=float)
    if r.shape != h.shape:
        raise ValueError("returns and forecasts must be aligned")
    ok = h > 0
    e = r[ok] / h[ok]
    mean = float(np.mean(e)) if e.size else float("nan")
    std = float(np.std(e, ddof=1)) if e.size > 1 else float("nan")
    return ResidualStats(e, mean, std, float(calibration), calibration * std, calibration * mean, int((~ok).sum()))
