"""Thin wrapper around scipy's Nelder-Mead shared by the GP and GARCH fitters."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class SimplexConfig:
    """Direct-search settings.

    ``restarts`` is only used by multi-start callers.  ``init_step`` and
    ``warm_step`` are the initial simplex edge lengths (in the optimizer's
    unconstrained coordinates) for cold and warm starts respectively.
    """

    max_iter: int = 500
    ftol: float = 1e-8
    xtol: float = 1e-4
    restarts: int = 32
    seed: int = 0
    init_step: float = 0.5
    warm_step: float = 0.1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        for name in ("max_iter", "ftol", "xtol", "init_step", "warm_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool


def nelder_mead(fun, x0, cfg: SimplexConfig, step: float | None = None) -> SimplexResult:
    """Minimize ``fun`` from ``x0`` with reflection 1, expansion 2, contraction and shrink 0.5."""
    x0 = np.asarray(x0, dtype=float)
    step = cfg.init_step if step is None else step
    simplex = np.vstack([x0, x0 + step * np.eye(x0.size)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            fun,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iter,
                "maxfev": 4 * cfg.max_iter,
                "xatol": cfg.xtol,
                "fatol": cfg.ftol,
                "initial_simplex": simplex,
                "adaptive": False,
            },
        )
    return SimplexResult(np.asarray(res.x), float(res.fun), int(res.nit), int(res.nfev), bool(res.success))
