"""Independent brute-force references used by the tests."""

import math

import numpy as np


def kernel(family, nat, xi, xj):
    """Kernel written out from its formula, one pair at a time."""
    d = abs(xi - xj)
    s2 = nat["output_scale"] ** 2
    ell = nat["length_scale"]
    if family == "SE":
        return s2 * math.exp(-((d / (math.sqrt(2) * ell)) ** 2))
    if family == "Matern32":
        return s2 * (1 + math.sqrt(3) * d / ell) * math.exp(-math.sqrt(3) * d / ell)
    T, w = nat["period"], nat["roughness"]
    return s2 * math.exp(-math.sin(math.pi * d / T) ** 2 / (2 * w * w) - d * d / (ell * ell))


def dense_V(family, nat, times):
    n = len(times)
    V = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            V[i, j] = kernel(family, nat, times[i], times[j])
    V += nat["noise_std"] ** 2 * np.eye(n)
    return V


def dense_posterior(family, nat, times, y, x_star, mu):
    V = dense_V(family, nat, times)
    k = np.array([kernel(family, nat, x_star, t) for t in times])
    m = mu + k @ np.linalg.solve(V, y - mu)
    v = kernel(family, nat, x_star, x_star) - k @ np.linalg.solve(V, k)
    return m, v


def dense_nll(family, nat, times, y, mu):
    V = dense_V(family, nat, times)
    r = y - mu
    _, logdet = np.linalg.slogdet(V)
    return 0.5 * r @ np.linalg.solve(V, r) + 0.5 * logdet + 0.5 * len(y) * math.log(2 * math.pi)


def random_instance(rng, family=None, n_max=8):
    from gpvol.gp import FAMILIES, KernelSpec

    family = family or FAMILIES[rng.integers(len(FAMILIES))]
    n = int(rng.integers(1, n_max + 1))
    times = np.sort(rng.choice(np.arange(60), size=n, replace=False)).astype(float)
    y = rng.normal(-5, 1, n)
    extra = {}
    if family == "QuasiPeriodic":
        extra = dict(period=float(rng.uniform(5, 30)), roughness=float(rng.uniform(0.5, 2)))
    spec = KernelSpec.from_natural(
        family, float(rng.uniform(0.3, 2)), float(rng.uniform(2, 20)), float(rng.uniform(0.05, 0.5)), **extra
    )
    x_star = float(times[-1] + rng.integers(1, 5))
    return spec, times, y, x_star
