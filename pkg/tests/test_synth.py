import numpy as np
import pytest
from scipy.stats import kurtosis

from gpvol.garch import GarchParams, GarchSpec
from gpvol.gp import KernelSpec
from gpvol.optim import SimplexConfig
from gpvol.synth import (
    GarchSim,
    GpDraw,
    SinVol,
    SynthSpec,
    generate,
    prices_from_returns,
    random_hyperparameters,
    recovery_experiment,
    sample_gp,
    simulate_garch,
    simulate_gp_log_abs,
    simulate_sinvol,
)
from gpvol.returns import log_returns

SE = KernelSpec.from_natural("SE", 1.0, 5.0, 0.1)


def test_vanishing_scale_draw_is_mean():
    sp = KernelSpec.from_natural("Matern32", 1e-8, 5.0, 1e-8)
    y = sample_gp(sp, np.arange(50.0), seed=0, mean=-3.0)
    np.testing.assert_allclose(y, -3.0, atol=1e-6)


def test_draws_are_seeded():
    a = sample_gp(SE, np.arange(30.0), seed=4)
    np.testing.assert_array_equal(a, sample_gp(SE, np.arange(30.0), seed=4))
    assert not np.array_equal(a, sample_gp(SE, np.arange(30.0), seed=5))
    g = GarchParams(0.05, [0.1], [0.85])
    np.testing.assert_array_equal(simulate_garch(g, 50, 1).values, simulate_garch(g, 50, 1).values)
    s = SinVol(0.5, 10, 1.0)
    np.testing.assert_array_equal(simulate_sinvol(s, 20, 2)[0].values, simulate_sinvol(s, 20, 2)[0].values)


def test_single_point_variance():
    sp = KernelSpec.from_natural("SE", 1.3, 5.0, 0.4)
    draws = np.array([sample_gp(sp, [0.0], seed=k)[0] for k in range(1000)])
    assert np.var(draws) == pytest.approx(1.69 + 0.16, rel=0.10)


def test_two_point_covariance():
    sp = KernelSpec.from_natural("Matern32", 1.0, 3.0, 0.1)
    times = np.array([0.0, 2.0])
    draws = np.array([sample_gp(sp, times, seed=k, noisy=False) for k in range(2000)])
    emp = np.cov(draws.T)
    from gpvol.gp import cross_cov

    K = cross_cov(sp, times, times)
    np.testing.assert_allclose(emp, K, rtol=0.15)


def test_iid_garch_variance():
    r = simulate_garch(GarchParams(0.3, [0.0], [0.0]), 10_000, seed=0)
    assert np.var(r.values) == pytest.approx(0.3, rel=0.05)


def test_persistent_garch_heavy_tails():
    r = simulate_garch(GarchParams(0.02, [0.15], [0.83]), 20_000, seed=1)
    assert kurtosis(r.values, fisher=False) > 3.0


def test_garch_variants_simulate():
    r, v = simulate_garch(GarchParams(-0.3, [1.0], [0.95], (), -0.05, 0.1), 500, 2, GarchSpec("EGarch"), return_variance=True)
    assert np.all(v > 0) and len(r) == 500


def test_sinvol():
    with pytest.raises(ValueError):
        SinVol(0.02, 100, 0.01)
    r, vol = simulate_sinvol(SinVol(0.006, 400, 0.01), 800, seed=0)
    assert vol[100] == pytest.approx(0.016) and vol[300] == pytest.approx(0.004)
    assert np.std(r.values / vol) == pytest.approx(1.0, abs=0.06)


def test_gp_log_abs_returns():
    r, y = simulate_gp_log_abs(SE, 200, seed=3)
    np.testing.assert_allclose(np.log(np.abs(r.values)), y)


def test_generate_and_prices():
    assert len(generate(SynthSpec(GpDraw(SE), 20, 1))) == 20
    assert len(generate(SynthSpec(GarchSim(GarchParams(0.05, [0.1], [0.85])), 20, 1))) == 20
    r = generate(SynthSpec(SinVol(0.1, 5, 0.2), 20, 1))
    np.testing.assert_allclose(log_returns(prices_from_returns(r)).values, r.values, atol=1e-12)
    with pytest.raises(ValueError):
        SynthSpec(SinVol(0.1, 5, 0.2), 1)


def test_random_hyperparameters_in_range():
    for s in range(20):
        sp = random_hyperparameters("SE", s)
        assert 0.5 <= sp.output_scale <= 2.0 and 15 <= sp.length_scale <= 40
        assert 0.05 <= sp.noise_std / sp.output_scale <= 0.2


def test_recovery_best_case_hits_noise_floor():
    rep = recovery_experiment(SE, n_sets=3, n_points=200, fractions=(1.0,), cfg=SimplexConfig(restarts=1), seed=1)
    assert rep.median_rmse()[1.0] == pytest.approx(SE.noise_std, rel=0.3)
    assert rep.failures == []


def test_recovery_small_run_shape():
    rep = recovery_experiment(SE, n_sets=2, n_points=100, fractions=(0.2, 0.5), cfg=SimplexConfig(restarts=2), seed=0)
    assert set(rep.rmse) == {0.2, 0.5}
    assert rep.recovered[0.2].shape == (2, 3)
    s = rep.summary()
    assert s["fractions"] == [0.2, 0.5] and s["n_failures"] == 0
    with pytest.raises(ValueError):
        recovery_experiment(SE, 1, 10, fractions=(0.0,))
