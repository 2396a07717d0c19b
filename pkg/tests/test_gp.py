import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpvol.gp import (
    FAMILIES,
    KernelSpec,
    NumericalError,
    build_covariance,
    chol_append,
    chol_drop_newest,
    chol_drop_oldest,
    empty_state,
    factorize,
    kernel_eval,
    neg_log_marginal,
    posterior_at,
    posterior_path,
)
from oracles import dense_nll, dense_posterior, random_instance

QP = dict(period=12.0, roughness=0.8)


def spec_of(family, s=1.0, ell=5.0, noise=0.1):
    return KernelSpec.from_natural(family, s, ell, noise, **(QP if family == "QuasiPeriodic" else {}))


@pytest.mark.parametrize("family", ["SE", "Matern32"])
def test_diagonal_is_output_variance(family):
    assert kernel_eval(spec_of(family, s=1.7), 3.0, 3.0) == pytest.approx(1.7**2, rel=1e-15)


def test_quasi_periodic_diagonal_includes_noise():
    sp = spec_of("QuasiPeriodic", s=1.2, noise=0.3)
    assert kernel_eval(sp, 4.0, 4.0) == pytest.approx(1.44 + 0.09, rel=1e-15)
    # the noise enters V exactly once
    st_ = build_covariance(sp, [0.0])
    assert st_.covariance()[0, 0] == pytest.approx(1.44 + 0.09, rel=1e-15)


def test_se_hand_value():
    assert kernel_eval(spec_of("SE", 1.0, 1.0), 0.0, math.sqrt(2)) == pytest.approx(math.exp(-1), rel=1e-14)


def test_single_point_factor():
    st_ = build_covariance(spec_of("SE", 1.0, 3.0, 0.1), [0.0])
    np.testing.assert_allclose(st_.covariance(), [[1.01]])
    np.testing.assert_allclose(st_.L, [[math.sqrt(1.01)]])


def test_distant_points_decouple():
    st_ = build_covariance(spec_of("SE", 1.0, 1.0, 0.1), [0.0, 1e4])
    assert st_.L[1, 0] == 0.0


@given(st.sampled_from(FAMILIES), st.floats(-50, 50), st.floats(-50, 50))
def test_kernel_symmetric(family, a, b):
    sp = spec_of(family)
    assert abs(kernel_eval(sp, a, b) - kernel_eval(sp, b, a)) <= 1e-15


@given(st.integers(0, 10_000))
def test_factor_reproduces_covariance(seed):
    rng = np.random.default_rng(seed)
    sp, times, y, _ = random_instance(rng, n_max=5)
    st_ = build_covariance(sp, times, y)
    np.testing.assert_allclose(st_.L @ st_.L.T, st_.covariance(), atol=1e-10)
    assert np.all(np.diag(st_.L) > 0)


@given(st.integers(0, 10_000))
def test_posterior_and_nll_match_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    sp, times, y, x_star = random_instance(rng, n_max=6)
    st_ = build_covariance(sp, times, y)
    mu = float(np.mean(y))
    post = posterior_at(st_, x_star)
    m, v = dense_posterior(sp.family, sp.natural, times, y, x_star, mu)
    assert abs(post.mean - m) < 1e-10
    assert abs(post.var - v) < 1e-10
    assert abs(neg_log_marginal(st_) - dense_nll(sp.family, sp.natural, times, y, mu)) < 1e-10
    assert post.var <= sp.prior_var + 1e-10


def test_noiseless_interpolation():
    sp = KernelSpec.from_natural("SE", 1.0, 3.0, 1e-9)
    st_ = build_covariance(sp, [4.0], [0.7])
    post = posterior_at(st_, 4.0, mean=0.0)
    assert post.mean == pytest.approx(0.7, abs=1e-10)
    assert post.var == pytest.approx(0.0, abs=1e-10)
    assert "interpolation" in post.flags


def test_prior_reversion():
    sp = spec_of("Matern32", 0.8, 2.0)
    st_ = build_covariance(sp, [0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    post = posterior_at(st_, 1e5)
    assert post.mean == pytest.approx(2.0, abs=1e-12)
    assert post.var == pytest.approx(0.64, abs=1e-12)
    assert not post.flags


def test_append_after_newest_time_only():
    st_ = build_covariance(spec_of("SE"), [0.0, 1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        chol_append(st_, 1.0, 0.0)


def test_append_to_empty():
    sp = spec_of("Matern32", 1.3, 4.0, 0.2)
    st_ = chol_append(empty_state(sp), 5.0, 1.0)
    np.testing.assert_allclose(st_.L, [[math.sqrt(1.69 + 0.04)]])


@pytest.mark.parametrize("family", FAMILIES)
def test_sequential_appends_match_refactorization(family):
    sp = spec_of(family, 1.0, 8.0, 0.2)
    st_ = empty_state(sp)
    rng = np.random.default_rng(1)
    for t in range(100):
        st_ = chol_append(st_, float(t), rng.normal())
    ref = build_covariance(sp, st_.times, st_.y)
    assert np.max(np.abs(st_.L - ref.L)) <= 1e-8


@pytest.mark.parametrize("family", FAMILIES)
def test_rolling_append_drop_matches_refactorization(family):
    sp = spec_of(family, 1.0, 8.0, 0.2)
    rng = np.random.default_rng(2)
    st_ = build_covariance(sp, np.arange(30.0), rng.normal(size=30))
    worst = 0.0
    for t in range(30, 200):
        st_ = chol_drop_oldest(chol_append(st_, float(t), rng.normal()))
        ref = build_covariance(sp, st_.times, st_.y)
        worst = max(worst, np.max(np.abs(st_.L - ref.L)))
    assert len(st_) == 30
    assert worst <= 1e-8


def test_drop_from_two_points():
    sp = spec_of("SE", 1.0, 2.0, 0.3)
    st_ = chol_drop_oldest(build_covariance(sp, [0.0, 1.0], [1.0, 2.0]))
    np.testing.assert_allclose(st_.L, [[math.sqrt(1.09)]], atol=1e-14)
    assert list(st_.times) == [1.0] and list(st_.y) == [2.0]
    with pytest.raises(ValueError):
        chol_drop_oldest(st_)


def test_drop_newest_is_leading_block():
    sp = spec_of("Matern32")
    full = build_covariance(sp, [0.0, 1.0, 3.0], [1.0, 2.0, 0.5])
    st_ = chol_drop_newest(full)
    ref = build_covariance(sp, [0.0, 1.0], [1.0, 2.0])
    np.testing.assert_allclose(st_.L, ref.L, atol=1e-14)


def test_nll_single_point_hand_value():
    sp = KernelSpec.from_natural("SE", math.sqrt(0.99), 1.0, 0.1)
    st_ = build_covariance(sp, [0.0], [0.0])
    assert neg_log_marginal(st_) == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-12)
    assert abs(0.5 * math.log(2 * math.pi) - 0.9189) < 1e-4


def test_nll_quadratic_minimized_at_zero_residual():
    sp = spec_of("SE")
    times = np.arange(5.0)
    st_ = build_covariance(sp, times, np.array([1.0, -1.0, 2.0, 0.0, 0.5]))
    zero = neg_log_marginal(st_, mean=0.0, y=np.zeros(5))
    assert zero < neg_log_marginal(st_, mean=0.0)


def test_nll_prefers_true_noise_level():
    from gpvol.synth import sample_gp

    truth = KernelSpec.from_natural("SE", 1.0, 5.0, 0.3)
    times = np.arange(300.0)
    y = sample_gp(truth, times, seed=4)
    right = neg_log_marginal(build_covariance(truth, times, y))
    wrong = neg_log_marginal(build_covariance(KernelSpec.from_natural("SE", 1.0, 5.0, 0.01), times, y))
    assert right < wrong


def test_posterior_path_matches_pointwise():
    sp = spec_of("QuasiPeriodic")
    st_ = build_covariance(sp, np.arange(10.0), np.sin(np.arange(10.0)))
    xs = np.array([2.5, 10.0, 13.0])
    m, v = posterior_path(st_, xs)
    for x, mi, vi in zip(xs, m, v):
        p = posterior_at(st_, x)
        assert mi == pytest.approx(p.mean, abs=1e-12)
        assert vi == pytest.approx(p.var, abs=1e-12)


def test_noisy_predictive_adds_noise():
    sp = spec_of("SE", 1.0, 2.0, 0.3)
    st_ = build_covariance(sp, [0.0, 1.0], [0.0, 1.0])
    assert posterior_at(st_, 2.0, noisy=True).var == pytest.approx(posterior_at(st_, 2.0).var + 0.09)


def test_factorize_jitter_and_failure():
    V = np.ones((3, 3))  # rank one
    L, jitter = factorize(V)
    assert jitter > 0
    np.testing.assert_allclose(L @ L.T, V + jitter * np.eye(3), atol=1e-12)
    with pytest.raises(NumericalError):
        factorize(-np.eye(2))
