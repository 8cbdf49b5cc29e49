import numpy as np
import pytest
from hypothesis import given, strategies as st

from hulm.data import Dataset, synth_mean_task, synth_order_task
from hulm.errors import DivergedError, InvalidArgumentError
from hulm.inference import marginals, predict_distribution
from hulm.learning import (cond_log_likelihood, gradient_batch, gradient_example, train_sgd,
                           tune_lambda)
from hulm.model import HulmParams, Hyperparams, TimeSeries, init_params
from hulm.oracle import brute_log_likelihood, finite_diff_gradient
from hulm.verify import gradient_discrepancy

from conftest import random_params


def _dataset(rng, n, T, D, K):
    series = [TimeSeries(rng.normal(size=(T, D)), int(rng.integers(K))) for _ in range(n)]
    return Dataset.from_series(series, K=K)


# -- conditional log-likelihood ------------------------------------------------

def test_cond_ll_zero_params_is_uniform(rng):
    data = _dataset(rng, 7, 4, 2, 3)
    ll = cond_log_likelihood(data, HulmParams.zeros(2, 2, 3), 0.0)
    assert ll == pytest.approx(-7 * np.log(3), abs=1e-12)


def test_cond_ll_equals_sum_of_log_posteriors(rng):
    data = _dataset(rng, 5, 6, 3, 4)
    theta = random_params(rng, 3, 3, 4)
    ref = sum(np.log(predict_distribution(s, theta)[s.label]) for s in data)
    assert cond_log_likelihood(data, theta) == pytest.approx(ref, abs=1e-10)


def test_cond_ll_matches_brute_force_with_penalty(rng):
    theta = random_params(rng, 2, 2, 3)
    s = TimeSeries(rng.normal(size=(3, 2)), 1)
    lam = 0.1
    penalty = np.sum(theta.A ** 2) + np.sum(theta.W ** 2) + np.sum(theta.V ** 2)
    ref = brute_log_likelihood(s, 1, theta) - lam * penalty
    got = cond_log_likelihood(Dataset.from_series([s], K=3), theta, lam)
    assert got == pytest.approx(ref, abs=1e-10)


def test_cond_ll_is_nonpositive(rng):
    data = _dataset(rng, 4, 5, 2, 2)
    for _ in range(5):
        assert cond_log_likelihood(data, random_params(rng, 3, 2, 2, scale=3.0), 0.5) <= 0.0


def test_cond_ll_rejects_unlabeled(rng):
    data = Dataset.from_series([TimeSeries(rng.normal(size=(3, 2)))], K=2)
    with pytest.raises(InvalidArgumentError):
        cond_log_likelihood(data, HulmParams.zeros(1, 2, 2))


# -- single-example gradient --------------------------------------------------

def test_gradient_at_zero_params():
    T, H, D, K, k = 5, 3, 2, 4, 1
    x = np.arange(T * D, dtype=float).reshape(T, D)
    g = gradient_example(x, k, HulmParams.zeros(H, D, K))
    y = np.eye(K)[k]
    np.testing.assert_allclose(g.c, y - 1.0 / K, atol=1e-15)
    np.testing.assert_allclose(g.W, 0.0, atol=1e-12)
    np.testing.assert_allclose(g.V, np.tile(0.5 * T * (y - 1.0 / K), (H, 1)), atol=1e-12)
    for block in (g.b, g.pi, g.tau, g.A):
        np.testing.assert_allclose(block, 0.0, atol=1e-12)


def test_gradient_accepts_one_hot_label(rng):
    theta = random_params(rng, 2, 2, 3)
    x = rng.normal(size=(4, 2))
    a = gradient_example(x, 2, theta).to_vector()
    b = gradient_example(x, np.array([0.0, 0.0, 1.0]), theta).to_vector()
    np.testing.assert_array_equal(a, b)


def test_gradient_matches_finite_differences_h2_t3(rng):
    theta = random_params(rng, 2, 2, 2)
    x = rng.normal(size=(3, 2))
    analytic = gradient_example(x, 0, theta).to_vector()
    numeric = finite_diff_gradient(x, 0, theta, 1e-5).to_vector()
    assert gradient_discrepancy(analytic, numeric) <= 1.0


def test_gradient_matches_explicit_marginal_formula(rng):
    # rebuild every block from the marginals, independently of the fused kernel
    H, T, D, K = 3, 5, 2, 3
    theta = random_params(rng, H, D, K)
    x = rng.normal(size=(T, D))
    k = 2
    p = predict_distribution(x, theta)

    def stats(label):
        m = marginals(x, label, theta)
        on = m.gamma[:, :, 1]
        V = np.zeros((H, K))
        V[:, label] = on.sum(axis=0)
        c = np.eye(K)[label]
        return dict(pi=on[0], tau=on[-1], A=m.xi[:, :, 1, 1].sum(axis=0), W=on.T @ x, V=V,
                    b=on.sum(axis=0), c=c)

    clamped = stats(k)
    free = [stats(j) for j in range(K)]
    g = gradient_example(x, k, theta)
    for name in clamped:
        expected = clamped[name] - sum(p[j] * free[j][name] for j in range(K))
        np.testing.assert_allclose(getattr(g, name), expected, atol=1e-12, err_msg=name)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4), st.integers(1, 2),
       st.integers(2, 3))
def test_gradient_finite_difference_property(seed, H, T, D, K):
    rng = np.random.default_rng(seed)
    theta = random_params(rng, H, D, K)
    x = rng.normal(size=(T, D))
    k = int(rng.integers(K))
    analytic = gradient_example(x, k, theta).to_vector()
    numeric = finite_diff_gradient(x, k, theta, 1e-5).to_vector()
    assert gradient_discrepancy(analytic, numeric) <= 1.0


def test_free_term_self_consistency(rng):
    # sum_k p(k|x) * (clamped c-term for label k) reproduces the free c-term exactly
    theta = random_params(rng, 3, 2, 4)
    x = rng.normal(size=(6, 2))
    p = predict_distribution(x, theta)
    K = theta.K
    total = sum(p[k] * gradient_example(x, k, theta).to_vector() for k in range(K))
    np.testing.assert_allclose(total, 0.0, atol=1e-12)


# -- batch gradient -----------------------------------------------------------

def test_batch_of_one_equals_example(rng):
    theta = random_params(rng, 2, 3, 2)
    s = TimeSeries(rng.normal(size=(4, 3)), 1)
    a = gradient_batch([s], theta, 0.0).to_vector()
    np.testing.assert_array_equal(a, gradient_example(s.frames, 1, theta).to_vector())


def test_duplicated_example_doubles(rng):
    theta = random_params(rng, 2, 3, 2)
    s = TimeSeries(rng.normal(size=(4, 3)), 0)
    a = gradient_batch([s, s], theta, 0.0).to_vector()
    np.testing.assert_array_equal(a, 2 * gradient_example(s.frames, 0, theta).to_vector())


def test_penalty_gradient_on_transition_only():
    # a single class leaves nothing to discriminate, so the likelihood gradient is 0
    theta = HulmParams.zeros(3, 2, 1).replace(A=np.array([0.3, -1.2, 2.0]))
    s = TimeSeries(np.random.default_rng(0).normal(size=(4, 2)), 0)
    g = gradient_batch([s], theta, 0.25)
    np.testing.assert_allclose(gradient_example(s.frames, 0, theta).to_vector(), 0.0, atol=1e-15)
    np.testing.assert_allclose(g.A, -2 * 0.25 * theta.A, atol=1e-15)
    for name in ("pi", "tau", "W", "V", "b", "c"):
        np.testing.assert_allclose(getattr(g, name), 0.0, atol=1e-15)


def test_unregularized_blocks_independent_of_lambda(rng):
    theta = random_params(rng, 2, 2, 3)
    batch = [TimeSeries(rng.normal(size=(3, 2)), k) for k in range(3)]
    data = Dataset.from_series(batch, K=3)
    H, D, K = theta.H, theta.D, theta.K
    vec = theta.to_vector()
    for lam in (0.0, 0.7):
        fd = np.zeros_like(vec)
        for i in range(vec.size):
            up, dn = vec.copy(), vec.copy()
            up[i] += 1e-5
            dn[i] -= 1e-5
            fd[i] = (cond_log_likelihood(data, HulmParams.from_vector(up, H, D, K), lam)
                     - cond_log_likelihood(data, HulmParams.from_vector(dn, H, D, K), lam)) / 2e-5
        g = HulmParams.from_vector(fd, H, D, K)
        analytic = gradient_batch(batch, theta, lam)
        assert gradient_discrepancy(analytic.to_vector(), fd) <= 1.0
        if lam == 0.0:
            base = g
    for name in ("pi", "tau", "b", "c"):
        np.testing.assert_allclose(getattr(g, name), getattr(base, name), atol=1e-8)
    assert not np.allclose(g.A, base.A)


def test_batch_rejects_empty_and_negative_lambda(rng):
    theta = random_params(rng, 1, 2, 2)
    with pytest.raises(InvalidArgumentError):
        gradient_batch([], theta)
    with pytest.raises(InvalidArgumentError):
        gradient_batch([TimeSeries(np.zeros((2, 2)), 0)], theta, -1.0)


# -- SGD ----------------------------------------------------------------------

def test_separable_task_reaches_zero_training_error():
    data = synth_mean_task(20, 8, seed=3)
    report = train_sgd(data, Hyperparams(hidden_units=5, epochs=50, seed=0))
    assert report.train_errors[-1] == 0.0
    assert len(report.objectives) == 50


def test_zero_learning_rate_keeps_initialization():
    data = synth_mean_task(5, 6, seed=1)
    hyper = Hyperparams(hidden_units=4, learning_rate=0.0, epochs=5, seed=9)
    report = train_sgd(data, hyper)
    init = init_params(4, data.D, data.K, 9, hyper.init_scheme)
    np.testing.assert_array_equal(report.params.to_vector(), init.to_vector())
    assert len(set(report.objectives)) == 1


def test_zero_epochs_returns_initialization():
    data = synth_mean_task(3, 4, seed=1)
    report = train_sgd(data, Hyperparams(hidden_units=2, epochs=0, seed=4))
    np.testing.assert_array_equal(report.params.to_vector(), init_params(2, 2, 2, 4, "fan_in").to_vector())
    assert report.objectives == []


def test_fixed_scheme_starts_from_small_weights():
    data = synth_mean_task(3, 4, seed=1)
    report = train_sgd(data, Hyperparams(hidden_units=2, epochs=0, seed=4, init_scheme="fixed"))
    np.testing.assert_array_equal(report.params.to_vector(), init_params(2, 2, 2, 4).to_vector())


def test_training_is_deterministic():
    data = synth_order_task(10, 6, 0.3, seed=2)
    hyper = Hyperparams(hidden_units=3, epochs=4, batch_size=3, seed=5)
    a, b = train_sgd(data, hyper), train_sgd(data, hyper)
    assert a.objectives == b.objectives
    assert a.train_errors == b.train_errors
    np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())


def test_objective_mostly_increases_with_small_step():
    data = synth_mean_task(20, 8, seed=4)
    report = train_sgd(data, Hyperparams(hidden_units=5, epochs=40, learning_rate=0.002, seed=1))
    diffs = np.diff(report.objectives)
    assert np.mean(diffs >= 0) >= 0.9


def test_objective_is_regularized_likelihood():
    data = synth_mean_task(5, 4, seed=6)
    hyper = Hyperparams(hidden_units=3, epochs=2, l2_lambda=0.05, seed=2)
    report = train_sgd(data, hyper)
    assert report.objectives[-1] == pytest.approx(cond_log_likelihood(data, report.params, 0.05), abs=1e-9)


def test_validation_errors_recorded():
    data = synth_mean_task(5, 4, seed=6)
    val = synth_mean_task(3, 4, seed=7)
    report = train_sgd(data, Hyperparams(hidden_units=2, epochs=3), validation=val)
    assert len(report.val_errors) == 3
    assert "val_errors" in report.to_dict()


def test_overflowing_data_diverges():
    series = [TimeSeries(np.full((3, 2), 1e300), k) for k in (0, 1)]
    data = Dataset.from_series(series, K=2)
    with pytest.raises(DivergedError) as info:
        train_sgd(data, Hyperparams(hidden_units=2, epochs=3, learning_rate=1.0))
    assert info.value.epoch == 0


def test_huge_lambda_keeps_weights_small():
    data = synth_mean_task(10, 6, seed=0)
    report = train_sgd(data, Hyperparams(hidden_units=3, epochs=5, l2_lambda=1e6))
    p = report.params
    assert max(np.abs(p.A).max(), np.abs(p.W).max(), np.abs(p.V).max()) < 1e-3


def test_tune_lambda_single_value():
    data = synth_mean_task(4, 4, seed=0)
    assert tune_lambda(data, data, Hyperparams(hidden_units=2, epochs=1), [0.3]) == 0.3


def test_tune_lambda_ties_pick_largest():
    # learning rate 0 makes every grid value produce the same model
    data = synth_mean_task(4, 4, seed=0)
    hyper = Hyperparams(hidden_units=2, epochs=1, learning_rate=0.0)
    assert tune_lambda(data, data, hyper, [0.0, 1.0, 0.01]) == 1.0


def test_tune_lambda_rejects_bad_grid():
    data = synth_mean_task(2, 4, seed=0)
    with pytest.raises(InvalidArgumentError):
        tune_lambda(data, data, Hyperparams(), [])
    with pytest.raises(InvalidArgumentError):
        tune_lambda(data, data, Hyperparams(), [-1.0])


@pytest.mark.slow
def test_tune_lambda_prefers_zero_over_huge_on_order_task():
    data = synth_order_task(100, 20, 0.3, seed=0)
    train, val = data.subset(range(0, 160)), data.subset(range(160, 200))
    assert tune_lambda(train, val, Hyperparams(hidden_units=10), [0.0, 1e6]) == 0.0
