import numpy as np
import pytest

from hulm.errors import BudgetError, InvalidArgumentError
from hulm.inference import log_m, marginals
from hulm.learning import gradient_example
from hulm.model import HulmParams, energy
from hulm.oracle import (OracleBudget, all_assignments, brute_log_m, brute_marginals,
                         central_difference, finite_diff_gradient)

from conftest import random_params


def test_brute_log_m_zero_params():
    assert brute_log_m(np.ones((3, 2)), 0, HulmParams.zeros(2, 2, 2)) == pytest.approx(6 * np.log(2))


def test_brute_log_m_two_state_closed_form(rng):
    theta = random_params(rng, 1, 2, 3)
    x = rng.normal(size=(1, 2))
    k = 2
    on = theta.pi[0] + theta.tau[0] + theta.c[k] + theta.W[0] @ x[0] + theta.V[0, k] + theta.b[0]
    assert brute_log_m(x, k, theta) == pytest.approx(np.log(np.exp(theta.c[k]) + np.exp(on)), abs=1e-12)


def test_brute_log_m_equals_forward_backward(rng):
    for _ in range(10):
        theta = random_params(rng, 3, 2, 2)
        x = rng.normal(size=(4, 2))
        assert brute_log_m(x, 1, theta) == pytest.approx(log_m(x, 1, theta), rel=1e-10)


def test_budget_refuses_large_enumeration():
    theta = HulmParams.zeros(4, 1, 2)
    with pytest.raises(BudgetError):
        brute_log_m(np.zeros((5, 1)), 0, theta, OracleBudget(max_states=2**19))
    brute_log_m(np.zeros((5, 1)), 0, theta, OracleBudget(max_states=2**20))


def test_brute_marginals_zero_params():
    m = brute_marginals(np.ones((3, 2)), 1, HulmParams.zeros(2, 2, 2))
    np.testing.assert_allclose(m.gamma, 0.5, atol=1e-15)
    np.testing.assert_allclose(m.xi, 0.25, atol=1e-15)


def test_brute_marginals_match_forward_backward(rng):
    theta = random_params(rng, 2, 2, 3)
    x = rng.normal(size=(3, 2))
    ref, fb = brute_marginals(x, 2, theta), marginals(x, 2, theta)
    np.testing.assert_allclose(ref.gamma, fb.gamma, atol=1e-9)
    np.testing.assert_allclose(ref.xi, fb.xi, atol=1e-9)


def test_brute_marginals_saturate_with_large_label_weight(rng):
    theta = random_params(rng, 2, 2, 2)
    theta.V[1, 0] = 40.0
    m = brute_marginals(rng.normal(size=(3, 2)), 0, theta)
    assert np.all(m.gamma[:, 1, 1] >= 1 - 1e-6)


def test_brute_marginals_consistency(rng):
    theta = random_params(rng, 2, 2, 2, scale=2.0)
    m = brute_marginals(rng.normal(size=(4, 2)), 1, theta)
    np.testing.assert_allclose(m.xi.sum(axis=3), m.gamma[:-1], atol=1e-12)
    np.testing.assert_allclose(m.xi.sum(axis=2), m.gamma[1:], atol=1e-12)


def test_hidden_unit_relabeling_invariance(rng):
    theta = random_params(rng, 3, 2, 2)
    perm = np.array([2, 0, 1])
    permuted = theta.replace(pi=theta.pi[perm], tau=theta.tau[perm], A=theta.A[perm],
                             W=theta.W[perm], V=theta.V[perm], b=theta.b[perm])
    x = rng.normal(size=(3, 2))
    assert brute_log_m(x, 0, theta) == pytest.approx(brute_log_m(x, 0, permuted), abs=1e-12)


def test_enumeration_order_irrelevant(rng):
    from scipy.special import logsumexp

    theta = random_params(rng, 2, 2, 2)
    x = rng.normal(size=(4, 2))
    e = energy(x, all_assignments(4, 2), 1, theta)
    forward_order = logsumexp(e)
    shuffled = logsumexp(e[rng.permutation(e.size)])
    assert abs(forward_order - shuffled) <= 1e-12
    assert abs(brute_log_m(x, 1, theta) - forward_order) <= 1e-12


def test_finite_diff_label_bias_at_zero():
    theta = HulmParams.zeros(2, 2, 3)
    g = finite_diff_gradient(np.ones((3, 2)), 1, theta, 1e-4)
    np.testing.assert_allclose(g.c, [-1 / 3, 2 / 3, -1 / 3], atol=1e-8)


def test_finite_diff_second_order_convergence(rng):
    theta = random_params(rng, 2, 2, 2)
    x = rng.normal(size=(3, 2))
    exact = gradient_example(x, 0, theta).to_vector()
    errs = [np.abs(finite_diff_gradient(x, 0, theta, h).to_vector() - exact).max() for h in (1e-2, 5e-3)]
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_central_difference_symmetric_in_step_sign(rng):
    from hulm.inference import log_m_all

    theta = random_params(rng, 2, 1, 2)
    x = rng.normal(size=(3, 1))
    f = lambda v: float(log_m_all(x, HulmParams.from_vector(v, 2, 1, 2))[1])
    base = theta.to_vector()
    for i in range(base.size):
        assert central_difference(f, base, i, 1e-4) == central_difference(f, base, i, -1e-4)


def test_finite_diff_rejects_nonpositive_step(rng):
    with pytest.raises(InvalidArgumentError):
        finite_diff_gradient(np.ones((2, 1)), 0, HulmParams.zeros(1, 1, 2), 0.0)
