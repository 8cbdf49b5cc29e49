"""Brute-force reference computations, exponential in H*T by design.

These enumerate every hidden assignment and call ``model.energy`` directly,
so they share no code with the forward-backward path they are used to check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import BudgetError, InvalidArgumentError
from .inference import Marginals
from .model import HulmParams, SeriesLike, as_frames, as_label_index, energy


@dataclass(frozen=True)
class OracleBudget:
    max_states: int = 2**20

    def check(self, H: int, T: int):
        if H * T > np.log2(self.max_states):
            raise BudgetError(
                f"enumerating 2^{H * T} hidden states exceeds the budget of {self.max_states}")


DEFAULT_BUDGET = OracleBudget()


def all_assignments(T: int, H: int) -> np.ndarray:
    """Every binary (T, H) matrix, stacked to shape (2**(T*H), T, H)."""
    states = np.array(list(itertools.product((0.0, 1.0), repeat=T * H)))
    return states.reshape(-1, T, H)


def _log_weights(x, y, theta, budget):
    frames = as_frames(x)
    T = frames.shape[0]
    budget.check(theta.H, T)
    z = all_assignments(T, theta.H)
    return z, energy(frames, z, y, theta)


def brute_log_m(x: SeriesLike, y, theta: HulmParams, budget: OracleBudget = DEFAULT_BUDGET) -> float:
    _, e = _log_weights(x, y, theta, budget)
    return float(logsumexp(e))


def brute_predict_distribution(x: SeriesLike, theta: HulmParams,
                               budget: OracleBudget = DEFAULT_BUDGET) -> np.ndarray:
    logm = np.array([brute_log_m(x, k, theta, budget) for k in range(theta.K)])
    return np.exp(logm - logsumexp(logm))


def brute_marginals(x: SeriesLike, y, theta: HulmParams, budget: OracleBudget = DEFAULT_BUDGET) -> Marginals:
    z, e = _log_weights(x, y, theta, budget)
    w = np.exp(e - logsumexp(e))
    on = np.einsum("s,sth->th", w, z)
    gamma = np.stack([1.0 - on, on], axis=-1)
    T, H = on.shape
    xi = np.zeros((T - 1, H, 2, 2))
    for k in (0, 1):
        for l in (0, 1):
            hit = (z[:, :-1, :] == k) & (z[:, 1:, :] == l)
            xi[:, :, k, l] = np.einsum("s,sth->th", w, hit.astype(np.float64))
    return Marginals(gamma=gamma, xi=xi)


def brute_log_likelihood(x: SeriesLike, y, theta: HulmParams, budget: OracleBudget = DEFAULT_BUDGET) -> float:
    k = as_label_index(y, theta.K)
    logm = np.array([brute_log_m(x, j, theta, budget) for j in range(theta.K)])
    return float(logm[k] - logsumexp(logm))


def central_difference(objective, vec: np.ndarray, i: int, step: float) -> float:
    """[f(v + step e_i) - f(v - step e_i)] / (2 step); unchanged when step changes sign."""
    plus = vec.copy()
    minus = vec.copy()
    plus[i] += step
    minus[i] -= step
    return (objective(plus) - objective(minus)) / (2.0 * step)


def finite_diff_gradient(x: SeriesLike, y, theta: HulmParams, step: float = 1e-5, objective=None) -> HulmParams:
    """Central differences of the single-example log-likelihood.

    ``objective(theta) -> float`` overrides the default log p(y | x).
    """
    if not step > 0:
        raise InvalidArgumentError("step must be positive")
    if objective is None:
        from .inference import log_m_all

        k = as_label_index(y, theta.K)

        def objective(p):
            logm = log_m_all(x, p)
            return float(logm[k] - logsumexp(logm))

    H, D, K = theta.H, theta.D, theta.K
    base = theta.to_vector()
    f = lambda v: objective(HulmParams.from_vector(v, H, D, K))
    grad = np.array([central_difference(f, base, i, step) for i in range(base.size)])
    return HulmParams.from_vector(grad, H, D, K)
