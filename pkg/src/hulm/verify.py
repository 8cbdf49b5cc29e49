"""Randomized checks of inference and gradients against the brute-force oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import learning
from .inference import log_m, marginals, predict_distribution
from .model import HulmParams
from .oracle import DEFAULT_BUDGET, OracleBudget, brute_log_m, brute_marginals, finite_diff_gradient

LOG_M_RTOL = 1e-10
MARGINAL_ATOL = 1e-9
GRAD_STEP = 1e-5
GRAD_RTOL = 1e-5
GRAD_ATOL = 1e-8
NORMALIZATION_ATOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    instances: int

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name:<22} worst={self.worst:.3e} tol={self.tolerance:.0e} "
                f"instances={self.instances}")


def random_instance(rng: np.random.Generator, H: int, T: int, D: int, K: int, scale: float = 0.5):
    """Frames ~ N(0, 1), every parameter ~ U[-scale, scale]."""
    n = HulmParams.zeros(H, D, K).to_vector().size
    theta = HulmParams.from_vector(rng.uniform(-scale, scale, n), H, D, K)
    x = rng.standard_normal((T, D))
    return x, theta


def _random_dims(rng, max_H, max_T, max_D, max_K, min_K=1):
    return (int(rng.integers(1, max_H + 1)), int(rng.integers(1, max_T + 1)),
            int(rng.integers(1, max_D + 1)), int(rng.integers(min_K, max_K + 1)))


def check_log_m(n=200, max_H=3, max_T=4, max_D=2, max_K=3, seed=0,
                budget: OracleBudget = DEFAULT_BUDGET) -> CheckResult:
    """Relative error of forward-backward log M against enumeration, floored at |log M| = 1."""
    budget.check(max_H, max_T)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        H, T, D, K = _random_dims(rng, max_H, max_T, max_D, max_K)
        x, theta = random_instance(rng, H, T, D, K)
        for k in range(K):
            ref = brute_log_m(x, k, theta, budget)
            err = abs(log_m(x, k, theta) - ref) / max(1.0, abs(ref))
            worst = max(worst, err)
    return CheckResult("log_m vs enumeration", worst <= LOG_M_RTOL, worst, LOG_M_RTOL, n)


def check_marginals(n=200, max_H=3, max_T=4, max_D=2, max_K=3, seed=1,
                    budget: OracleBudget = DEFAULT_BUDGET) -> CheckResult:
    """Max abs deviation of gamma/xi from enumeration, and of xi row/column sums from gamma."""
    budget.check(max_H, max_T)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        H, T, D, K = _random_dims(rng, max_H, max_T, max_D, max_K)
        x, theta = random_instance(rng, H, T, D, K)
        k = int(rng.integers(K))
        fb = marginals(x, k, theta)
        ref = brute_marginals(x, k, theta, budget)
        devs = [np.abs(fb.gamma - ref.gamma).max()]
        if T > 1:
            devs.append(np.abs(fb.xi - ref.xi).max())
            devs.append(np.abs(fb.xi.sum(axis=3) - fb.gamma[:-1]).max())
            devs.append(np.abs(fb.xi.sum(axis=2) - fb.gamma[1:]).max())
        worst = max(worst, *devs)
    return CheckResult("marginals vs enumeration", worst <= MARGINAL_ATOL, worst, MARGINAL_ATOL, n)


def gradient_discrepancy(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest |a - f| / (atol + rtol |f|); the check passes when this is <= 1."""
    return float(np.max(np.abs(analytic - numeric) / (GRAD_ATOL + GRAD_RTOL * np.abs(numeric))))


def check_gradient(n=50, max_H=3, max_T=4, max_D=2, max_K=3, seed=2) -> CheckResult:
    """Analytic gradient against central differences, every block, K >= 2."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        H, T, D, K = _random_dims(rng, max_H, max_T, max_D, max_K, min_K=2)
        x, theta = random_instance(rng, H, T, D, K)
        k = int(rng.integers(K))
        analytic = learning.gradient_example(x, k, theta).to_vector()
        numeric = finite_diff_gradient(x, k, theta, GRAD_STEP).to_vector()
        worst = max(worst, gradient_discrepancy(analytic, numeric))
    return CheckResult("gradient vs finite diff", worst <= 1.0, worst, 1.0, n)


def check_normalization(n=1000, max_H=4, max_T=8, max_D=3, max_K=4, seed=3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n):
        H, T, D, K = _random_dims(rng, max_H, max_T, max_D, max_K)
        if i % 4 == 1:
            T = 1
        if i % 4 == 2:
            H = 1
        x, theta = random_instance(rng, H, T, D, K, scale=2.0)
        worst = max(worst, abs(predict_distribution(x, theta).sum() - 1.0))
    return CheckResult("normalization", worst <= NORMALIZATION_ATOL, worst, NORMALIZATION_ATOL, n)


def run_verification(instances=200, grad_instances=50, max_H=3, max_T=4, seed=0,
                     budget: OracleBudget = DEFAULT_BUDGET) -> list:
    budget.check(max_H, max_T)
    return [
        check_log_m(instances, max_H, max_T, seed=seed, budget=budget),
        check_marginals(instances, max_H, max_T, seed=seed + 1, budget=budget),
        check_gradient(grad_instances, max_H, max_T, seed=seed + 2),
        check_normalization(seed=seed + 3),
    ]
