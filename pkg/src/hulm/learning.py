"""Conditional log-likelihood, its exact gradient, and mini-batch SGD."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .errors import DivergedError, InvalidArgumentError, NumericRangeError
from .inference import _label_log_m, _label_stats
from .model import (REGULARIZED_BLOCKS, HulmParams, Hyperparams, SeriesLike, as_frames,
                    as_label_index, init_params, unary_base)

log = logging.getLogger(__name__)


def _require_labeled(data: Dataset):
    if not data.is_labeled():
        raise InvalidArgumentError("every series must carry a label")


def logsumexp(v: np.ndarray) -> float:
    # scipy's version carries heavy per-call overhead on length-K vectors
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def l2_penalty(theta: HulmParams) -> float:
    with np.errstate(over="ignore"):
        return float(sum(np.sum(getattr(theta, name) ** 2) for name in REGULARIZED_BLOCKS))


def _all_label_log_m(frames: np.ndarray, theta: HulmParams) -> np.ndarray:
    logm = _label_log_m(unary_base(frames, theta), theta.V, theta.A) + theta.c
    if not np.all(np.isfinite(logm)):
        raise NumericRangeError("non-finite log M")
    return logm


def cond_log_likelihood(data: Dataset, theta: HulmParams, lam: float = 0.0) -> float:
    """sum_n log p(y_n | x_n) - lam * (|A|^2 + |W|^2 + |V|^2)."""
    if lam < 0:
        raise InvalidArgumentError("lambda must be non-negative")
    _require_labeled(data)
    total = 0.0
    for s in data:
        logm = _all_label_log_m(s.frames, theta)
        total += logm[s.label] - logsumexp(logm)
    return float(total - lam * l2_penalty(theta))


def score_dataset(data: Dataset, theta: HulmParams):
    """Return (unregularized log-likelihood, training error) in one pass."""
    ll = 0.0
    wrong = 0
    for s in data:
        logm = _all_label_log_m(s.frames, theta)
        ll += logm[s.label] - logsumexp(logm)
        wrong += int(np.argmax(logm)) != s.label
    return ll, wrong / len(data)


def _example_gradient(frames: np.ndarray, k: int, theta: HulmParams):
    """Gradient blocks of log p(k | x) as a dict, plus the log-likelihood."""
    logm, on, both_on = _label_stats(unary_base(frames, theta), theta.V, theta.A)
    logm = logm + theta.c
    if not np.all(np.isfinite(logm)):
        raise NumericRangeError("non-finite log M")
    log_z = logsumexp(logm)
    p = np.exp(logm - log_z)

    # clamped statistics under label k minus their expectation under p(y'|x)
    K, T, H = on.shape
    G = on[k] - (p @ on.reshape(K, T * H)).reshape(T, H)
    per_label_sum = on.sum(axis=1)                    # (K, H)
    dV = -(p[:, None] * per_label_sum).T
    dV[:, k] += per_label_sum[k]
    dc = -p
    dc[k] += 1.0
    grads = {
        "pi": G[0].copy(),
        "tau": G[-1].copy(),
        "A": both_on[k] - p @ both_on,
        "W": G.T @ frames,
        "V": dV,
        "b": G.sum(axis=0),
        "c": dc,
    }
    return grads, float(logm[k] - log_z)


def gradient_example(x: SeriesLike, y, theta: HulmParams) -> HulmParams:
    """Gradient of log p(y | x) with respect to every parameter block."""
    k = as_label_index(y, theta.K)
    grads, _ = _example_gradient(as_frames(x), k, theta)
    return HulmParams(**grads)


def _batch_blocks(batch: Sequence, theta: HulmParams, lam: float) -> dict:
    total = None
    for s in batch:
        if s.label is None:
            raise InvalidArgumentError("every series must carry a label")
        grads, _ = _example_gradient(s.frames, s.label, theta)
        if total is None:
            total = grads
        else:
            for name, g in grads.items():
                total[name] += g
    if lam:
        for name in REGULARIZED_BLOCKS:
            total[name] -= 2.0 * lam * getattr(theta, name)
    return total


def gradient_batch(batch: Sequence, theta: HulmParams, lam: float = 0.0) -> HulmParams:
    """Summed example gradients minus 2*lam*theta on the A, W, V blocks."""
    if len(batch) == 0:
        raise InvalidArgumentError("empty batch")
    if lam < 0:
        raise InvalidArgumentError("lambda must be non-negative")
    return HulmParams(**_batch_blocks(batch, theta, lam))


@dataclass
class TrainReport:
    objectives: list = field(default_factory=list)
    train_errors: list = field(default_factory=list)
    val_errors: list = field(default_factory=list)
    params: Optional[object] = None

    def to_dict(self) -> dict:
        out = {"objectives": list(self.objectives), "train_errors": list(self.train_errors)}
        if self.val_errors:
            out["val_errors"] = list(self.val_errors)
        return out


def run_sgd(data: Dataset, theta, hyper: Hyperparams, batch_grad, score, penalty,
            regularized=REGULARIZED_BLOCKS, validation=None, val_error=None) -> TrainReport:
    """Shared mini-batch gradient-ascent loop.

    ``batch_grad(batch, theta, lam)`` returns a dict of summed gradient blocks
    keyed like ``theta.blocks()``; ``score(data, theta)`` returns
    (log-likelihood, error); ``penalty(theta)`` is the squared norm that lambda
    multiplies in the objective. Each step follows the batch-mean likelihood
    gradient, then applies the L2 term implicitly to the ``regularized`` blocks
    with weight lambda/N per example, so an epoch tracks the full regularized
    objective divided by N and any lambda stays stable.
    """
    _require_labeled(data)
    N = len(data)
    if N == 0:
        raise InvalidArgumentError("empty training set")
    rng = np.random.default_rng(hyper.seed)
    lam = hyper.l2_lambda
    names = [name for name, _ in theta.blocks()]
    report = TrainReport()
    for epoch in range(int(hyper.epochs)):
        step = hyper.learning_rate * hyper.lr_decay ** epoch
        order = rng.permutation(N)
        shrink = 1.0 / (1.0 + 2.0 * step * lam / N)
        if step > 0:
            for start in range(0, N, hyper.batch_size):
                batch = [data.series[i] for i in order[start:start + hyper.batch_size]]
                try:
                    grad = batch_grad(batch, theta, 0.0)
                except NumericRangeError as exc:
                    raise DivergedError(epoch, f"numeric overflow during epoch {epoch}: {exc}") from exc
                scale = step / len(batch)
                for name in names:
                    block = getattr(theta, name)
                    block += scale * grad[name]
                    if lam and name in regularized:
                        block *= shrink
        try:
            ll, err = score(data, theta)
        except NumericRangeError as exc:
            raise DivergedError(epoch, f"numeric overflow during epoch {epoch}: {exc}") from exc
        objective = ll - lam * penalty(theta)
        if not np.isfinite(objective):
            raise DivergedError(epoch)
        report.objectives.append(float(objective))
        report.train_errors.append(float(err))
        if validation is not None:
            report.val_errors.append(float(val_error(validation, theta)))
        log.debug("epoch %d objective %.6f train error %.4f", epoch, objective, err)
    report.params = theta
    return report


def train_sgd(data: Dataset, hyper: Hyperparams, validation: Optional[Dataset] = None) -> TrainReport:
    """Train a hidden-unit logistic model from ``init_params(..., hyper.seed, hyper.init_scheme)``."""
    _require_labeled(data)
    if len(data) == 0:
        raise InvalidArgumentError("empty training set")
    theta = init_params(hyper.hidden_units, data.D, data.K, hyper.seed, hyper.init_scheme)
    return run_sgd(data, theta, hyper, _batch_blocks, score_dataset, l2_penalty,
                   validation=validation, val_error=lambda d, p: score_dataset(d, p)[1])


def tune_lambda(train: Dataset, val: Dataset, hyper: Hyperparams, grid: Sequence[float]) -> float:
    """Return the grid value with the lowest validation error (ties: larger lambda)."""
    from dataclasses import replace

    from .inference import predict_label

    grid = [float(g) for g in grid]
    if not grid:
        raise InvalidArgumentError("empty lambda grid")
    if any(g < 0 for g in grid):
        raise InvalidArgumentError("lambda values must be non-negative")
    best_lam, best_err = None, np.inf
    for lam in sorted(grid, reverse=True):
        theta = train_sgd(train, replace(hyper, l2_lambda=lam)).params
        err = np.mean([predict_label(s, theta) != s.label for s in val])
        log.info("lambda %g: validation error %.4f", lam, err)
        if err < best_err:
            best_lam, best_err = lam, err
    return best_lam
