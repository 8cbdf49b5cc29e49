"""Naive logistic baseline: softmax over label scores summed across frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InvalidArgumentError
from .learning import logsumexp, run_sgd
from .model import Hyperparams, SeriesLike, as_frames

NAIVE_BLOCKS = ("W", "c")


@dataclass(frozen=True)
class NaiveParams:
    W: np.ndarray   # (K, D)
    c: np.ndarray   # (K,)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        if W.ndim != 2 or c.shape != (W.shape[0],):
            raise InvalidArgumentError(f"W must be K x D and c length K, got {W.shape} and {c.shape}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "c", c)

    @property
    def K(self) -> int:
        return self.W.shape[0]

    @property
    def D(self) -> int:
        return self.W.shape[1]

    def blocks(self):
        yield "W", self.W
        yield "c", self.c

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.c])

    @classmethod
    def from_vector(cls, vec, K: int, D: int) -> "NaiveParams":
        vec = np.asarray(vec, dtype=np.float64)
        return cls(vec[:K * D].reshape(K, D).copy(), vec[K * D:].copy())

    @classmethod
    def zeros(cls, K: int, D: int) -> "NaiveParams":
        return cls(np.zeros((K, D)), np.zeros(K))


def _scores(frames: np.ndarray, params: NaiveParams) -> np.ndarray:
    if frames.shape[1] != params.D:
        raise InvalidArgumentError(f"series has D={frames.shape[1]}, parameters expect D={params.D}")
    return params.W @ frames.sum(axis=0) + params.c


def naive_predict(x: SeriesLike, params: NaiveParams) -> np.ndarray:
    s = _scores(as_frames(x), params)
    p = np.exp(s - s.max())
    return p / p.sum()


def naive_log_likelihood(data: Dataset, params: NaiveParams, lam: float = 0.0) -> float:
    total = 0.0
    for s in data:
        scores = _scores(s.frames, params)
        total += scores[s.label] - logsumexp(scores)
    return float(total - lam * np.sum(params.W ** 2))


def _score(data: Dataset, params: NaiveParams):
    ll, wrong = 0.0, 0
    for s in data:
        scores = _scores(s.frames, params)
        ll += scores[s.label] - logsumexp(scores)
        wrong += int(np.argmax(scores)) != s.label
    return ll, wrong / len(data)


def naive_gradient(batch, params: NaiveParams, lam: float = 0.0) -> dict:
    """Summed gradient of log p(y | x) over ``batch`` minus 2*lam*W."""
    dW = np.zeros_like(params.W)
    dc = np.zeros_like(params.c)
    for s in batch:
        total = s.frames.sum(axis=0)
        p = naive_predict(s.frames, params)
        r = -p
        r[s.label] += 1.0
        dW += np.outer(r, total)
        dc += r
    if lam:
        dW -= 2.0 * lam * params.W
    return {"W": dW, "c": dc}


def naive_train(data: Dataset, hyper: Hyperparams, return_report: bool = False):
    """Fit by the same SGD loop as the hidden-unit model, starting from zero."""
    if len(data) == 0:
        raise InvalidArgumentError("empty training set")
    params = NaiveParams.zeros(data.K, data.D)
    report = run_sgd(data, params, hyper, naive_gradient, _score,
                     lambda p: float(np.sum(p.W ** 2)), regularized=("W",))
    return report if return_report else report.params
