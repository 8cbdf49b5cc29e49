"""Exact forward-backward inference over the independent binary hidden chains.

Everything is kept in the log domain. The potential between steps t-1 and t
of chain h is

    log Psi_{t,h}(i, k) = k * (i * A_h + u_{t,h})

with ``u`` the label-specific unary term (see ``model.unary_base``), so only
the "on" state carries a non-zero log-potential.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NumericRangeError
from .model import HulmParams, SeriesLike, as_frames, as_label_index, unary_base


@njit(cache=True, nogil=True)
def _logaddexp(a, b):
    m = max(a, b)
    if m == -np.inf:
        return -np.inf
    return m + np.log1p(np.exp(-abs(a - b)))


@njit(cache=True, nogil=True)
def _forward(u, A):
    T, H = u.shape
    la = np.empty((T, H, 2))
    for h in range(H):
        la[0, h, 0] = 0.0
        la[0, h, 1] = u[0, h]
    # time-major loops keep memory access contiguous
    for t in range(1, T):
        for h in range(H):
            a0 = la[t - 1, h, 0]
            a1 = la[t - 1, h, 1]
            la[t, h, 0] = _logaddexp(a0, a1)
            la[t, h, 1] = u[t, h] + _logaddexp(a0, a1 + A[h])
    return la


@njit(cache=True, nogil=True)
def _backward(u, A):
    T, H = u.shape
    lb = np.empty((T, H, 2))
    for h in range(H):
        lb[T - 1, h, 0] = 0.0
        lb[T - 1, h, 1] = 0.0
    for t in range(T - 2, -1, -1):
        for h in range(H):
            on = u[t + 1, h] + lb[t + 1, h, 1]
            lb[t, h, 0] = _logaddexp(lb[t + 1, h, 0], on)
            lb[t, h, 1] = _logaddexp(lb[t + 1, h, 0], on + A[h])
    return lb


@njit(cache=True, nogil=True)
def _log_chains(la):
    T, H, _ = la.shape
    out = np.empty(H)
    for h in range(H):
        out[h] = _logaddexp(la[T - 1, h, 0], la[T - 1, h, 1])
    return out


@njit(cache=True, nogil=True)
def _label_log_m(ub, V, A):
    """Sum over chains of the log chain partition, for every label. Shape (K,)."""
    K = V.shape[1]
    out = np.empty(K)
    for k in range(K):
        u = ub + V[:, k]
        out[k] = _log_chains(_forward(u, A)).sum()
    return out


@njit(cache=True, nogil=True)
def _label_stats(ub, V, A):
    """Per-label sufficient statistics for the likelihood gradient.

    Returns (log_m without label bias (K,), P(z_{t,h}=1) (K, T, H),
    sum_t P(z_{t,h}=1, z_{t+1,h}=1) (K, H)).
    """
    T, H = ub.shape
    K = V.shape[1]
    logm = np.empty(K)
    on = np.empty((K, T, H))
    both_on = np.zeros((K, H))
    for k in range(K):
        u = ub + V[:, k]
        la = _forward(u, A)
        lb = _backward(u, A)
        lc = _log_chains(la)
        logm[k] = lc.sum()
        for t in range(T):
            for h in range(H):
                on[k, t, h] = np.exp(la[t, h, 1] + lb[t, h, 1] - lc[h])
        for t in range(T - 1):
            for h in range(H):
                both_on[k, h] += np.exp(la[t, h, 1] + A[h] + u[t + 1, h] + lb[t + 1, h, 1] - lc[h])
    return logm, on, both_on


@dataclass(frozen=True)
class MessageTable:
    """Log-domain forward/backward messages indexed (t, h, state)."""

    log_alpha: np.ndarray
    log_beta: np.ndarray
    log_chain: np.ndarray


@dataclass(frozen=True)
class Marginals:
    """Node marginals gamma (T, H, 2) and edge marginals xi (T-1, H, 2, 2)."""

    gamma: np.ndarray
    xi: np.ndarray


def _label_unary(x: SeriesLike, y, theta: HulmParams) -> np.ndarray:
    k = as_label_index(y, theta.K)
    u = unary_base(as_frames(x), theta) + theta.V[:, k]
    if not np.all(np.isfinite(u)):
        raise NumericRangeError("non-finite log-potential; parameters or inputs overflowed")
    return u


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericRangeError(f"non-finite {what}")
    return arr


def forward(x: SeriesLike, y, theta: HulmParams) -> np.ndarray:
    """Log forward messages, shape (T, H, 2)."""
    u = _label_unary(x, y, theta)
    return _finite(_forward(u, theta.A), "forward message")


def backward(x: SeriesLike, y, theta: HulmParams) -> np.ndarray:
    """Log backward messages, shape (T, H, 2); the last step is 0."""
    u = _label_unary(x, y, theta)
    return _finite(_backward(u, theta.A), "backward message")


def messages(x: SeriesLike, y, theta: HulmParams) -> MessageTable:
    u = _label_unary(x, y, theta)
    la = _finite(_forward(u, theta.A), "forward message")
    lb = _finite(_backward(u, theta.A), "backward message")
    return MessageTable(la, lb, _log_chains(la))


def log_m(x: SeriesLike, y, theta: HulmParams) -> float:
    """log M(x, y): label bias plus the summed log partition of every chain."""
    k = as_label_index(y, theta.K)
    la = forward(x, k, theta)
    return float(theta.c[k] + _log_chains(la).sum())


def log_m_all(x: SeriesLike, theta: HulmParams) -> np.ndarray:
    """log M(x, y) for every label, shape (K,)."""
    ub = unary_base(as_frames(x), theta)
    out = _label_log_m(ub, theta.V, theta.A) + theta.c
    return _finite(out, "log M")


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    p = np.exp(shifted)
    return p / p.sum()


def predict_distribution(x: SeriesLike, theta: HulmParams) -> np.ndarray:
    return _softmax(log_m_all(x, theta))


def predict_label(x: SeriesLike, theta: HulmParams) -> int:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return int(np.argmax(predict_distribution(x, theta)))


def marginals(x: SeriesLike, y, theta: HulmParams) -> Marginals:
    u = _label_unary(x, y, theta)
    table = messages(x, y, theta)
    la, lb, lc = table.log_alpha, table.log_beta, table.log_chain
    gamma = np.exp(la + lb - lc[None, :, None])
    T, H = u.shape
    xi = np.empty((T - 1, H, 2, 2))
    if T > 1:
        # log Psi_{t+1}(k, l) = l * (k * A + u_{t+1})
        kl = np.array([[0.0, 0.0], [0.0, 1.0]])
        l_on = np.array([0.0, 1.0])
        log_psi = kl[None, None] * theta.A[None, :, None, None] + l_on[None, None, None, :] * u[1:, :, None, None]
        xi = np.exp(la[:-1, :, :, None] + log_psi + lb[1:, :, None, :] - lc[None, :, None, None])
    return Marginals(gamma=gamma, xi=xi)
