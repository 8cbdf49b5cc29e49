"""Core types of the hidden-unit logistic model: series, parameters, energy.

The model scores a (series, hidden assignment, label) triple with

    E = z_1.pi + z_T.tau + c.y + sum_{t>=2} sum_h z_{t-1,h} A_h z_{t,h}
        + sum_t [z_t.W x_t + z_t.V y + z_t.b]

where every z_{t,h} is a binary hidden unit. ``A`` is the diagonal of the
transition matrix, so the H hidden chains are independent given (x, y).
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union

import numpy as np

from .errors import InvalidArgumentError

INIT_VARIANCE = 1e-3
INIT_SCHEMES = ("fixed", "fan_in")
BLOCKS = ("pi", "tau", "A", "W", "V", "b", "c")
REGULARIZED_BLOCKS = ("A", "W", "V")


@dataclass(frozen=True)
class TimeSeries:
    """A T x D matrix of frames with an optional class label and group id."""

    frames: np.ndarray
    label: Optional[int] = None
    group: Optional[str] = None

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim == 1:
            frames = frames[:, None]
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise InvalidArgumentError(f"frames must be a non-empty T x D matrix, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise InvalidArgumentError("frames contain non-finite values")
        if self.label is not None and int(self.label) < 0:
            raise InvalidArgumentError(f"label must be non-negative, got {self.label}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def D(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames) -> "TimeSeries":
        return TimeSeries(frames, self.label, self.group)

    def with_label(self, label) -> "TimeSeries":
        return TimeSeries(self.frames, label, self.group)


SeriesLike = Union[TimeSeries, np.ndarray]


def as_frames(x: SeriesLike) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.frames
    frames = np.asarray(x, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[:, None]
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise InvalidArgumentError(f"expected a T x D frame matrix, got shape {frames.shape}")
    return frames


def one_hot(k: int, K: int) -> np.ndarray:
    if not 0 <= k < K:
        raise InvalidArgumentError(f"class index {k} outside [0, {K})")
    y = np.zeros(K)
    y[k] = 1.0
    return y


def as_label_index(y, K: int) -> int:
    """Accept either a class index or a 1-of-K vector and return the index."""
    if np.ndim(y) == 0:
        k = int(y)
    else:
        y = np.asarray(y)
        if y.shape != (K,) or not np.all((y == 0) | (y == 1)) or y.sum() != 1:
            raise InvalidArgumentError(f"label vector must be 1-of-{K}, got {y!r}")
        k = int(np.argmax(y))
    if not 0 <= k < K:
        raise InvalidArgumentError(f"class index {k} outside [0, {K})")
    return k


@dataclass(frozen=True)
class HulmParams:
    """Parameter set {pi, tau, A, W, V, b, c}.

    ``A`` holds the per-chain transition weights (diagonal of diag(A)).
    The same container is used for gradients.
    """

    pi: np.ndarray
    tau: np.ndarray
    A: np.ndarray
    W: np.ndarray
    V: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        H, D = self.W.shape if self.W.ndim == 2 else (-1, -1)
        K = self.c.shape[0] if self.c.ndim == 1 else -1
        expected = {"pi": (H,), "tau": (H,), "A": (H,), "W": (H, D), "V": (H, K), "b": (H,), "c": (K,)}
        if H < 1 or D < 1 or K < 1:
            raise InvalidArgumentError("W must be H x D and c length K with H, D, K >= 1")
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvalidArgumentError(
                    f"block {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def H(self) -> int:
        return self.W.shape[0]

    @property
    def D(self) -> int:
        return self.W.shape[1]

    @property
    def K(self) -> int:
        return self.c.shape[0]

    def blocks(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in BLOCKS:
            yield name, getattr(self, name)

    def copy(self) -> "HulmParams":
        return HulmParams(**{name: arr.copy() for name, arr in self.blocks()})

    def replace(self, **blocks) -> "HulmParams":
        current = {name: arr for name, arr in self.blocks()}
        current.update(blocks)
        return HulmParams(**current)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(arr)) for _, arr in self.blocks())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.blocks()])

    @classmethod
    def from_vector(cls, vec, H: int, D: int, K: int) -> "HulmParams":
        shapes = cls.shapes(H, D, K)
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != sum(int(np.prod(s)) for s in shapes.values()):
            raise InvalidArgumentError("vector length does not match (H, D, K)")
        out, start = {}, 0
        for name in BLOCKS:
            n = int(np.prod(shapes[name]))
            out[name] = vec[start:start + n].reshape(shapes[name]).copy()
            start += n
        return cls(**out)

    @staticmethod
    def shapes(H: int, D: int, K: int) -> dict:
        return {"pi": (H,), "tau": (H,), "A": (H,), "W": (H, D), "V": (H, K), "b": (H,), "c": (K,)}

    @classmethod
    def zeros(cls, H: int, D: int, K: int) -> "HulmParams":
        return cls(**{name: np.zeros(s) for name, s in cls.shapes(H, D, K).items()})

    def __add__(self, other: "HulmParams") -> "HulmParams":
        return HulmParams(**{name: arr + getattr(other, name) for name, arr in self.blocks()})

    def __sub__(self, other: "HulmParams") -> "HulmParams":
        return HulmParams(**{name: arr - getattr(other, name) for name, arr in self.blocks()})

    def scale(self, s: float) -> "HulmParams":
        return HulmParams(**{name: s * arr for name, arr in self.blocks()})


Gradient = HulmParams


@dataclass(frozen=True)
class Hyperparams:
    hidden_units: int = 100
    l2_lambda: float = 1e-4
    learning_rate: float = 0.01
    lr_decay: float = 0.98
    epochs: int = 200
    batch_size: int = 1
    seed: int = 0
    init_scheme: str = "fan_in"

    def __post_init__(self):
        if int(self.hidden_units) < 1:
            raise InvalidArgumentError("hidden_units must be positive")
        if not self.l2_lambda >= 0:
            raise InvalidArgumentError("l2_lambda must be non-negative")
        # learning_rate == 0 is accepted: it freezes parameters at initialization
        if not self.learning_rate >= 0:
            raise InvalidArgumentError("learning_rate must be non-negative")
        if not 0 < self.lr_decay <= 1:
            raise InvalidArgumentError("lr_decay must lie in (0, 1]")
        if int(self.epochs) < 0:
            raise InvalidArgumentError("epochs must be non-negative")
        if int(self.batch_size) < 1:
            raise InvalidArgumentError("batch_size must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        if self.init_scheme not in INIT_SCHEMES:
            raise InvalidArgumentError(f"init_scheme must be one of {INIT_SCHEMES}")


def init_params(H: int, D: int, K: int, seed: int = 0, scheme: str = "fixed") -> HulmParams:
    """Gaussian A, W, V and zero pi, tau, b, c.

    ``fixed`` draws A, W and V with variance 1e-3. ``fan_in`` keeps A at 1e-3
    but gives W variance 1/D and V variance 1/K, so the initial unit inputs
    have spread of order one whatever the frame dimension. Both schemes use
    the same draws, rescaled.
    """
    if min(H, D, K) < 1:
        raise InvalidArgumentError(f"H, D, K must be >= 1, got {(H, D, K)}")
    if scheme not in INIT_SCHEMES:
        raise InvalidArgumentError(f"unknown init scheme {scheme!r}, expected one of {INIT_SCHEMES}")
    rng = np.random.default_rng(seed)
    sd = np.sqrt(INIT_VARIANCE)
    A = rng.normal(0.0, sd, size=H)
    W = rng.normal(0.0, sd, size=(H, D))
    V = rng.normal(0.0, sd, size=(H, K))
    if scheme == "fan_in":
        W *= np.sqrt(1.0 / D) / sd
        V *= np.sqrt(1.0 / K) / sd
    return HulmParams(pi=np.zeros(H), tau=np.zeros(H), A=A, W=W, V=V, b=np.zeros(H), c=np.zeros(K))


def _check_dims(frames: np.ndarray, theta: HulmParams):
    if frames.shape[1] != theta.D:
        raise InvalidArgumentError(f"series has D={frames.shape[1]}, parameters expect D={theta.D}")


def energy(x: SeriesLike, z, y, theta: HulmParams):
    """Energy of hidden assignment(s) ``z`` with shape (..., T, H).

    Leading axes of ``z`` are broadcast, so a stack of assignments returns
    a stack of energies.
    """
    frames = as_frames(x)
    _check_dims(frames, theta)
    k = as_label_index(y, theta.K)
    z = np.asarray(z, dtype=np.float64)
    T = frames.shape[0]
    if z.shape[-2:] != (T, theta.H):
        raise InvalidArgumentError(f"assignment shape {z.shape[-2:]} does not match (T, H)=({T}, {theta.H})")
    if not np.all((z == 0) | (z == 1)):
        raise InvalidArgumentError("hidden assignment entries must be 0 or 1")
    e = z[..., 0, :] @ theta.pi + z[..., -1, :] @ theta.tau + theta.c[k]
    if T > 1:
        e = e + np.einsum("...th,...th,h->...", z[..., :-1, :], z[..., 1:, :], theta.A)
    inputs = frames @ theta.W.T                     # (T, H)
    e = e + np.einsum("...th,th->...", z, inputs)
    e = e + z.sum(axis=-2) @ (theta.V[:, k] + theta.b)
    return e


def log_potential(t: int, h: int, k_prev: int, k: int, x_t, y, theta: HulmParams, T: int) -> float:
    """Log of the chain-h potential at 1-based step ``t``.

    The initial/final biases are folded into the first and last step; the
    label bias is not included (it is added once per label in ``log_m``).
    """
    if not 1 <= t <= T:
        raise InvalidArgumentError(f"time index {t} outside [1, {T}]")
    if not 0 <= h < theta.H:
        raise InvalidArgumentError(f"chain index {h} outside [0, {theta.H})")
    if k_prev not in (0, 1) or k not in (0, 1):
        raise InvalidArgumentError("states must be 0 or 1")
    x_t = np.asarray(x_t, dtype=np.float64).ravel()
    if x_t.shape != (theta.D,):
        raise InvalidArgumentError(f"frame has length {x_t.size}, expected {theta.D}")
    label = as_label_index(y, theta.K)
    if t == 1:
        k_prev = 0
    if k == 0:
        return 0.0
    value = k_prev * theta.A[h] + theta.W[h] @ x_t + theta.V[h, label] + theta.b[h]
    if t == 1:
        value += theta.pi[h]
    if t == T:
        value += theta.tau[h]
    return float(value)


def unary_base(frames: np.ndarray, theta: HulmParams) -> np.ndarray:
    """Label-free part of the 'on' log-potential for every (t, h), shape (T, H)."""
    _check_dims(frames, theta)
    # overflow surfaces as inf and is reported by the caller's divergence check
    with np.errstate(over="ignore", invalid="ignore"):
        u = frames @ theta.W.T + theta.b
    u[0] += theta.pi
    u[-1] += theta.tau
    return u
