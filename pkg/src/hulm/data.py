"""Datasets, the line-delimited file format, windowing, folds and synthetic tasks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ParseError
from .model import TimeSeries


@dataclass(frozen=True)
class Dataset:
    series: tuple
    K: int
    D: int
    label_names: Optional[tuple] = None

    def __post_init__(self):
        series = tuple(self.series)
        object.__setattr__(self, "series", series)
        if self.K < 1:
            raise InvalidArgumentError("K must be >= 1")
        for i, s in enumerate(series):
            if s.D != self.D:
                raise InvalidArgumentError(f"series {i} has D={s.D}, dataset has D={self.D}")
            if s.label is not None and s.label >= self.K:
                raise InvalidArgumentError(f"series {i} has label {s.label} outside [0, {self.K})")
        if self.label_names is not None:
            names = tuple(str(n) for n in self.label_names)
            if len(names) != self.K:
                raise InvalidArgumentError(f"{len(names)} label names given for K={self.K}")
            object.__setattr__(self, "label_names", names)

    @classmethod
    def from_series(cls, series: Sequence[TimeSeries], K: Optional[int] = None, label_names=None) -> "Dataset":
        series = tuple(series)
        if not series:
            raise InvalidArgumentError("cannot infer D from an empty series list")
        if K is None:
            labels = [s.label for s in series if s.label is not None]
            K = max(labels) + 1 if labels else 1
        return cls(series, K, series[0].D, label_names)

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, i):
        return self.series[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([-1 if s.label is None else s.label for s in self.series], dtype=int)

    @property
    def groups(self) -> list:
        return [s.group for s in self.series]

    def is_labeled(self) -> bool:
        return all(s.label is not None for s in self.series)

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.series[int(i)] for i in indices), self.K, self.D, self.label_names)

    def map_frames(self, fn) -> "Dataset":
        new = tuple(s.with_frames(fn(s.frames)) for s in self.series)
        D = new[0].D if new else self.D
        return Dataset(new, self.K, D, self.label_names)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.K == other.K and self.D == other.D and self.label_names == other.label_names
                and len(self) == len(other)
                and all(a.label == b.label and a.group == b.group and np.array_equal(a.frames, b.frames)
                        for a, b in zip(self.series, other.series)))


# -- file format -------------------------------------------------------------

META_PREFIX = "#meta"


def load_dataset(path) -> Dataset:
    """Read the line-delimited dataset format.

    An optional first line ``#meta {...}`` may declare K, D and label names;
    every other non-blank line is one JSON record with ``label``, optional
    ``group`` and ``frames``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    meta = {}
    series = []
    D = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(META_PREFIX):
                if series or meta:
                    raise ParseError("meta header must be the first record", lineno, path)
                try:
                    meta = json.loads(line[len(META_PREFIX):])
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad meta header: {exc.msg}", lineno, path) from None
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno, path) from None
            if not isinstance(rec, dict) or "frames" not in rec:
                raise ParseError("record must be an object with a 'frames' field", lineno, path)
            frames = rec["frames"]
            if not isinstance(frames, list) or not frames or not all(isinstance(f, list) for f in frames):
                raise ParseError("frames must be a non-empty list of lists", lineno, path)
            widths = {len(f) for f in frames}
            if len(widths) != 1:
                raise ParseError(f"ragged frames (widths {sorted(widths)})", lineno, path)
            width = widths.pop()
            if D is None:
                D = width
            elif width != D:
                raise ParseError(f"frame width {width} differs from dataset D={D}", lineno, path)
            label = rec.get("label")
            if label is not None and (not isinstance(label, int) or isinstance(label, bool) or label < 0):
                raise ParseError(f"label must be a non-negative integer, got {label!r}", lineno, path)
            group = rec.get("group")
            try:
                series.append(TimeSeries(np.array(frames, dtype=np.float64), label,
                                         None if group is None else str(group)))
            except (InvalidArgumentError, ValueError, TypeError) as exc:
                raise ParseError(str(exc), lineno, path) from None
    if not series:
        raise ParseError("dataset contains no records", None, path)
    if "D" in meta and meta["D"] != D:
        raise ParseError(f"meta declares D={meta['D']} but records have D={D}", 1, path)
    labels = [s.label for s in series if s.label is not None]
    K = meta.get("K", (max(labels) + 1) if labels else 1)
    if labels and max(labels) >= K:
        raise ParseError(f"label {max(labels)} out of range for K={K}", None, path)
    return Dataset(tuple(series), int(K), D, meta.get("labels"))


def save_dataset(data: Dataset, path) -> None:
    meta = {"K": data.K, "D": data.D}
    if data.label_names is not None:
        meta["labels"] = list(data.label_names)
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"{META_PREFIX} {json.dumps(meta)}\n")
        for s in data.series:
            rec = {"label": s.label}
            if s.group is not None:
                rec["group"] = s.group
            # json writes floats with repr, which round-trips exactly
            rec["frames"] = s.frames.tolist()
            fh.write(json.dumps(rec) + "\n")


# -- preprocessing -----------------------------------------------------------

def _frames_of(x):
    return x.frames if isinstance(x, TimeSeries) else np.asarray(x, dtype=np.float64)


def _rewrap(x, frames):
    return x.with_frames(frames) if isinstance(x, TimeSeries) else frames


def window_stack(x, w: int):
    """Concatenate non-overlapping blocks of ``w`` frames; pad by repeating the last frame."""
    if w < 1:
        raise InvalidArgumentError("window width must be >= 1")
    frames = _frames_of(x)
    T, D = frames.shape
    T_new = math.ceil(T / w)
    pad = T_new * w - T
    if pad:
        frames = np.vstack([frames, np.repeat(frames[-1:], pad, axis=0)])
    return _rewrap(x, frames.reshape(T_new, w * D))


def window_slide(x, w: int):
    """Centered sliding window of odd width ``w`` with replicate-edge padding; keeps T."""
    if w < 1 or w % 2 == 0:
        raise InvalidArgumentError(f"sliding window width must be a positive odd integer, got {w}")
    frames = _frames_of(x)
    T = frames.shape[0]
    r = (w - 1) // 2
    idx = np.clip(np.arange(T)[:, None] + np.arange(-r, r + 1)[None, :], 0, T - 1)
    return _rewrap(x, frames[idx].reshape(T, -1))


def parse_window(spec: Optional[str]):
    """Parse ``none``, ``stack:w`` or ``slide:w`` into (mode, w)."""
    if spec is None or spec == "none":
        return None
    try:
        mode, width = spec.split(":")
        width = int(width)
    except ValueError:
        raise InvalidArgumentError(f"window spec must be none, stack:w or slide:w, got {spec!r}") from None
    if mode not in ("stack", "slide"):
        raise InvalidArgumentError(f"unknown window mode {mode!r}")
    if mode == "slide" and width % 2 == 0:
        raise InvalidArgumentError("sliding window width must be odd")
    if width < 1:
        raise InvalidArgumentError("window width must be >= 1")
    return mode, width


def apply_window(data: Dataset, window) -> Dataset:
    if window is None:
        return data
    mode, w = window
    fn = window_stack if mode == "stack" else window_slide
    return data.map_frames(lambda f: fn(f, w))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def __call__(self, frames):
        return (frames - self.mean) / self.std

    def apply(self, data: Dataset) -> Dataset:
        return data.map_frames(self)


def fit_standardizer(train: Dataset) -> Standardizer:
    if len(train) == 0:
        raise InvalidArgumentError("cannot standardize with an empty training set")
    pooled = np.vstack([s.frames for s in train])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    # zero-variance dimensions pass through untouched
    constant = ~(std > 0)
    return Standardizer(np.where(constant, 0.0, mean), np.where(constant, 1.0, std))


def standardize(train: Dataset, apply_to: Dataset):
    """Z-score ``apply_to`` with per-dimension statistics pooled over ``train`` frames."""
    st = fit_standardizer(train)
    return st.apply(apply_to), (st.mean, st.std)


# -- folds -------------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray
    grouped: bool = False

    @property
    def n_folds(self) -> int:
        return int(self.assignments.max()) + 1

    def split(self, fold: int):
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


def kfold(data: Dataset, F: int, grouped: bool = False, seed: int = 0) -> FoldPlan:
    if F < 2:
        raise InvalidArgumentError("need at least 2 folds")
    N = len(data)
    rng = np.random.default_rng(seed)
    if not grouped:
        if N < F:
            raise InvalidArgumentError(f"{N} series cannot fill {F} folds")
        order = rng.permutation(N)
        assign = np.empty(N, dtype=int)
        assign[order] = np.arange(N) % F
        return FoldPlan(assign, False)

    groups = data.groups
    if any(g is None for g in groups):
        raise InvalidArgumentError("grouped folds need a group id on every series")
    members = {}
    for i, g in enumerate(groups):
        members.setdefault(g, []).append(i)
    if len(members) < F:
        raise InvalidArgumentError(f"{len(members)} distinct groups cannot fill {F} folds")
    names = sorted(members)
    names = [names[i] for i in rng.permutation(len(names))]
    # stable sort keeps the seeded shuffle as tie-break among equal-size groups
    names.sort(key=lambda g: -len(members[g]))
    sizes = np.zeros(F, dtype=int)
    assign = np.empty(N, dtype=int)
    for g in names:
        fold = int(np.argmin(sizes))
        assign[members[g]] = fold
        sizes[fold] += len(members[g])
    return FoldPlan(assign, True)


# -- synthetic tasks ---------------------------------------------------------

def synth_order_task(n_per_class: int, T: int, noise_sigma: float, seed: int = 0) -> Dataset:
    """Two classes that differ only in the order of two frame prototypes.

    Class 0 shows (1, 0) for the first half and (0, 1) for the second;
    class 1 the reverse. The frame sums are identically distributed.
    """
    if T < 4 or T % 2:
        raise InvalidArgumentError("T must be even and >= 4")
    if noise_sigma < 0:
        raise InvalidArgumentError("noise_sigma must be non-negative")
    if n_per_class < 1:
        raise InvalidArgumentError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    half = T // 2
    first = np.tile([1.0, 0.0], (half, 1))
    second = np.tile([0.0, 1.0], (half, 1))
    clean = {0: np.vstack([first, second]), 1: np.vstack([second, first])}
    series = []
    for i in range(n_per_class):
        for k in (0, 1):
            frames = clean[k] + noise_sigma * rng.standard_normal((T, 2))
            series.append(TimeSeries(frames, k, f"s{i}"))
    return Dataset(tuple(series), 2, 2, ("first-x", "first-y"))


HMM_TRANSITIONS = (
    np.array([[0.9, 0.1], [0.1, 0.9]]),   # class 0: persistent states
    np.array([[0.3, 0.7], [0.7, 0.3]]),   # class 1: alternating states
)
HMM_MEANS = np.array([[1.0, 0.0], [0.0, 1.0]])
HMM_SIGMA = 0.5


def synth_hmm_task(n_per_class: int, T: int, seed: int = 0, return_states: bool = False):
    """Each class is a 2-state Gaussian-emission Markov chain.

    Both chains have uniform stationary distributions and share emissions;
    they differ only in how often the state switches.
    """
    if n_per_class < 1:
        raise InvalidArgumentError("n_per_class must be >= 1")
    if T < 1:
        raise InvalidArgumentError("T must be >= 1")
    rng = np.random.default_rng(seed)
    series, states = [], []
    for i in range(n_per_class):
        for k in (0, 1):
            trans = HMM_TRANSITIONS[k]
            s = np.empty(T, dtype=int)
            s[0] = rng.integers(2)
            for t in range(1, T):
                s[t] = rng.random() < trans[s[t - 1], 1]
            frames = HMM_MEANS[s] + HMM_SIGMA * rng.standard_normal((T, 2))
            series.append(TimeSeries(frames, k, f"s{i}"))
            states.append(s)
    data = Dataset(tuple(series), 2, 2, ("persistent", "alternating"))
    return (data, states) if return_states else data


def synth_mean_task(n_per_class: int, T: int, separation: float = 1.0, noise_sigma: float = 0.3,
                    seed: int = 0) -> Dataset:
    """Linearly separable two-class task: frames centred on +/- separation."""
    if n_per_class < 1 or T < 1:
        raise InvalidArgumentError("n_per_class and T must be >= 1")
    rng = np.random.default_rng(seed)
    means = {0: np.array([separation, -separation]), 1: np.array([-separation, separation])}
    series = []
    for i in range(n_per_class):
        for k in (0, 1):
            frames = means[k] + noise_sigma * rng.standard_normal((T, 2))
            series.append(TimeSeries(frames, k, f"s{i}"))
    return Dataset(tuple(series), 2, 2)
