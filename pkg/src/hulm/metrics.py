"""Error rate, ROC-AUC, F1 and the cross-validation drivers."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, FoldPlan, apply_window, fit_standardizer
from .errors import DivergedError, InvalidArgumentError
from .inference import predict_distribution
from .learning import train_sgd
from .model import HulmParams, Hyperparams, TimeSeries
from .naive import NaiveParams, naive_predict, naive_train

log = logging.getLogger(__name__)

MODEL_KINDS = ("hulm", "naive")


def error_rate(preds: Sequence[int], truth: Sequence[int]) -> float:
    preds, truth = np.asarray(preds), np.asarray(truth)
    if preds.shape != truth.shape:
        raise InvalidArgumentError(f"length mismatch: {preds.size} predictions, {truth.size} labels")
    if preds.size == 0:
        raise InvalidArgumentError("no predictions to score")
    return float(np.mean(preds != truth))


def confusion_matrix(preds: Sequence[int], truth: Sequence[int], K: int) -> np.ndarray:
    """Counts indexed [true class, predicted class]."""
    out = np.zeros((K, K), dtype=int)
    np.add.at(out, (np.asarray(truth, dtype=int), np.asarray(preds, dtype=int)), 1)
    return out


def roc_auc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """P(score of a random positive > score of a random negative), ties count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(bool)
    if scores.shape != truth.shape:
        raise InvalidArgumentError("scores and labels differ in length")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InvalidArgumentError("ROC-AUC needs both positive and negative examples")
    # Mann-Whitney U from average ranks handles ties with half credit
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    u = ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def f1_score(preds: Sequence[int], truth: Sequence[int]) -> float:
    preds = np.asarray(preds).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if preds.shape != truth.shape:
        raise InvalidArgumentError("length mismatch")
    tp = int(np.sum(preds & truth))
    fp = int(np.sum(preds & ~truth))
    fn = int(np.sum(~preds & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class EvalReport:
    error_rate: float
    confusion: np.ndarray
    fold_errors: Optional[list] = None
    fold_sizes: Optional[list] = None
    auc: Optional[float] = None
    f1: Optional[float] = None
    target: Optional[int] = None
    skipped_folds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"error_rate": self.error_rate, "confusion": np.asarray(self.confusion).tolist()}
        for name in ("fold_errors", "fold_sizes", "auc", "f1", "target"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.skipped_folds:
            out["skipped_folds"] = list(self.skipped_folds)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def table(self) -> str:
        """Fixed-width rendering for the terminal."""
        lines = []
        if self.target is not None:
            lines.append(f"{'target class':<16}{self.target:>10d}")
        lines.append(f"{'error rate':<16}{self.error_rate:>10.4f}")
        if self.auc is not None:
            lines.append(f"{'AUC':<16}{self.auc:>10.4f}")
        if self.f1 is not None:
            lines.append(f"{'F1':<16}{self.f1:>10.4f}")
        if self.fold_errors is not None:
            for i, (e, n) in enumerate(zip(self.fold_errors, self.fold_sizes)):
                lines.append(f"{'fold ' + str(i):<16}{e:>10.4f}  (n={n})")
        lines.append("confusion (rows: true, cols: predicted)")
        for row in np.asarray(self.confusion):
            lines.append("".join(f"{v:>7d}" for v in row))
        return "\n".join(lines)


# -- model dispatch ----------------------------------------------------------

def fit_model(train: Dataset, hyper: Hyperparams, model_kind: str = "hulm"):
    if model_kind == "hulm":
        return train_sgd(train, hyper).params
    if model_kind == "naive":
        return naive_train(train, hyper)
    raise InvalidArgumentError(f"unknown model kind {model_kind!r}")


def posterior(params, x) -> np.ndarray:
    if isinstance(params, HulmParams):
        return predict_distribution(x, params)
    if isinstance(params, NaiveParams):
        return naive_predict(x, params)
    raise TypeError(f"unknown parameter type {type(params).__name__}")


def evaluate(params, data: Dataset) -> EvalReport:
    probs = np.array([posterior(params, s) for s in data])
    preds = probs.argmax(axis=1)
    truth = data.labels
    report = EvalReport(error_rate(preds, truth), confusion_matrix(preds, truth, data.K))
    if data.K == 2 and len(set(truth.tolist())) == 2:
        report.auc = roc_auc(probs[:, 1], truth)
        report.f1 = f1_score(probs[:, 1] >= 0.5, truth)
    return report


# -- cross-validation --------------------------------------------------------

def _run_fold(data: Dataset, plan: FoldPlan, fold: int, hyper: Hyperparams, model_kind: str,
              window, standardize: bool):
    train_idx, test_idx = plan.split(fold)
    train = apply_window(data.subset(train_idx), window)
    test = apply_window(data.subset(test_idx), window)
    if standardize:
        st = fit_standardizer(train)
        train, test = st.apply(train), st.apply(test)
    try:
        params = fit_model(train, hyper, model_kind)
    except DivergedError as exc:
        err = DivergedError(exc.epoch, f"fold {fold}: {exc}")
        err.fold = fold
        raise err from exc
    probs = np.array([posterior(params, s) for s in test])
    return test_idx, probs


def _check_plan(data: Dataset, plan: FoldPlan):
    if plan.assignments.shape != (len(data),):
        raise InvalidArgumentError("fold plan does not cover the dataset")
    if not data.is_labeled():
        raise InvalidArgumentError("cross-validation needs labeled data")


def _fold_probs(data, plan, hyper, model_kind, window, standardize, threads):
    folds = range(plan.n_folds)
    run = lambda f: _run_fold(data, plan, f, hyper, model_kind, window, standardize)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, folds))
    return [run(f) for f in folds]


def cross_validate(data: Dataset, plan: FoldPlan, hyper: Hyperparams, model_kind: str = "hulm",
                   window=None, standardize: bool = False, threads: int = 1) -> EvalReport:
    """Train on each fold's complement, evaluate on the fold, pool the results."""
    _check_plan(data, plan)
    truth = data.labels
    preds = np.empty(len(data), dtype=int)
    fold_errors, fold_sizes = [], []
    for test_idx, probs in _fold_probs(data, plan, hyper, model_kind, window, standardize, threads):
        fold_pred = probs.argmax(axis=1)
        preds[test_idx] = fold_pred
        fold_errors.append(error_rate(fold_pred, truth[test_idx]))
        fold_sizes.append(int(test_idx.size))
    return EvalReport(error_rate(preds, truth), confusion_matrix(preds, truth, data.K),
                      fold_errors, fold_sizes)


def binary_relabel(data: Dataset, target_class: int) -> Dataset:
    """Target class becomes label 1, every other class label 0."""
    if not 0 <= target_class < data.K:
        raise InvalidArgumentError(f"target class {target_class} outside [0, {data.K})")
    series = tuple(s.with_label(int(s.label == target_class)) for s in data)
    name = data.label_names[target_class] if data.label_names else str(target_class)
    return Dataset(series, 2, data.D, ("rest", name))


def one_vs_rest_detect(data: Dataset, target_class: int, plan: FoldPlan, hyper: Hyperparams,
                       window=None, standardize: bool = False, threads: int = 1,
                       model_kind: str = "hulm") -> EvalReport:
    """Binary target-vs-rest detection scored by the target posterior.

    Folds whose test or training part holds a single class are skipped.
    """
    _check_plan(data, plan)
    binary = binary_relabel(data, target_class)
    truth = binary.labels
    usable = []
    skipped = []
    for f in range(plan.n_folds):
        train_idx, test_idx = plan.split(f)
        if len(set(truth[test_idx].tolist())) < 2 or len(set(truth[train_idx].tolist())) < 2:
            log.warning("fold %d has a single class for target %d; skipped", f, target_class)
            skipped.append(f)
        else:
            usable.append(f)
    if not usable:
        raise InvalidArgumentError(f"every fold is single-class for target {target_class}")
    run = lambda f: _run_fold(binary, plan, f, hyper, model_kind, window, standardize)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, usable))
    else:
        results = [run(f) for f in usable]
    idx = np.concatenate([r[0] for r in results])
    scores = np.concatenate([r[1][:, 1] for r in results])
    preds = (scores >= 0.5).astype(int)
    fold_errors = [error_rate((r[1][:, 1] >= 0.5).astype(int), truth[r[0]]) for r in results]
    return EvalReport(
        error_rate=error_rate(preds, truth[idx]),
        confusion=confusion_matrix(preds, truth[idx], 2),
        fold_errors=fold_errors,
        fold_sizes=[int(r[0].size) for r in results],
        auc=roc_auc(scores, truth[idx]),
        f1=f1_score(preds, truth[idx]),
        target=int(target_class),
        skipped_folds=skipped,
    )
