"""Ranking and thresholded classification metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _prep(scores, y):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(y).ravel()
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length ({len(s)} vs {len(y)})")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return s, y.astype(np.int64)


def midranks(values) -> np.ndarray:
    """1-based ranks with tied values sharing the mean of their positions."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    sv = v[order]
    n = len(v)
    starts = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1]])
    ends = np.r_[starts[1:], n]
    # positions start..end-1 (0-based) share rank mean((start+1)..end)
    block = (starts + 1 + ends) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(block, ends - starts)
    return ranks


def auc_roc(scores, y) -> float:
    """Mann-Whitney AUC; ties between a positive and a negative count 1/2."""
    s, y = _prep(scores, y)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined when only one class is present")
    r_pos = midranks(s)[y == 1].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _confusion(s, y, threshold):
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    tn = int(np.sum(~pred & (y == 0)))
    return tp, fp, fn, tn


def f1(scores, y, threshold: float = 0.5) -> float:
    s, y = _prep(scores, y)
    tp, fp, fn, _ = _confusion(s, y, threshold)
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def accuracy(scores, y, threshold: float = 0.5) -> float:
    s, y = _prep(scores, y)
    tp, _, _, tn = _confusion(s, y, threshold)
    return (tp + tn) / len(y)


def balanced_accuracy(scores, y, threshold: float = 0.5) -> float:
    s, y = _prep(scores, y)
    tp, fp, fn, tn = _confusion(s, y, threshold)
    if tp + fn == 0 or tn + fp == 0:
        raise ValueError("balanced accuracy needs both classes present")
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp))


def log_loss(scores, y, eps: float = 1e-15) -> float:
    s, y = _prep(scores, y)
    p = np.clip(s, eps, 1.0 - eps)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1.0 - p))))


def cv_aggregate(per_fold) -> tuple[float, float]:
    """Mean and sample standard deviation (divisor K-1)."""
    v = np.asarray(per_fold, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least 2 fold values to aggregate")
    mean = math.fsum(v.tolist()) / v.size
    mean += math.fsum((v - mean).tolist()) / v.size  # residual correction
    return mean, math.sqrt(math.fsum(((v - mean) ** 2).tolist()) / (v.size - 1))


@dataclass
class EvalReport:
    values: dict[str, float] = field(default_factory=dict)
    per_fold: dict[str, list[float]] = field(default_factory=dict)

    def add_folds(self, name: str, values) -> None:
        values = [float(v) for v in values]
        mean, std = cv_aggregate(values)
        self.per_fold[name] = values
        self.values[f"{name}_mean"] = mean
        self.values[f"{name}_std"] = std

    def to_dict(self) -> dict:
        out = dict(self.values)
        if self.per_fold:
            out["per_fold"] = self.per_fold
        return out


def evaluate(scores, y, threshold: float = 0.5) -> EvalReport:
    return EvalReport(values={
        "auc": auc_roc(scores, y),
        "f1": f1(scores, y, threshold),
        "log_loss": log_loss(scores, y),
        "accuracy": accuracy(scores, y, threshold),
        "balanced_accuracy": balanced_accuracy(scores, y, threshold),
    })
