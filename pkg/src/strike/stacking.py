"""Group-isolated stacking: out-of-fold base predictions per feature group,
top-k selection by CV AUC, logit meta-features and an additive meta-learner."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import FORMAT_VERSION
from ._util import PROB_CLIP, clipped_logit, mix, sigmoid
from .cmi import bin_edges
from .grouping import FeatureGroupPartition, single_group_partition, validate_partition
from .learners import LearnerSpec, fit, model_from_dict, model_to_dict, predict_proba
from .learners.linear import irls
from .metrics import auc_roc, cv_aggregate
from .tabular import FoldAssignment, PreprocessStats, TabularDataset, apply_preprocess, stratified_kfold

log = logging.getLogger(__name__)

META_KINDS = ("logistic", "additive_binned")
META_L2 = 1e-6
META_BINS = 16
BACKFIT_PASSES = 20
BACKFIT_TOL = 1e-6
HESS_EPS = 1e-12
LOGIT_BOUND = float(np.log((1 - PROB_CLIP) / PROB_CLIP))


def run_tasks(fn, tasks, workers: int = 1) -> list:
    """Map ``fn`` over ``tasks``, preserving order. Outputs never depend on ``workers``."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclass
class OofColumn:
    group: str
    spec: LearnerSpec
    probabilities: np.ndarray
    fold_aucs: list[float]

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.fold_aucs))


def _check_pool(pool) -> list[LearnerSpec]:
    pool = [p if isinstance(p, LearnerSpec) else LearnerSpec.from_dict(p) for p in pool]
    if not pool:
        raise ValueError("learner pool is empty")
    kinds = [p.kind for p in pool]
    if len(set(kinds)) != len(kinds):
        raise ValueError(f"learner kinds in a pool must be unique, got {kinds}")
    return pool


def _oof_tasks(group, cols, pool, folds, master_seed):
    return [(group, tuple(cols), spec, f, mix(master_seed, group, spec.kind, f))
            for spec in pool for f in range(folds.K)]


def _assemble(group, pool, folds, y, results) -> list[OofColumn]:
    columns = []
    for i, spec in enumerate(pool):
        probs = np.full(len(y), np.nan)
        aucs = []
        for f in range(folds.K):
            rows, p = results[i * folds.K + f]
            probs[rows] = p
            if len(np.unique(y[rows])) < 2:
                raise ValueError(f"fold {f} contains a single class; AUC is undefined")
            aucs.append(auc_roc(p, y[rows]))
        if np.isnan(probs).any():
            raise ValueError(f"folds do not cover every row for group {group!r}")
        columns.append(OofColumn(group, spec, np.clip(probs, PROB_CLIP, 1 - PROB_CLIP), aucs))
    return columns


def _make_oof_worker(ds: TabularDataset, folds: FoldAssignment, on_fit):
    def work(task):
        group, cols, spec, f, seed = task
        train_rows = folds.train_rows(f)
        val_rows = folds.rows(f)
        if on_fit is not None:
            on_fit(group, spec.kind, f, train_rows, val_rows)
        Xg = ds.X[:, list(cols)]
        model = fit(Xg[train_rows], ds.y[train_rows], spec.with_seed(seed))
        return val_rows, predict_proba(model, Xg[val_rows])
    return work


def generate_group_oof(ds: TabularDataset, cols, pool, folds: FoldAssignment, *, group_name: str = "all",
                       master_seed: int = 0, workers: int = 1,
                       on_fit: Callable | None = None) -> list[OofColumn]:
    """Out-of-fold probabilities of every pool learner on the columns ``cols``.

    ``on_fit(group, kind, fold, train_rows, val_rows)`` is called with the
    exact row sets each fold model is trained on and predicts.
    """
    pool = _check_pool(pool)
    if len(folds) != ds.n_rows:
        raise ValueError("fold assignment does not match dataset rows")
    tasks = _oof_tasks(group_name, cols, pool, folds, master_seed)
    results = run_tasks(_make_oof_worker(ds, folds, on_fit), tasks, workers)
    return _assemble(group_name, pool, folds, ds.y, results)


def select_top_models(columns: list[OofColumn], k: int = 3) -> list[OofColumn]:
    """Top ``k`` by mean CV AUC, ties to the lexicographically smaller kind."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not columns:
        raise ValueError("no columns to select from")
    return sorted(columns, key=lambda c: (-c.mean_auc, c.kind))[:k]


@dataclass
class MetaDataset:
    X: np.ndarray
    y: np.ndarray
    columns: list[tuple[str, str]]


def build_meta_dataset(selected: dict[str, list[OofColumn]] | list[list[OofColumn]], y) -> MetaDataset:
    """Clip, take logits and concatenate columns in (group, rank) order."""
    y = np.asarray(y)
    groups = selected.values() if isinstance(selected, dict) else selected
    blocks, meta_cols = [], []
    for cols in groups:
        for c in cols:
            if len(c.probabilities) != len(y):
                raise ValueError(f"column {c.group}/{c.kind} has {len(c.probabilities)} rows, labels have {len(y)}")
            blocks.append(clipped_logit(c.probabilities))
            meta_cols.append((c.group, c.kind))
    X = np.column_stack(blocks) if blocks else np.empty((len(y), 0))
    return MetaDataset(X, y, meta_cols)


@dataclass
class LogisticMeta:
    intercept: float
    coef: np.ndarray
    kind: str = "logistic"

    def decision_function(self, Z):
        return np.asarray(Z, dtype=np.float64) @ self.coef + self.intercept

    def predict_proba(self, Z):
        return sigmoid(self.decision_function(Z))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intercept": self.intercept, "coef": self.coef.tolist()}

    def coefficients(self) -> dict:
        return {"intercept": self.intercept, "weights": self.coef.tolist()}


@dataclass
class AdditiveBinnedMeta:
    intercept: float
    edges: list[np.ndarray]
    contributions: list[np.ndarray]
    kind: str = "additive_binned"

    def _bins(self, Z, j):
        return np.searchsorted(self.edges[j], Z[:, j], side="left")

    def decision_function(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        F = np.full(Z.shape[0], self.intercept)
        for j in range(len(self.edges)):
            F += self.contributions[j][self._bins(Z, j)]
        return F

    def predict_proba(self, Z):
        return sigmoid(self.decision_function(Z))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intercept": self.intercept, "edges": [e.tolist() for e in self.edges],
                "contributions": [c.tolist() for c in self.contributions]}

    def coefficients(self) -> dict:
        return {"intercept": self.intercept, "bin_edges": [e.tolist() for e in self.edges],
                "bin_contributions": [c.tolist() for c in self.contributions]}


def meta_from_dict(d: dict):
    if d["kind"] == "logistic":
        return LogisticMeta(float(d["intercept"]), np.array(d["coef"], dtype=np.float64))
    if d["kind"] == "additive_binned":
        return AdditiveBinnedMeta(float(d["intercept"]), [np.array(e, dtype=np.float64) for e in d["edges"]],
                                  [np.array(c, dtype=np.float64) for c in d["contributions"]])
    raise ValueError(f"unknown meta kind {d['kind']!r}")


def _fit_additive_binned(Z, y, B=META_BINS):
    n, d = Z.shape
    edges = [bin_edges(Z[:, j], B) for j in range(d)]
    bins = [np.searchsorted(edges[j], Z[:, j], side="left") for j in range(d)]
    counts = [np.bincount(bins[j], minlength=len(edges[j]) + 1).astype(np.float64) for j in range(d)]
    contrib = [np.zeros(len(edges[j]) + 1) for j in range(d)]
    ybar = np.clip(y.mean(), PROB_CLIP, 1 - PROB_CLIP)
    b0 = float(np.log(ybar / (1 - ybar)))
    F = np.full(n, b0)
    for _ in range(BACKFIT_PASSES):
        biggest = 0.0
        for j in range(d):
            p = sigmoid(F)
            size = len(contrib[j])
            g = np.bincount(bins[j], weights=y - p, minlength=size)
            h = np.bincount(bins[j], weights=p * (1 - p), minlength=size)
            old = contrib[j].copy()
            step = g / np.maximum(HESS_EPS, h)
            updated = contrib[j] + step
            shift = float(counts[j] @ updated / n)
            contrib[j] = updated - shift
            b0 += shift
            F = F + step[bins[j]]
            biggest = max(biggest, float(np.max(np.abs(contrib[j] - old))))
        if biggest < BACKFIT_TOL:
            break
    return AdditiveBinnedMeta(b0, edges, contrib)


def fit_meta(meta: MetaDataset | np.ndarray, kind: str = "logistic", y=None):
    """Fit the combiner on logit meta-features."""
    if isinstance(meta, MetaDataset):
        Z, y = meta.X, meta.y
    else:
        Z = np.asarray(meta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Z.shape[0] == 0 or Z.shape[1] == 0:
        raise ValueError("meta dataset is empty")
    if len(np.unique(y)) < 2:
        raise ValueError("meta-learner needs both classes present")
    if kind == "logistic":
        w, b, _ = irls(Z, y, META_L2)
        return LogisticMeta(b, w)
    if kind == "additive_binned":
        return _fit_additive_binned(Z, y)
    raise ValueError(f"unknown meta kind {kind!r}; expected one of {', '.join(META_KINDS)}")


@dataclass
class StrikeConfig:
    K: int = 5
    k: int = 3
    meta_kind: str = "logistic"
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.meta_kind not in META_KINDS:
            raise ValueError(f"meta_kind must be one of {META_KINDS}, got {self.meta_kind!r}")
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class StrikeModel:
    stats: PreprocessStats | None
    partition: FeatureGroupPartition
    selected: dict[str, list]
    meta: LogisticMeta | AdditiveBinnedMeta
    master_seed: int
    format_version: int = FORMAT_VERSION

    @property
    def meta_columns(self) -> list[tuple[str, str]]:
        return [(g, m.spec.kind) for g, models in self.selected.items() for m in models]

    def meta_features(self, ds: TabularDataset) -> np.ndarray:
        blocks = []
        for name, cols in self.partition.groups:
            Xg = ds.X[:, list(cols)]
            for model in self.selected[name]:
                blocks.append(clipped_logit(predict_proba(model, Xg)))
        return np.column_stack(blocks)

    def predict_dataset(self, ds: TabularDataset) -> np.ndarray:
        return self.meta.predict_proba(self.meta_features(ds))

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "master_seed": self.master_seed,
            "preprocess": None if self.stats is None else self.stats.to_dict(),
            "partition": self.partition.to_dict(),
            "base_models": [{"group": g, "models": [model_to_dict(m) for m in ms]} for g, ms in self.selected.items()],
            "meta": self.meta.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> StrikeModel:
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported bundle format_version {d.get('format_version')!r}; "
                             f"this build reads {FORMAT_VERSION}")
        return cls(
            stats=None if d["preprocess"] is None else PreprocessStats.from_dict(d["preprocess"]),
            partition=FeatureGroupPartition.from_dict(d["partition"]),
            selected={e["group"]: [model_from_dict(m) for m in e["models"]] for e in d["base_models"]},
            meta=meta_from_dict(d["meta"]),
            master_seed=int(d["master_seed"]),
        )


def predict_strike(model: StrikeModel, raw) -> np.ndarray:
    """Probabilities for raw rows: preprocess, group models, logits, meta-learner."""
    if isinstance(raw, TabularDataset):
        return model.predict_dataset(raw)
    if model.stats is None:
        raise ValueError("model carries no preprocessing stats; pass a TabularDataset")
    return model.predict_dataset(apply_preprocess(raw, model.stats))


@dataclass
class TrainReport:
    per_group: dict[str, list[OofColumn]]
    selected: dict[str, list[OofColumn]]
    meta_kind: str
    meta_fold_aucs: list[float]
    coefficients: dict
    meta_columns: list[tuple[str, str]]
    extra: dict = field(default_factory=dict)

    @property
    def meta_cv_auc(self) -> tuple[float, float]:
        return cv_aggregate(self.meta_fold_aucs)

    @property
    def best_base_auc(self) -> float:
        return max(c.mean_auc for cols in self.per_group.values() for c in cols)

    def to_dict(self) -> dict:
        mean, std = self.meta_cv_auc
        chosen = {(g, c.kind) for g, cols in self.selected.items() for c in cols}
        out = {
            "per_group": [
                {"group": g, "models": [{"kind": c.kind, "fold_aucs": c.fold_aucs, "mean_auc": c.mean_auc,
                                         "selected": (g, c.kind) in chosen} for c in cols]}
                for g, cols in self.per_group.items()
            ],
            "meta": {"kind": self.meta_kind, "cv_auc_mean": mean, "cv_auc_std": std,
                     "fold_aucs": self.meta_fold_aucs, "columns": [list(c) for c in self.meta_columns],
                     "coefficients": self.coefficients},
        }
        out.update(self.extra)
        return out


def meta_cv_aucs(Z, y, folds: FoldAssignment, kind: str) -> list[float]:
    """Refit the combiner on the OOF rows outside each fold and score that fold."""
    aucs = []
    for f in range(folds.K):
        tr, va = folds.train_rows(f), folds.rows(f)
        meta = fit_meta(Z[tr], kind, y[tr])
        aucs.append(auc_roc(meta.predict_proba(Z[va]), y[va]))
    return aucs


def train_strike(train: TabularDataset, partition: FeatureGroupPartition, pool, config: StrikeConfig | None = None,
                 *, stats: PreprocessStats | None = None, folds: FoldAssignment | None = None,
                 on_fit: Callable | None = None) -> tuple[StrikeModel, TrainReport]:
    config = config or StrikeConfig()
    pool = _check_pool(pool)
    validate_partition(partition, train.n_features)
    folds = folds or stratified_kfold(train.y, config.K, config.master_seed)
    if folds.K != config.K:
        raise ValueError("fold assignment K differs from config.K")

    tasks = []
    for name, cols in partition.groups:
        tasks += _oof_tasks(name, cols, pool, folds, config.master_seed)
    results = run_tasks(_make_oof_worker(train, folds, on_fit), tasks, config.workers)
    per_group: dict[str, list[OofColumn]] = {}
    step = len(pool) * folds.K
    for i, (name, _) in enumerate(partition.groups):
        per_group[name] = _assemble(name, pool, folds, train.y, results[i * step:(i + 1) * step])
        log.info("group %s: %s", name, ", ".join(f"{c.kind}={c.mean_auc:.4f}" for c in per_group[name]))

    selected = {name: select_top_models(cols, config.k) for name, cols in per_group.items()}
    meta_ds = build_meta_dataset(selected, train.y)
    meta = fit_meta(meta_ds, config.meta_kind)
    fold_aucs = meta_cv_aucs(meta_ds.X, train.y, folds, config.meta_kind)

    refit_tasks = [(name, tuple(partition.members(name)), c.spec, mix(config.master_seed, name, c.kind, "full"))
                   for name, cols in selected.items() for c in cols]

    def refit(task):
        name, cols, spec, seed = task
        return fit(train.X[:, list(cols)], train.y, spec.with_seed(seed))

    models = run_tasks(refit, refit_tasks, config.workers)
    full: dict[str, list] = {name: [] for name in selected}
    for (name, *_), m in zip(refit_tasks, models):
        full[name].append(m)

    model = StrikeModel(stats, partition, full, meta, config.master_seed)
    report = TrainReport(per_group, selected, config.meta_kind, fold_aucs, meta.coefficients(), meta_ds.columns)
    return model, report


def train_orthodox_stacking(train: TabularDataset, pool, config: StrikeConfig | None = None, **kwargs):
    """Same pipeline with one group holding every feature: top k of the pool overall."""
    return train_strike(train, single_group_partition(train.n_features), pool, config, **kwargs)


def cv_auc(ds: TabularDataset, spec: LearnerSpec, folds: FoldAssignment, master_seed: int = 0,
           workers: int = 1) -> list[float]:
    """Per-fold AUC of one learner on all features (the monolithic baseline)."""
    cols = generate_group_oof(ds, range(ds.n_features), [spec], folds, group_name="monolithic",
                              master_seed=master_seed, workers=workers)
    return cols[0].fold_aucs
