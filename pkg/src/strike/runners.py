"""End-to-end pipelines behind the CLI commands."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cmi import CmiMatrix, cmi_matrix
from .config import ConfigError, RunConfig
from .grouping import (FeatureGroupPartition, correlation_partition, manual_partition, mi_partition,
                       random_round_robin_partition)
from .metrics import cv_aggregate, evaluate
from .stacking import (StrikeConfig, StrikeModel, TrainReport, cv_auc, train_orthodox_stacking, train_strike)
from .tabular import (PreprocessStats, RawTable, TabularDataset, apply_preprocess, fit_preprocess, load_csv,
                      stratified_kfold, stratified_split_indices)

log = logging.getLogger(__name__)


@dataclass
class Prepared:
    raw: RawTable
    train: TabularDataset
    test: TabularDataset
    stats: PreprocessStats


def prepare_data(cfg: RunConfig) -> Prepared:
    """Stratified raw split, then preprocessing fitted on the training rows only."""
    raw = load_csv(cfg.dataset, cfg["label_column"])
    train_idx, test_idx = stratified_split_indices(raw.labels, cfg["train_frac"], cfg["seed"])
    train, stats = fit_preprocess(raw.take(train_idx))
    test = apply_preprocess(raw.take(test_idx), stats)
    log.info("train %d rows, test %d rows, %d features", train.n_rows, test.n_rows, train.n_features)
    return Prepared(raw, train, test, stats)


def build_partition(cfg: RunConfig, ds: TabularDataset, strategy: str | None = None, seed: int | None = None,
                    G: int | None = None) -> FeatureGroupPartition:
    g = cfg["grouping"]
    strategy = strategy or g["strategy"]
    seed = g.get("seed", 0) if seed is None else seed
    if strategy == "manual":
        if cfg.group_config is None:
            raise ConfigError("field 'grouping.config' is required for the manual strategy")
        if not cfg.group_config.is_file():
            raise ConfigError(f"group config {cfg.group_config} not found")
        return manual_partition(cfg.group_config, ds.feature_names)
    G = G or g.get("G")
    if G is None:
        raise ConfigError(f"field 'grouping.G' is required for the {strategy} strategy")
    if strategy == "corr":
        return correlation_partition(ds, G, seed)
    if strategy == "mi":
        return mi_partition(ds, G, g.get("bins", 10), seed)
    if strategy == "random":
        return random_round_robin_partition(ds.n_features, G, seed)
    raise ConfigError(f"unknown grouping strategy {strategy!r}")


def strike_config(cfg: RunConfig, meta_kind: str | None = None) -> StrikeConfig:
    return StrikeConfig(K=cfg["K"], k=cfg["k"], meta_kind=meta_kind or cfg["meta_kind"],
                        master_seed=cfg["seed"], workers=cfg["workers"])


def run_train(cfg: RunConfig) -> tuple[StrikeModel, dict]:
    data = prepare_data(cfg)
    partition = build_partition(cfg, data.train)
    model, report = train_strike(data.train, partition, cfg.pool, strike_config(cfg), stats=data.stats)
    out = report.to_dict()
    out["partition"] = partition.to_dict()
    out["split"] = {"train_rows": data.train.n_rows, "test_rows": data.test.n_rows}
    out["test"] = evaluate(model.predict_dataset(data.test), data.test.y).to_dict()
    return model, out


def _row(strategy, seed, report: TrainReport, n_groups) -> dict:
    mean, std = report.meta_cv_auc
    return {"strategy": strategy, "seed": seed, "n_groups": n_groups, "meta_cv_auc": mean, "meta_cv_std": std}


def run_ablate_groups(cfg: RunConfig) -> list[dict]:
    """Meta CV AUC under manual (when configured), MI, correlation and seeded random groupings."""
    data = prepare_data(cfg)
    sc = strike_config(cfg)
    rows = []
    G = cfg["grouping"].get("G")
    manual_auc = None
    if cfg.group_config is not None:
        part = build_partition(cfg, data.train, "manual")
        G = G or part.n_groups
        _, rep = train_strike(data.train, part, cfg.pool, sc)
        rows.append(_row("manual", None, rep, part.n_groups))
        manual_auc = rows[-1]["meta_cv_auc"]
    if G is None:
        raise ConfigError("field 'grouping.G' is required when no manual group config is given")
    for strategy in ("mi", "corr"):
        part = build_partition(cfg, data.train, strategy, G=G)
        _, rep = train_strike(data.train, part, cfg.pool, sc)
        rows.append(_row(strategy, None, rep, part.n_groups))
    random_aucs = []
    for seed in cfg["ablation_seeds"]:
        part = build_partition(cfg, data.train, "random", seed=seed, G=G)
        _, rep = train_strike(data.train, part, cfg.pool, sc)
        rows.append(_row("random", seed, rep, part.n_groups))
        random_aucs.append(rows[-1]["meta_cv_auc"])
    rows.append({"strategy": "random_mean", "seed": None, "n_groups": G,
                 "meta_cv_auc": float(np.mean(random_aucs)),
                 "meta_cv_std": cv_aggregate(random_aucs)[1] if len(random_aucs) > 1 else None})
    for r in rows:
        r["delta_vs_manual"] = None if manual_auc is None else r["meta_cv_auc"] - manual_auc
    return rows


def run_ablate_meta(cfg: RunConfig) -> list[dict]:
    data = prepare_data(cfg)
    part = build_partition(cfg, data.train)
    rows = []
    for kind in ("logistic", "additive_binned"):
        model, rep = train_strike(data.train, part, cfg.pool, strike_config(cfg, kind))
        mean, std = rep.meta_cv_auc
        rows.append({"meta_kind": kind, "cv_auc": mean, "cv_auc_std": std,
                     "test_auc": evaluate(model.predict_dataset(data.test), data.test.y).values["auc"]})
    return rows


def run_benchmark(cfg: RunConfig) -> list[dict]:
    """Each pool learner on all features vs orthodox stacking vs grouped stacking (CV AUC)."""
    data = prepare_data(cfg)
    folds = stratified_kfold(data.train.y, cfg["K"], cfg["seed"])
    rows = []
    for spec in cfg.pool:
        aucs = cv_auc(data.train, spec, folds, cfg["seed"], cfg["workers"])
        mean, std = cv_aggregate(aucs)
        rows.append({"model": spec.kind, "family": "monolithic", "cv_auc": mean, "cv_auc_std": std})
    _, rep = train_orthodox_stacking(data.train, cfg.pool, strike_config(cfg), folds=folds)
    mean, std = rep.meta_cv_auc
    rows.append({"model": "orthodox_stacking", "family": "stacking", "cv_auc": mean, "cv_auc_std": std})
    part = build_partition(cfg, data.train)
    _, rep = train_strike(data.train, part, cfg.pool, strike_config(cfg), folds=folds)
    mean, std = rep.meta_cv_auc
    rows.append({"model": "strike", "family": "stacking", "cv_auc": mean, "cv_auc_std": std})
    return rows


def run_cmi(cfg: RunConfig) -> CmiMatrix:
    data = prepare_data(cfg)
    part = build_partition(cfg, data.train)
    c = cfg["cmi"]
    return cmi_matrix(data.train, part, c["summary"], c.get("bins", 10), cfg["seed"], pool=cfg.pool, K=cfg["K"])
