"""Seeded synthetic fixtures with known generative log-odds.

Every generator returns features, labels, the true group layout and the exact
Bayes log-odds of each row, so Bayes AUC can be estimated by Monte Carlo.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import mix, sigmoid

KINDS = ("conditional_independent", "group_nonlinear", "xor_meta")


@dataclass
class Fixture:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    groups: list[tuple[str, list[str]]]
    bayes_logit: np.ndarray

    def group_config(self) -> dict:
        return {"groups": [{"name": g, "features": list(f)} for g, f in self.groups]}

    def group_columns(self) -> list[tuple[str, tuple[int, ...]]]:
        pos = {f: i for i, f in enumerate(self.feature_names)}
        return [(g, tuple(pos[f] for f in fs)) for g, fs in self.groups]


def _names(G, per_group):
    names, groups = [], []
    for g in range(G):
        cols = [f"g{g}_x{j}" for j in range(per_group)]
        names += cols
        groups.append((f"g{g}", cols))
    return names, groups


def _equicorrelated(per_group, rho):
    return (1 - rho) * np.eye(per_group) + rho * np.ones((per_group, per_group))


def conditional_independent(n: int, seed: int = 0, G: int = 3, per_group: int = 12, prevalence: float = 0.3,
                            shift: float = 0.45, n_informative: int = 4, rho: float = 0.3) -> Fixture:
    """Class-conditional Gaussians, independent across groups given Y.

    Within a group the covariance is equicorrelated (``rho``) and the first
    ``n_informative`` features move by ``shift`` when Y = 1, so the Bayes
    log-odds is linear and additive over groups.
    """
    rng = np.random.default_rng(mix(seed, "conditional_independent"))
    y = (rng.random(n) < prevalence).astype(np.int64)
    cov = _equicorrelated(per_group, rho)
    chol = np.linalg.cholesky(cov)
    mu = np.zeros(per_group)
    mu[:n_informative] = shift
    w = np.linalg.solve(cov, mu)
    blocks = []
    logit = np.full(n, np.log(prevalence / (1 - prevalence)))
    for _ in range(G):
        xg = rng.standard_normal((n, per_group)) @ chol.T + np.outer(y, mu)
        logit += xg @ w - 0.5 * mu @ w
        blocks.append(xg)
    names, groups = _names(G, per_group)
    return Fixture(np.hstack(blocks), y, names, groups, logit)


def group_nonlinear(n: int, seed: int = 0, G: int = 3, per_group: int = 6, prevalence: float = 0.5,
                    agree: float = 0.8, rho: float = 0.5) -> Fixture:
    """XOR-style signal inside each group, groups independent given Y.

    Per group, the signs of the first two features agree with probability
    ``agree`` when Y = 1 and ``1 - agree`` when Y = 0; the remaining features
    are label-free noise sharing a group factor (correlation ``rho``).
    """
    rng = np.random.default_rng(mix(seed, "group_nonlinear"))
    y = (rng.random(n) < prevalence).astype(np.int64)
    step = np.log(agree / (1 - agree))
    logit = np.full(n, np.log(prevalence / (1 - prevalence)))
    blocks = []
    for _ in range(G):
        same = rng.random(n) < np.where(y == 1, agree, 1 - agree)
        s1 = rng.choice([-1.0, 1.0], size=n)
        s2 = np.where(same, s1, -s1)
        u = s1 * np.abs(rng.standard_normal(n))
        v = s2 * np.abs(rng.standard_normal(n))
        logit += np.where(same, step, -step)
        k = per_group - 2
        factor = rng.standard_normal(n)[:, None]
        noise = np.sqrt(rho) * factor + np.sqrt(1 - rho) * rng.standard_normal((n, k))
        blocks.append(np.column_stack([u, v, noise]))
    names, groups = _names(G, per_group)
    return Fixture(np.hstack(blocks), y, names, groups, logit)


def xor_meta(n: int, seed: int = 0, G: int = 3, per_group: int = 4, curvature: float = 1.0,
             slope: float = 0.5, noise: float = 0.3) -> Fixture:
    """Group evidence that enters the true log-odds through a U-shaped link.

    Each group holds a latent ``z_g`` observed through ``per_group`` noisy
    copies; the label follows ``sigmoid(sum_g curvature * (z_g^2 - 1) + slope * z_g)``.
    A linear group model yields a logit that is monotone in ``z_g``, so a
    linear meta-combination can only use the ``slope`` part while an additive
    per-feature transform can also recover the curvature.
    """
    rng = np.random.default_rng(mix(seed, "xor_meta"))
    blocks = []
    logit = np.zeros(n)
    for _ in range(G):
        z = rng.standard_normal(n)
        blocks.append(z[:, None] + noise * rng.standard_normal((n, per_group)))
        logit += curvature * (z * z - 1.0) + slope * z
    y = (rng.random(n) < sigmoid(logit)).astype(np.int64)
    names, groups = _names(G, per_group)
    return Fixture(np.hstack(blocks), y, names, groups, logit)


_GENERATORS = {
    "conditional_independent": conditional_independent,
    "group_nonlinear": group_nonlinear,
    "xor_meta": xor_meta,
}


def make_fixture(kind: str, n: int, seed: int = 0, **kwargs) -> Fixture:
    if kind not in _GENERATORS:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {', '.join(KINDS)}")
    return _GENERATORS[kind](n, seed, **kwargs)


def bayes_auc(kind: str, n_mc: int = 1_000_000, seed: int = 12345, **kwargs) -> float:
    """Monte Carlo AUC of the true log-odds on a fresh draw."""
    from .metrics import auc_roc

    fx = make_fixture(kind, n_mc, seed, **kwargs)
    return auc_roc(fx.bayes_logit, fx.y)


def write_fixture(fx: Fixture, out_dir, label_column: str = "target", stem: str = "data") -> dict[str, Path]:
    """Write ``<stem>.csv`` and ``<stem>_groups.json`` (the true grouping)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fx.feature_names + [label_column])
        for row, label in zip(fx.X.tolist(), fx.y.tolist()):
            writer.writerow([repr(v) for v in row] + [label])
    groups_path = out / f"{stem}_groups.json"
    groups_path.write_text(json.dumps(fx.group_config(), indent=2) + "\n", encoding="utf-8")
    return {"csv": csv_path, "groups": groups_path}
