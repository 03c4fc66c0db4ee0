"""Plug-in conditional mutual information between feature groups given the label."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._util import clipped_logit, mix


def quantile_bin(values, B: int = 10) -> np.ndarray:
    """Bin by nearest-rank empirical quantiles q_{j/B}, j = 1..B-1.

    A value's bin is the number of (deduplicated) edges strictly below it.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot bin an empty vector")
    if B < 2:
        raise ValueError("B must be at least 2")
    edges = bin_edges(v, B)
    return np.searchsorted(edges, v, side="left").astype(np.int64)


def bin_edges(values, B: int) -> np.ndarray:
    s = np.sort(np.asarray(values, dtype=np.float64))
    n = len(s)
    ranks = [max(1, -(-j * n // B)) for j in range(1, B)]  # ceil(j n / B), 1-based
    return np.unique(s[np.array(ranks) - 1])


def _xlogy_sum(p: np.ndarray, q: np.ndarray) -> float:
    """Exactly rounded sum of p * log(p / q), independent of term order.

    numpy's vectorized log may differ by an ulp depending on array position,
    so terms are sorted into a canonical order first; fsum then makes the
    total independent of any relabeling of the inputs.
    """
    order = np.lexsort((q, p))
    p, q = p[order], q[order]
    return math.fsum((p * np.log(p / q)).tolist())


def entropy(a) -> float:
    _, counts = np.unique(np.asarray(a), return_counts=True)
    p = counts / counts.sum()
    return -_xlogy_sum(p, np.ones_like(p))


def mutual_information(a, b) -> float:
    """Plug-in MI in nats from the empirical contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    n = table.sum()
    # marginals from integer counts so they do not depend on summation order
    pij = table / n
    pi = table.sum(axis=1, keepdims=True) / n
    pj = table.sum(axis=0, keepdims=True) / n
    nz = pij > 0
    return max(0.0, _xlogy_sum(pij[nz], (pi * pj)[nz]))


def conditional_mutual_information(a, b, y) -> float:
    """sum_y p(y) I(a; b | Y=y), plug-in, nats, clamped at 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    y = np.asarray(y)
    if not (a.shape == b.shape == y.shape):
        raise ValueError("a, b and y must have equal lengths")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("conditional MI needs both classes present")
    total = []
    n = len(y)
    for c in classes:
        sel = y == c
        total.append((sel.sum() / n) * mutual_information(a[sel], b[sel]))
    return max(0.0, math.fsum(total))


@dataclass
class CmiMatrix:
    values: np.ndarray
    names: list[str]
    method: str
    B: int
    n_samples: int
    flags: list[str] = field(default_factory=list)

    @property
    def off_diagonal_mean(self) -> float:
        G = len(self.names)
        mask = ~np.eye(G, dtype=bool)
        return float(self.values[mask].mean())

    def to_json_dict(self) -> dict:
        return {
            "groups": self.names,
            "matrix": self.values.tolist(),
            "off_diagonal_mean": self.off_diagonal_mean,
            "settings": {"summary": self.method, "bins": self.B, "n_samples": self.n_samples, "units": "nats"},
            "warnings": self.flags,
        }

    def to_csv(self) -> str:
        lines = ["group," + ",".join(self.names)]
        for name, row in zip(self.names, self.values):
            lines.append(name + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def first_principal_component(X, seed: int = 0, steps: int = 200, tol: float = 1e-9):
    """Scores on the leading principal component by power iteration.

    The sign is fixed so the largest-magnitude loading is positive. Returns
    ``(scores, loadings, degenerate)``; a group of constant columns gives zero
    scores and ``degenerate=True``.
    """
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / max(1, X.shape[0] - 1)
    d = C.shape[0]
    if not np.any(np.abs(C) > 0):
        return np.zeros(X.shape[0]), np.zeros(d), True
    v = np.random.default_rng(mix(seed, "pca")).standard_normal(d)
    v /= np.linalg.norm(v)
    for _ in range(steps):
        w = C @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        w /= norm
        if w @ v < 0:
            w = -w
        done = np.max(np.abs(w - v)) < tol
        v = w
        if done:
            break
    j = int(np.argmax(np.abs(v)))
    if v[j] < 0:
        v = -v
    return Xc @ v, v, False


def group_summary(ds, group, method: str = "oof_logit", seed: int = 0, *, pool=None, K: int = 5,
                  folds=None, group_name: str = "g"):
    """Reduce a group's columns to one score per row.

    Returns ``(scores, degenerate_flag)``.
    """
    cols = list(group)
    if not cols:
        raise ValueError("group is empty")
    if method == "first_pc":
        scores, _, degenerate = first_principal_component(ds.X[:, cols], seed)
        if degenerate:
            warnings.warn(f"group {group_name!r} has only constant columns; summary is all zeros")
        return scores, degenerate
    if method == "oof_logit":
        from .learners import LearnerSpec
        from .stacking import generate_group_oof, select_top_models
        from .tabular import stratified_kfold

        pool = pool or [LearnerSpec("logreg")]
        folds = folds or stratified_kfold(ds.y, K, seed)
        columns = generate_group_oof(ds, cols, pool, folds, group_name=group_name, master_seed=seed)
        best = select_top_models(columns, 1)[0]
        return clipped_logit(best.probabilities), False
    raise ValueError(f"unknown summary method {method!r}")


def cmi_matrix(ds, partition, method: str = "oof_logit", B: int = 10, seed: int = 0, *, pool=None,
               K: int = 5) -> CmiMatrix:
    """Pairwise CMI of group summaries given y; diagonal fixed at 0.

    The partition is not required to be disjoint.
    """
    if partition.n_groups < 2:
        raise ValueError("need at least 2 groups")
    from .tabular import stratified_kfold

    folds = stratified_kfold(ds.y, K, seed) if method == "oof_logit" else None
    binned, flags = [], []
    for name, cols in partition.groups:
        scores, degenerate = group_summary(ds, cols, method, seed, pool=pool, K=K, folds=folds, group_name=name)
        if degenerate:
            flags.append(f"{name}: degenerate group summary")
        binned.append(quantile_bin(scores, B))
    G = partition.n_groups
    M = np.zeros((G, G))
    for g in range(G):
        for h in range(g + 1, G):
            M[g, h] = M[h, g] = conditional_mutual_information(binned[g], binned[h], ds.y)
    return CmiMatrix(M, partition.names, method, B, ds.n_rows, flags)
