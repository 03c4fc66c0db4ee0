"""CART trees and bagged / randomised forests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._util import mix
from ._tree_kernel import apply_tree, grow_tree, predict_forest, presort
from .spec import LearnerSpec


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, X) -> np.ndarray:
        return apply_tree(_as_matrix(X), self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["leaf_value"], dtype=np.float64),
        )


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    return np.ascontiguousarray(X)


def check_xy(X, y):
    X = _as_matrix(X)
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("empty feature matrix")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values")
    y = np.asarray(y)
    if len(y) != X.shape[0]:
        raise ValueError("label length does not match row count")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return X, y.astype(np.float64)


def grow(X, target, weight=None, order=None, *, max_depth, min_samples_split=2, min_samples_leaf=1,
         n_candidates=None, random_thresholds=False, seed=0) -> Tree:
    """Grow a tree on rows with positive ``weight`` (all rows when omitted).

    ``order`` is the column presort of ``X``; pass it when growing many trees
    on the same matrix.
    """
    n, d = X.shape
    if weight is None:
        weight = np.ones(n)
    if order is None and not random_thresholds:
        order = presort(X)
    elif order is None:
        order = np.empty((0, 0), dtype=np.int64)
    arrays = grow_tree(X, order, np.ascontiguousarray(target, dtype=np.float64),
                       np.ascontiguousarray(weight, dtype=np.float64), int(max_depth), int(min_samples_split),
                       int(min_samples_leaf), int(n_candidates or d), bool(random_thresholds),
                       int(seed) & 0xFFFFFFFFFFFFFFFF)
    return Tree(*arrays)


@dataclass
class TreeModel:
    spec: LearnerSpec
    tree: Tree
    n_features: int

    def predict_proba(self, X):
        return self.tree.predict(X)

    def params_dict(self) -> dict:
        return {"tree": self.tree.to_dict()}

    @classmethod
    def from_params(cls, spec, params, n_features):
        return cls(spec, Tree.from_dict(params["tree"]), n_features)


def fit_tree(X, y, spec: LearnerSpec | None = None) -> TreeModel:
    """CART on Gini impurity; leaves hold the positive fraction."""
    spec = spec or LearnerSpec("tree")
    X, y = check_xy(X, y)
    hp = spec.hyper
    tree = grow(X, y, max_depth=hp["max_depth"], min_samples_split=hp["min_samples_split"],
                min_samples_leaf=hp["min_samples_leaf"])
    return TreeModel(spec, tree, X.shape[1])


@dataclass
class ForestModel:
    spec: LearnerSpec
    trees: list[Tree]
    n_features: int

    def __post_init__(self):
        self._packed = None

    def _pack(self):
        if self._packed is None:
            sizes = [t.n_nodes for t in self.trees]
            offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum(sizes)
            self._packed = (
                np.concatenate([t.feature for t in self.trees]),
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([t.left for t in self.trees]),
                np.concatenate([t.right for t in self.trees]),
                np.concatenate([t.value for t in self.trees]),
                offsets,
            )
        return self._packed

    def predict_proba(self, X):
        return predict_forest(_as_matrix(X), *self._pack())

    def params_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_params(cls, spec, params, n_features):
        return cls(spec, [Tree.from_dict(t) for t in params["trees"]], n_features)


def fit_forest(X, y, spec: LearnerSpec | None = None) -> ForestModel:
    """Random forest (bootstrap rows) or extra trees (random thresholds, no bootstrap).

    Both draw ceil(sqrt(d)) candidate features per split. Tree ``t`` is seeded
    with ``mix(spec.seed, t)`` so it does not depend on the other trees.
    """
    spec = spec or LearnerSpec("forest")
    if spec.kind not in ("forest", "extratrees"):
        raise ValueError(f"fit_forest cannot fit kind {spec.kind!r}")
    X, y = check_xy(X, y)
    hp = spec.hyper
    n, d = X.shape
    n_candidates = math.ceil(math.sqrt(d))
    extra = spec.kind == "extratrees"
    order = None if extra else presort(X)
    trees = []
    for t in range(int(hp["n_estimators"])):
        tree_seed = mix(spec.seed, t)
        weight = None
        if not extra:
            rng = np.random.default_rng(tree_seed)
            weight = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        trees.append(grow(X, y, weight, order, max_depth=hp["max_depth"],
                          min_samples_split=hp["min_samples_split"], min_samples_leaf=hp["min_samples_leaf"],
                          n_candidates=n_candidates, random_thresholds=extra, seed=tree_seed))
    return ForestModel(spec, trees, d)
