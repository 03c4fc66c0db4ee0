"""Gradient boosting on logistic loss and discrete AdaBoost (SAMME) with stumps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._util import sigmoid
from .spec import LearnerSpec
from ._tree_kernel import presort
from .trees import Tree, check_xy, grow

HESS_EPS = 1e-12
ERR_FLOOR = 1e-12


@dataclass
class GBDTModel:
    spec: LearnerSpec
    init_score: float
    learning_rate: float
    trees: list[Tree]
    n_features: int

    def raw_score(self, X, n_rounds: int | None = None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.init_score)
        for tree in self.trees[:n_rounds]:
            F += self.learning_rate * tree.predict(X)
        return F

    def staged_raw_scores(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.init_score)
        yield F.copy()
        for tree in self.trees:
            F += self.learning_rate * tree.predict(X)
            yield F.copy()

    def predict_proba(self, X):
        return sigmoid(self.raw_score(X))

    def params_dict(self) -> dict:
        return {"init_score": self.init_score, "learning_rate": self.learning_rate,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_params(cls, spec, params, n_features):
        return cls(spec, float(params["init_score"]), float(params["learning_rate"]),
                   [Tree.from_dict(t) for t in params["trees"]], n_features)


def fit_gbdt(X, y, spec: LearnerSpec | None = None) -> GBDTModel:
    """Each round fits a depth-limited regression tree to y - p and replaces
    its leaf values with the Newton step sum(y - p) / sum(p (1 - p))."""
    spec = spec or LearnerSpec("gbdt")
    X, y = check_xy(X, y)
    hp = spec.hyper
    lr = float(hp["learning_rate"])
    pbar = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    init = float(np.log(pbar / (1 - pbar)))
    F = np.full(len(y), init)
    order = presort(X)
    trees = []
    for _ in range(int(hp["n_estimators"])):
        p = sigmoid(F)
        resid = y - p
        tree = grow(X, resid, None, order, max_depth=hp["max_depth"], min_samples_split=hp["min_samples_split"],
                    min_samples_leaf=hp["min_samples_leaf"])
        leaf = tree.apply(X)
        g = np.bincount(leaf, weights=resid, minlength=tree.n_nodes)
        h = np.bincount(leaf, weights=p * (1.0 - p), minlength=tree.n_nodes)
        newton = g / np.maximum(HESS_EPS, h)
        is_leaf = tree.feature < 0
        tree.value = np.where(is_leaf, newton, 0.0)
        trees.append(tree)
        F = F + lr * tree.value[leaf]
    return GBDTModel(spec, init, lr, trees, X.shape[1])


@dataclass
class AdaBoostModel:
    spec: LearnerSpec
    stumps: list[Tree]
    alphas: np.ndarray
    base_rate: float
    n_features: int

    def raw_score(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        s = np.zeros(X.shape[0])
        for stump, a in zip(self.stumps, self.alphas):
            s += a * (2.0 * stump.predict(X) - 1.0)
        return s

    def predict_proba(self, X):
        if not self.stumps:
            return np.full(np.asarray(X).shape[0], self.base_rate)
        return sigmoid(self.raw_score(X) / 2.0)

    def params_dict(self) -> dict:
        return {"stumps": [t.to_dict() for t in self.stumps], "alphas": self.alphas.tolist(),
                "base_rate": self.base_rate}

    @classmethod
    def from_params(cls, spec, params, n_features):
        return cls(spec, [Tree.from_dict(t) for t in params["stumps"]],
                   np.array(params["alphas"], dtype=np.float64), float(params["base_rate"]), n_features)


def fit_adaboost(X, y, spec: LearnerSpec | None = None) -> AdaBoostModel:
    """SAMME with depth-1 trees on weighted Gini.

    Stump leaves are hard 0/1 votes. A round whose weighted error is >= 0.5
    is discarded and ends training; an error <= 1e-12 is kept and ends it.
    """
    spec = spec or LearnerSpec("adaboost")
    X, y = check_xy(X, y)
    n = len(y)
    w = np.full(n, 1.0 / n)
    order = presort(X)
    stumps, alphas = [], []
    for _ in range(int(spec.hyper["n_estimators"])):
        stump = grow(X, y, w, order, max_depth=1)
        stump.value = (stump.value > 0.5).astype(np.float64)
        miss = stump.predict(X) != y
        err = float(w[miss].sum() / w.sum())
        if err >= 0.5:
            break
        alpha = float(np.log((1.0 - err) / max(err, ERR_FLOOR)))
        stumps.append(stump)
        alphas.append(alpha)
        if err <= ERR_FLOOR:
            break
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return AdaBoostModel(spec, stumps, np.array(alphas), float(y.mean()), X.shape[1])
