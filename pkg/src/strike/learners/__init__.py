"""Base learners sharing a fit / predict-probability contract."""
from __future__ import annotations

import numpy as np

from .boosting import AdaBoostModel, GBDTModel, fit_adaboost, fit_gbdt
from .linear import LogisticModel, fit_logreg
from .spec import DEFAULTS, KINDS, LearnerSpec
from .trees import ForestModel, Tree, TreeModel, check_xy, fit_forest, fit_tree

_FIT = {
    "logreg": fit_logreg,
    "tree": fit_tree,
    "forest": fit_forest,
    "extratrees": fit_forest,
    "gbdt": fit_gbdt,
    "adaboost": fit_adaboost,
}
_MODEL = {
    "logreg": LogisticModel,
    "tree": TreeModel,
    "forest": ForestModel,
    "extratrees": ForestModel,
    "gbdt": GBDTModel,
    "adaboost": AdaBoostModel,
}


def fit(X, y, spec: LearnerSpec):
    X, y = check_xy(X, y)
    return _FIT[spec.kind](X, y, spec)


def predict_proba(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} columns, got {X.shape[-1] if X.ndim else 0}")
    return np.clip(model.predict_proba(X), 0.0, 1.0)


def model_to_dict(model) -> dict:
    return {"spec": model.spec.to_dict(), "n_features": model.n_features, "params": model.params_dict()}


def model_from_dict(d: dict):
    spec = LearnerSpec.from_dict(d["spec"])
    return _MODEL[spec.kind].from_params(spec, d["params"], int(d["n_features"]))


__all__ = [
    "DEFAULTS", "KINDS", "LearnerSpec", "Tree", "LogisticModel", "TreeModel", "ForestModel", "GBDTModel",
    "AdaBoostModel", "fit", "fit_logreg", "fit_tree", "fit_forest", "fit_gbdt", "fit_adaboost",
    "predict_proba", "model_to_dict", "model_from_dict",
]
