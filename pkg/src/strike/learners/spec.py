from __future__ import annotations

from dataclasses import dataclass, field, replace

KINDS = ("logreg", "tree", "forest", "extratrees", "gbdt", "adaboost")

DEFAULTS: dict[str, dict] = {
    "logreg": {"l2": 1e-6, "max_iter": 100, "tol": 1e-8},
    "tree": {"max_depth": 8, "min_samples_split": 2, "min_samples_leaf": 1},
    "forest": {"n_estimators": 100, "max_depth": 12, "min_samples_split": 2, "min_samples_leaf": 1},
    "extratrees": {"n_estimators": 100, "max_depth": 12, "min_samples_split": 2, "min_samples_leaf": 1},
    "gbdt": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_split": 2,
             "min_samples_leaf": 1},
    "adaboost": {"n_estimators": 100},
}

_POSITIVE_INT = ("n_estimators", "max_depth", "max_iter", "min_samples_leaf")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"{self.kind}: unknown hyperparameter(s) {sorted(unknown)}")
        p = self.hyper
        for name in _POSITIVE_INT:
            if name in p and (int(p[name]) != p[name] or p[name] < 1):
                raise ValueError(f"{self.kind}: {name} must be an integer >= 1, got {p[name]}")
        if "min_samples_split" in p and (int(p["min_samples_split"]) != p["min_samples_split"]
                                         or p["min_samples_split"] < 2):
            raise ValueError(f"{self.kind}: min_samples_split must be an integer >= 2")
        if "learning_rate" in p and not p["learning_rate"] >= 0:
            raise ValueError(f"{self.kind}: learning_rate must be >= 0")
        if "l2" in p and not p["l2"] >= 0:
            raise ValueError(f"{self.kind}: l2 must be >= 0")

    @property
    def hyper(self) -> dict:
        return {**DEFAULTS[self.kind], **self.params}

    def with_seed(self, seed: int) -> LearnerSpec:
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> LearnerSpec:
        if isinstance(d, str):
            return cls(d)
        d = dict(d)
        kind = d.pop("kind")
        seed = d.pop("seed", 0)
        params = dict(d.pop("params", {}))
        params.update(d)
        return cls(kind, params, seed)
