"""L2-regularised logistic regression solved by iteratively reweighted least squares."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._util import sigmoid
from .spec import LearnerSpec


def penalized_loss(X, y, w, b, l2):
    """(1/n) sum of log losses + (l2/2)|w|^2, intercept unpenalised."""
    z = X @ w + b
    # log(1 + e^z) - y z, written stably
    nll = np.logaddexp(0.0, z) - y * z
    return float(nll.mean() + 0.5 * l2 * (w @ w))


def penalized_grad(X, y, w, b, l2):
    p = sigmoid(X @ w + b)
    r = p - y
    n = len(y)
    return X.T @ r / n + l2 * w, float(r.sum() / n)


def irls(X, y, l2: float = 1e-6, max_iter: int = 100, tol: float = 1e-8):
    """Newton/IRLS iterations with step halving whenever the objective rises.

    Stops when the largest absolute coefficient change drops below ``tol``.
    Returns ``(w, b, n_iter)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    A = np.empty((n, d + 1))
    A[:, 0] = 1.0
    A[:, 1:] = X
    ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    beta = np.zeros(d + 1)
    beta[0] = np.log(ybar / (1 - ybar))
    penalty = np.full(d + 1, l2)
    penalty[0] = 0.0

    def objective(bt):
        return penalized_loss(X, y, bt[1:], bt[0], l2)

    f = objective(beta)
    it = 0
    for it in range(1, max_iter + 1):
        p = sigmoid(A @ beta)
        g = A.T @ (p - y) / n + penalty * beta
        h = p * (1.0 - p)
        H = (A * h[:, None]).T @ A / n
        H[np.diag_indices_from(H)] += penalty
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        for _ in range(30):
            cand = beta - t * step
            fc = objective(cand)
            if fc <= f:
                break
            t *= 0.5
        else:
            break
        delta = np.max(np.abs(cand - beta)) if d + 1 else 0.0
        beta, f = cand, fc
        if delta < tol:
            break
    return beta[1:].copy(), float(beta[0]), it


@dataclass
class LogisticModel:
    spec: LearnerSpec
    coef: np.ndarray
    intercept: float
    n_features: int

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def predict_proba(self, X):
        return sigmoid(self.decision_function(X))

    def params_dict(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_params(cls, spec, params, n_features):
        return cls(spec, np.array(params["coef"], dtype=np.float64), float(params["intercept"]), n_features)


def fit_logreg(X, y, spec: LearnerSpec | None = None) -> LogisticModel:
    spec = spec or LearnerSpec("logreg")
    hp = spec.hyper
    w, b, _ = irls(X, y, hp["l2"], int(hp["max_iter"]), hp["tol"])
    return LogisticModel(spec, w, b, X.shape[1])
