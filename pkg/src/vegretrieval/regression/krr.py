"""Multi-output kernel ridge regression with a cross-validated grid search."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh

from .. import VARIABLES
from ..errors import ConfigurationError
from .common import OutputNorm, Prediction, as_query, make_prediction
from .kernels import squared_distances


@dataclass(frozen=True)
class KRRGridConfig:
    lengthscales: tuple = tuple(np.logspace(-2, 1, 13))
    ridges: tuple = tuple(np.logspace(-6, -1, 7))
    n_folds: int = 5


@dataclass
class KRRModel:
    X: np.ndarray
    lengthscale: float
    ridge: float
    weights: np.ndarray  # (N, n_outputs)
    output_norm: OutputNorm
    outputs: tuple = VARIABLES
    cv_scores: np.ndarray | None = None  # (n_lengthscales, n_ridges)
    metadata: dict = field(default_factory=dict)


def rbf_from_sqdist(S, lengthscale):
    return np.exp(-S / (2.0 * lengthscale**2))


def _sqdist(X, Z=None):
    return squared_distances(X, Z).sum(axis=0)


def cv_folds(n, n_folds):
    folds = np.array_split(np.arange(n), n_folds)
    if min(len(f) for f in folds) < 2:
        raise ConfigurationError(f"{n} samples in {n_folds} folds leaves a fold with < 2 samples")
    return folds


def cv_scores(X, Ys, grid: KRRGridConfig):
    """Summed-over-outputs mean fold RMSE for every (lengthscale, ridge) pair."""
    n = X.shape[0]
    folds = cv_folds(n, grid.n_folds)
    S = _sqdist(X)
    ridges = np.asarray(grid.ridges, dtype=float)
    scores = np.zeros((len(grid.lengthscales), len(ridges)))
    for i, ls in enumerate(grid.lengthscales):
        K = rbf_from_sqdist(S, ls)
        rmse = np.zeros((len(ridges), Ys.shape[1]))
        for val in folds:
            tr = np.setdiff1d(np.arange(n), val)
            evals, Q = eigh(K[np.ix_(tr, tr)], check_finite=False)
            proj = Q.T @ Ys[tr]
            K_val = K[np.ix_(val, tr)] @ Q
            for j, lam in enumerate(ridges):
                pred = K_val @ (proj / (evals + lam)[:, None])
                rmse[j] += np.sqrt(np.mean((pred - Ys[val]) ** 2, axis=0))
        scores[i] = (rmse / len(folds)).sum(axis=1)
    return scores


def build_krr(X, Y, lengthscale, ridge, outputs=VARIABLES, output_norm=None) -> KRRModel:
    X = np.array(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    if not (lengthscale > 0 and ridge > 0):
        raise ConfigurationError("lengthscale and ridge must be > 0")
    norm = OutputNorm.fit(Y) if output_norm is None else output_norm
    A = rbf_from_sqdist(_sqdist(X), lengthscale)
    A.flat[:: A.shape[0] + 1] += ridge
    Ys = norm.forward(Y)
    try:
        weights = cho_solve(cho_factor(A, lower=True, check_finite=False), Ys, check_finite=False)
    except LinAlgError:
        evals, Q = eigh(A, check_finite=False)
        weights = Q @ ((Q.T @ Ys) / evals[:, None])
    return KRRModel(X, float(lengthscale), float(ridge), weights, norm, tuple(outputs))


def fit_krr(X, Y, grid: KRRGridConfig = KRRGridConfig(), outputs=VARIABLES) -> KRRModel:
    X = np.array(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    if X.shape[0] < 10:
        raise ConfigurationError("KRR needs at least 10 training samples")
    norm = OutputNorm.fit(Y)
    scores = cv_scores(X, norm.forward(Y), grid)
    # ties resolve to the first grid cell in (lengthscale, ridge) order
    i, j = np.unravel_index(np.argmin(scores), scores.shape)
    model = build_krr(X, Y, grid.lengthscales[i], grid.ridges[j], outputs, norm)
    model.cv_scores = scores
    return model


def fit_krr_multi(train, grid: KRRGridConfig = KRRGridConfig()) -> KRRModel:
    model = fit_krr(train.reflectance, train.truths, grid)
    model.metadata = {"n_train": len(train), "seed": train.seed}
    return model


def predict_krr_raw(m: KRRModel, X):
    X = as_query(X, m.X.shape[1])
    return m.output_norm.inverse(rbf_from_sqdist(_sqdist(X, m.X), m.lengthscale) @ m.weights)


def predict_krr(m: KRRModel, X, clip=True) -> Prediction:
    return make_prediction(predict_krr_raw(m, X), m.outputs, None, clip)
