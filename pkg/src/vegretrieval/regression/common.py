"""Output conventions shared by all regressors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import VARIABLES
from ..errors import ConfigurationError

# physical ranges applied after de-normalization
CLIP_RANGES = {"LAI": (0.0, 8.0), "FVC": (0.0, 1.0), "FAPAR": (0.0, 1.0)}


@dataclass
class Prediction:
    """Predictions for ``n`` query points, arrays of shape ``(n, n_outputs)``.

    ``mean`` is clipped to the physical ranges; ``clipped`` marks where that
    changed the value. ``sigma`` is only available for GPR.
    """

    mean: np.ndarray
    clipped: np.ndarray
    mean_raw: np.ndarray
    sigma: np.ndarray | None = None


@dataclass(frozen=True)
class OutputNorm:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, Y):
        Y = np.asarray(Y, dtype=float)
        mean = Y.mean(axis=0)
        std = Y.std(axis=0)
        # a constant output keeps unit scale so standardized targets are exactly zero
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    def forward(self, Y):
        return (Y - self.mean) / self.std

    def inverse(self, Z):
        return Z * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))


def as_query(X, n_features=3):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ConfigurationError(f"expected queries of shape (n, {n_features}), got {X.shape}")
    return X


def clip_outputs(values, outputs=VARIABLES):
    values = np.array(values, dtype=float, copy=True)
    clipped = np.zeros(values.shape, dtype=bool)
    for o, name in enumerate(outputs):
        if name not in CLIP_RANGES:
            continue
        lo, hi = CLIP_RANGES[name]
        col = values[:, o]
        clipped[:, o] = (col < lo) | (col > hi)
        values[:, o] = np.clip(col, lo, hi)
    return values, clipped


def make_prediction(mean_raw, outputs, sigma=None, clip=True):
    if clip:
        mean, clipped = clip_outputs(mean_raw, outputs)
    else:
        mean, clipped = mean_raw.copy(), np.zeros(mean_raw.shape, dtype=bool)
    return Prediction(mean, clipped, mean_raw, sigma)
