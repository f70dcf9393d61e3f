"""Per-pixel error budget and quality classes.

Two error sources are combined in quadrature: the GPR predictive standard
deviation and the effect of k0 input uncertainty, propagated to first order
through the predictive mean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .regression.gpr import GPRMultiModel, predict_mean_raw

DEFAULT_SIGMA_K0 = 0.01


class QualityClass(enum.IntEnum):
    GOOD = 0
    MEDIUM = 1
    POOR = 2
    UNRELIABLE = 3
    UNPROCESSED = 4


# (good upper bound, exclusive), (medium upper bound, inclusive), (poor upper bound, inclusive)
QUALITY_LIMITS = {
    "FVC": (0.10, 0.15, 0.20),
    "FAPAR": (0.10, 0.15, 0.20),
    # no poor band for LAI: anything above the medium cap is unreliable
    "LAI": (1.0, 1.5, 1.5),
}


@dataclass(frozen=True)
class InputErrorSpec:
    """k0 standard deviation per band; scalars or arrays broadcastable to the pixels."""

    sigma_k0_red: object = DEFAULT_SIGMA_K0
    sigma_k0_nir: object = DEFAULT_SIGMA_K0
    sigma_k0_mir: object = DEFAULT_SIGMA_K0

    def __post_init__(self):
        for name in ("sigma_k0_red", "sigma_k0_nir", "sigma_k0_mir"):
            value = np.asarray(getattr(self, name), dtype=float)
            if np.any(~(value >= 0)):
                raise ConfigurationError(f"{name} must be >= 0")

    @classmethod
    def uniform(cls, sigma):
        return cls(sigma, sigma, sigma)

    def as_columns(self, n):
        """``(n, 3)`` array of per-pixel band sigmas."""
        values = (self.sigma_k0_red, self.sigma_k0_nir, self.sigma_k0_mir)
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float).ravel(), (n,))
                         for v in values], axis=1)


def fd_steps(sigma_k0):
    return np.maximum(1e-4, 1e-2 * np.asarray(sigma_k0, dtype=float))


def propagate_input_error(m: GPRMultiModel, X, spec: InputErrorSpec, mean_fn=None):
    """First-order propagation of k0 uncertainty; returns ``(n, n_outputs)`` stds.

    Partials of the de-normalized, unclipped mean are taken by central
    differences with a per-band step ``max(1e-4, 1e-2 * sigma_k0)``.
    """
    mean_fn = (lambda Q: predict_mean_raw(m, Q)) if mean_fn is None else mean_fn
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    sig = spec.as_columns(n)
    steps = fd_steps(sig)
    var = None
    for b in range(d):
        up, down = X.copy(), X.copy()
        up[:, b] += steps[:, b]
        down[:, b] -= steps[:, b]
        grad = (mean_fn(up) - mean_fn(down)) / (2.0 * steps[:, b])[:, None]
        term = (grad * sig[:, b, None]) ** 2
        var = term if var is None else var + term
    return np.sqrt(var)


def total_error(sigma_gpr, sigma_prop):
    """Quadrature sum of the two error sources."""
    a = np.asarray(sigma_gpr, dtype=float)
    b = np.asarray(sigma_prop, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("error components must be non-negative")
    out = np.hypot(a, b)
    return float(out) if out.ndim == 0 else out


def classify_quality(variable, total_std):
    """Quality class for ``total_std``; scalars give a :class:`QualityClass`, arrays give codes."""
    try:
        good, medium, poor = QUALITY_LIMITS[variable]
    except KeyError:
        raise ConfigurationError(f"unknown variable {variable!r}") from None
    s = np.asarray(total_std, dtype=float)
    codes = np.full(s.shape, QualityClass.UNRELIABLE, dtype=np.uint8)
    codes[s <= poor] = QualityClass.POOR
    codes[s <= medium] = QualityClass.MEDIUM
    codes[s < good] = QualityClass.GOOD
    if s.ndim == 0:
        return QualityClass(int(codes))
    return codes
