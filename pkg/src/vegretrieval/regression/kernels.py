"""ARD squared-exponential covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from ..errors import ConfigurationError, NumericalError


@dataclass(frozen=True)
class KernelHyperparams:
    """Signal amplitude ``nu``, noise std ``sigma_n`` and one lengthscale per band."""

    nu: float
    sigma_n: float
    lengthscales: tuple

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", tuple(float(v) for v in self.lengthscales))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "sigma_n", float(self.sigma_n))
        if not (self.nu > 0) or not np.isfinite(self.nu):
            raise ConfigurationError(f"nu must be > 0, got {self.nu}")
        if not (self.sigma_n >= 0) or not np.isfinite(self.sigma_n):
            raise ConfigurationError(f"sigma_n must be >= 0, got {self.sigma_n}")
        if not self.lengthscales or not all(l > 0 and np.isfinite(l) for l in self.lengthscales):
            raise ConfigurationError(f"lengthscales must be > 0, got {self.lengthscales}")

    def to_log_vector(self):
        return np.log(np.array([self.nu, self.sigma_n, *self.lengthscales]))

    @classmethod
    def from_log_vector(cls, theta):
        theta = np.exp(np.asarray(theta, dtype=float))
        return cls(theta[0], theta[1], tuple(theta[2:]))

    def to_dict(self):
        return {"nu": self.nu, "sigma_n": self.sigma_n, "lengthscales": list(self.lengthscales)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["nu"], d["sigma_n"], tuple(d["lengthscales"]))


def kernel_eval(h: KernelHyperparams, x, z) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    ls = np.asarray(h.lengthscales)
    return float(h.nu**2 * np.exp(-0.5 * np.sum(((x - z) / ls) ** 2)))


def squared_distances(X, Z=None):
    """Per-dimension squared differences, shape ``(d, n, m)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = X if Z is None else np.atleast_2d(np.asarray(Z, dtype=float))
    return np.stack([(X[:, b, None] - Z[None, :, b]) ** 2 for b in range(X.shape[1])])


def kernel_from_distances(h: KernelHyperparams, D):
    if D.shape[0] != len(h.lengthscales):
        raise ConfigurationError(
            f"{len(h.lengthscales)} lengthscales for {D.shape[0]}-dimensional inputs")
    S = np.zeros(D.shape[1:])
    for b, ls in enumerate(h.lengthscales):
        S += D[b] / (2.0 * ls**2)
    return h.nu**2 * np.exp(-S)


def kernel_matrix(h: KernelHyperparams, X, Z=None):
    """Cross-covariance ``K[i, j] = k(X[i], Z[j])``; ``Z`` defaults to ``X``."""
    return kernel_from_distances(h, squared_distances(X, Z))


def noisy_cholesky(K, sigma_n):
    """Lower Cholesky factor of ``K + sigma_n**2 I``."""
    A = K.copy()
    A.flat[:: A.shape[0] + 1] += sigma_n**2
    if not np.all(np.isfinite(A)):
        raise NumericalError("covariance matrix contains non-finite entries")
    try:
        return cholesky(A, lower=True, check_finite=False)
    except LinAlgError as exc:
        diag = np.diag(A)
        raise NumericalError(
            f"Cholesky of K + sigma_n^2 I failed (N={A.shape[0]}, sigma_n={sigma_n:.3g}, "
            f"diag range [{diag.min():.3g}, {diag.max():.3g}]): {exc}") from exc
