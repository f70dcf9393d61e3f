"""Multi-output Gaussian process regression with shared hyperparameters.

All outputs share one ARD kernel and one noise level, hence one Cholesky
factor; they differ only in their weight vectors. Hyperparameters minimize
the sum of the per-output negative log marginal likelihoods.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .. import VARIABLES
from ..errors import ConfigurationError, NumericalError
from .common import OutputNorm, Prediction, as_query, make_prediction
from .kernels import (KernelHyperparams, kernel_from_distances, kernel_matrix,
                      noisy_cholesky, squared_distances)

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start Nelder-Mead on log hyperparameters.

    When the training set is larger than ``subset_size`` the restarts run on a
    seeded random subset and the winner is polished on the full set for at
    most ``polish_max_evals`` evaluations. ``subset_size=None`` disables this.
    """

    n_restarts: int = 5
    fatol: float = 1e-6
    max_evals: int = 2000
    seed: int = 0
    restart_scale: float = 1.0
    simplex_step: float = 0.5
    subset_size: int | None = 512
    polish_max_evals: int = 300

    def __post_init__(self):
        if self.n_restarts < 1 or self.max_evals < 1:
            raise ConfigurationError("n_restarts and max_evals must be >= 1")
        if self.subset_size is not None and self.subset_size < 3:
            raise ConfigurationError("subset_size must be >= 3")


@dataclass
class FitInfo:
    initial_cost: float
    final_cost: float
    n_evaluations: int
    converged: bool


@dataclass
class GPRMultiModel:
    X: np.ndarray
    hyperparams: KernelHyperparams
    L: np.ndarray
    alphas: np.ndarray  # (N, n_outputs), standardized units
    output_norm: OutputNorm
    outputs: tuple = VARIABLES
    # True: predictive variance of the noisy observable (adds sigma_n^2)
    include_noise_variance: bool = True
    metadata: dict = field(default_factory=dict)
    fit_info: FitInfo | None = None

    @property
    def n_train(self):
        return self.X.shape[0]


def _check_targets(Y):
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def cost_from_cholesky(L, Y):
    """Summed NLML over the columns of ``Y`` given the Cholesky factor of the noisy covariance."""
    Y = _check_targets(Y)
    n, k = Y.shape
    alpha = cho_solve((L, True), Y, check_finite=False)
    data_fit = 0.5 * float(np.sum(Y * alpha))
    half_logdet = float(np.sum(np.log(np.diag(L))))
    return data_fit + k * (half_logdet + 0.5 * n * LOG_2PI)


def nlml(h: KernelHyperparams, X, y) -> float:
    """Negative log marginal likelihood of ``y`` (summed if ``y`` has several columns)."""
    L = noisy_cholesky(kernel_matrix(h, X), h.sigma_n)
    return cost_from_cholesky(L, y)


def global_cost(h: KernelHyperparams, X, Y) -> float:
    return nlml(h, X, Y)


def build_gpr(X, Y, h: KernelHyperparams, outputs=VARIABLES, output_norm=None,
              include_noise_variance=True, metadata=None) -> GPRMultiModel:
    """Condition a GP with fixed hyperparameters on ``(X, Y)``."""
    X = np.array(X, dtype=float)
    Y = _check_targets(Y)
    if len(outputs) != Y.shape[1]:
        raise ConfigurationError(f"{Y.shape[1]} target columns but outputs={outputs}")
    norm = OutputNorm.fit(Y) if output_norm is None else output_norm
    Ys = norm.forward(Y)
    L = noisy_cholesky(kernel_matrix(h, X), h.sigma_n)
    alphas = cho_solve((L, True), Ys, check_finite=False)
    return GPRMultiModel(X, h, L, alphas, norm, tuple(outputs), include_noise_variance,
                         dict(metadata or {}))


def initial_hyperparams(X, Ys) -> KernelHyperparams:
    # lengthscales = per-band input std; nu = output std; sigma_n = 0.1 output std
    out_std = float(np.mean(np.std(Ys, axis=0))) or 1.0
    ls = np.std(X, axis=0)
    ls = np.where(ls > 0, ls, 1.0)
    return KernelHyperparams(out_std, 0.1 * out_std, tuple(ls))


class _Objective:
    """Global cost as a function of log hyperparameters, with cached distances."""

    def __init__(self, X, Ys):
        self.D = squared_distances(X)
        self.Ys = Ys
        self.n_evals = 0

    def __call__(self, theta):
        self.n_evals += 1
        if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) > 30):
            return np.inf
        h = KernelHyperparams.from_log_vector(theta)
        try:
            L = noisy_cholesky(kernel_from_distances(h, self.D), h.sigma_n)
        except NumericalError:
            return np.inf
        cost = cost_from_cholesky(L, self.Ys)
        return cost if np.isfinite(cost) else np.inf


def _nelder_mead(objective, x0, step, fatol, max_evals):
    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "fatol": fatol, "xatol": np.inf,
                            "maxfev": max_evals, "maxiter": 10 * max_evals})
    return res.x, float(res.fun), bool(res.success)


def optimize_hyperparams(X, Ys, opt: OptimizerConfig, h0=None):
    """Minimize the global cost; never returns a point worse than ``h0``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    h0 = initial_hyperparams(X, Ys) if h0 is None else h0
    theta0 = h0.to_log_vector()
    rng = np.random.default_rng(opt.seed)

    full = _Objective(X, Ys)
    initial_cost = full(theta0)

    if opt.subset_size is not None and n > opt.subset_size:
        idx = np.sort(rng.choice(n, opt.subset_size, replace=False))
        search = _Objective(X[idx], Ys[idx])
    else:
        search = full

    converged = True
    best_theta, best_cost = theta0, search(theta0)
    for r in range(opt.n_restarts):
        start = theta0 if r == 0 else theta0 + opt.restart_scale * rng.standard_normal(theta0.size)
        theta, cost, ok = _nelder_mead(search, start, opt.simplex_step, opt.fatol, opt.max_evals)
        converged &= ok
        logger.debug("restart %d: cost %.6g (%s)", r, cost, "converged" if ok else "capped")
        if cost < best_cost:
            best_theta, best_cost = theta, cost

    if search is not full:
        best_theta, best_cost, ok = _nelder_mead(full, best_theta, 0.1 * opt.simplex_step,
                                                 opt.fatol, opt.polish_max_evals)
        converged &= ok

    if not best_cost <= initial_cost:
        best_theta, best_cost = theta0, initial_cost
    if not converged:
        logger.warning("hyperparameter search hit the evaluation cap; returning best so far")
    n_evals = full.n_evals + (search.n_evals if search is not full else 0)
    return (KernelHyperparams.from_log_vector(best_theta),
            FitInfo(initial_cost, best_cost, n_evals, converged))


def fit_gpr(X, Y, opt: OptimizerConfig = OptimizerConfig(), outputs=VARIABLES, metadata=None):
    X = np.array(X, dtype=float)
    Y = _check_targets(Y)
    if X.shape[0] < 3:
        raise ConfigurationError("GPR needs at least 3 training samples")
    norm = OutputNorm.fit(Y)
    h, info = optimize_hyperparams(X, norm.forward(Y), opt)
    model = build_gpr(X, Y, h, outputs, norm, metadata=metadata)
    model.fit_info = info
    return model


def fit_gpr_multi(train, opt: OptimizerConfig = OptimizerConfig()) -> GPRMultiModel:
    """Fit on the noised reflectances of a :class:`~vegretrieval.rtm_sim.TrainingSet`."""
    noise = train.noise_spec.as_array().tolist() if train.noise_spec is not None else None
    meta = {"n_train": len(train), "seed": train.seed, "noise_sigma": noise,
            "optimizer_seed": opt.seed}
    return fit_gpr(train.reflectance, train.truths, opt, VARIABLES, meta)


def predict_standardized(m: GPRMultiModel, X):
    """Mean and variance in standardized output units (variance is shared by all outputs)."""
    X = as_query(X, m.X.shape[1])
    h = m.hyperparams
    Ks = kernel_matrix(h, X, m.X)
    mean = Ks @ m.alphas
    v = solve_triangular(m.L, Ks.T, lower=True, check_finite=False)
    var = h.nu**2 - np.einsum("ij,ij->j", v, v)
    if m.include_noise_variance:
        var = var + h.sigma_n**2
    return mean, np.maximum(var, 0.0)


def predict_mean_raw(m: GPRMultiModel, X):
    """De-normalized, unclipped predictive mean."""
    X = as_query(X, m.X.shape[1])
    return m.output_norm.inverse(kernel_matrix(m.hyperparams, X, m.X) @ m.alphas)


def predict_gpr(m: GPRMultiModel, X, clip=True) -> Prediction:
    mean_s, var_s = predict_standardized(m, X)
    sigma = np.sqrt(var_s)[:, None] * m.output_norm.std
    return make_prediction(m.output_norm.inverse(mean_s), m.outputs, sigma, clip)
