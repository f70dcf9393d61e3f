import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vegretrieval.errors import ConfigurationError, NumericalError
from vegretrieval.regression import (KernelHyperparams, OptimizerConfig, build_gpr, fit_gpr,
                                     global_cost, kernel_eval, kernel_matrix, nlml, predict_gpr)
from vegretrieval.regression.gpr import predict_standardized

from .oracles import dense_gp_oracle

HALF_LOG_2PI = 0.918938533204672741780  # mpmath


def random_problem(rng, n, k=3):
    X = rng.uniform(0, 0.6, size=(n, 3))
    Y = rng.normal(size=(n, k)) * [2.0, 0.3, 0.2][:k] + [2.0, 0.5, 0.4][:k]
    h = KernelHyperparams(rng.uniform(0.5, 2), rng.uniform(0.05, 0.3), tuple(rng.uniform(0.1, 0.5, 3)))
    return X, Y, h


class TestKernel:
    def test_diagonal(self):
        h = KernelHyperparams(2.0, 0.1, (0.3, 0.4, 0.5))
        assert kernel_eval(h, [0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 4.0

    def test_unit_offset(self):
        h = KernelHyperparams(1.0, 0.0, (1.0, 1.0, 1.0))
        assert kernel_eval(h, [1, 0, 0], [0, 0, 0]) == pytest.approx(math.exp(-0.5), rel=1e-15)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        h = KernelHyperparams(1.3, 0.1, (0.2, 0.5, 0.9))
        for _ in range(100):
            x, z = rng.normal(size=3), rng.normal(size=3)
            assert kernel_eval(h, x, z) == kernel_eval(h, z, x)

    @pytest.mark.parametrize("bad", [(0.0, 1.0, 1.0), (-1.0, 1.0, 1.0)])
    def test_bad_lengthscale(self, bad):
        with pytest.raises(ConfigurationError):
            KernelHyperparams(1.0, 0.1, bad)

    def test_single_point_matrix(self):
        h = KernelHyperparams(1.7, 0.1, (0.2, 0.5, 0.9))
        assert kernel_matrix(h, np.zeros((1, 3))).tolist() == [[1.7**2]]

    def test_matrix_matches_scalar_kernel(self):
        rng = np.random.default_rng(1)
        h = KernelHyperparams(1.3, 0.1, (0.2, 0.5, 0.9))
        X = rng.normal(size=(6, 3))
        K = kernel_matrix(h, X)
        assert np.array_equal(K, K.T)
        for i in range(6):
            for j in range(6):
                assert K[i, j] == pytest.approx(kernel_eval(h, X[i], X[j]), rel=1e-14)

    def test_duplicate_rows_need_jitter(self):
        X = np.array([[0.1, 0.2, 0.3]] * 3 + [[0.5, 0.1, 0.2]])
        K = kernel_matrix(KernelHyperparams(1.0, 0.0, (0.3, 0.3, 0.3)), X)
        assert np.linalg.matrix_rank(K) < 4
        with pytest.raises(NumericalError):
            nlml(KernelHyperparams(1.0, 0.0, (0.3, 0.3, 0.3)), X, np.ones(4))
        assert np.isfinite(nlml(KernelHyperparams(1.0, 1e-3, (0.3, 0.3, 0.3)), X, np.ones(4)))

    def test_min_eigenvalue(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(20, 3))
        h = KernelHyperparams(1.0, 0.05, (0.4, 0.4, 0.4))
        A = kernel_matrix(h, X) + h.sigma_n**2 * np.eye(20)
        assert np.linalg.eigvalsh(A).min() >= h.sigma_n**2 - 1e-10


class TestNLML:
    # nu = 1, sigma_n = 0 gives K + sigma_n^2 I = [[1]]
    H = KernelHyperparams(1.0, 0.0, (1.0, 1.0, 1.0))

    def test_zero_target(self):
        assert nlml(self.H, np.zeros((1, 3)), [0.0]) == pytest.approx(HALF_LOG_2PI, rel=1e-14)

    def test_unit_target(self):
        assert nlml(self.H, np.zeros((1, 3)), [1.0]) == pytest.approx(0.5 + HALF_LOG_2PI, rel=1e-14)

    def test_matches_dense_formula(self):
        rng = np.random.default_rng(3)
        X, Y, h = random_problem(rng, 8)
        A = kernel_matrix(h, X) + h.sigma_n**2 * np.eye(8)
        y = Y[:, 0]
        sign, logdet = np.linalg.slogdet(A)
        expected = 0.5 * y @ np.linalg.inv(A) @ y + 0.5 * logdet + 4 * math.log(2 * math.pi)
        assert nlml(h, X, y) == pytest.approx(expected, rel=1e-10)

    def test_zero_targets_only_complexity(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(size=(6, 3))
        a = KernelHyperparams(1.0, 0.1, (0.2, 0.2, 0.2))
        b = KernelHyperparams(1.0, 0.1, (0.9, 0.9, 0.9))
        for h in (a, b):
            A = kernel_matrix(h, X) + 0.01 * np.eye(6)
            expected = 0.5 * np.linalg.slogdet(A)[1] + 3 * math.log(2 * math.pi)
            assert nlml(h, X, np.zeros(6)) == pytest.approx(expected, rel=1e-12)

    def test_global_cost_is_sum(self):
        rng = np.random.default_rng(5)
        X, Y, h = random_problem(rng, 7)
        assert global_cost(h, X, Y) == pytest.approx(sum(nlml(h, X, Y[:, o]) for o in range(3)), rel=1e-12)


class TestPredict:
    def test_single_point_interpolation(self):
        h = KernelHyperparams(1.0, 0.0, (0.3, 0.3, 0.3))
        x0 = np.array([[0.2, 0.3, 0.1]])
        m = build_gpr(x0, [[1.5]], h, outputs=("y",))
        mean_s, var_s = predict_standardized(m, x0)
        pred = predict_gpr(m, x0)
        assert pred.mean[0, 0] == 1.5
        assert var_s[0] == 0.0 and pred.sigma[0, 0] == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_oracle_n3(self, seed):
        rng = np.random.default_rng(seed)
        X, Y, h = random_problem(rng, 3)
        h = KernelHyperparams(h.nu, 0.1, h.lengthscales)
        m = build_gpr(X, Y, h, outputs=("a", "b", "c"))
        Q = rng.uniform(0, 0.6, size=(10, 3))
        pred = predict_gpr(m, Q, clip=False)
        mean, sigma = dense_gp_oracle(X, Y, h, Q)
        np.testing.assert_allclose(pred.mean, mean, rtol=1e-10)
        np.testing.assert_allclose(pred.sigma, sigma, rtol=1e-10)

    def test_far_query_limit(self):
        rng = np.random.default_rng(9)
        X, Y, h = random_problem(rng, 6)
        m = build_gpr(X, Y, h, outputs=("a", "b", "c"))
        mean_s, var_s = predict_standardized(m, [[50.0, 50.0, 50.0]])
        assert var_s[0] == pytest.approx(h.sigma_n**2 + h.nu**2, rel=1e-12)
        pred = predict_gpr(m, [[50.0, 50.0, 50.0]], clip=False)
        np.testing.assert_allclose(pred.mean[0], Y.mean(axis=0), rtol=1e-12)

    def test_latent_variance_switch(self):
        rng = np.random.default_rng(10)
        X, Y, h = random_problem(rng, 6)
        noisy = build_gpr(X, Y, h, outputs=("a", "b", "c"))
        latent = build_gpr(X, Y, h, outputs=("a", "b", "c"), include_noise_variance=False)
        Q = rng.uniform(size=(4, 3))
        v_noisy = predict_standardized(noisy, Q)[1]
        v_latent = predict_standardized(latent, Q)[1]
        np.testing.assert_allclose(v_noisy - v_latent, h.sigma_n**2, rtol=1e-10)

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_variance_bounds(self, seed):
        rng = np.random.default_rng(seed)
        X, Y, h = random_problem(rng, int(rng.integers(3, 12)))
        m = build_gpr(X, Y, h, outputs=("a", "b", "c"))
        Q = np.vstack([rng.uniform(-0.5, 1.0, size=(20, 3)), X])
        var = predict_standardized(m, Q)[1]
        assert np.all(var >= 0)
        assert np.all(var <= h.sigma_n**2 + h.nu**2 + 1e-12)

    def test_clipping_flags(self):
        X = np.array([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2], [0.3, 0.3, 0.3]])
        Y = np.array([[-1.0, 0.5, 0.5], [4.0, 1.2, 0.5], [9.0, 0.5, -0.1]])
        m = build_gpr(X, Y, KernelHyperparams(1.0, 0.0, (0.05, 0.05, 0.05)))
        pred = predict_gpr(m, X)
        assert pred.mean.min(axis=0).tolist() == [0.0, 0.5, 0.0]
        assert pred.mean.max(axis=0).tolist() == [8.0, 1.0, 0.5]
        assert pred.clipped.tolist() == [[True, False, False], [False, True, False], [True, False, True]]


class TestFit:
    def test_cost_not_worse_than_start(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(size=(40, 3))
        Y = np.column_stack([np.sin(4 * X[:, 0]), X[:, 1] ** 2, X[:, 2]]) + 0.05 * rng.normal(size=(40, 3))
        m = fit_gpr(X, Y, OptimizerConfig(n_restarts=2, max_evals=300))
        assert m.fit_info.final_cost <= m.fit_info.initial_cost
        assert m.fit_info.final_cost < m.fit_info.initial_cost

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(size=(30, 3))
        Y = np.column_stack([X[:, 0] + X[:, 1], X[:, 2] ** 2, np.cos(3 * X[:, 0])])
        opt = OptimizerConfig(n_restarts=2, max_evals=200, seed=3)
        a, b = fit_gpr(X, Y, opt), fit_gpr(X, Y, opt)
        assert a.hyperparams == b.hyperparams
        assert np.array_equal(a.alphas, b.alphas) and np.array_equal(a.L, b.L)

    def test_recovers_lengthscales_from_gp_draw(self):
        # noise-free draws from a GP with known hyperparameters, refit
        rng = np.random.default_rng(2024)
        true = KernelHyperparams(1.0, 0.0, (0.25, 0.5, 0.8))
        X = rng.uniform(size=(64, 3))
        K = kernel_matrix(true, X) + 1e-8 * np.eye(64)
        Y = np.linalg.cholesky(K) @ rng.normal(size=(64, 3))
        m = fit_gpr(X, Y, OptimizerConfig(seed=1), outputs=("a", "b", "c"))
        ratio = np.array(m.hyperparams.lengthscales) / np.array(true.lengthscales)
        assert np.all((ratio > 0.5) & (ratio < 2.0)), ratio

    def test_too_few_samples(self):
        with pytest.raises(ConfigurationError):
            fit_gpr(np.zeros((2, 3)), np.zeros((2, 3)))
