import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vegretrieval.regression import KernelHyperparams, build_gpr
from vegretrieval.uncertainty import (InputErrorSpec, QualityClass, classify_quality,
                                      propagate_input_error, total_error)

from .oracles import dense_gp_oracle

G, M, P, U = QualityClass.GOOD, QualityClass.MEDIUM, QualityClass.POOR, QualityClass.UNRELIABLE


@pytest.fixture(scope="module")
def toy_model():
    rng = np.random.default_rng(7)
    X = rng.uniform(0.05, 0.5, size=(3, 3))
    Y = np.array([[1.0, 0.3, 0.2], [3.0, 0.7, 0.6], [2.0, 0.5, 0.5]])
    h = KernelHyperparams(1.2, 0.1, (0.2, 0.3, 0.4))
    return build_gpr(X, Y, h), X, Y, h


class TestPropagation:
    def test_zero_sigma(self, toy_model):
        m, X, *_ = toy_model
        assert np.all(propagate_input_error(m, X, InputErrorSpec.uniform(0.0)) == 0)

    def test_constant_model(self, toy_model):
        m, X, Y, h = toy_model
        flat = build_gpr(X, np.tile([2.0, 0.5, 0.5], (3, 1)), h)
        assert np.all(flat.alphas == 0)
        assert np.all(propagate_input_error(flat, X + 0.01, InputErrorSpec()) == 0)

    def test_matches_oracle_jacobian(self, toy_model):
        m, X, Y, h = toy_model
        q = np.array([[0.2, 0.3, 0.25]])
        sig = 0.01
        step = 1e-4  # max(1e-4, 1e-2 * 0.01)
        var = np.zeros(3)
        for b in range(3):
            up, down = q.copy(), q.copy()
            up[0, b] += step
            down[0, b] -= step
            grad = (dense_gp_oracle(X, Y, h, up)[0] - dense_gp_oracle(X, Y, h, down)[0]) / (2 * step)
            var += (grad[0] * sig) ** 2
        got = propagate_input_error(m, q, InputErrorSpec.uniform(sig))
        np.testing.assert_allclose(got[0], np.sqrt(var), atol=1e-6)

    def test_linear_scaling(self, toy_model):
        m, X, *_ = toy_model
        Q = np.random.default_rng(1).uniform(0.05, 0.5, size=(20, 3))
        # below sigma = 0.01 the difference step stays at its 1e-4 floor
        one = propagate_input_error(m, Q, InputErrorSpec(0.002, 0.004, 0.005))
        two = propagate_input_error(m, Q, InputErrorSpec(0.004, 0.008, 0.01))
        np.testing.assert_allclose(two, 2 * one, rtol=1e-8)

    def test_per_pixel_sigmas(self, toy_model):
        m, X, *_ = toy_model
        Q = np.random.default_rng(2).uniform(0.05, 0.5, size=(4, 3))
        spec = InputErrorSpec(np.array([0.0, 0.01, 0.02, 0.0]), 0.0, 0.0)
        out = propagate_input_error(m, Q, spec)
        assert np.all(out[[0, 3]] == 0) and np.all(out[[1, 2]] > 0)


class TestTotalError:
    @pytest.mark.parametrize("a, b, expected", [(0.1, 0.0, 0.1), (0.3, 0.4, 0.5), (0.0, 0.0, 0.0)])
    def test_examples(self, a, b, expected):
        assert total_error(a, b) == pytest.approx(expected, rel=1e-15, abs=0)

    def test_negative(self):
        with pytest.raises(ValueError):
            total_error(-0.1, 0.2)

    @given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 1))
    def test_symmetric_monotone(self, a, b, d):
        assert total_error(a, b) == total_error(b, a)
        assert total_error(a + d, b) >= total_error(a, b)
        assert total_error(a, b) >= max(a, b)


class TestClassify:
    @pytest.mark.parametrize("var, std, cls", [
        ("FVC", 0.05, G), ("LAI", 1.2, M), ("FAPAR", 0.25, U), ("FVC", 0.17, P),
        ("FVC", 0.0999999, G), ("FVC", 0.10, M), ("FVC", 0.15, M), ("FVC", 0.1500001, P),
        ("FAPAR", 0.20, P), ("FAPAR", 0.2000001, U),
        ("LAI", 0.999, G), ("LAI", 1.0, M), ("LAI", 1.5, M), ("LAI", 1.5000001, U),
    ])
    def test_table(self, var, std, cls):
        assert classify_quality(var, std) == cls

    @given(st.sampled_from(["LAI", "FVC", "FAPAR"]), st.floats(0, 5), st.floats(0, 1))
    def test_monotone(self, var, s, d):
        assert classify_quality(var, s + d) >= classify_quality(var, s)

    def test_lai_never_poor(self):
        codes = classify_quality("LAI", np.linspace(0, 5, 10001))
        assert not np.any(codes == P)

    def test_vectorized(self):
        codes = classify_quality("FVC", np.array([0.05, 0.12, 0.18, 0.3]))
        assert codes.tolist() == [0, 1, 2, 3]
