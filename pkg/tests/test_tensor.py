import math

import numpy as np
import pytest

from hcc.errors import DimensionError, LabelError
from hcc.gradcheck import check_gradients
from hcc.tensor import (
    AllocationCounter, Parameter, cache_nbytes, cross_entropy, cross_entropy_logits_backward, gelu, gelu_backward,
    layer_norm, layer_norm_backward, matmul, matmul_backward, sigmoid, softmax_rows, softmax_rows_backward,
)


class TestSoftmax:
    def test_rows_sum_to_one_for_large_logits(self, rng):
        for _ in range(1000):
            scale = 10.0 ** rng.uniform(-2, 4)
            x = rng.normal(0.0, scale, size=(rng.integers(1, 5), rng.integers(1, 20)))
            y = softmax_rows(x)
            assert np.all(np.isfinite(y))
            np.testing.assert_allclose(y.sum(axis=-1), 1.0, rtol=0.0, atol=1e-9)

    def test_uniform_for_equal_logits(self):
        np.testing.assert_allclose(softmax_rows(np.zeros(4)), np.full(4, 0.25))

    def test_backward_matches_finite_differences(self, rng):
        x = Parameter("x", rng.normal(size=(3, 5)))
        target = rng.normal(size=(3, 5))

        def loss(compute_grads):
            y = softmax_rows(x.value)
            if compute_grads:
                x.grad += softmax_rows_backward(target, y)
            return float(np.sum(y * target))

        assert check_gradients(loss, [x]).passed


class TestMatmul:
    def test_shape_mismatch(self):
        with pytest.raises(DimensionError, match="matmul"):
            matmul(np.zeros((2, 3)), np.zeros((4, 2)))

    def test_backward(self, rng):
        a = Parameter("a", rng.normal(size=(2, 3)))
        b = Parameter("b", rng.normal(size=(3, 4)))
        target = rng.normal(size=(2, 4))

        def loss(compute_grads):
            out = matmul(a.value, b.value)
            if compute_grads:
                da, db = matmul_backward(target, a.value, b.value)
                a.grad += da
                b.grad += db
            return float(np.sum(out * target))

        assert check_gradients(loss, [a, b]).passed

    def test_associative(self, rng):
        for _ in range(50):
            m, k, n, p = rng.integers(1, 12, size=4)
            a, b, c = rng.normal(size=(m, k)), rng.normal(size=(k, n)), rng.normal(size=(n, p))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert np.linalg.norm(left - right) <= 1e-9 * max(np.linalg.norm(left), 1.0)


class TestLayerNorm:
    def test_normalizes_rows(self, rng):
        x = rng.normal(3.0, 2.0, size=(4, 8))
        y = layer_norm(x, np.ones(8), np.zeros(8))
        np.testing.assert_allclose(y.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.std(axis=-1), 1.0, atol=1e-5)

    def test_backward(self, rng):
        x = Parameter("x", rng.normal(size=(3, 6)))
        gain = Parameter("gain", rng.normal(1.0, 0.1, size=6))
        bias = Parameter("bias", rng.normal(size=6))
        target = rng.normal(size=(3, 6))

        def loss(compute_grads):
            y = layer_norm(x.value, gain.value, bias.value)
            if compute_grads:
                dx, dgain, dbias = layer_norm_backward(target, x.value, gain.value)
                x.grad += dx
                gain.grad += dgain
                bias.grad += dbias
            return float(np.sum(y * target))

        assert check_gradients(loss, [x, gain, bias]).passed

    def test_constant_row_gives_bias(self, rng):
        bias = rng.normal(size=6)
        for value in rng.normal(scale=10.0, size=20):
            y = layer_norm(np.full((1, 6), value), rng.normal(size=6), bias)
            np.testing.assert_allclose(y[0], bias, rtol=0.0, atol=1e-9)

    def test_zero_gain_gives_bias(self, rng):
        bias = rng.normal(size=5)
        y = layer_norm(rng.normal(size=(4, 5)), np.zeros(5), bias)
        np.testing.assert_array_equal(y, np.broadcast_to(bias, (4, 5)))


class TestCrossEntropy:
    def test_value(self):
        assert cross_entropy(np.array([0.25, 0.75]), 1) == pytest.approx(-math.log(0.75))

    def test_zero_probability_is_floored(self):
        assert cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))

    @pytest.mark.parametrize("label", [-1, 3])
    def test_label_out_of_range(self, label):
        with pytest.raises(LabelError):
            cross_entropy(np.array([0.2, 0.3, 0.5]), label)

    def test_logits_backward(self, rng):
        logits = Parameter("logits", rng.normal(size=7))

        def loss(compute_grads):
            probs = softmax_rows(logits.value)
            if compute_grads:
                logits.grad += cross_entropy_logits_backward(probs, 2)
            return cross_entropy(probs, 2)

        assert check_gradients(loss, [logits]).passed


class TestActivations:
    def test_gelu_backward(self, rng):
        x = Parameter("x", rng.normal(size=10))

        def loss(compute_grads):
            y = gelu(x.value)
            if compute_grads:
                x.grad += gelu_backward(np.ones_like(y), x.value)
            return float(y.sum())

        assert check_gradients(loss, [x]).passed

    @pytest.mark.parametrize("z, expected", [(0.0, 0.5), (40.0, 1.0), (-40.0, 0.0)])
    def test_sigmoid(self, z, expected):
        assert sigmoid(z) == pytest.approx(expected, abs=1e-15)

    def test_sigmoid_extreme_inputs_do_not_overflow(self):
        assert sigmoid(-1000.0) == 0.0
        assert sigmoid(1000.0) == 1.0


class TestAllocationCounter:
    def test_peak_tracks_persistent_plus_transient(self):
        counter = AllocationCounter()
        counter.set_persistent(100)
        counter.observe(50)
        counter.observe(20)
        assert counter.peak == 150

        counter.reset_peak()
        assert counter.peak == 100

    def test_cache_nbytes_walks_nested_tuples(self):
        cache = (np.zeros(4), [np.zeros((2, 2)), ("label", np.zeros(1))])
        assert cache_nbytes(cache) == 8 * (4 + 4 + 1)
