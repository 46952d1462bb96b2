import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from autodiff.exceptions import ContractError, InvalidShapeError, NonFiniteError, ShapeMismatchError
from autodiff.gradcheck import finite_diff_check
from autodiff.node import Op, backward, constant, detach, parameter
from autodiff.ops import add, bias_add, concat, l1, l2, matmul, mean, mul, pad2d, reshape, scale, sub
from autodiff.tensor import CHECK_DTYPE, RngState, full, randn, zeros


class TestTensor:
    def test_zeros_and_full(self):
        assert zeros([2, 3]).shape == (2, 3)
        assert not zeros([2, 3]).any()
        np.testing.assert_array_equal(full([1], 7.0), [7.0])

    def test_rejects_empty_extent(self):
        with pytest.raises(InvalidShapeError):
            zeros([2, 0])

    def test_randn_is_deterministic(self):
        first = randn([4], RngState(42))
        second = randn([4], RngState(42))
        np.testing.assert_array_equal(first, second)

    def test_split_streams_differ(self):
        root = RngState(7)
        assert not np.array_equal(root.split(1).normal((8,)), root.split(2).normal((8,)))
        np.testing.assert_array_equal(root.split(1).normal((8,)), RngState(7, (1,)).normal((8,)))

    def test_state_snapshot_resumes_stream(self):
        rng = RngState(5)
        rng.normal((3,))
        rng.random()
        restored = RngState.from_state(rng.get_state())
        np.testing.assert_array_equal(rng.normal((5,)), restored.normal((5,)))
        assert rng.integers(0, 1000) == restored.integers(0, 1000)


class TestOps:
    def test_add(self):
        np.testing.assert_array_equal(
            add(constant(np.array([1.0, 2.0])), constant(np.array([3.0, 4.0]))).value, [4.0, 6.0]
        )

    def test_add_rejects_broadcasting(self):
        with pytest.raises(ShapeMismatchError):
            add(constant(np.zeros((2, 1))), constant(np.zeros((2, 3))))

    def test_concat_shape(self):
        out = concat([constant(np.zeros((1, 3, 8, 8))), constant(np.zeros((1, 6, 8, 8)))], axis=1)
        assert out.shape == (1, 9, 8, 8)
        assert out.op == Op.CONCAT

    def test_concat_negative_axis(self):
        out = concat([constant(np.zeros((2, 3))), constant(np.zeros((2, 4)))], axis=-1)
        assert out.shape == (2, 7)

    def test_mul_by_zeros_has_zero_gradient(self):
        x = parameter(np.array([1.0, -2.0, 3.0]))
        root = mean(mul(x, constant(np.zeros(3))))
        grads = backward(root)
        np.testing.assert_array_equal(root.value, [0.0])
        np.testing.assert_array_equal(grads[x], np.zeros(3))

    def test_mean_gradient(self):
        x = parameter(np.arange(4.0))
        backward(mean(x))
        np.testing.assert_allclose(x.grad, np.full(4, 0.25))

    def test_l2_gradient_closed_form(self):
        x = parameter(np.array([1.0, 2.0, -1.0]))
        target = np.array([0.5, 2.5, 1.0])
        backward(l2(x, target))
        np.testing.assert_allclose(x.grad, 2 * (x.value - target) / 3)

    def test_fan_out_accumulates(self):
        x = parameter(np.array([2.0, 3.0]))
        backward(mean(add(x, x)))
        np.testing.assert_allclose(x.grad, [1.0, 1.0])

    def test_unreached_grad_is_overwritten(self):
        x = parameter(np.array([1.0]))
        y = parameter(np.array([2.0]))
        backward(mean(x))
        backward(mean(y))
        assert x.grad is not None and y.grad is not None
        np.testing.assert_allclose(y.grad, [1.0])

    def test_backward_requires_scalar(self):
        with pytest.raises(ContractError):
            backward(parameter(np.zeros(3)))

    def test_detach_blocks_gradient(self):
        x = parameter(np.array([1.0, 2.0]))
        frozen = detach(scale(x, 3.0))
        assert not frozen.requires_grad
        np.testing.assert_array_equal(frozen.value, [3.0, 6.0])

    def test_bias_add_and_matmul(self):
        x = parameter(np.ones((2, 3)))
        weight = parameter(np.full((3, 4), 0.5))
        bias = parameter(np.arange(4.0))
        out = bias_add(matmul(x, weight), bias)
        np.testing.assert_allclose(out.value, np.tile(1.5 + np.arange(4.0), (2, 1)))
        backward(mean(out))
        np.testing.assert_allclose(bias.grad, np.full(4, 2 / 8))

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            matmul(constant(np.zeros((2, 3))), constant(np.zeros((2, 3))))

    def test_sub_and_operators(self):
        a = constant(np.array([5.0]))
        b = constant(np.array([2.0]))
        np.testing.assert_array_equal(sub(a, b).value, [3.0])
        np.testing.assert_array_equal((a - b).value, [3.0])
        np.testing.assert_array_equal((a * b).value, [10.0])

    def test_pad_and_reshape_backward(self):
        x = parameter(np.ones((1, 1, 2, 2)))
        padded = pad2d(x, (1, 0, 0, 2))
        assert padded.shape == (1, 1, 3, 4)
        backward(mean(reshape(padded, (12,))))
        np.testing.assert_allclose(x.grad, np.full((1, 1, 2, 2), 1 / 12))

    def test_l1_value(self):
        np.testing.assert_allclose(l1(constant(np.zeros(4)), np.full(4, 0.5)).value, [0.5])


class TestGradcheck:
    def test_sum_is_exact(self):
        x = RngState(0).normal((6,))
        assert finite_diff_check(lambda node: scale(mean(node), 6.0), x) < 1e-8

    def test_mean_of_squares(self):
        x = RngState(1).normal((8,))
        assert finite_diff_check(lambda node: mean(mul(node, node)), x) < 1e-6

    def test_non_finite_function(self):
        with pytest.raises(NonFiniteError):
            finite_diff_check(lambda node: scale(mean(node), np.inf), np.ones(2))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_composite_graph(self, seed):
        rng = RngState(seed)
        weights = constant(rng.normal((3, 2)))
        target = rng.normal((4, 2))

        def f(node):
            return add(l2(matmul(node, weights), target), scale(mean(mul(node, node)), 0.5))

        assert finite_diff_check(f, rng.normal((4, 3)).astype(CHECK_DTYPE)) < 1e-3
