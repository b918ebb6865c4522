"""Tests for the autodiff engine."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import threading
import unittest

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import ContractError, DimensionError, NumericGuardError


class BackwardTests(unittest.TestCase):
    """Graph recording and gradient propagation."""

    def test_sum_gradient_is_ones(self):
        x = T.Tensor([1.0, 2.0, 3.0], requires_grad=True)
        T.backward(T.tensor_sum(x))
        np.testing.assert_array_equal(x.grad, [1.0, 1.0, 1.0])

    def test_square_gradient(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        T.backward(T.tensor_sum(T.mul(x, x)))
        np.testing.assert_array_equal(x.grad, [2.0, 4.0])

    def test_shared_node_accumulates(self):
        x = T.Tensor([3.0], requires_grad=True)
        y = T.scale(x, 2.0)
        T.backward(T.tensor_sum(T.add(y, y)))
        np.testing.assert_array_equal(x.grad, [4.0])

    def test_non_scalar_backward_rejected(self):
        x = T.Tensor([1.0, 2.0], requires_grad=True)
        with self.assertRaises(ContractError):
            T.backward(T.scale(x, 2.0))

    def test_backward_twice_is_deterministic(self):
        rng = np.random.default_rng(0)
        a = T.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = T.Tensor(rng.normal(size=(4, 2)), requires_grad=True)
        loss = T.tensor_sum(T.tanh(T.matmul(a, b)))
        T.backward(loss)
        first = a.grad.copy()
        a.zero_grad()
        b.zero_grad()
        T.backward(loss)
        np.testing.assert_array_equal(a.grad, first)

    def test_leaf_gradients_accumulate_across_calls(self):
        x = T.Tensor([1.0], requires_grad=True)
        T.backward(T.tensor_sum(T.scale(x, 3.0)))
        T.backward(T.tensor_sum(T.scale(x, 3.0)))
        np.testing.assert_array_equal(x.grad, [6.0])

    def test_matmul_gradient_matches_formula(self):
        rng = np.random.default_rng(1)
        a = T.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        b = T.Tensor(rng.normal(size=(4, 2)), requires_grad=True)
        T.backward(T.tensor_sum(T.matmul(a, b)))
        np.testing.assert_allclose(a.grad, np.ones((3, 2)) @ b.data.T, atol=1e-12)

    def test_no_grad_records_nothing(self):
        x = T.Tensor([1.0], requires_grad=True)
        with T.no_grad():
            y = T.scale(x, 2.0)
        self.assertFalse(y.requires_grad)
        self.assertTrue(T.grad_enabled())

    def test_no_grad_is_thread_local(self):
        seen = []
        with T.no_grad():
            worker = threading.Thread(target=lambda: seen.append(T.grad_enabled()))
            worker.start()
            worker.join()
        self.assertEqual(seen, [True])

    def test_operators(self):
        x = T.Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        y = (x * 2.0 - 1.0) / 2.0
        np.testing.assert_array_equal(y.data, [[0.5, 1.5], [2.5, 3.5]])
        np.testing.assert_array_equal((x @ x).data, [[7.0, 10.0], [15.0, 22.0]])
        np.testing.assert_array_equal(x.T.data, [[1.0, 3.0], [2.0, 4.0]])
        np.testing.assert_array_equal(x[0].data, [1.0, 2.0])


class PrimitiveTests(unittest.TestCase):
    """Forward values and shape checks."""

    def test_matmul_identity_and_selector(self):
        np.testing.assert_array_equal(T.matmul(np.eye(2), [[1.0, 2.0], [3.0, 4.0]]).data, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(T.matmul([[1.0, 0.0]], [[5.0], [7.0]]).data, [[5.0]])

    def test_matmul_shape_mismatch(self):
        with self.assertRaisesRegex(DimensionError, r"\(2, 3\).*\(2, 3\)"):
            T.matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_only_scalar_and_row_broadcasting(self):
        T.add(np.ones((2, 3)), np.ones(3))
        T.add(np.ones((2, 3)), 1.0)
        with self.assertRaises(DimensionError):
            T.add(np.ones((2, 3)), np.ones(2))
        with self.assertRaises(DimensionError):
            T.mul(np.ones((2, 3)), np.ones((3, 2)))

    def test_softmax_uniform_and_stable(self):
        np.testing.assert_allclose(T.softmax([0.0, 0.0, 0.0]).data, [1 / 3] * 3)
        np.testing.assert_allclose(T.softmax([1000.0, 1000.0]).data, [0.5, 0.5])
        values = np.array([1.0, 2.0, 3.0])
        expected = np.exp(values - 3.0) / np.exp(values - 3.0).sum()
        np.testing.assert_allclose(T.softmax(values).data, expected, atol=1e-15)

    def test_softmax_sums_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            data = rng.normal(scale=50.0, size=(4, 7))
            for axis in [0, 1]:
                sums = T.softmax(data, axis=axis).data.sum(axis=axis)
                np.testing.assert_allclose(sums, 1.0, atol=1e-9)

    def test_layernorm(self):
        ones, zeros = np.ones(3), np.zeros(3)
        np.testing.assert_allclose(T.layernorm([[2.0, 2.0, 2.0]], ones, zeros).data, [[0, 0, 0]])
        out = T.layernorm([[1.0, -1.0]], np.ones(2), np.zeros(2), 1e-12).data
        np.testing.assert_allclose(out, [[1.0, -1.0]], atol=1e-9)
        row = np.random.default_rng(3).normal(size=(1, 16))
        normed = T.layernorm(row, np.ones(16), np.zeros(16), 1e-5).data
        self.assertLess(abs(normed.mean()), 1e-9)
        self.assertLess(abs(normed.var() - 1.0), 1e-3)

    def test_layernorm_gain_shape(self):
        with self.assertRaises(DimensionError):
            T.layernorm(np.ones((2, 3)), np.ones(2), np.zeros(3))

    def test_cosine_rows(self):
        out = T.cosine_rows([1.0, 0.0], [[2.0, 0.0], [0.0, 3.0], [-1.0, 0.0]]).data
        np.testing.assert_allclose(out, [1.0, 0.0, -1.0])

    def test_cosine_zero_norm(self):
        out = T.cosine_rows([0.0, 0.0], [[1.0, 0.0]], eps=1e-8).data
        np.testing.assert_array_equal(out, [0.0])
        with self.assertRaises(NumericGuardError):
            T.cosine_rows([0.0, 0.0], [[1.0, 0.0]], eps=0.0)

    def test_log_guard(self):
        with self.assertRaises(NumericGuardError):
            T.log([1.0, 0.0])

    def test_take_rows_accumulates_repeats(self):
        table = T.Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        T.backward(T.tensor_sum(T.take_rows(table, [2, 0, 2])))
        np.testing.assert_array_equal(table.grad, [[1, 1], [0, 0], [2, 2]])

    def test_take_rows_bounds(self):
        with self.assertRaises(DimensionError):
            T.take_rows(np.ones((3, 2)), [3])

    def test_concat_and_stack(self):
        a, b = np.ones((2, 3)), np.zeros((1, 3))
        self.assertEqual(T.concat([a, b], axis=0).shape, (3, 3))
        self.assertEqual(T.stack([a, a], axis=0).shape, (2, 2, 3))
        with self.assertRaises(DimensionError):
            T.concat([a, np.ones((2, 2))], axis=0)
        with self.assertRaises(DimensionError):
            T.stack([a, b])

    def test_segment_softmax_sums_per_segment(self):
        segments = np.array([0, 0, 1, 2, 2, 2])
        out = T.segment_softmax(np.random.default_rng(4).normal(size=6), segments, 3).data
        np.testing.assert_allclose(np.bincount(segments, weights=out), [1.0, 1.0, 1.0], atol=1e-12)

    def test_edge_aggregate(self):
        out = T.edge_aggregate([0.5, 0.5, 1.0], [[2.0], [4.0], [7.0]], [0, 0, 1], 2).data
        np.testing.assert_allclose(out, [[3.0], [7.0]])

    def test_dropout(self):
        x = T.Tensor(np.ones(1000))
        self.assertIs(T.dropout(x, 0.0, None), x)
        dropped = T.dropout(x, 0.5, np.random.default_rng(5)).data
        self.assertTrue(set(np.unique(dropped)) <= {0.0, 2.0})


class ParamRegistryTests(unittest.TestCase):
    """Named parameter storage."""

    def setUp(self):
        self.params = T.ParamRegistry()
        self.params.add("a", np.zeros((2, 3)))
        self.params.add("b", np.ones(4))

    def test_order_and_count(self):
        self.assertEqual(self.params.names(), ["a", "b"])
        self.assertEqual(self.params.count(), 10)
        self.assertIn("a", self.params)
        self.assertEqual(len(self.params), 2)

    def test_duplicate_and_unknown(self):
        with self.assertRaises(ContractError):
            self.params.add("a", np.zeros(1))
        with self.assertRaises(ContractError):
            self.params["missing"]  # pylint: disable=pointless-statement

    def test_state_round_trip(self):
        state = self.params.state()
        state["a"][0, 0] = 5.0
        self.assertEqual(self.params["a"].data[0, 0], 0.0)
        self.params.load_state(state)
        self.assertEqual(self.params["a"].data[0, 0], 5.0)

    def test_load_state_mismatch(self):
        with self.assertRaises(ContractError):
            self.params.load_state({"a": np.zeros((2, 3))})
        with self.assertRaises(DimensionError):
            self.params.load_state({"a": np.zeros((3, 2)), "b": np.ones(4)})

    def test_gradients_default_to_zero(self):
        gradients = self.params.gradients()
        np.testing.assert_array_equal(gradients["b"], np.zeros(4))


if __name__ == "__main__":
    unittest.main()
