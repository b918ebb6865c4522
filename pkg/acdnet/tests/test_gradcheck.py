"""Tests for the finite-difference self check."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import unittest

import numpy as np

from acdnet import gradcheck
from acdnet import tensor as T
from acdnet.exceptions import GradientCheckError


class GradcheckTests(unittest.TestCase):
    """Primitive and model suites."""

    def test_relative_error(self):
        self.assertEqual(gradcheck.relative_error([1.0, 2.0], [1.0, 2.0]), 0.0)
        self.assertAlmostEqual(gradcheck.relative_error([2.0], [1.0]), 0.5)
        self.assertEqual(gradcheck.relative_error([0.0], [0.0]), 0.0)

    def test_primitives_pass(self):
        results = gradcheck.gradcheck_primitives(0)
        failures = [(result.name, result.error) for result in results if not result.passed]
        self.assertEqual(failures, [])
        self.assertIn("matmul:a", [result.name for result in results])

    def test_model_passes(self):
        results = gradcheck.gradcheck_model(0)
        failures = [(result.name, result.error) for result in results if not result.passed]
        self.assertEqual(failures, [])
        self.assertIn("head.o1.w", [result.name for result in results])

    def test_corrupted_matmul_fails(self):
        report = gradcheck.run_gradcheck(0, corrupt="matmul")
        self.assertFalse(report.passed)
        self.assertEqual(report.corrupt, "matmul")
        self.assertIn("matmul:a", [result.name for result in report.failures])
        with self.assertRaisesRegex(GradientCheckError, report.worst.name):
            report.raise_for_failure()

    def test_corruption_is_undone(self):
        a = T.Tensor(np.ones((2, 2)), requires_grad=True)
        with gradcheck.corrupted_matmul():
            T.backward(T.tensor_sum(T.matmul(a, np.eye(2))))
        np.testing.assert_array_equal(a.grad, np.full((2, 2), 0.5))
        a.zero_grad()
        T.backward(T.tensor_sum(T.matmul(a, np.eye(2))))
        np.testing.assert_array_equal(a.grad, np.ones((2, 2)))

    def test_report_worst(self):
        report = gradcheck.GradcheckReport(
            [
                gradcheck.CheckResult("primitive", "a", 1e-7, 1e-5),
                gradcheck.CheckResult("model", "b", 5e-4, 1e-4),
                gradcheck.CheckResult("model", "c", 2e-4, 1e-4),
            ]
        )
        self.assertFalse(report.passed)
        self.assertEqual(report.worst.name, "b")
        self.assertEqual([result.name for result in report.failures], ["b", "c"])
        with self.assertRaisesRegex(GradientCheckError, "2 of 3.*model b"):
            report.raise_for_failure()


if __name__ == "__main__":
    unittest.main()
