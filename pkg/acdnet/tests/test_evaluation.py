"""Tests for prediction, baselines and the bootstrap protocol."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import unittest

import numpy as np

from acdnet import evaluation, metrics, tasks
from acdnet.decision_head import predict_set
from acdnet.exceptions import ContractError
from acdnet.settings import EvalConfig
from acdnet.tests.common import small_dataset, small_settings


class BootstrapTests(unittest.TestCase):
    """Bootstrap rounds over precomputed predictions."""

    @classmethod
    def setUpClass(cls):
        cls.settings = small_settings()
        cls.dataset = small_dataset()
        cls.model, optimizer = tasks.build_model(cls.settings, cls.dataset)  # pylint: disable=unused-variable
        cls.constants = cls.model.prepare(cls.dataset.graphs)
        cls.ddi_adj = cls.dataset.graphs.ddi_adj
        cls.predictions = evaluation.predict_visits(
            evaluation.model_scorer(cls.model, cls.constants), cls.dataset.records
        )

    def test_one_visit_per_prediction(self):
        self.assertEqual(len(self.predictions), len(self.dataset.records))
        for patient, visits in zip(self.dataset.records, self.predictions):
            self.assertEqual(len(visits), len(patient.visits))
            for scores, truth in visits:
                self.assertEqual(scores.shape, (self.dataset.vocab.medications,))
                self.assertTrue(np.all((scores > 0) & (scores < 1)))
                self.assertIsInstance(truth, set)

    def test_full_sample_single_round(self):
        report = evaluation.bootstrap_report(
            self.predictions, self.dataset.graphs.ddi_adj, rounds=1, fraction=1.0, top_k=(5,)
        )
        expected = evaluation.evaluate(self.predictions, self.dataset.graphs.ddi_adj, top_k=(5,))
        self.assertEqual(report.samples, len(self.predictions))
        for name, value in report.metrics.items():
            self.assertEqual(value.std, 0.0)
            self.assertAlmostEqual(value.mean, expected[name], delta=1e-12)

    def test_full_sample_every_round_identical(self):
        report = evaluation.bootstrap_report(self.predictions, self.ddi_adj, rounds=4, fraction=1.0)
        for value in report.metrics.values():
            self.assertAlmostEqual(value.std, 0.0, delta=1e-12)

    def test_sample_size_and_determinism(self):
        first = evaluation.bootstrap_report(self.predictions, self.ddi_adj, rounds=3, fraction=0.5)
        second = evaluation.bootstrap_report(self.predictions, self.ddi_adj, rounds=3, fraction=0.5)
        self.assertEqual(first.samples, len(self.predictions) // 2)
        self.assertEqual(first.metrics, second.metrics)
        self.assertEqual(list(first.metrics), metrics.metric_names())

    def test_invalid_protocol(self):
        with self.assertRaises(ContractError):
            evaluation.bootstrap_report(self.predictions, self.ddi_adj, rounds=0)
        with self.assertRaises(ContractError):
            evaluation.bootstrap_report(self.predictions, self.ddi_adj, fraction=1.5)
        with self.assertRaises(ContractError):
            evaluation.bootstrap_report([], self.dataset.graphs.ddi_adj)

    def test_workers_do_not_change_results(self):
        scorer = evaluation.model_scorer(self.model, self.constants)
        threaded = evaluation.predict_visits(scorer, self.dataset.records, workers=2)
        for first, second in zip(evaluation.flatten(self.predictions), evaluation.flatten(threaded)):
            np.testing.assert_array_equal(first[0], second[0])
            self.assertEqual(first[1], second[1])

    def test_bootstrap_eval(self):
        report = evaluation.bootstrap_eval(self.model, self.dataset, EvalConfig(rounds=2, fraction=1.0))
        expected = evaluation.evaluate(self.predictions, self.dataset.graphs.ddi_adj)
        self.assertAlmostEqual(report.metrics["jaccard"].mean, expected["jaccard"], delta=1e-12)


class BaselineTests(unittest.TestCase):
    """Random and most-frequent-k scorers."""

    def setUp(self):
        self.dataset = small_dataset()

    def test_random_baseline_is_reproducible(self):
        scorer = evaluation.random_baseline(0, 8)
        patient = self.dataset.records[0]
        first = scorer(patient.history(1))
        np.testing.assert_array_equal(first, evaluation.random_baseline(0, 8)(patient.history(1)))
        self.assertTrue(np.all((first >= 0) & (first < 1)))
        if len(patient.visits) > 1:
            self.assertFalse(np.array_equal(first, scorer(patient.history(2))))

    def test_frequency_baseline_predicts_top_k(self):
        records = self.dataset.records
        counts = np.zeros(8)
        sizes = []
        for patient in records:
            for visit in patient.visits:
                counts[list(visit.medications)] += 1
                sizes.append(len(visit.medications))
        k = max(1, int(round(np.mean(sizes))))
        scores = evaluation.frequency_baseline(records, 8)(records[0])
        expected = set(np.argsort(-counts, kind="stable")[:k].tolist())
        self.assertEqual(predict_set(scores), expected)
        np.testing.assert_array_equal(np.argsort(-scores, kind="stable"), np.argsort(-counts, kind="stable"))

    def test_frequency_baseline_ignores_patient(self):
        scorer = evaluation.frequency_baseline(self.dataset.records, 8)
        np.testing.assert_array_equal(scorer(self.dataset.records[0]), scorer(self.dataset.records[1]))


class PartitionTests(unittest.TestCase):
    """Correct, Unseen and Missed."""

    def test_partition(self):
        self.assertEqual(
            evaluation.partition({1, 2, 5}, {2, 3}),
            {"correct": [2], "unseen": [1, 5], "missed": [3]},
        )

    def test_exact_recommendation(self):
        self.assertEqual(
            evaluation.partition([4, 0], [0, 4]), {"correct": [0, 4], "unseen": [], "missed": []}
        )


if __name__ == "__main__":
    unittest.main()
