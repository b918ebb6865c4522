"""Prediction, metric evaluation and the bootstrap protocol.

A scorer maps a patient history (last visit current) to a score vector over
medications. Predictions are computed once per test patient; bootstrap
rounds then resample patients and reduce the precomputed visit rows.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from concurrent.futures import ThreadPoolExecutor
import logging
import zlib

import numpy as np

from acdnet import metrics, utils
from acdnet import tensor as T
from acdnet.exceptions import ContractError
from acdnet.models import EvalReport, MetricSummary

LOGGER = logging.getLogger(__name__)


def model_scorer(model, constants):
    """Return a scorer backed by model (frozen parameters, no graph)."""
    with T.no_grad():
        medicine = model.medicine_matrix(constants)

    def score(history):
        with T.no_grad():
            return model.forward(history, medicine).scores.numpy()

    return score


def random_baseline(seed, medications):
    """Scorer drawing uniform scores, reproducible per patient and visit."""

    def score(history):
        key = zlib.crc32(history.patient_id.encode("utf-8"))
        rng = np.random.default_rng(utils.derive_seed(seed, key, len(history.visits)))
        return rng.random(medications)

    return score


def frequency_baseline(train_records, medications):
    """Scorer predicting the k most frequent training medications.

    k is the rounded mean medication set size of the training visits. Scores
    are shaped so that predict_set at 0.5 returns exactly those k codes and
    the ranking follows frequency (ties by ascending index).
    """
    counts = np.zeros(medications)
    sizes = []
    for patient in train_records:
        for visit in patient.visits:
            counts[list(visit.medications)] += 1
            sizes.append(len(visit.medications))
    k = min(medications, max(1, int(round(np.mean(sizes))) if sizes else 1))
    ranking = np.argsort(-counts, kind="stable")
    scores = np.empty(medications)
    for rank, code in enumerate(ranking.tolist()):
        if rank < k:
            scores[code] = 1.0 - rank / (2.0 * k)
        else:
            scores[code] = 0.5 - (rank - k + 1) / (2.0 * medications)
    LOGGER.debug("frequency baseline predicts %d medications", k)

    def score(history):  # pylint: disable=unused-argument
        return scores.copy()

    return score


def _patient_predictions(scorer, patient):
    return [
        (scorer(patient.history(until)), set(patient.visits[until - 1].medications))
        for until in range(1, len(patient.visits) + 1)
    ]


def predict_visits(scorer, records, workers=1):
    """Return, per patient, the list of (scores, truth set) of every visit."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(lambda patient: _patient_predictions(scorer, patient), records))
    return [_patient_predictions(scorer, patient) for patient in records]


def flatten(predictions):
    """Concatenate per-patient visit lists."""
    return [visit for patient in predictions for visit in patient]


def evaluate(predictions, ddi_adj, threshold=0.5, top_k=(5, 10)):
    """Average every metric over the visits of predictions."""
    rows = [
        metrics.visit_metrics(scores, truth, ddi_adj, threshold, top_k)
        for scores, truth in flatten(predictions)
    ]
    return metrics.aggregate(rows, top_k)


def bootstrap_report(predictions, ddi_adj, rounds=10, fraction=0.8, seed=0, threshold=0.5, top_k=(5, 10)):
    """Resample patients per round and report metric mean and std."""
    if not predictions:
        raise ContractError("bootstrap needs at least one patient")
    if rounds < 1 or not 0 < fraction <= 1:
        raise ContractError(f"invalid bootstrap rounds {rounds} or fraction {fraction}")
    total = len(predictions)
    size = max(1, int(np.floor(fraction * total)))
    rows = [
        [metrics.visit_metrics(scores, truth, ddi_adj, threshold, top_k) for scores, truth in patient]
        for patient in predictions
    ]
    results = []
    for round_index in range(rounds):
        rng = np.random.default_rng(utils.derive_seed(seed, round_index))
        chosen = sorted(rng.choice(total, size, replace=False).tolist())
        summary = metrics.aggregate([row for index in chosen for row in rows[index]], top_k)
        LOGGER.debug("bootstrap round %d: %s", round_index, summary)
        results.append(summary)
    report = {}
    for name in metrics.metric_names(top_k):
        values = np.array([result[name] for result in results])
        report[name] = MetricSummary(float(values.mean()), float(values.std()))
    return EvalReport(report, rounds, fraction, size)


def bootstrap_eval(model, dataset, eval_cfg, seed=0, threshold=0.5):
    """Evaluate model on dataset's patients with the bootstrap protocol."""
    constants = model.prepare(dataset.graphs)
    predictions = predict_visits(model_scorer(model, constants), dataset.records, eval_cfg.workers)
    return bootstrap_report(
        predictions,
        dataset.graphs.ddi_adj,
        eval_cfg.rounds,
        eval_cfg.fraction,
        seed,
        threshold,
        eval_cfg.top_k,
    )


def partition(predicted, truth):
    """Split a recommendation into Correct, Unseen and Missed code lists."""
    predicted, truth = set(predicted), set(truth)
    return {
        "correct": sorted(predicted & truth),
        "unseen": sorted(predicted - truth),
        "missed": sorted(truth - predicted),
    }
