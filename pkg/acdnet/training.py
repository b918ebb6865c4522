"""Training loop.

For each patient, in an order derived from (seed, epoch), every visit t is
scored from the history up to t (medications only from earlier visits) and
the combined loss is accumulated over the visits. The optimizer steps once
per patient, or once per epoch with step_per = "epoch".
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging
from typing import NamedTuple, Optional

import numpy as np

from acdnet import evaluation, losses, metrics, utils
from acdnet import tensor as T
from acdnet.exceptions import TrainingError

LOGGER = logging.getLogger(__name__)


class EpochLog(NamedTuple):
    """Summary of one epoch."""

    epoch: int
    loss: float
    val_jaccard: Optional[float] = None

    def as_record(self):
        """Return the log line record."""
        return {"kind": "epoch", "epoch": self.epoch, "loss": self.loss, "val_jaccard": self.val_jaccard}


class FitResult(NamedTuple):
    """Outcome of fit()."""

    logs: list
    best_epoch: int
    best_jaccard: float
    best_state: Optional[dict]


def patient_loss(model, patient, medicine, lam, clamp, context=None):
    """Sum of the combined loss over every visit of patient."""
    total = None
    for until in range(1, len(patient.visits) + 1):
        output = model.forward(patient.history(until), medicine, context)
        target = utils.multi_hot(patient.visits[until - 1].medications, model.vocab.medications)
        loss = losses.combined_loss(output.scores, target, lam, clamp)
        total = loss if total is None else T.add(total, loss)
    return total


def epoch_order(count, seed, epoch):
    """Patient order of an epoch."""
    return np.random.default_rng(utils.derive_seed(seed, epoch)).permutation(count)


def train_epoch(model, optimizer, records, constants, cfg, epoch):
    """Run one epoch and return the mean patient loss."""
    if not records:
        raise TrainingError("no training patients")
    total = 0.0
    for position, index in enumerate(epoch_order(len(records), cfg.seed, epoch).tolist()):
        patient = records[index]
        rng = None
        if model.encoder.dropout > 0:
            rng = np.random.default_rng(utils.derive_seed(cfg.seed, epoch, position))
        context = model.context(rng)
        medicine = model.medicine_matrix(constants, context)
        loss = patient_loss(model, patient, medicine, cfg.lam, model.numerics.bce_clamp, context)
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingError(
                f"loss is {value} at epoch {epoch} on patient {patient.patient_id}"
            )
        T.backward(loss)
        if cfg.step_per == "patient":
            optimizer.step()
        total += value
    if cfg.step_per == "epoch":
        optimizer.step()
    return total / len(records)


def fit(model, optimizer, train, validation, constants, cfg, start_epoch=0, best=None, on_epoch=None):
    """Train from start_epoch to cfg.epochs, tracking the best validation Jaccard.

    on_epoch(log, improved) is called after every epoch, with the model
    holding the epoch's parameters.
    """
    logs = []
    best_epoch = best["epoch"] if best else -1
    best_jaccard = best["jaccard"] if best else -np.inf
    best_state = None
    for epoch in range(start_epoch, cfg.epochs):
        loss = train_epoch(model, optimizer, train, constants, cfg, epoch)
        val_jaccard = None
        if validation:
            predictions = evaluation.predict_visits(evaluation.model_scorer(model, constants), validation)
            val_jaccard = metrics.metric_jaccard(evaluation.flatten(predictions), cfg.threshold)
        log = EpochLog(epoch, loss, val_jaccard)
        logs.append(log)
        improved = val_jaccard is not None and val_jaccard > best_jaccard
        if improved:
            best_epoch, best_jaccard = epoch, val_jaccard
            best_state = model.params.state()
        LOGGER.info(
            "epoch %d loss %.6f val_jaccard %s",
            epoch,
            loss,
            "n/a" if val_jaccard is None else f"{val_jaccard:.6f}",
        )
        if on_epoch is not None:
            on_epoch(log, improved)
    return FitResult(logs, best_epoch, float(best_jaccard), best_state)
