"""Training losses over one visit."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import DimensionError


def _check(scores, target):
    if scores.shape != target.shape:
        raise DimensionError(f"cannot compare scores {scores.shape} and target {target.shape}")


def loss_bce(scores, target, clamp=1e-12):
    """Summed binary cross-entropy; scores are clamped into [clamp, 1 - clamp]."""
    target = np.asarray(target, dtype=np.float64)
    _check(scores, target)
    clipped = T.clamp(scores, clamp, 1.0 - clamp)
    positive = T.mul(T.Tensor(target), T.log(clipped))
    negative = T.mul(T.Tensor(1.0 - target), T.log(T.sub(1.0, clipped)))
    return T.scale(T.tensor_sum(T.add(positive, negative)), -1.0)


def loss_multi(scores, target):
    """Multi-label margin loss, normalized by the number of labels.

    Sums max(0, 1 - (s_i - s_j)) over positives i and negatives j; 0 when
    either side is empty.
    """
    target = np.asarray(target, dtype=np.float64)
    _check(scores, target)
    positives = np.flatnonzero(target > 0)
    negatives = np.flatnonzero(target <= 0)
    if positives.size == 0 or negatives.size == 0:
        return T.Tensor(0.0)
    column = T.reshape(T.take_rows(scores, positives), (positives.size, 1))
    row = T.reshape(T.take_rows(scores, negatives), (1, negatives.size))
    differences = T.sub(
        T.matmul(column, T.Tensor(np.ones((1, negatives.size)))),
        T.matmul(T.Tensor(np.ones((positives.size, 1))), row),
    )
    margins = T.relu(T.sub(1.0, differences))
    return T.scale(T.tensor_sum(margins), 1.0 / target.size)


def combined_loss(scores, target, lam, clamp=1e-12):
    """lam * BCE + (1 - lam) * margin; a single term at the boundaries."""
    if lam == 1.0:
        return loss_bce(scores, target, clamp)
    if lam == 0.0:
        return loss_multi(scores, target)
    return T.add(
        T.scale(loss_bce(scores, target, clamp), lam),
        T.scale(loss_multi(scores, target), 1.0 - lam),
    )
