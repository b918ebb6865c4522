"""Collaborative decision head.

The direct scorer maps the health representation to medication logits; the
indirect scorer mixes those logits with the cosine similarity between the
medication-history representation and every medicine representation. A
learned elementwise gate blends both into probabilities.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from typing import NamedTuple, Optional

import numpy as np

from acdnet import tensor as T


class HeadOutput(NamedTuple):
    """Probabilities and the branch values they were built from."""

    scores: T.Tensor
    direct: T.Tensor
    indirect: Optional[T.Tensor] = None
    similarity: Optional[T.Tensor] = None


def direct_scores(r_p, weight, bias):
    """o1 = r_p W + b (unbounded logits)."""
    return T.add(T.matmul(r_p, weight), bias)


def history_similarity(r_m, medicine, eps=1e-8):
    """Cosine similarity between r_m and each medicine row, in [-1, 1]."""
    return T.cosine_rows(r_m, medicine, eps)


def indirect_scores(direct, similarity, alpha, beta, weight, bias):
    """o2 = [alpha*o1 || beta*s_m] W + b."""
    joined = T.concat([T.mul(alpha, direct), T.mul(beta, similarity)], axis=0)
    return T.add(T.matmul(joined, weight), bias)


def combine(direct, indirect, w1, w2):
    """sigmoid(w1*o1 + w2*o2); with indirect None only the direct branch."""
    logits = T.mul(w1, direct)
    if indirect is not None:
        logits = T.add(logits, T.mul(w2, indirect))
    return T.sigmoid(logits)


def predict_set(scores, threshold=0.5):
    """Indices with score >= threshold, or the argmax when none qualifies."""
    scores = np.asarray(scores, dtype=np.float64)
    chosen = np.flatnonzero(scores >= threshold)
    if chosen.size == 0:
        chosen = np.array([int(np.argmax(scores))])
    return set(chosen.tolist())


def register(params, rng, dim, medications, direct_only=False):
    """Register head parameters; direct_only skips the indirect branch."""
    params.add("head.o1.w", rng.normal(0.0, np.sqrt(2.0 / (dim + medications)), (dim, medications)))
    params.add("head.o1.b", np.zeros(medications))
    if not direct_only:
        params.add(
            "head.o2.w",
            rng.normal(0.0, np.sqrt(2.0 / (3 * medications)), (2 * medications, medications)),
        )
        params.add("head.o2.b", np.zeros(medications))
        params.add("head.alpha", np.ones(1))
        params.add("head.beta", np.ones(1))
    params.add("head.w1", np.ones(medications))
    if not direct_only:
        params.add("head.w2", np.ones(medications))


def decide(params, r_p, r_m=None, medicine=None, eps=1e-8):
    """Run the head; without r_m/medicine only the direct branch is used."""
    direct = direct_scores(r_p, params["head.o1.w"], params["head.o1.b"])
    if r_m is None or medicine is None:
        return HeadOutput(combine(direct, None, params["head.w1"], None), direct)
    similarity = history_similarity(r_m, medicine, eps)
    indirect = indirect_scores(
        direct,
        similarity,
        params["head.alpha"],
        params["head.beta"],
        params["head.o2.w"],
        params["head.o2.b"],
    )
    scores = combine(direct, indirect, params["head.w1"], params["head.w2"])
    return HeadOutput(scores, direct, indirect, similarity)
