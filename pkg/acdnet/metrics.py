"""Recommendation metrics.

Set metrics (Jaccard, F1, DDI rate, predicted set size) use the binarized
prediction; ranking metrics (PR-AUC, precision@k, nDCG@k) use the scores.
Every metric is averaged per visit.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from itertools import combinations

import numpy as np
from sklearn.metrics import average_precision_score

from acdnet import utils
from acdnet.decision_head import predict_set
from acdnet.exceptions import ContractError


def jaccard(predicted, truth):
    """|predicted & truth| / |predicted | truth| (0 when both are empty)."""
    union = set(predicted) | set(truth)
    if not union:
        return 0.0
    return len(set(predicted) & set(truth)) / len(union)


def f1(predicted, truth):
    """Harmonic mean of precision and recall, 2|P & T| / (|P| + |T|); 0 without hits."""
    predicted, truth = set(predicted), set(truth)
    hits = len(predicted & truth)
    if not hits:
        return 0.0
    return 2 * hits / (len(predicted) + len(truth))


def average_precision(scores, truth):
    """Average precision of the scores against the truth set (0 when empty)."""
    if not truth:
        return 0.0
    target = utils.multi_hot(sorted(truth), len(scores))
    if target.all():
        return 1.0
    return float(average_precision_score(target, np.asarray(scores, dtype=np.float64)))


def visit_ddi_rate(predicted, ddi_adj):
    """Share of predicted pairs that interact, None with fewer than 2 predictions."""
    codes = sorted(predicted)
    if len(codes) < 2:
        return None
    pairs = list(combinations(codes, 2))
    return sum(1 for source, target in pairs if ddi_adj[source, target]) / len(pairs)


def metric_topk(scores, truth, k):
    """Return (precision@k, nDCG@k) with binary relevance.

    Ties in scores are broken by ascending index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if k <= 0 or k > scores.size:
        raise ContractError(f"k must be within [1, {scores.size}], got {k}")
    if not truth:
        return 0.0, 0.0
    ranking = np.argsort(-scores, kind="stable")[:k]
    relevance = np.array([1.0 if index in truth else 0.0 for index in ranking.tolist()])
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    ideal = discounts[: min(k, len(truth))].sum()
    return float(relevance.sum() / k), float((relevance * discounts).sum() / ideal)


def metric_jaccard(visits, threshold=0.5):
    """Mean Jaccard over (scores, truth) visits."""
    return float(np.mean([jaccard(predict_set(scores, threshold), truth) for scores, truth in visits]))


def metric_f1(visits, threshold=0.5):
    """Mean F1 over (scores, truth) visits."""
    return float(np.mean([f1(predict_set(scores, threshold), truth) for scores, truth in visits]))


def metric_prauc(visits):
    """Mean average precision over (scores, truth) visits."""
    return float(np.mean([average_precision(scores, truth) for scores, truth in visits]))


def metric_ddi_rate(predicted_sets, ddi_adj):
    """Mean DDI rate over the visits with at least 2 predictions (0 if none)."""
    rates = [visit_ddi_rate(predicted, ddi_adj) for predicted in predicted_sets]
    rates = [rate for rate in rates if rate is not None]
    return float(np.mean(rates)) if rates else 0.0


def metric_names(top_k=(5, 10)):
    """Names of the reported metrics, in report order."""
    names = ["jaccard", "prauc", "f1", "ddi_rate", "avg_med"]
    names.extend(f"precision@{k}" for k in top_k)
    names.extend(f"ndcg@{k}" for k in top_k)
    return names


def visit_metrics(scores, truth, ddi_adj, threshold=0.5, top_k=(5, 10)):
    """Return every metric of one visit (ddi_rate is None when undefined)."""
    truth = set(truth)
    predicted = predict_set(scores, threshold)
    row = {
        "jaccard": jaccard(predicted, truth),
        "prauc": average_precision(scores, truth),
        "f1": f1(predicted, truth),
        "ddi_rate": visit_ddi_rate(predicted, ddi_adj),
        "avg_med": float(len(predicted)),
    }
    ranked = {k: metric_topk(scores, truth, min(k, len(scores))) for k in top_k}
    for k in top_k:
        row[f"precision@{k}"] = ranked[k][0]
    for k in top_k:
        row[f"ndcg@{k}"] = ranked[k][1]
    return row


def aggregate(rows, top_k=(5, 10)):
    """Average per-visit metric rows."""
    if not rows:
        raise ContractError("no visits to aggregate")
    summary = {}
    for name in metric_names(top_k):
        values = [row[name] for row in rows if row[name] is not None]
        summary[name] = float(np.mean(values)) if values else 0.0
    return summary
