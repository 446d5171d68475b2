"""Scoring of discovered structures against ground truth.

AUROC over continuous ranking scores (Mann-Whitney form with half credit
for ties) and threshold metrics (accuracy, F1, critical success index)
over selected edge sets.
"""

import numpy as np

from .errors import ConfigError, DegenerateLabels, ShapeMismatch


def _as_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    out = labels.astype(np.int64)
    if not np.all((out == 0) | (out == 1)):
        raise ConfigError("labels must be binary (0/1)")
    return out


def auroc(scores, labels) -> float:
    """Probability a random positive outranks a random negative.

    Tied scores earn half credit, matching the Mann-Whitney statistic:
    ``(sum over (pos, neg) pairs of [s_pos > s_neg] + 0.5 [s_pos = s_neg])
    / (P * N)``. Computed via average ranks, which is exact.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _as_labels(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeMismatch(
            f"scores shape {scores.shape} vs labels shape {labels.shape}"
        )
    if not np.all(np.isfinite(scores)):
        raise ConfigError("scores contain non-finite values")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(
            f"AUROC needs both classes, got {n_pos} positives / {n_neg} negatives"
        )
    # Average ranks with ties: group g of size c ending at cumulative
    # count s has average rank s - (c-1)/2 (1-based).
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    cumulative = np.cumsum(counts)
    avg_rank = cumulative - (counts - 1) / 2.0
    ranks = avg_rank[inverse]
    rank_sum = ranks[labels == 1].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def confusion_metrics(selected, labels) -> dict:
    """Accuracy, F1, and CSI of a selected set against binary truth.

    When there is nothing to find and nothing is claimed
    (TP = FP = FN = 0), F1 and CSI are defined as 1.
    """
    selected = _as_labels(selected)
    labels = _as_labels(labels)
    if selected.shape != labels.shape or selected.ndim != 1 or selected.size < 1:
        raise ShapeMismatch(
            f"selected shape {selected.shape} vs labels shape {labels.shape}"
        )
    tp = int(np.sum((selected == 1) & (labels == 1)))
    tn = int(np.sum((selected == 0) & (labels == 0)))
    fp = int(np.sum((selected == 1) & (labels == 0)))
    fn = int(np.sum((selected == 0) & (labels == 1)))
    n = selected.size
    accuracy = (tp + tn) / n
    if tp + fp + fn == 0:
        f1 = 1.0
        csi = 1.0
    else:
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
        csi = tp / (tp + fp + fn)
    return {"accuracy": accuracy, "f1": f1, "csi": csi}
