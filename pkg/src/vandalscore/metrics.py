"""Ranking metrics: ROC-AUC via the Mann-Whitney statistic and PR-AUC.

ROC-AUC uses average ranks for tied scores, which makes it exactly equal
to pair counting with ties worth 1/2. PR-AUC is the step-wise integral of
precision over recall at every distinct score threshold, descending.
"""

from .errors import NoPositives, SingleClass


def roc_auc(scores, labels):
    """Probability that a random positive outranks a random negative."""
    scores = list(scores)
    labels = [bool(l) for l in labels]
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC-AUC needs both classes")

    order = sorted(range(len(scores)), key=lambda i: scores[i])
    rank_sum_pos = 0.0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j + 2) / 2.0  # ranks are 1-based
        for k in range(i, j + 1):
            if labels[order[k]]:
                rank_sum_pos += avg_rank
        i = j + 1
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pr_auc(scores, labels):
    """Area under the precision-recall step curve over distinct thresholds."""
    scores = list(scores)
    labels = [bool(l) for l in labels]
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos = sum(labels)
    if n_pos == 0:
        raise NoPositives("PR-AUC needs at least one positive")

    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    area = 0.0
    prev_recall = 0.0
    tp = 0
    fp = 0
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        for k in range(i, j + 1):
            if labels[order[k]]:
                tp += 1
            else:
                fp += 1
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return area
