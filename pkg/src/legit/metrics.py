"""Evaluation metrics shared by the scorer, baselines, and attack harness."""

from __future__ import annotations

import numpy as np


def accuracy(y_true, y_pred) -> float:
    t, p = np.asarray(y_true), np.asarray(y_pred)
    if t.shape != p.shape or t.size == 0:
        raise ValueError("y_true and y_pred must be nonempty and aligned")
    return float((t == p).mean())


def precision_recall_f1(y_true, y_pred) -> tuple[float, float, float]:
    """Binary metrics of the positive (legible) class; 0 where undefined."""
    t = np.asarray(y_true, dtype=bool)
    p = np.asarray(y_pred, dtype=bool)
    if t.shape != p.shape or t.size == 0:
        raise ValueError("y_true and y_pred must be nonempty and aligned")
    tp = int((t & p).sum())
    fp = int((~t & p).sum())
    fn = int((t & ~p).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def classification_report(y_true, y_pred) -> dict:
    precision, recall, f1 = precision_recall_f1(y_true, y_pred)
    return {"accuracy": accuracy(y_true, y_pred), "precision": precision,
            "recall": recall, "f1": f1}


def ranking_accuracy(true_pref, pred_pref) -> float:
    return accuracy(true_pref, pred_pref)


def roc_auc(y_true, scores) -> float:
    """Rank-based AUC (Mann-Whitney with tie correction)."""
    t = np.asarray(y_true, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    if t.shape != s.shape or t.size == 0:
        raise ValueError("y_true and scores must be nonempty and aligned")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(t.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < t.size:
        j = i
        while j + 1 < t.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # mean rank of the tie group
        i = j + 1
    rank_sum_pos = float(ranks[t].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
