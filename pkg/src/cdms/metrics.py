"""Clustering quality: normalized mutual information and best-map accuracy."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


def _contingency(truth, pred):
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise ValueError(f"label sequences differ in length: {truth.size} vs {pred.size}")
    if truth.size == 0:
        raise ValueError("empty label sequence")
    _, t = np.unique(truth, return_inverse=True)
    p_vals, p = np.unique(pred, return_inverse=True)
    C = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(C, (t, p), 1)
    return C, p_vals


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred):
    """``I(U;V) / sqrt(H(U) H(V))`` with natural logs.

    Two single-cluster labelings score 1; if only one side has zero entropy
    the score is 0.
    """
    C, _ = _contingency(truth, pred)
    n = C.sum()
    hu = _entropy(C.sum(axis=1), n)
    hv = _entropy(C.sum(axis=0), n)
    if hu == 0.0 and hv == 0.0:
        return 1.0
    if hu == 0.0 or hv == 0.0:
        return 0.0
    rows, cols = np.nonzero(C)
    nij = C[rows, cols].astype(np.float64)
    a = C.sum(axis=1)[rows].astype(np.float64)
    b = C.sum(axis=0)[cols].astype(np.float64)
    mi = float(np.sum(nij / n * np.log(n * nij / (a * b))))
    return min(max(mi / np.sqrt(hu * hv), 0.0), 1.0)


def best_map(C):
    """Optimal assignment of predicted to true clusters on a confusion matrix."""
    rows, cols = linear_sum_assignment(-C)
    return rows, cols


def acc(truth, pred):
    C, _ = _contingency(truth, pred)
    rows, cols = best_map(C)
    return float(C[rows, cols].sum()) / C.sum()


@dataclass
class EvalReport:
    nmi: float
    acc: float
    confusion: np.ndarray
    mapping: dict

    def __str__(self):
        return f"nmi={self.nmi:.6g} acc={self.acc:.6g}"

    def csv_row(self):
        return f"{self.nmi:.17g},{self.acc:.17g}"


def evaluate(truth, pred):
    C, p_vals = _contingency(truth, pred)
    rows, cols = best_map(C)
    t_vals = np.unique(np.asarray(truth))
    mapping = {int(p_vals[c]): int(t_vals[r]) for r, c in zip(rows, cols)}
    return EvalReport(
        nmi=nmi(truth, pred),
        acc=float(C[rows, cols].sum()) / C.sum(),
        confusion=C,
        mapping=mapping,
    )
