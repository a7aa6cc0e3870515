from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..boosting import auc as _auc
from ..errors import LengthMismatch, SingleClass


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    precision_defined: bool = True
    recall_defined: bool = True

    def as_dict(self):
        return asdict(self)


def confusion(predictions, labels):
    p = np.asarray(predictions).astype(bool)
    t = np.asarray(labels).astype(bool)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} labels")
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(np.count_nonzero(~p & ~t))
    return tp, fp, tn, fn


def compute_metrics(predictions, labels, scores=None) -> EvalMetrics:
    """Binary metrics with class 1 as the positive class.

    Precision or recall with a zero denominator is reported as 0 and flagged;
    AUC is computed only when scores are given and both classes are present.
    """
    tp, fp, tn, fn = confusion(predictions, labels)
    total = tp + fp + tn + fn
    prec_ok = tp + fp > 0
    rec_ok = tp + fn > 0
    precision = tp / (tp + fp) if prec_ok else 0.0
    recall = tp / (tp + fn) if rec_ok else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    area = None
    if scores is not None:
        if len(scores) != total:
            raise LengthMismatch("scores and labels differ in length")
        try:
            area = _auc(scores, np.asarray(labels).astype(int))
        except SingleClass:
            area = None
    return EvalMetrics(accuracy=(tp + tn) / total if total else 0.0, precision=precision,
                       recall=recall, f1=f1, auc=area, tp=tp, fp=fp, tn=tn, fn=fn,
                       precision_defined=prec_ok, recall_defined=rec_ok)


def majority_vote(predictions, groups):
    """Per-group majority of binary predictions; ties resolve to the positive class."""
    predictions = np.asarray(predictions)
    groups = np.asarray(groups)
    keys, inverse = np.unique(groups, return_inverse=True)
    votes = np.bincount(inverse, weights=predictions.astype(float), minlength=keys.size)
    counts = np.bincount(inverse, minlength=keys.size)
    return keys, (2 * votes >= counts).astype(int)
