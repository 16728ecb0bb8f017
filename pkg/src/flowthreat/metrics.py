"""Confusion matrices, threshold metrics and ROC/AUC.  Attack (label 1) is the
positive class throughout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyInput, LengthMismatch, SingleClassError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_grid(self) -> list[list[int]]:
        """Rows are truth (normal, attack); columns are predictions."""
        return [[self.tn, self.fp], [self.fn, self.tp]]


@dataclass(frozen=True, eq=False)
class MulticlassConfusion:
    matrix: np.ndarray  # rows truth, cols predicted
    labels: tuple = ()

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def as_grid(self) -> list[list[int]]:
        return self.matrix.astype(int).tolist()


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class MulticlassMetrics:
    accuracy: float
    per_class: tuple[Metrics, ...]
    macro: Metrics
    labels: tuple = ()


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # +inf, then each distinct score descending

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check_pair(truth, predicted):
    t = np.asarray(truth).reshape(-1)
    p = np.asarray(predicted).reshape(-1)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} truth values vs {p.size} predictions")
    if t.size == 0:
        raise EmptyInput("nothing to evaluate")
    return t, p


def confusion_matrix(truth, predicted) -> ConfusionMatrix:
    t, p = _check_pair(truth, predicted)
    t = t.astype(bool)
    p = p.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
        fn=int(np.sum(t & ~p)), tn=int(np.sum(~t & ~p)),
    )


def multiclass_confusion(truth, predicted, n_classes: int, labels=()) -> MulticlassConfusion:
    t, p = _check_pair(truth, predicted)
    grid = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(grid, (t.astype(np.int64), p.astype(np.int64)), 1)
    return MulticlassConfusion(grid, tuple(labels))


def threshold_scores(scores, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(scores).reshape(-1) >= threshold).astype(np.int64)


def _safe_div(a, b) -> float:
    return float(a) / float(b) if b else 0.0


def _prf(tp, fp, fn):
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def classification_metrics(cm) -> Metrics | MulticlassMetrics:
    if cm.total == 0:
        raise EmptyInput("confusion matrix is empty")
    if isinstance(cm, MulticlassConfusion):
        return _multiclass_metrics(cm)
    p, r, f1 = _prf(cm.tp, cm.fp, cm.fn)
    return Metrics((cm.tp + cm.tn) / cm.total, p, r, f1)


def _multiclass_metrics(cm: MulticlassConfusion) -> MulticlassMetrics:
    g = cm.matrix
    total = g.sum()
    per = []
    for k in range(g.shape[0]):
        tp = g[k, k]
        fp = g[:, k].sum() - tp
        fn = g[k, :].sum() - tp
        tn = total - tp - fp - fn
        p, r, f1 = _prf(tp, fp, fn)
        per.append(Metrics(float((tp + tn) / total), p, r, f1))
    macro = Metrics(
        float(np.trace(g) / total),
        float(np.mean([m.precision for m in per])),
        float(np.mean([m.recall for m in per])),
        float(np.mean([m.f1 for m in per])),
    )
    return MulticlassMetrics(float(np.trace(g) / total), tuple(per), macro, cm.labels)


def roc_curve(truth, scores) -> RocCurve:
    """Sweep every distinct score from high to low.  Tied scores move the curve
    in a single diagonal step."""
    t, s = _check_pair(truth, scores)
    t = t.astype(bool)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes present")
    s = s.astype(np.float64)
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    # last index of each tie group
    ends = np.flatnonzero(np.diff(s) != 0)
    ends = np.append(ends, s.size - 1)
    tp = np.cumsum(t)[ends]
    fp = (ends + 1) - tp
    fpr = np.concatenate(([0.0], fp / n_neg))
    tpr = np.concatenate(([0.0], tp / n_pos))
    # the final tie group always lands on (1, 1)
    thresholds = np.concatenate(([np.inf], s[ends]))
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    x, y = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))
