"""Writes the evaluation bundle: metrics.json, roc.csv, history.csv and four
SVG charts (training curves, confusion matrix, MI scores, cumulative variance)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import _svg
from .features import MiReport
from .metrics import ConfusionMatrix, Metrics, MulticlassConfusion, MulticlassMetrics, RocCurve, auc
from .nn.training import TrainingHistory

METRICS_FORMAT = "flowthreat-metrics"
METRICS_VERSION = 1

METRICS_JSON = "metrics.json"
ROC_CSV = "roc.csv"
HISTORY_CSV = "history.csv"
HISTORY_SVG = "history.svg"
CONFUSION_SVG = "confusion.svg"
MI_SVG = "mi.svg"
PCA_SVG = "pca_cumvar.svg"


def metrics_document(metrics, cm, curve: RocCurve, history: TrainingHistory, threshold, notes, multiclass=None) -> dict:
    doc = {
        "format": METRICS_FORMAT,
        "version": METRICS_VERSION,
        "positive_class": "attack",
        "threshold": threshold,
        "n_rows": cm.total,
        "metrics": metrics.to_dict(),
        "auc": auc(curve),
        "confusion_matrix": {
            "tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn, "grid": cm.as_grid(),
        },
        "history_epochs": len(history),
        "notes": notes,
    }
    if multiclass is not None:
        mcm, mmetrics = multiclass
        doc["multiclass"] = {
            "labels": list(mcm.labels),
            "grid": mcm.as_grid(),
            "accuracy": mmetrics.accuracy,
            "macro": mmetrics.macro.to_dict(),
            "per_class": [m.to_dict() for m in mmetrics.per_class],
        }
    return doc


def write_roc_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(curve.thresholds.tolist(), curve.fpr.tolist(), curve.tpr.tolist()):
            w.writerow([repr(t), repr(f), repr(p)])


def render_report(
    metrics: Metrics,
    cm: ConfusionMatrix,
    curve: RocCurve,
    history: TrainingHistory,
    mi: MiReport,
    pca_curve,
    out_dir,
    threshold: float = 0.5,
    multiclass: tuple[MulticlassConfusion, MulticlassMetrics] | None = None,
) -> list[Path]:
    """Write the bundle into ``out_dir`` and return the written paths.

    With an empty history the training-curve chart is skipped and the omission
    is recorded under ``notes`` in metrics.json.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    notes: list[str] = []

    def put(name: str, text: str):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    if len(history):
        epochs = list(range(1, len(history) + 1))
        loss = _svg.line_chart(
            "Training and validation loss / accuracy",
            {"train_loss": history.train_loss, "val_loss": history.val_loss,
             "train_accuracy": history.train_accuracy, "val_accuracy": history.val_accuracy},
            "epoch", "value", x=epochs, ymin=0.0,
        )
    else:
        loss = None
        notes.append(f"{HISTORY_SVG} omitted: training history is empty (0 epochs)")

    doc = metrics_document(metrics, cm, curve, history, threshold, notes, multiclass)
    put(METRICS_JSON, json.dumps(doc, indent=1) + "\n")

    write_roc_csv(curve, out / ROC_CSV)
    written.append(out / ROC_CSV)
    history.to_csv(out / HISTORY_CSV)
    written.append(out / HISTORY_CSV)
    if loss is not None:
        put(HISTORY_SVG, loss)
    else:
        (out / HISTORY_SVG).unlink(missing_ok=True)  # never leave a stale chart behind

    put(CONFUSION_SVG, _svg.heat_grid(
        "Confusion matrix (threshold %g)" % threshold, cm.as_grid(),
        ["normal", "attack"], ["normal", "attack"],
    ))
    put(MI_SVG, mi_chart(mi))
    cum = [float(v) for v in np.asarray(pca_curve).tolist()]
    put(PCA_SVG, pca_chart(cum))
    return written


def pca_chart(cumulative: list[float]) -> str:
    return _svg.line_chart(
        "Cumulative explained variance",
        {"cumulative": cumulative}, "components", "fraction of variance",
        x=list(range(1, len(cumulative) + 1)), ymin=0.0, ymax=1.0,
    )


def mi_chart(mi: MiReport) -> str:
    return _svg.bar_chart(
        "Mutual information with the label (nats)",
        [n for n, _ in mi.scores], [s for _, s in mi.scores], "MI score",
    )


def read_metrics(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
