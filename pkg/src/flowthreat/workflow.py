"""The prep -> analyze -> train -> eval stages and the streaming scorer.

Every stage reads and writes plain CSV/JSON artifacts under one output
directory, so stages can be rerun or inspected independently.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import IO

import numpy as np

from .config import RunConfig
from .exceptions import ArgumentError, FlowThreatError, SchemaMismatch
from .features import (
    MiReport,
    cumulative_explained_variance,
    pca_fit,
    project,
    rank_features_mi,
    read_cumulative_variance_csv,
    write_cumulative_variance_csv,
)
from .flowdata import Dataset, clean_labels, deduplicate, load_csv, record_from_mapping, summarize, write_csv
from .matrix import FeatureMatrix
from .metrics import (
    classification_metrics,
    confusion_matrix,
    multiclass_confusion,
    roc_curve,
    threshold_scores,
)
from .nn.network import build_network, reference_layer_specs, predict, predict_scores
from .nn.serialize import file_sha256, load_model, save_model
from .nn.training import TrainingHistory, train
from .preprocess import FittedPipeline, fit_pipeline, oversample, stratified_split, transform, undersample
from .report import mi_chart, pca_chart, render_report

log = logging.getLogger("flowthreat")

PIPELINE_JSON = "pipeline.json"
SUMMARY_JSON = "summary.json"
TRAIN_CSV = "train.csv"
TRAIN_RESAMPLED_CSV = "train_resampled.csv"
TEST_CSV = "test.csv"
TEST_RAW_CSV = "test_raw.csv"
MI_CSV = "mi.csv"
MI_SVG = "mi.svg"
PCA_CSV = "pca_cumvar.csv"
PCA_SVG = "pca_cumvar.svg"
SELECTED_JSON = "selected_features.json"
MODEL_JSON = "model.json"
HISTORY_CSV = "history.csv"
SCORES_CSV = "scores.csv"
REPORT_DIR = "report"


class MissingArtifact(FlowThreatError, FileNotFoundError):
    pass


def _need(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise MissingArtifact(f"{path} not found; run `flowthreat {stage}` first")
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def run_prep(cfg: RunConfig) -> dict:
    """load -> dedup -> clean labels -> split -> fit -> transform -> resample(train)."""
    if not cfg.inputs:
        raise ArgumentError("no input files configured (set `inputs` or pass --input)")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = load_csv(cfg.inputs, has_header=cfg.header_flag)
    ds, removed = deduplicate(raw)
    ds = clean_labels(ds)
    summary = summarize(ds, removed)
    log.info("loaded %d records, %d duplicates removed, classes %s",
             len(raw), removed, summary.class_counts)
    train_ds, test_ds = stratified_split(ds, cfg.split_spec())
    pipeline = fit_pipeline(train_ds, cfg.preprocess_config())
    train_m = transform(pipeline, train_ds)
    test_m = transform(pipeline, test_ds)
    if cfg.resample == "oversample":
        resampled = oversample(train_m, cfg.seed, cfg.resample_ratio)
    elif cfg.resample == "undersample":
        resampled = undersample(train_m, cfg.seed, cfg.resample_ratio)
    else:
        resampled = train_m

    doc = summary.to_dict()
    doc["sources"] = [{"path": s.path, "rows": s.n_rows} for s in raw.provenance]
    doc["split"] = {
        "train_rows": len(train_ds), "test_rows": len(test_ds),
        "train_class_counts": {str(k): v for k, v in train_m.class_counts().items()},
        "test_class_counts": {str(k): v for k, v in test_m.class_counts().items()},
        "resampled_class_counts": {str(k): v for k, v in resampled.class_counts().items()},
    }
    _write_json(out / SUMMARY_JSON, doc)
    pipeline.save(out / PIPELINE_JSON)
    train_m.to_csv(out / TRAIN_CSV)
    resampled.to_csv(out / TRAIN_RESAMPLED_CSV)
    test_m.to_csv(out / TEST_CSV)
    write_csv(test_ds, out / TEST_RAW_CSV)
    return {"summary": doc, "pipeline": pipeline}


def run_analyze(cfg: RunConfig) -> dict:
    out = Path(cfg.out_dir)
    train_m = FeatureMatrix.read_csv(_need(out / TRAIN_CSV, "prep"))
    if cfg.k > train_m.n_cols:
        raise ArgumentError(f"k={cfg.k} exceeds the {train_m.n_cols} available features")
    full = rank_features_mi(train_m, cfg.mi_bins)
    selected = full.names[: cfg.k]
    pca = pca_fit(train_m)
    curve = cumulative_explained_variance(pca)

    full.to_csv(out / MI_CSV)
    (out / MI_SVG).write_text(mi_chart(full), encoding="utf-8")
    write_cumulative_variance_csv(curve, out / PCA_CSV)
    (out / PCA_SVG).write_text(pca_chart(curve.tolist()), encoding="utf-8")
    _write_json(out / SELECTED_JSON, {
        "k": cfg.k, "bins": cfg.mi_bins, "features": selected,
        "scores": [s for _, s in full.scores[: cfg.k]],
    })
    log.info("selected %d features: %s", len(selected), ", ".join(selected))
    return {"mi": full, "selected": selected, "pca": pca}


def model_inputs(net, m: FeatureMatrix) -> np.ndarray:
    """Select the network's features from a pipeline matrix and apply its
    stored PCA projection, if any."""
    missing = [n for n in net.feature_names if n not in m.feature_names]
    if missing:
        raise SchemaMismatch(f"model expects features missing from the pipeline output: {missing}")
    X = m.select(net.feature_names).data
    proj = net.metadata.get("projection")
    if proj:
        X = project(X, np.asarray(proj["mean"]), np.asarray(proj["components"]))
    return X


def run_train(cfg: RunConfig) -> dict:
    out = Path(cfg.out_dir)
    train_m = FeatureMatrix.read_csv(_need(out / TRAIN_RESAMPLED_CSV, "prep"))
    test_m = FeatureMatrix.read_csv(_need(out / TEST_CSV, "prep"))
    sel = json.loads(_need(out / SELECTED_JSON, "analyze").read_text(encoding="utf-8"))
    names = sel["features"]
    train_sel, test_sel = train_m.select(names), test_m.select(names)

    metadata = {}
    if cfg.pca_components:
        pca = pca_fit(train_sel)
        k = cfg.pca_components
        if k > len(names):
            raise ArgumentError(f"pca_components={k} exceeds the {len(names)} selected features")
        axes = pca.components[:k]
        metadata["projection"] = {"mean": pca.mean.tolist(), "components": axes.tolist()}
        train_sel = train_sel.with_data(project(train_sel.data, pca.mean, axes), [f"pc{i + 1}" for i in range(k)])
        test_sel = test_sel.with_data(project(test_sel.data, pca.mean, axes), [f"pc{i + 1}" for i in range(k)])

    n_out = 1 if cfg.head == "binary" else len(FittedPipeline.load(out / PIPELINE_JSON).categories)
    net = build_network(reference_layer_specs(train_sel.n_cols, n_out), cfg.seed)
    if cfg.epochs == 0:
        log.warning("epochs = 0: writing an untrained model and an empty history")
    net, history = train(net, train_sel, test_sel, cfg.train_config(), log=log.info)
    net.feature_names = tuple(names)
    net.metadata.update(metadata)
    pipeline_path = out / PIPELINE_JSON
    ref = {"path": PIPELINE_JSON, "sha256": file_sha256(pipeline_path)} if pipeline_path.is_file() else None
    save_model(net, out / MODEL_JSON, ref)
    history.to_csv(out / HISTORY_CSV)
    return {"network": net, "history": history}


def run_eval(cfg: RunConfig) -> dict:
    out = Path(cfg.out_dir)
    net = load_model(_need(out / MODEL_JSON, "train"))
    pipeline = FittedPipeline.load(_need(out / PIPELINE_JSON, "prep"))
    missing = [n for n in net.feature_names if n not in pipeline.output_feature_names]
    if missing:
        raise SchemaMismatch(f"model features not produced by the pipeline: {missing}")
    ref = net.metadata.get("pipeline") or {}
    if ref.get("sha256") and ref["sha256"] != file_sha256(out / PIPELINE_JSON):
        log.warning("pipeline.json differs from the one the model was trained with")
    test_m = FeatureMatrix.read_csv(_need(out / TEST_CSV, "prep"))
    history = TrainingHistory.read_csv(_need(out / HISTORY_CSV, "train"))
    mi = MiReport.read_csv(_need(out / MI_CSV, "analyze"))
    curve_pca = read_cumulative_variance_csv(_need(out / PCA_CSV, "analyze"))

    X = model_inputs(net, test_m)
    scores = predict_scores(net, X)
    predicted = threshold_scores(scores, cfg.threshold)
    cm = confusion_matrix(test_m.labels, predicted)
    metrics = classification_metrics(cm)
    roc = roc_curve(test_m.labels, scores)
    multiclass = None
    if net.head == "softmax" and test_m.multiclass_labels is not None:
        probs = predict(net, X)
        mcm = multiclass_confusion(test_m.multiclass_labels, probs.argmax(axis=1),
                                   probs.shape[1], pipeline.categories)
        multiclass = (mcm, classification_metrics(mcm))
    written = render_report(metrics, cm, roc, history, mi, curve_pca, out / REPORT_DIR,
                            cfg.threshold, multiclass)
    with open(out / SCORES_CSV, "w", encoding="utf-8") as fh:
        fh.write("row,score,label,prediction\n")
        for i, (s, y, p) in enumerate(zip(scores.tolist(), test_m.labels.tolist(), predicted.tolist())):
            fh.write(f"{i},{s!r},{y},{p}\n")
    return {"metrics": metrics, "confusion": cm, "roc": roc, "scores": scores, "files": written}


def score_stream(model_path, pipeline_path, threshold: float, stdin: IO[str], stdout: IO[str]) -> tuple[int, int]:
    """Score NDJSON flow records line by line; returns (scored, errors).

    A line that cannot be scored yields ``{"error": ..., "line": n}`` and the
    stream continues.
    """
    net = load_model(model_path)
    pipeline = FittedPipeline.load(pipeline_path)
    missing = [n for n in net.feature_names if n not in pipeline.output_feature_names]
    if missing:
        raise SchemaMismatch(f"model features not produced by the pipeline: {missing}")
    from .schema import FeatureSchema

    schema = FeatureSchema.from_pairs(pipeline.schema)
    ok = bad = 0
    for lineno, line in enumerate(stdin, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            cells = record_from_mapping(schema, obj, "<stdin>", lineno)
            m = transform(pipeline, Dataset.from_records(schema, [cells]))
            score = float(predict_scores(net, model_inputs(net, m))[0])
            result = {"score": score, "label": int(score >= threshold), "threshold": threshold}
            ok += 1
        except (ValueError, TypeError, FlowThreatError) as exc:
            result = {"error": str(exc), "line": lineno}
            bad += 1
        stdout.write(json.dumps(result) + "\n")
        stdout.flush()
    return ok, bad
