"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run it alone with ``pytest tests/test_acceptance.py -v -s`` (the summary
lines are written to the terminal either way).  The real-data criterion runs
only when ``FLOWTHREAT_UNSW_DIR`` points at a directory holding the four
UNSW-NB15 record CSVs.
"""

import csv
import io
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from flowthreat.cli import main
from flowthreat.features import (
    cumulative_explained_variance,
    discrete_mutual_information,
    mutual_information,
    pca_fit,
)
from flowthreat.metrics import auc, roc_curve
from flowthreat.nn import (
    LayerSpec,
    build_network,
    count_params,
    gradient_check,
    layer_param_counts,
    loss_and_backward,
    numeric_gradients,
    reference_layer_specs,
)
from flowthreat.nn.gradcheck import relative_error
from flowthreat.workflow import score_stream

pytestmark = pytest.mark.acceptance

ARTIFACTS = ("summary.json", "pipeline.json", "train.csv", "train_resampled.csv", "test.csv",
             "test_raw.csv", "mi.csv", "selected_features.json", "pca_cumvar.csv",
             "model.json", "history.csv", "scores.csv", "report/metrics.json", "report/roc.csv")


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def run_pipeline(data: Path, out: Path, seed: int, epochs: int = 30) -> float:
    """prep -> analyze -> train -> eval through the CLI; returns wall seconds."""
    start = time.perf_counter()
    common = ["--out-dir", str(out), "--seed", str(seed)]
    assert main(common + ["prep", "-i", str(data)]) == 0
    assert main(common + ["analyze"]) == 0
    assert main(common + ["train", "--epochs", str(epochs)]) == 0
    assert main(common + ["eval"]) == 0
    return time.perf_counter() - start


def identical(a: Path, b: Path, names=ARTIFACTS) -> list[str]:
    return [n for n in names if (a / n).read_bytes() != (b / n).read_bytes()]


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_architecture_counts(verdict):
    start = time.perf_counter()
    net = build_network(reference_layer_specs(20, 11), seed=0)
    per_layer = [c for c in layer_param_counts(net) if c]
    totals = count_params(net)
    elapsed = time.perf_counter() - start
    ok = per_layer == [525, 468, 72, 228, 48, 143] and totals == (1484, 1424, 60) and elapsed < 1.0
    verdict(1, ok, f"layers={per_layer} totals={totals} time={elapsed:.3f}s")
    assert ok


# -- 2 ----------------------------------------------------------------------


def _kind_nets(seed):
    D, A, B = LayerSpec.dense, LayerSpec.act, LayerSpec.batchnorm
    rng = np.random.default_rng(100 + seed)
    x = rng.normal(size=(12, 5))
    yb = rng.integers(0, 2, size=12)
    yc = rng.integers(0, 4, size=12)
    return {
        "dense": (build_network([D(5, 6), A("relu"), D(6, 1), A("sigmoid")], seed), x, yb),
        "batchnorm-train": (build_network([D(5, 6), A("relu"), B(6), D(6, 1), A("sigmoid")], seed), x, yb),
        "sigmoid+ce": (build_network([D(5, 1), A("sigmoid")], seed), x, yb),
        "softmax+ce": (build_network([D(5, 4), A("softmax")], seed), x, yc),
        "reference": (build_network(reference_layer_specs(5, 4), seed), x, yc),
    }


def test_criterion_2_gradient_check(verdict):
    start = time.perf_counter()
    worst, worst_entry = 0.0, 0.0
    for seed in range(5):
        for net, x, y in _kind_nets(seed).values():
            worst = max(worst, gradient_check(net, x, y, h=1e-5))
            _, analytic = loss_and_backward(net, x, y)
            numeric = numeric_gradients(net, x, y, h=1e-5)
            worst_entry = max(worst_entry, *(float(relative_error(a, n, floor=1e-5).max())
                                             for a, n in zip(analytic, numeric)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and worst_entry < 1e-4 and elapsed < 30
    verdict(2, ok, f"max rel err per array={worst:.2e} entrywise={worst_entry:.2e} time={elapsed:.1f}s")
    assert ok


# -- 3 ----------------------------------------------------------------------


def pairwise_statistic(y, s):
    pos, neg = s[y == 1], s[y == 0]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    return (gt + 0.5 * eq) / (pos.size * neg.size)


def test_criterion_3_auc_oracle(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(2, 2001))
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        levels = int(rng.integers(1, 20)) if i % 2 == 0 else n  # even instances: heavy ties
        s = rng.integers(0, levels, size=n) / levels
        worst = max(worst, abs(auc(roc_curve(y, s)) - pairwise_statistic(y, s)))
    ok = worst < 1e-9
    verdict(3, ok, f"max |trapezoid - pairwise| = {worst:.2e} over 100 instances")
    assert ok


# -- 4 ----------------------------------------------------------------------


def brute_mi(x, y):
    n = len(x)
    total = 0.0
    for a in set(x):
        for b in set(y):
            c = sum(1 for u, v in zip(x, y) if u == a and v == b)
            if c:
                pa = sum(1 for u in x if u == a) / n
                pb = sum(1 for v in y if v == b) / n
                total += (c / n) * math.log((c / n) / (pa * pb))
    return total


def test_criterion_4_mi_oracle(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 300))
        x = rng.integers(0, int(rng.integers(1, 9)), size=n)
        y = rng.integers(0, int(rng.integers(1, 4)), size=n)
        worst = max(worst, abs(discrete_mutual_information(x, y) - brute_mi(x.tolist(), y.tolist())))
    y = rng.integers(0, 2, size=500)
    const = mutual_information(np.full(500, 2.5), y)
    p = np.bincount(y) / y.size
    h = float(-(p * np.log(p)).sum())
    copy_err = abs(mutual_information(y.astype(float), y, bins=2) - h)
    ok = worst < 1e-12 and const == 0.0 and copy_err < 1e-12
    verdict(4, ok, f"max oracle err={worst:.1e} constant={const} |copy - H|={copy_err:.1e}")
    assert ok


# -- 5 ----------------------------------------------------------------------


def test_criterion_5_pca(verdict):
    rng = np.random.default_rng(5)
    trace_err = ortho_err = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 12))
        x = rng.normal(size=(int(rng.integers(d + 1, 200)), d)) @ rng.normal(size=(d, d))
        p = pca_fit(x)
        trace = float(np.trace(np.cov(x, rowvar=False).reshape(d, d)))
        trace_err = max(trace_err, abs(p.eigenvalues.sum() - trace) / abs(trace))
        ortho_err = max(ortho_err, float(np.abs(p.components @ p.components.T - np.eye(d)).max()))
    fixture = pca_fit(np.array([[-3.0, -3.0], [-3.0, 0.0], [-2.0, -1.0], [0.0, 0.0]]))
    eig_err = float(np.abs(fixture.eigenvalues - [3.0, 1.0]).max())
    curve = cumulative_explained_variance(fixture)
    curve_err = float(np.abs(curve - [0.75, 1.0]).max())
    ok = trace_err < 1e-8 and ortho_err < 1e-8 and eig_err < 1e-10 and curve_err < 1e-10
    verdict(5, ok, f"trace rel={trace_err:.1e} ortho={ortho_err:.1e} eig={eig_err:.1e} curve={curve.tolist()}")
    assert ok


# -- 6, 8 -------------------------------------------------------------------


@pytest.fixture(scope="module")
def synthetic_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept")
    data = root / "flows.csv"
    assert main(["synth", "-n", "4000", "--attack-fraction", "0.3", "--seed", "17", "-o", str(data)]) == 0
    times = [run_pipeline(data, root / f"run{i}", seed=17) for i in (1, 2)]
    return root / "run1", root / "run2", times


def test_criterion_6_end_to_end_synthetic(synthetic_runs, verdict):
    a, b, times = synthetic_runs
    doc = json.loads((a / "report" / "metrics.json").read_text())
    acc, area = doc["metrics"]["accuracy"], doc["auc"]
    diff = identical(a, b)
    ok = acc >= 0.99 and area >= 0.999 and max(times) < 60 and not diff
    verdict(6, ok, f"accuracy={acc:.4f} auc={area:.4f} time={max(times):.1f}s differing={diff}")
    assert ok


def test_criterion_8_determinism(synthetic_runs, verdict):
    a, b, _ = synthetic_runs
    diff = identical(a, b, ("model.json", "report/metrics.json"))
    ok = not diff
    verdict(8, ok, f"synthetic: model.json and metrics.json identical across runs (differing={diff})")
    assert ok


# -- 7 ----------------------------------------------------------------------


UNSW_DIR = os.environ.get("FLOWTHREAT_UNSW_DIR")


@pytest.mark.realdata
@pytest.mark.skipif(not UNSW_DIR, reason="FLOWTHREAT_UNSW_DIR not set; real corpus absent")
def test_criterion_7_real_data(tmp_path, verdict):
    from flowthreat.flowdata import load_csv, write_csv
    from flowthreat.preprocess import SplitSpec, split_indices

    files = sorted(Path(UNSW_DIR).glob("UNSW-NB15_[0-9].csv"))
    assert files, f"no UNSW-NB15_<n>.csv files in {UNSW_DIR}"
    full = load_csv(files)
    _, keep = split_indices(full.labels, SplitSpec(100_000 / len(full), seed=0))
    sample = tmp_path / "sample.csv"
    write_csv(full.take(keep), sample)
    runs = []
    for i in (1, 2):
        out = tmp_path / f"run{i}"
        runs.append((out, run_pipeline(sample, out, seed=0)))
    doc = json.loads((runs[0][0] / "report" / "metrics.json").read_text())
    area, recall, elapsed = doc["auc"], doc["metrics"]["recall"], runs[0][1]
    diff = identical(runs[0][0], runs[1][0], ("model.json", "report/metrics.json"))
    ok = area >= 0.90 and recall >= 0.90 and elapsed < 600 and not diff
    verdict(7, ok, f"rows={len(keep)} auc={area:.4f} recall={recall:.4f} time={elapsed:.0f}s differing={diff}")
    assert ok


# -- 9 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def scoring_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("score")
    data = root / "flows.csv"
    assert main(["synth", "-n", "5000", "--attack-fraction", "0.3", "--seed", "23", "-o", str(data)]) == 0
    run_pipeline(data, root / "run", seed=23, epochs=10)
    return root / "run"


MALFORMED = ["{\"sbytes\": ", "[1, 2, 3]", "{\"dur\": \"fast\"}", "not json at all", "{\"label\": 7}"]


def test_criterion_9_scoring_replay(scoring_run, verdict):
    out = scoring_run
    with open(out / "test_raw.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    with open(out / "scores.csv", newline="") as fh:
        expected = [float(r["score"]) for r in csv.DictReader(fh)]
    assert len(rows) >= 1000
    lines, truth = [], []
    for i, row in enumerate(rows[:1000]):
        if i % 200 == 100:
            lines.append(MALFORMED[(i // 200) % len(MALFORMED)])
            truth.append(None)
        lines.append(json.dumps({k: (v if v != "" else None) for k, v in row.items()}))
        truth.append(expected[i])
    sink = io.StringIO()
    ok_count, bad_count = score_stream(out / "model.json", out / "pipeline.json", 0.5,
                                       io.StringIO("\n".join(lines) + "\n"), sink)
    results = [json.loads(l) for l in sink.getvalue().splitlines()]
    mismatched = sum(1 for r, t in zip(results, truth) if (t is None) != ("error" in r)
                     or (t is not None and r["score"] != t))
    ok = (len(results) == len(lines) and ok_count == 1000 and bad_count == len(lines) - 1000
          and mismatched == 0)
    verdict(9, ok, f"scored={ok_count} errors={bad_count} mismatched={mismatched} (exact equality)")
    assert ok
