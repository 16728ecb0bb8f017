"""``flowthreat`` command line: synth, prep, analyze, train, eval, score.

Settings come from an optional ``--config`` file of ``key = value`` lines
(keys are the :class:`~flowthreat.config.RunConfig` fields); any flag given on
the command line overrides the file.

Exit status: 0 on success, 2 for usage errors and unreadable input files,
1 for any other failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .exceptions import ArgumentError, FlowThreatError
from .flowdata import synthesize, write_csv

log = logging.getLogger("flowthreat")


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {v:g}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _non_negative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS lets the flags appear before or after the subcommand without
    # the subparser's defaults clobbering a value given up front.
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")
    common.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS,
                        help="artifact directory (default: out)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for every random step")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="flowthreat", parents=[common],
                                     description="Flow-record threat detection pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic flow CSV")
    p.add_argument("-n", "--rows", type=_non_negative_int, default=1000)
    p.add_argument("--attack-fraction", type=_fraction, default=0.3)
    p.add_argument("-o", "--output", required=True, help="CSV path to write")
    p.add_argument("--no-header", action="store_true", help="omit the header row")

    p = sub.add_parser("prep", parents=[common], help="clean, split and fit preprocessing")
    p.add_argument("-i", "--input", dest="inputs", action="append", help="input CSV (repeatable)")
    p.add_argument("--has-header", choices=["auto", "true", "false"])
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--low-percentile", type=float)
    p.add_argument("--high-percentile", type=float)
    p.add_argument("--scaling", choices=["minmax", "zscore"])
    p.add_argument("--resample", choices=["oversample", "undersample", "none"])
    p.add_argument("--resample-ratio", type=float)

    p = sub.add_parser("analyze", parents=[common], help="MI ranking and PCA variance curve")
    p.add_argument("-k", type=_positive_int, help="number of features to keep")
    p.add_argument("--bins", dest="mi_bins", type=_positive_int)

    p = sub.add_parser("train", parents=[common], help="train the classifier")
    p.add_argument("--multiclass", dest="head", action="store_const", const="multiclass",
                   help="11-way attack-category head instead of the binary head")
    p.add_argument("--epochs", type=_non_negative_int)
    p.add_argument("--batch-size", type=_positive_int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--patience", type=_positive_int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--pca-components", type=_non_negative_int)

    p = sub.add_parser("eval", parents=[common], help="evaluate on the test split and write the report")
    p.add_argument("--threshold", type=_fraction)

    p = sub.add_parser("score", parents=[common], help="score NDJSON records from stdin")
    p.add_argument("--model", help="model JSON (default: OUT_DIR/model.json)")
    p.add_argument("--pipeline", help="pipeline JSON (default: OUT_DIR/pipeline.json)")
    p.add_argument("--threshold", type=_fraction)
    return parser


_OVERRIDES = (
    "inputs", "has_header", "test_fraction", "low_percentile", "high_percentile", "scaling",
    "resample", "resample_ratio", "k", "mi_bins", "head", "epochs", "batch_size",
    "learning_rate", "patience", "dropout", "pca_components", "threshold", "seed", "out_dir",
)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    values = {k: getattr(args, k, None) for k in _OVERRIDES}
    if values["inputs"] is not None:
        values["inputs"] = tuple(values["inputs"])
    return cfg.override(**values)


def cmd_synth(args, cfg: RunConfig) -> int:
    ds = synthesize(args.rows, args.attack_fraction, cfg.seed)
    out = Path(args.output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out, header=not args.no_header)
    log.info("wrote %d rows to %s", len(ds), out)
    return 0


def cmd_prep(args, cfg: RunConfig) -> int:
    from .workflow import run_prep

    result = run_prep(cfg)
    s = result["summary"]
    print(f"records: {s['n_records']} (duplicates removed: {s['n_duplicates_removed']})")
    print(f"class counts: {s['class_counts']}")
    print(f"wrote {cfg.out_dir}/")
    return 0


def cmd_analyze(args, cfg: RunConfig) -> int:
    from .workflow import run_analyze

    result = run_analyze(cfg)
    print(f"selected {len(result['selected'])} features: {', '.join(result['selected'])}")
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    from .nn.network import count_params
    from .workflow import run_train

    result = run_train(cfg)
    total, trainable, frozen = count_params(result["network"])
    print(f"params: total {total}, trainable {trainable}, non-trainable {frozen}")
    print(f"epochs run: {len(result['history'])}")
    return 0


def cmd_eval(args, cfg: RunConfig) -> int:
    from .metrics import auc
    from .workflow import run_eval

    result = run_eval(cfg)
    m = result["metrics"]
    print(f"accuracy {m.accuracy:.4f}  precision {m.precision:.4f}  recall {m.recall:.4f}  "
          f"f1 {m.f1:.4f}  auc {auc(result['roc']):.4f}")
    return 0


def cmd_score(args, cfg: RunConfig) -> int:
    from .workflow import MODEL_JSON, PIPELINE_JSON, score_stream

    out = Path(cfg.out_dir)
    model = Path(args.model) if args.model else out / MODEL_JSON
    pipeline = Path(args.pipeline) if args.pipeline else out / PIPELINE_JSON
    for path in (model, pipeline):
        if not path.is_file():
            raise FileNotFoundError(f"file not found: {path}")
    ok, bad = score_stream(model, pipeline, cfg.threshold, sys.stdin, sys.stdout)
    log.info("scored %d records, %d errors", ok, bad)
    return 0


COMMANDS = {
    "synth": cmd_synth, "prep": cmd_prep, "analyze": cmd_analyze,
    "train": cmd_train, "eval": cmd_eval, "score": cmd_score,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="flowthreat: %(levelname)s: %(message)s", stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except FileNotFoundError as exc:
        print(f"flowthreat {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ArgumentError as exc:
        print(f"flowthreat {args.command}: error: {exc}", file=sys.stderr)
        return 2 if args.command == "synth" else 1
    except FlowThreatError as exc:
        print(f"flowthreat {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"flowthreat {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1
