"""Preprocessing fitted on the training split only: imputation, frequency
encoding of nominals, percentile clipping and scaling, plus stratified
splitting and minority resampling."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ArgumentError, EmptyInput, FormatError, SchemaMismatch
from .flowdata import (
    ATTACK_CATEGORIES,
    NORMAL,
    UNKNOWN_ATTACK,
    Dataset,
    canonical_category,
)
from .matrix import FeatureMatrix
from .schema import IDENTIFIER_COLUMNS, LABEL_COLUMNS, Kind

PIPELINE_FORMAT = "flowthreat-pipeline"
PIPELINE_VERSION = 1
RESERVED_CODE = 0


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratify_on: str = "label"

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ArgumentError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.stratify_on != "label":
            raise ArgumentError("only stratification on 'label' is supported")


def split_indices(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-class seeded shuffle; each class sends round(n_c * test_fraction) rows to test."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise ArgumentError(f"class {cls} has {idx.size} record(s); need at least 2")
        idx = idx[rng.permutation(idx.size)]
        n_test = round_half_up(idx.size * spec.test_fraction)
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    tr, te = split_indices(ds.labels, spec)
    return ds.take(tr), ds.take(te)


# ---------------------------------------------------------------------------
# fitting


DEFAULT_EXCLUDED = IDENTIFIER_COLUMNS + LABEL_COLUMNS


@dataclass(frozen=True)
class PreprocessConfig:
    low_percentile: float = 1.0
    high_percentile: float = 99.0
    scaling: str = "minmax"  # or "zscore"
    exclude: tuple[str, ...] = DEFAULT_EXCLUDED
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.low_percentile <= self.high_percentile <= 100.0:
            raise ArgumentError(
                f"need 0 <= low_percentile <= high_percentile <= 100, "
                f"got ({self.low_percentile}, {self.high_percentile})"
            )
        if self.scaling not in ("minmax", "zscore"):
            raise ArgumentError(f"unknown scaling {self.scaling!r}")
        object.__setattr__(self, "exclude", tuple(self.exclude))


@dataclass(frozen=True)
class EncoderMap:
    codes: dict[str, int]
    frequencies: dict[str, int]


@dataclass(frozen=True)
class FittedPipeline:
    schema: tuple[tuple[str, str], ...]
    impute_values: dict[str, float]
    encoder_maps: dict[str, EncoderMap]
    clip_bounds: dict[str, tuple[float, float]]
    scale_params: dict[str, tuple[float, float]]
    output_feature_names: tuple[str, ...]
    fitted_on: dict = field(default_factory=dict)
    scaling: str = "minmax"
    zscore_params: dict[str, tuple[float, float]] = field(default_factory=dict)
    categories: tuple[str, ...] = ATTACK_CATEGORIES

    @property
    def schema_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.schema)

    def to_dict(self) -> dict:
        return {
            "format": PIPELINE_FORMAT,
            "version": PIPELINE_VERSION,
            "schema": [list(p) for p in self.schema],
            "fitted_on": self.fitted_on,
            "scaling": self.scaling,
            "output_feature_names": list(self.output_feature_names),
            "impute_values": self.impute_values,
            "encoder_maps": {
                k: {"codes": v.codes, "frequencies": v.frequencies}
                for k, v in self.encoder_maps.items()
            },
            "clip_bounds": {k: list(v) for k, v in self.clip_bounds.items()},
            "scale_params": {k: list(v) for k, v in self.scale_params.items()},
            "zscore_params": {k: list(v) for k, v in self.zscore_params.items()},
            "categories": list(self.categories),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedPipeline":
        if doc.get("format") != PIPELINE_FORMAT:
            raise FormatError("not a flowthreat pipeline document")
        if doc.get("version") != PIPELINE_VERSION:
            raise FormatError(f"unsupported pipeline version {doc.get('version')!r}")
        try:
            return cls(
                schema=tuple((n, k) for n, k in doc["schema"]),
                impute_values={k: float(v) for k, v in doc["impute_values"].items()},
                encoder_maps={
                    k: EncoderMap(dict(v["codes"]), dict(v["frequencies"]))
                    for k, v in doc["encoder_maps"].items()
                },
                clip_bounds={k: (float(a), float(b)) for k, (a, b) in doc["clip_bounds"].items()},
                scale_params={k: (float(a), float(b)) for k, (a, b) in doc["scale_params"].items()},
                output_feature_names=tuple(doc["output_feature_names"]),
                fitted_on=dict(doc["fitted_on"]),
                scaling=doc["scaling"],
                zscore_params={k: (float(a), float(b)) for k, (a, b) in doc["zscore_params"].items()},
                categories=tuple(doc["categories"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed pipeline document: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "FittedPipeline":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
        return cls.from_dict(doc)


def _frequency_codes(values: list) -> EncoderMap:
    counts: dict[str, int] = {}
    for v in values:
        if v is not None:
            counts[v] = counts.get(v, 0) + 1
    order = sorted(counts, key=lambda c: (-counts[c], c))
    codes = {c: i + 1 for i, c in enumerate(order)}
    return EncoderMap(codes, {c: counts[c] for c in order})


def fit_pipeline(train: Dataset, config: PreprocessConfig | None = None) -> FittedPipeline:
    """Learn every preprocessing statistic from ``train``.

    Numeric columns impute missing cells with 0 (absent behaviour), clip at the
    configured percentiles and scale by the post-clip range.  Nominal columns
    get codes by descending training frequency, ties broken lexicographically;
    code 0 is reserved for missing and unseen values.
    """
    config = config or PreprocessConfig()
    if len(train) == 0:
        raise EmptyInput("cannot fit a pipeline on an empty training set")
    unknown = set(config.exclude) - set(train.schema.names)
    if unknown:
        raise ArgumentError(f"excluded columns not in schema: {sorted(unknown)}")

    impute, encoders, bounds, scale, zparams = {}, {}, {}, {}, {}
    names = []
    for col in train.schema:
        if col.name in config.exclude:
            continue
        names.append(col.name)
        if col.kind.is_numeric:
            x = np.nan_to_num(train.columns[col.name], nan=0.0)
            impute[col.name] = 0.0
            lo, hi = np.percentile(x, [config.low_percentile, config.high_percentile])
            bounds[col.name] = (float(lo), float(hi))
            x = np.clip(x, lo, hi)
        else:
            enc = _frequency_codes(train.columns[col.name].tolist())
            encoders[col.name] = enc
            x = _encode(train.columns[col.name], enc)
        scale[col.name] = (float(x.min()), float(x.max()))
        if config.scaling == "zscore":
            zparams[col.name] = (float(x.mean()), float(x.std()))

    return FittedPipeline(
        schema=tuple((c.name, c.kind.value) for c in train.schema),
        impute_values=impute,
        encoder_maps=encoders,
        clip_bounds=bounds,
        scale_params=scale,
        output_feature_names=tuple(names),
        fitted_on={"n_rows": len(train), "seed": config.seed},
        scaling=config.scaling,
        zscore_params=zparams,
    )


def _encode(values: np.ndarray, enc: EncoderMap) -> np.ndarray:
    codes = enc.codes
    return np.array([codes.get(v, RESERVED_CODE) for v in values.tolist()], dtype=np.float64)


def category_indices(ds: Dataset, categories=ATTACK_CATEGORIES) -> np.ndarray:
    """Index of each record's canonical attack category, inferred from the label if absent."""
    lookup = {c: i for i, c in enumerate(categories)}
    unknown = lookup[UNKNOWN_ATTACK]
    out = np.empty(len(ds), dtype=np.int64)
    for i, (lab, raw) in enumerate(zip(ds.labels.tolist(), ds.attack_cats.tolist())):
        cat = canonical_category(raw)
        if cat is None:
            cat = NORMAL if lab == 0 else UNKNOWN_ATTACK
        out[i] = lookup.get(cat, unknown)
    return out


def transform(p: FittedPipeline, ds: Dataset) -> FeatureMatrix:
    """impute -> encode -> clip -> scale, in ``p.output_feature_names`` order."""
    if ds.schema.names != p.schema_names:
        raise SchemaMismatch("dataset schema differs from the schema the pipeline was fitted on")
    kinds = dict(p.schema)
    cols = []
    for name in p.output_feature_names:
        raw = ds.columns[name]
        if Kind(kinds[name]).is_numeric:
            x = np.where(np.isnan(raw), p.impute_values[name], raw)
            lo, hi = p.clip_bounds[name]
            x = np.clip(x, lo, hi)
        else:
            x = _encode(raw, p.encoder_maps[name])
        if p.scaling == "zscore":
            mu, sd = p.zscore_params[name]
            x = (x - mu) / sd if sd > 0 else x - mu
        else:
            lo, hi = p.scale_params[name]
            x = (x - lo) / (hi - lo) if hi > lo else np.zeros_like(x)
        cols.append(x)
    data = np.column_stack(cols) if cols else np.zeros((len(ds), 0))
    return FeatureMatrix(data, p.output_feature_names, ds.labels, category_indices(ds, p.categories))


# ---------------------------------------------------------------------------
# resampling


def _class_groups(m: FeatureMatrix, target_ratio: float):
    counts = m.class_counts()
    if len(counts) < 2:
        raise ArgumentError("resampling needs at least two classes")
    if not 0.0 < target_ratio <= 1.0:
        raise ArgumentError(f"target_ratio must be in (0, 1], got {target_ratio}")
    majority = max(counts, key=lambda c: (counts[c], -c))
    return counts, majority


def oversample(m: FeatureMatrix, seed: int, target_ratio: float = 1.0) -> FeatureMatrix:
    """Append with-replacement copies of each minority class until it holds at
    least ``ceil(target_ratio * majority_count)`` rows."""
    counts, majority = _class_groups(m, target_ratio)
    rng = np.random.default_rng(seed)
    target = math.ceil(round(target_ratio * counts[majority], 9))
    extra = []
    for cls in sorted(counts):
        if cls == majority or counts[cls] >= target:
            continue
        idx = np.flatnonzero(m.labels == cls)
        extra.append(rng.choice(idx, size=target - counts[cls], replace=True))
    if not extra:
        return m
    order = np.concatenate([np.arange(m.n_rows), *extra])
    return m.take(order)


def undersample(m: FeatureMatrix, seed: int, target_ratio: float = 1.0) -> FeatureMatrix:
    """Drop majority rows without replacement until minority >= target_ratio * majority."""
    counts, majority = _class_groups(m, target_ratio)
    rng = np.random.default_rng(seed)
    minority = min(c for k, c in counts.items() if k != majority)
    keep_major = min(counts[majority], math.floor(round(minority / target_ratio, 9)))
    major_idx = np.flatnonzero(m.labels == majority)
    kept = np.sort(rng.choice(major_idx, size=keep_major, replace=False))
    rest = np.flatnonzero(m.labels != majority)
    return m.take(np.sort(np.concatenate([kept, rest])))


# ---------------------------------------------------------------------------
# estimator


class FlowPreprocessor(TransformerMixin, BaseEstimator):
    """Transformer wrapping :func:`fit_pipeline` / :func:`transform`.

    ``fit`` takes a :class:`Dataset`; ``transform`` returns a float array whose
    columns are ``get_feature_names_out()``.

    Parameters
    ----------
    low_percentile, high_percentile : float
        Winsorization bounds, in percent.
    scaling : {"minmax", "zscore"}
    exclude : tuple of str or None
        Columns left out of the output; ``None`` means identifiers and labels.
    """

    def __init__(self, low_percentile=1.0, high_percentile=99.0, scaling="minmax", exclude=None):
        self.low_percentile = low_percentile
        self.high_percentile = high_percentile
        self.scaling = scaling
        self.exclude = exclude

    def fit(self, X, y=None):
        if not isinstance(X, Dataset):
            raise TypeError(f"FlowPreprocessor expects a Dataset, got {type(X).__name__}")
        cfg = PreprocessConfig(
            self.low_percentile,
            self.high_percentile,
            self.scaling,
            DEFAULT_EXCLUDED if self.exclude is None else tuple(self.exclude),
        )
        self.pipeline_ = fit_pipeline(X, cfg)
        self.n_features_out_ = len(self.pipeline_.output_feature_names)
        return self

    def transform(self, X):
        check_is_fitted(self, "pipeline_")
        return transform(self.pipeline_, X).data

    def transform_matrix(self, X) -> FeatureMatrix:
        check_is_fitted(self, "pipeline_")
        return transform(self.pipeline_, X)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "pipeline_")
        return np.asarray(self.pipeline_.output_feature_names, dtype=object)


__all__ = [
    "SplitSpec", "PreprocessConfig", "FittedPipeline", "EncoderMap", "FlowPreprocessor",
    "stratified_split", "split_indices", "fit_pipeline", "transform", "oversample",
    "undersample", "category_indices", "round_half_up",
]
