"""Run configuration: a flat ``key = value`` file; command-line flags win."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .exceptions import ArgumentError
from .nn.training import TrainConfig
from .preprocess import PreprocessConfig, SplitSpec


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    has_header: str = "auto"  # auto | true | false
    seed: int = 0
    test_fraction: float = 0.2
    low_percentile: float = 1.0
    high_percentile: float = 99.0
    scaling: str = "minmax"
    resample: str = "oversample"  # oversample | undersample | none
    resample_ratio: float = 1.0
    mi_bins: int = 10
    k: int = 20
    pca_components: int = 0  # 0 keeps PCA out of the training path
    head: str = "binary"  # binary | multiclass
    epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    patience: int | None = None
    dropout: float = 0.0
    threshold: float = 0.5
    out_dir: str = "out"

    def __post_init__(self):
        if self.has_header not in ("auto", "true", "false"):
            raise ArgumentError(f"has_header must be auto, true or false, got {self.has_header!r}")
        if self.resample not in ("oversample", "undersample", "none"):
            raise ArgumentError(f"unknown resample method {self.resample!r}")
        if self.head not in ("binary", "multiclass"):
            raise ArgumentError(f"head must be binary or multiclass, got {self.head!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ArgumentError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.k < 1:
            raise ArgumentError(f"k must be >= 1, got {self.k}")

    @property
    def header_flag(self) -> bool | None:
        return {"auto": None, "true": True, "false": False}[self.has_header]

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.seed)

    def preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig(self.low_percentile, self.high_percentile, self.scaling, seed=self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, epsilon=self.adam_epsilon,
            loss="binary-ce" if self.head == "binary" else "categorical-ce",
            seed=self.seed, patience=self.patience, dropout=self.dropout,
        )

    def override(self, **values) -> "RunConfig":
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, text: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    t = types[name]
    text = text.strip()
    if name == "inputs":
        return tuple(p.strip() for p in text.split(",") if p.strip())
    if name == "patience":
        return None if text in ("", "none", "None") else int(text)
    if t == "int":
        return int(text)
    if t == "float":
        return float(text)
    return text


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[run]\n" + p.read_text(encoding="utf-8"), source=str(p))
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(parser["run"]) - known)
    if unknown:
        raise ArgumentError(f"{p}: unknown config keys: {unknown}")
    values = {}
    for key, raw in parser["run"].items():
        try:
            values[key] = _coerce(key, raw)
        except ValueError:
            raise ArgumentError(f"{p}: bad value for {key!r}: {raw!r}") from None
    return RunConfig(**values)
