"""Dense numeric feature matrix with aligned label vectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ArgumentError, FormatError, SchemaMismatch

_LABEL_COL = "__label__"
_CLASS_COL = "__category__"


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    data: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray
    multiclass_labels: np.ndarray | None = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ArgumentError(f"data must be 2-D, got shape {data.shape}")
        names = tuple(self.feature_names)
        if len(names) != data.shape[1]:
            raise ArgumentError(f"{len(names)} names for {data.shape[1]} columns")
        if len(set(names)) != len(names):
            raise ArgumentError("feature names must be unique")
        if not np.all(np.isfinite(data)):
            raise ArgumentError("feature matrix contains non-finite values")
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if labels.shape[0] != data.shape[0]:
            raise ArgumentError("labels length does not match row count")
        mc = self.multiclass_labels
        if mc is not None:
            mc = np.array(mc, dtype=np.int64, copy=True).reshape(-1)
            if mc.shape[0] != data.shape[0]:
                raise ArgumentError("multiclass labels length does not match row count")
            mc.setflags(write=False)
        data.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "multiclass_labels", mc)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    def take(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.int64)
        mc = None if self.multiclass_labels is None else self.multiclass_labels[idx]
        return FeatureMatrix(self.data[idx], self.feature_names, self.labels[idx], mc)

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise SchemaMismatch(f"features not present in matrix: {missing}")
        pos = [self.feature_names.index(n) for n in names]
        return FeatureMatrix(self.data[:, pos], tuple(names), self.labels, self.multiclass_labels)

    def with_data(self, data: np.ndarray, names: Sequence[str]) -> "FeatureMatrix":
        return FeatureMatrix(data, tuple(names), self.labels, self.multiclass_labels)

    def class_counts(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def to_csv(self, path: str | Path) -> None:
        """Write with a header row; floats use repr so reloads are exact."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = list(self.feature_names) + [_LABEL_COL]
            if self.multiclass_labels is not None:
                header.append(_CLASS_COL)
            w.writerow(header)
            mc = self.multiclass_labels
            for i, row in enumerate(self.data.tolist()):
                out = [repr(v) for v in row] + [str(int(self.labels[i]))]
                if mc is not None:
                    out.append(str(int(mc[i])))
                w.writerow(out)

    @classmethod
    def read_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or _LABEL_COL not in rows[0]:
            raise FormatError(f"{path}: not a feature-matrix CSV")
        header = rows[0]
        has_mc = header[-1] == _CLASS_COL
        n_feat = len(header) - (2 if has_mc else 1)
        try:
            body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        body = body.reshape(len(rows) - 1, len(header))
        mc = body[:, n_feat + 1].astype(np.int64) if has_mc else None
        return cls(body[:, :n_feat], tuple(header[:n_feat]), body[:, n_feat].astype(np.int64), mc)
