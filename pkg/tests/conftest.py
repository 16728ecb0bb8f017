from __future__ import annotations

import numpy as np
import pytest

from flowthreat.flowdata import Dataset, synthesize
from flowthreat.schema import builtin_schema


@pytest.fixture(scope="session")
def schema():
    return builtin_schema()


@pytest.fixture(scope="session")
def small_synth():
    return synthesize(200, 0.3, seed=11)


def blank_row(schema, **cells):
    """A record with every cell missing except ``label`` (0) and the given overrides."""
    row = [None] * len(schema)
    row[schema.index_of("label")] = 0.0
    for name, value in cells.items():
        row[schema.index_of(name)] = value
    return tuple(row)


def dataset_of(schema, rows) -> Dataset:
    return Dataset.from_records(schema, rows)


def column_dataset(schema, name, values, labels=None):
    """Dataset with ``name`` set from ``values`` and all other feature cells missing."""
    labels = [0] * len(values) if labels is None else labels
    return dataset_of(schema, [blank_row(schema, **{name: v, "label": float(y)})
                               for v, y in zip(values, labels)])


def random_labels(rng: np.random.Generator, n: int) -> np.ndarray:
    y = rng.integers(0, 2, size=n)
    y[0], y[-1] = 0, 1
    return y


def prepared_matrices(n=2000, attack_fraction=0.3, seed=0, k=20):
    """synthesize -> clean -> split -> fit -> transform, keeping the top-``k`` MI features."""
    from flowthreat.features import rank_features_mi
    from flowthreat.flowdata import clean_labels, synthesize
    from flowthreat.preprocess import SplitSpec, fit_pipeline, oversample, stratified_split, transform

    ds = clean_labels(synthesize(n, attack_fraction, seed))
    train_ds, test_ds = stratified_split(ds, SplitSpec(0.2, seed=seed))
    p = fit_pipeline(train_ds)
    train_m, test_m = transform(p, train_ds), transform(p, test_ds)
    names = rank_features_mi(train_m, 10, k).names
    return oversample(train_m, seed).select(names), test_m.select(names)
