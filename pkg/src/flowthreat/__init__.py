"""Threat detection on network flow records.

UNSW-NB15 ingestion and cleaning, train-only preprocessing, mutual-information
and PCA analysis, a small batch-normalized feedforward classifier, and an
evaluation/report suite.  Estimator wrappers follow the scikit-learn API.
"""

from .features import FlowPCA, MutualInfoSelector
from .flowdata import Dataset, FlowRecord, load_csv, synthesize
from .matrix import FeatureMatrix
from .nn import FlowNetClassifier
from .preprocess import FlowPreprocessor
from .schema import FeatureSchema, builtin_schema

__version__ = "0.1.0"

__all__ = [
    "Dataset", "FeatureMatrix", "FeatureSchema", "FlowNetClassifier", "FlowPCA",
    "FlowPreprocessor", "FlowRecord", "MutualInfoSelector", "builtin_schema",
    "load_csv", "synthesize",
]
