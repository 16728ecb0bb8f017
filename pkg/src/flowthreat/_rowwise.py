"""Batch-independent matrix product.

BLAS and einsum choose reduction kernels by array shape, so ``x @ w.T`` on
one row can differ in the last bit from the same row inside a batch.
Accumulating one input column at a time uses only elementwise operations,
which makes every output row a fixed function of its own input row.
"""

from __future__ import annotations

import numpy as np


def rowwise_product(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``x @ w.T`` for ``x`` (n, d) and ``w`` (k, d), summed left to right over d."""
    out = np.zeros((x.shape[0], w.shape[0]))
    for j in range(x.shape[1]):
        out += np.multiply.outer(x[:, j], w[:, j])
    return out
