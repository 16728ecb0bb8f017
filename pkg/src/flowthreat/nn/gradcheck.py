from __future__ import annotations

import numpy as np

from .network import Network, forward, loss_and_backward, loss_from_probs, prepare_targets


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def numeric_gradients(net: Network, X, targets, h: float = 1e-5) -> list[np.ndarray]:
    """Central differences of the train-mode loss for every trainable array.

    Moving statistics are never touched, so the network is unchanged on return.
    """
    T = prepare_targets(net, targets)

    def loss():
        _, _, probs = forward(net, X, training=True, update_stats=False)
        return loss_from_probs(probs, T, net.head)

    out = []
    for arr in net.get_arrays(net.trainable()):
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + h
            up = loss()
            flat[j] = keep - h
            down = loss()
            flat[j] = keep
            gflat[j] = (up - down) / (2 * h)
        out.append(g)
    return out


def array_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||) over one parameter array (0 when both vanish)."""
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    return float(np.linalg.norm(analytic - numeric)) / scale if scale > 0 else 0.0


def gradient_check(net: Network, X, targets, h: float = 1e-5) -> float:
    """Largest per-array relative error between backprop and central differences.

    Errors are measured per parameter array rather than per entry: entries
    whose true gradient is zero (a bias feeding batch normalization, say)
    carry only finite-difference roundoff, which no per-entry ratio survives.
    Use :func:`relative_error` with a floor for an entrywise view.
    """
    _, analytic = loss_and_backward(net, X, targets, update_stats=False)
    numeric = numeric_gradients(net, X, targets, h)
    return max(array_relative_error(a, n) for a, n in zip(analytic, numeric))
