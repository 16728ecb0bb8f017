"""Versioned JSON model files.

Floats are written with ``repr`` (shortest round-trip form), so a reloaded
network reproduces predictions bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..exceptions import FormatError
from .layers import Activation, BatchNorm, Dense
from .network import Network

MODEL_FORMAT = "flowthreat-model"
MODEL_VERSION = 1


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _layer_doc(layer) -> dict:
    if isinstance(layer, Dense):
        return {
            "kind": "dense",
            "in_width": layer.in_width,
            "out_width": layer.out_width,
            "weight": layer.weight.tolist(),
            "bias": layer.bias.tolist(),
        }
    if isinstance(layer, BatchNorm):
        return {
            "kind": "batchnorm",
            "width": layer.width,
            "momentum": layer.momentum,
            "epsilon": layer.epsilon,
            "gamma": layer.gamma.tolist(),
            "beta": layer.beta.tolist(),
            "moving_mean": layer.moving_mean.tolist(),
            "moving_var": layer.moving_var.tolist(),
        }
    return {"kind": "activation", "activation": layer.name}


def model_document(net: Network, pipeline_ref: dict | None = None) -> dict:
    train_config = net.metadata.get("train_config")
    digest = None
    if train_config is not None:
        digest = hashlib.sha256(json.dumps(train_config, sort_keys=True).encode()).hexdigest()
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "seed": net.seed,
        "feature_names": list(net.feature_names),
        "pipeline": pipeline_ref if pipeline_ref is not None else net.metadata.get("pipeline"),
        "train_config": train_config,
        "train_config_sha256": digest,
        "projection": net.metadata.get("projection"),
        "layers": [_layer_doc(layer) for layer in net.layers],
    }


def save_model(net: Network, path: str | Path, pipeline_ref: dict | None = None) -> None:
    """Write ``net`` to ``path``.  ``pipeline_ref`` is typically
    ``{"path": ..., "sha256": ...}`` for the fitted preprocessing pipeline."""
    doc = model_document(net, pipeline_ref)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _array(doc, key, shape, where) -> np.ndarray:
    try:
        arr = np.array(doc[key], dtype=np.float64)
    except KeyError:
        raise FormatError(f"{where}: missing {key!r}") from None
    except (TypeError, ValueError):
        raise FormatError(f"{where}: {key!r} is not a numeric array") from None
    if arr.shape != shape:
        raise FormatError(f"{where}: {key!r} has shape {arr.shape}, expected {shape}")
    return arr


def _layer_from_doc(doc: dict, pos: int):
    kind = doc.get("kind")
    where = f"layer {pos} ({kind})"
    try:
        if kind == "dense":
            i, o = int(doc["in_width"]), int(doc["out_width"])
            return Dense(_array(doc, "weight", (o, i), where), _array(doc, "bias", (o,), where))
        if kind == "batchnorm":
            w = int(doc["width"])
            return BatchNorm(
                *(_array(doc, k, (w,), where) for k in ("gamma", "beta", "moving_mean", "moving_var")),
                momentum=float(doc["momentum"]),
                epsilon=float(doc["epsilon"]),
            )
        if kind == "activation":
            return Activation(doc["activation"])
    except KeyError as exc:
        raise FormatError(f"{where}: missing field {exc}") from None
    raise FormatError(f"{where}: unknown layer kind")


def network_from_document(doc: dict) -> Network:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatError("not a flowthreat model document")
    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    if "layers" not in doc:
        raise FormatError("model document has no layers")
    layers = [_layer_from_doc(d, i) for i, d in enumerate(doc["layers"])]
    width = None
    for i, layer in enumerate(layers):
        w_in = layer.in_width if isinstance(layer, Dense) else getattr(layer, "width", None)
        if w_in is not None and width is not None and w_in != width:
            raise FormatError(f"layer {i} ({layer.kind}): input width {w_in} does not follow {width}")
        if isinstance(layer, Dense):
            width = layer.out_width
        elif isinstance(layer, BatchNorm):
            width = layer.width
    metadata = {}
    if doc.get("pipeline") is not None:
        metadata["pipeline"] = doc["pipeline"]
    if doc.get("train_config") is not None:
        metadata["train_config"] = doc["train_config"]
    proj = doc.get("projection")
    if proj is not None:
        try:
            mean = np.asarray(proj["mean"], dtype=np.float64)
            comps = np.asarray(proj["components"], dtype=np.float64)
        except (KeyError, TypeError, ValueError):
            raise FormatError("projection: needs numeric 'mean' and 'components'") from None
        if comps.ndim != 2 or mean.shape != (comps.shape[1],) or comps.shape[0] != (_input_width(layers) or 0):
            raise FormatError("projection: shape does not match the first layer")
        metadata["projection"] = proj
    return Network(
        layers,
        seed=int(doc.get("seed", 0)),
        mode="infer",
        feature_names=tuple(doc.get("feature_names", ())),
        metadata=metadata,
    )


def _input_width(layers) -> int | None:
    for layer in layers:
        if isinstance(layer, Dense):
            return layer.in_width
        if isinstance(layer, BatchNorm):
            return layer.width
    return None


def load_model(path: str | Path) -> Network:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: truncated or invalid JSON ({exc.msg})") from None
    return network_from_document(doc)
