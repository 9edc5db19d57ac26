"""Model files: spec, scaler, weights and provenance in one JSON document.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly, so save -> load gives bit-identical weights.  Output is
canonical (fixed key order, fixed layout), so two saves of the same model
differ only in the ``created`` timestamp.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import CorruptNumber, IoFailure, ShapeMismatch, UnknownVersion
from .neuralcore import ModelSpec, NetworkState, param_shapes
from .preprocess import ScalerParams

FORMAT_VERSION = "stockcast-model/1"


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot serialise non-finite value {v!r}")
    return format(float(v), ".17g")


def _dump(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        # numeric arrays stay on one line
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_fmt(v) if isinstance(v, float) else str(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, np.generic):
        return _dump(obj.item(), indent)
    return json.dumps(obj)


def canonical_json(obj) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _dump(obj) + "\n"


def model_document(state: NetworkState, spec: ModelSpec, scaler: ScalerParams, provenance: dict) -> dict:
    return {
        "format": FORMAT_VERSION,
        "spec": spec.to_dict(),
        "scaler": scaler.to_dict(),
        "weights": [
            {"name": name, "shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}
            for name, arr in state.params.items()
        ],
        "provenance": dict(provenance),
    }


def save_model(state, spec, scaler, provenance, path, timestamp=None) -> None:
    prov = dict(provenance)
    if timestamp is None:
        timestamp = dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()
    prov["created"] = timestamp
    try:
        atomic_write_text(path, canonical_json(model_document(state, spec, scaler, prov)))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _numbers(values, where: str) -> np.ndarray:
    if not isinstance(values, list):
        raise CorruptNumber(f"{where}: expected a list of numbers")
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise CorruptNumber(f"{where}: bad value {v!r}")
    return np.array(values, dtype=np.float64)


def load_model(path):
    """Read a model file; returns ``(state, spec, scaler, provenance)``.

    Either the whole model validates or an error is raised.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptNumber(f"{path}: not a complete JSON document ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_VERSION:
        raise UnknownVersion(f"{path}: unrecognised format {doc.get('format') if isinstance(doc, dict) else None!r}")
    try:
        spec = ModelSpec(**doc["spec"])
        sc = doc["scaler"]
        scaler = ScalerParams.from_dict(
            {**sc, "minimum": _numbers(sc["minimum"], "scaler.minimum"), "maximum": _numbers(sc["maximum"], "scaler.maximum")}
        )
        weights = doc["weights"]
        provenance = doc.get("provenance", {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorruptNumber):
            raise
        raise ShapeMismatch(f"{path}: malformed model document ({exc})") from exc

    expected = param_shapes(spec)
    if len(scaler.features) != spec.input_dim or scaler.minimum.shape != (spec.input_dim,):
        raise ShapeMismatch("scaler feature count does not match input_dim")
    names = [w.get("name") for w in weights]
    if names != list(expected):
        raise ShapeMismatch(f"weight names {names} do not match {list(expected)}")
    params = {}
    for w in weights:
        name = w["name"]
        shape = tuple(w["shape"])
        if shape != expected[name]:
            raise ShapeMismatch(f"{name}: shape {shape} != {expected[name]}")
        data = _numbers(w["data"], name)
        if data.size != int(np.prod(shape)):
            raise ShapeMismatch(f"{name}: {data.size} values for shape {shape}")
        params[name] = data.reshape(shape)
    return NetworkState(spec, params), spec, scaler, provenance
