"""Manifest loading and tensor payload validation.

A manifest is a UTF-8 JSON file describing headerless binary tensor
payloads (raw little-endian IEEE-754 float32, row-major), the input
layout, and the compression plan. Every validation failure names the
offending entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonFiniteData, ParseError, RowSumViolation, ShapeMismatch
from .layout import CompressionPlan, InputLayout
from .relevance import AttentionTrace

FORMAT_VERSION = 1
ROW_SUM_TOL = 1e-4

ROLES = ("visual_embeddings", "cls_vector", "wq", "wk", "attention_layer_k", "decode_rows")
_LAYERED_ROLES = ("attention_layer_k", "decode_rows")


@dataclass(frozen=True)
class ManifestData:
    """Everything a run needs: validated tensors, layout, and plan."""

    visual_embeddings: np.ndarray
    layout: InputLayout
    plan: CompressionPlan
    cls_vector: np.ndarray | None = None
    wq: np.ndarray | None = None
    wk: np.ndarray | None = None
    attention_layers: dict[int, np.ndarray] = field(default_factory=dict)
    decode_rows: dict[int, np.ndarray] = field(default_factory=dict)
    path: Path | None = None

    @property
    def trace(self) -> AttentionTrace:
        return AttentionTrace(layers=self.attention_layers, decode_rows=self.decode_rows)

    def has_stage1_inputs(self) -> bool:
        return self.cls_vector is not None and self.wq is not None and self.wk is not None

    def has_stage2_inputs(self) -> bool:
        return bool(self.attention_layers)


def _read_payload(base: Path, entry: dict, name: str) -> np.ndarray:
    dtype = entry.get("dtype", "f32le")
    if dtype != "f32le":
        raise ParseError(f"entry {name!r}: unsupported dtype {dtype!r} (only f32le)")
    shape = entry.get("shape")
    if not isinstance(shape, list) or not shape or not all(isinstance(x, int) and x >= 0 for x in shape):
        raise ParseError(f"entry {name!r}: shape must be a non-empty list of non-negative ints")
    rel = entry.get("file")
    if not isinstance(rel, str):
        raise ParseError(f"entry {name!r}: missing file path")
    path = base / rel
    if not path.is_file():
        raise ParseError(f"entry {name!r}: file {rel!r} does not exist")
    expected = math.prod(shape) * 4
    actual = path.stat().st_size
    if actual != expected:
        raise ShapeMismatch(
            f"entry {name!r}: file {rel!r} holds {actual} bytes, shape {shape} requires {expected}")
    data = np.fromfile(path, dtype="<f4").reshape(shape)
    if not np.all(np.isfinite(data)):
        raise NonFiniteData(f"entry {name!r}: payload contains NaN/Inf")
    return data


def _validate_attention(a: np.ndarray, seq: int, name: str) -> None:
    if a.ndim != 2 or a.shape != (seq, seq):
        raise ShapeMismatch(f"entry {name!r}: attention shape {a.shape} != ({seq}, {seq})")
    if np.any(a < 0):
        raise RowSumViolation(f"entry {name!r}: negative attention weight")
    sums = a.sum(axis=1, dtype=np.float64)
    # Fully masked rows (all exact zeros) are allowed; every other row must
    # be stochastic over its unmasked support.
    unmasked = sums > 0
    bad = np.flatnonzero(unmasked & (np.abs(sums - 1.0) > ROW_SUM_TOL))
    if bad.size:
        row = int(bad[0])
        raise RowSumViolation(
            f"entry {name!r}: row {row} sums to {sums[row]:.6f}, expected 1 +/- {ROW_SUM_TOL}",
            row=row)


def load_manifest(path) -> ManifestData:
    """Parse and fully validate a manifest plus all referenced payloads."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"manifest {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"manifest {path}: top level must be a JSON object")
    if raw.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"manifest {path}: format_version must be {FORMAT_VERSION}")

    if "layout" not in raw:
        raise ParseError(f"manifest {path}: missing layout")
    layout = InputLayout.from_dict(raw["layout"])
    plan = CompressionPlan.from_dict(raw.get("plan", {}))

    entries = raw.get("entries")
    if not isinstance(entries, list):
        raise ParseError(f"manifest {path}: entries must be a list")

    base = path.parent
    singletons: dict[str, np.ndarray] = {}
    attention_layers: dict[int, np.ndarray] = {}
    decode_rows: dict[int, np.ndarray] = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ParseError(f"entry #{i}: must be a JSON object")
        name = entry.get("name", f"#{i}")
        role = entry.get("role")
        if role not in ROLES:
            raise ParseError(f"entry {name!r}: unknown role {role!r}")
        data = _read_payload(base, entry, name)

        if role in _LAYERED_ROLES:
            layer = entry.get("layer")
            if not isinstance(layer, int):
                raise ParseError(f"entry {name!r}: role {role} requires an integer layer")
            target = attention_layers if role == "attention_layer_k" else decode_rows
            if layer in target:
                raise ParseError(f"entry {name!r}: duplicate {role} for layer {layer}")
            if role == "attention_layer_k":
                _validate_attention(data, layout.seq_len, name)
            elif data.ndim != 2 or data.shape[1] < layout.seq_len:
                raise ShapeMismatch(
                    f"entry {name!r}: decode rows shape {data.shape} narrower than prompt "
                    f"length {layout.seq_len}")
            target[layer] = data
        else:
            if role in singletons:
                raise ParseError(f"entry {name!r}: duplicate role {role!r}")
            singletons[role] = data

    visual = singletons.get("visual_embeddings")
    if visual is None:
        raise ParseError(f"manifest {path}: no visual_embeddings entry")
    if visual.ndim != 2:
        raise ShapeMismatch(f"visual_embeddings: expected 2-D matrix, got shape {visual.shape}")
    if visual.shape[0] != layout.visual_len:
        raise ShapeMismatch(
            f"visual_embeddings: {visual.shape[0]} rows but layout declares M={layout.visual_len}")

    d = visual.shape[1]
    cls_vector = singletons.get("cls_vector")
    if cls_vector is not None:
        cls_vector = cls_vector.reshape(-1)
        if cls_vector.shape[0] != d:
            raise ShapeMismatch(f"cls_vector: length {cls_vector.shape[0]} != token width {d}")
    for role in ("wq", "wk"):
        w = singletons.get(role)
        if w is not None and w.shape != (d, d):
            raise ShapeMismatch(f"{role}: shape {w.shape} != ({d}, {d})")

    return ManifestData(
        visual_embeddings=visual,
        layout=layout,
        plan=plan,
        cls_vector=cls_vector,
        wq=singletons.get("wq"),
        wk=singletons.get("wk"),
        attention_layers=attention_layers,
        decode_rows=decode_rows,
        path=path,
    )


def write_tensor(path, data: np.ndarray) -> None:
    """Write a raw little-endian float32 payload (fixture/export helper)."""
    np.ascontiguousarray(data, dtype="<f4").tofile(path)
