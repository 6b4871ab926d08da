"""Cross-modal attention ratios and the full-drop decision (stage 2).

Attention matrices are head-averaged, row-stochastic over their unmasked
support, and sized to the prompt (system + visual + text); masked entries
are stored as exact zeros, so the ratio sums need no mask logic. Decode
rows are query rows captured during generation; they may extend past the
prompt length to cover previously generated keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyPartition,
    MissingLayer,
    NoDecodeRows,
)
from .layout import InputLayout


@dataclass(frozen=True)
class AttentionTrace:
    """Per-layer prompt attention matrices plus optional decode-step rows."""

    layers: dict[int, np.ndarray]
    decode_rows: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class PruneDecision:
    """Outcome of probing the schedule: first layer where both ratios < tau.

    ``probed`` records every probe actually evaluated, in schedule order,
    as (layer, text_to_visual, visual_to_text). Probing stops at the first
    qualifying layer.
    """

    drop_layer: int | None
    probed: tuple[tuple[int, float, float], ...]
    tau: float


def attention_ratios(a: np.ndarray, layout: InputLayout) -> tuple[float, float]:
    """Fraction of text-query attention mass on visual keys, and vice versa.

    Denominators are restricted to prompt keys (system, visual, text),
    which is the whole matrix here by construction.
    """
    a = np.asarray(a, dtype=np.float64)
    seq = layout.seq_len
    if a.ndim != 2 or a.shape != (seq, seq):
        raise DimensionMismatch(f"attention_ratios: matrix shape {a.shape} != ({seq}, {seq})")
    if layout.text_len == 0:
        raise EmptyPartition("attention_ratios: text partition is empty")
    if layout.visual_len == 0:
        raise EmptyPartition("attention_ratios: visual partition is empty")

    s0, s1 = layout.system_range
    v0, v1 = layout.visual_range
    t0, t1 = layout.text_range

    text_rows = a[t0:t1]
    visual_rows = a[v0:v1]
    t_to_v = text_rows[:, v0:v1].sum()
    t_total = text_rows[:, s0:s1].sum() + text_rows[:, v0:v1].sum() + text_rows[:, t0:t1].sum()
    v_to_t = visual_rows[:, t0:t1].sum()
    v_total = visual_rows[:, s0:s1].sum() + visual_rows[:, v0:v1].sum() + visual_rows[:, t0:t1].sum()

    alpha_tv = float(t_to_v / t_total) if t_total > 0 else 0.0
    alpha_vt = float(v_to_t / v_total) if v_total > 0 else 0.0
    return alpha_tv, alpha_vt


def decide_drop_layer(
    trace: AttentionTrace,
    layout: InputLayout,
    schedule,
    tau: float,
) -> PruneDecision:
    """Probe scheduled layers in ascending order; drop at the first layer
    where both cross-modal ratios fall below tau, else None."""
    ordered = sorted(int(x) for x in schedule)
    for layer in ordered:
        if layer not in trace.layers:
            raise MissingLayer(f"decide_drop_layer: no attention matrix for scheduled layer {layer}",
                               layer=layer)
    probed: list[tuple[int, float, float]] = []
    drop_layer = None
    for layer in ordered:
        alpha_tv, alpha_vt = attention_ratios(trace.layers[layer], layout)
        probed.append((layer, alpha_tv, alpha_vt))
        if alpha_tv < tau and alpha_vt < tau:
            drop_layer = layer
            break
    return PruneDecision(drop_layer=drop_layer, probed=tuple(probed), tau=tau)


def decoding_attention_report(trace: AttentionTrace, layout: InputLayout) -> list[dict]:
    """Per-layer mean attention fractions of decode-step queries onto the
    system / visual / text prompt partitions.

    Rows may be longer than the prompt; any remaining mass sits on
    previously generated keys, so the three fractions sum to <= 1.
    """
    if not trace.decode_rows:
        raise NoDecodeRows("decoding_attention_report: trace carries no decode rows")
    seq = layout.seq_len
    s0, s1 = layout.system_range
    v0, v1 = layout.visual_range
    t0, t1 = layout.text_range

    report = []
    for layer in sorted(trace.decode_rows):
        rows = np.asarray(trace.decode_rows[layer], dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] < seq:
            raise DimensionMismatch(
                f"decoding_attention_report: layer {layer} rows of width {rows.shape[1]} "
                f"shorter than prompt length {seq}")
        report.append({
            "layer": layer,
            "to_system": float(rows[:, s0:s1].sum(axis=1).mean()),
            "to_visual": float(rows[:, v0:v1].sum(axis=1).mean()),
            "to_text": float(rows[:, t0:t1].sum(axis=1).mean()),
        })
    return report
