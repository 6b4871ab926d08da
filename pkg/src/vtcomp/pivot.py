"""Pivot token selection from [CLS]-to-visual attention (stage 1, step 1).

The attention is a single-projection softmax over query/key products; the
weight matrices are ingested from files and never trained. For video
inputs the softmax is applied per frame so that frame-wise candidates are
comparable before the cross-frame argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyThumbnail
from .layout import KIND_ANYRES, KIND_VIDEO, InputLayout
from .tensors import softmax_row

@dataclass(frozen=True)
class ClsAttention:
    """Softmax scores of the [CLS] query over visual tokens.

    ``scores`` is 1-D of length n for image/anyres inputs, or (frames,
    tokens_per_frame) with one softmax row per frame for video.
    """

    scores: np.ndarray

    @property
    def is_video(self) -> bool:
        return self.scores.ndim == 2


def cls_attention(
    z_cls: np.ndarray,
    z_v: np.ndarray,
    w_q: np.ndarray,
    w_k: np.ndarray,
    layout: InputLayout | None = None,
) -> ClsAttention:
    """Scaled dot-product attention from the [CLS] token to all visual tokens."""
    z_cls = np.asarray(z_cls, dtype=np.float64).reshape(-1)
    z_v = np.asarray(z_v, dtype=np.float64)
    w_q = np.asarray(w_q, dtype=np.float64)
    w_k = np.asarray(w_k, dtype=np.float64)

    d = z_cls.shape[0]
    if z_v.ndim != 2 or z_v.shape[1] != d:
        raise DimensionMismatch(f"cls_attention: visual matrix shape {z_v.shape} incompatible with d={d}")
    if w_q.shape != (d, d) or w_k.shape != (d, d):
        raise DimensionMismatch(f"cls_attention: projection shapes {w_q.shape}/{w_k.shape} must be ({d}, {d})")
    n = z_v.shape[0]
    if layout is not None and n != layout.visual_len:
        raise DimensionMismatch(f"cls_attention: {n} visual rows but layout declares M={layout.visual_len}")

    q = z_cls @ w_q
    keys = z_v @ w_k
    logits = (keys @ q) / np.sqrt(d)

    if layout is not None and layout.kind == KIND_VIDEO:
        f, t = layout.frames, layout.tokens_per_frame
        per_frame = logits.reshape(f, t)
        scores = np.stack([softmax_row(per_frame[i]) for i in range(f)])
        return ClsAttention(scores=scores)
    return ClsAttention(scores=softmax_row(logits))


def select_pivot(attn: ClsAttention, layout: InputLayout) -> int:
    """Index of the pivot among the visual tokens (0-based over [0, M)).

    Plain images take the global argmax, AnyRes restricts to the thumbnail,
    video takes the best (frame, token) cell and flattens it. Ties break to
    the lowest index.
    """
    m = layout.visual_len
    if layout.kind == KIND_VIDEO:
        f, t = layout.frames, layout.tokens_per_frame
        if attn.scores.shape != (f, t):
            raise DimensionMismatch(
                f"select_pivot: scores shape {attn.scores.shape} != (frames, tokens_per_frame) = ({f}, {t})")
        # Row-major flat argmax yields a*t + b with lowest-index tie-break.
        return int(np.argmax(attn.scores))

    scores = np.asarray(attn.scores).reshape(-1)
    if scores.shape[0] != m:
        raise DimensionMismatch(f"select_pivot: {scores.shape[0]} scores for M={m} visual tokens")
    if layout.kind == KIND_ANYRES:
        a, b = layout.thumbnail_range
        if b <= a:
            raise EmptyThumbnail("select_pivot: anyres thumbnail range is empty")
        return a + int(np.argmax(scores[a:b]))
    return int(np.argmax(scores))
