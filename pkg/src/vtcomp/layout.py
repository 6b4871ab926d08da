"""Structural description of the token sequence and the compression plan.

Index ranges are half-open ``(start, stop)`` pairs. The system/visual/text
ranges partition the full LLM input sequence; their relative order is
input-defined and not constrained here. For AnyRes images the thumbnail
and crop ranges are expressed *within* the visual tokens, i.e. over
``[0, M)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidPlan, ParseError, TooShallow

KIND_IMAGE = "image"
KIND_ANYRES = "anyres"
KIND_VIDEO = "video"
KINDS = (KIND_IMAGE, KIND_ANYRES, KIND_VIDEO)

Range = tuple[int, int]


def _check_range(r: Range, name: str) -> Range:
    start, stop = int(r[0]), int(r[1])
    if start < 0 or stop < start:
        raise ParseError(f"{name}: invalid range ({start}, {stop})")
    return (start, stop)


def _length(r: Range) -> int:
    return r[1] - r[0]


@dataclass(frozen=True)
class InputLayout:
    kind: str
    system_range: Range
    visual_range: Range
    text_range: Range
    thumbnail_range: Range | None = None
    crop_ranges: tuple[Range, ...] | None = None
    frames: int | None = None
    tokens_per_frame: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParseError(f"layout: unknown kind {self.kind!r}")
        ranges = {
            "system_range": _check_range(self.system_range, "system_range"),
            "visual_range": _check_range(self.visual_range, "visual_range"),
            "text_range": _check_range(self.text_range, "text_range"),
        }
        for name, r in ranges.items():
            object.__setattr__(self, name, r)

        # The three partitions must tile [0, L+M+N) exactly, in any order.
        total = sum(_length(r) for r in ranges.values())
        spans = sorted(ranges.values())
        pos = 0
        for start, stop in spans:
            if start != pos:
                raise ParseError("layout: system/visual/text ranges must tile the sequence "
                                 f"without gaps or overlap (break at position {start})")
            pos = stop
        if pos != total:
            raise ParseError("layout: ranges do not cover the sequence exactly")

        m = self.visual_len
        if self.kind == KIND_ANYRES:
            if self.thumbnail_range is None or self.crop_ranges is None:
                raise ParseError("layout: anyres requires thumbnail_range and crop_ranges")
            thumb = _check_range(self.thumbnail_range, "thumbnail_range")
            crops = tuple(_check_range(c, "crop_ranges") for c in self.crop_ranges)
            object.__setattr__(self, "thumbnail_range", thumb)
            object.__setattr__(self, "crop_ranges", crops)
            pieces = sorted([thumb, *crops])
            pos = 0
            for start, stop in pieces:
                if start != pos:
                    raise ParseError("layout: thumbnail and crop ranges must tile the "
                                     f"visual tokens (break at {start})")
                pos = stop
            if pos != m:
                raise ParseError(f"layout: thumbnail/crop ranges cover {pos} of {m} visual tokens")
        elif self.kind == KIND_VIDEO:
            f, t = self.frames, self.tokens_per_frame
            if f is None or t is None or f < 1 or t < 1:
                raise ParseError("layout: video requires frames >= 1 and tokens_per_frame >= 1")
            if f * t != m:
                raise ParseError(f"layout: frames*tokens_per_frame = {f * t} != visual count {m}")

    @property
    def system_len(self) -> int:
        return _length(self.system_range)

    @property
    def visual_len(self) -> int:
        return _length(self.visual_range)

    @property
    def text_len(self) -> int:
        return _length(self.text_range)

    @property
    def seq_len(self) -> int:
        return self.system_len + self.visual_len + self.text_len

    def to_dict(self) -> dict:
        d: dict = {
            "kind": self.kind,
            "system_range": list(self.system_range),
            "visual_range": list(self.visual_range),
            "text_range": list(self.text_range),
        }
        if self.kind == KIND_ANYRES:
            d["thumbnail_range"] = list(self.thumbnail_range)
            d["crop_ranges"] = [list(c) for c in self.crop_ranges]
        elif self.kind == KIND_VIDEO:
            d["frames"] = self.frames
            d["tokens_per_frame"] = self.tokens_per_frame
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InputLayout":
        try:
            return cls(
                kind=d["kind"],
                system_range=tuple(d["system_range"]),
                visual_range=tuple(d["visual_range"]),
                text_range=tuple(d["text_range"]),
                thumbnail_range=tuple(d["thumbnail_range"]) if "thumbnail_range" in d else None,
                crop_ranges=tuple(tuple(c) for c in d["crop_ranges"]) if "crop_ranges" in d else None,
                frames=d.get("frames"),
                tokens_per_frame=d.get("tokens_per_frame"),
            )
        except KeyError as e:
            raise ParseError(f"layout: missing field {e.args[0]!r}") from None


DEFAULT_TAU = 0.03


@dataclass(frozen=True)
class CompressionPlan:
    """How much to keep (stage 1) and when to drop everything (stage 2).

    Exactly one of retain_k / retain_ratio must be set by the time the plan
    is resolved against a token count. tau accepts the closed interval
    [0, 1] so that the boundary behaviours (always drop / never drop) stay
    expressible from the CLI.
    """

    retain_k: int | None = None
    retain_ratio: float | None = None
    tau: float = DEFAULT_TAU
    schedule: tuple[int, ...] | None = None
    num_layers: int | None = None

    def __post_init__(self):
        if self.retain_k is not None and self.retain_k < 1:
            raise InvalidPlan(f"plan: retain_k must be >= 1, got {self.retain_k}")
        if self.retain_ratio is not None and not 0.0 < self.retain_ratio <= 1.0:
            raise InvalidPlan(f"plan: retain_ratio must be in (0, 1], got {self.retain_ratio}")
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidPlan(f"plan: tau must be in [0, 1], got {self.tau}")
        if self.schedule is not None:
            sched = tuple(int(x) for x in self.schedule)
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise InvalidPlan("plan: schedule indices must be strictly increasing")
            if sched and sched[0] < 0:
                raise InvalidPlan("plan: schedule indices must be non-negative")
            if self.num_layers is not None and sched and sched[-1] >= self.num_layers:
                raise InvalidPlan("plan: schedule index beyond num_layers")
            object.__setattr__(self, "schedule", sched)

    def to_dict(self) -> dict:
        d: dict = {"tau": self.tau}
        if self.retain_k is not None:
            d["retain_k"] = self.retain_k
        if self.retain_ratio is not None:
            d["retain_ratio"] = self.retain_ratio
        if self.schedule is not None:
            d["schedule"] = list(self.schedule)
        if self.num_layers is not None:
            d["num_layers"] = self.num_layers
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CompressionPlan":
        return cls(
            retain_k=d.get("retain_k"),
            retain_ratio=d.get("retain_ratio"),
            tau=d.get("tau", DEFAULT_TAU),
            schedule=tuple(d["schedule"]) if "schedule" in d else None,
            num_layers=d.get("num_layers"),
        )

    def resolved_schedule(self) -> tuple[int, ...]:
        if self.schedule is not None:
            return self.schedule
        if self.num_layers is not None:
            return tuple(layer_schedule(self.num_layers))
        raise InvalidPlan("plan: neither schedule nor num_layers given; cannot derive probe layers")


def resolve_k(plan: CompressionPlan, m: int) -> int:
    """Number of tokens to retain out of ``m`` visual tokens.

    Ratio resolution uses half-up rounding and is clamped to [1, m].
    """
    if m < 1:
        raise InvalidPlan(f"resolve_k: need at least one visual token, got M={m}")
    if (plan.retain_k is None) == (plan.retain_ratio is None):
        raise InvalidPlan("plan: exactly one of retain_k / retain_ratio must be set")
    if plan.retain_k is not None:
        return min(plan.retain_k, m)
    return max(1, min(m, math.floor(plan.retain_ratio * m + 0.5)))


def layer_schedule(num_layers: int) -> list[int]:
    """Probe layers at fractional depths 1/2, 5/8, 6/8 and 7/8 (0-based, floored)."""
    if num_layers < 8:
        raise TooShallow(f"layer_schedule: need at least 8 layers, got {num_layers}")
    raw = [num_layers // 2, 5 * num_layers // 8, 6 * num_layers // 8, 7 * num_layers // 8]
    return sorted(set(raw))
