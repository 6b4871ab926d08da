import pytest

from vtcomp.errors import InvalidPlan, ParseError, TooShallow
from vtcomp.layout import CompressionPlan, InputLayout, layer_schedule, resolve_k


def make_layout(**kw):
    base = dict(kind="image", system_range=(0, 2), visual_range=(2, 10), text_range=(10, 14))
    base.update(kw)
    return InputLayout(**base)


def test_lengths():
    lo = make_layout()
    assert (lo.system_len, lo.visual_len, lo.text_len, lo.seq_len) == (2, 8, 4, 14)


def test_ranges_must_tile():
    with pytest.raises(ParseError):
        make_layout(text_range=(11, 14))
    with pytest.raises(ParseError):
        make_layout(visual_range=(2, 11))


def test_text_before_visual_is_allowed():
    lo = InputLayout(kind="image", system_range=(0, 2), text_range=(2, 6), visual_range=(6, 14))
    assert lo.visual_len == 8


def test_anyres_structure():
    lo = make_layout(kind="anyres", thumbnail_range=(0, 4), crop_ranges=((4, 8),))
    assert lo.thumbnail_range == (0, 4)
    with pytest.raises(ParseError):
        make_layout(kind="anyres", thumbnail_range=(0, 4), crop_ranges=((5, 8),))
    with pytest.raises(ParseError):
        make_layout(kind="anyres")


def test_video_structure():
    lo = make_layout(kind="video", frames=2, tokens_per_frame=4)
    assert lo.frames * lo.tokens_per_frame == lo.visual_len
    with pytest.raises(ParseError):
        make_layout(kind="video", frames=3, tokens_per_frame=3)


def test_layout_roundtrip():
    for lo in (
        make_layout(),
        make_layout(kind="anyres", thumbnail_range=(0, 4), crop_ranges=((4, 8),)),
        make_layout(kind="video", frames=4, tokens_per_frame=2),
    ):
        assert InputLayout.from_dict(lo.to_dict()) == lo


def test_resolve_k_paper_anchors():
    assert resolve_k(CompressionPlan(retain_ratio=0.10), 2880) == 288
    assert resolve_k(CompressionPlan(retain_ratio=0.25), 2880) == 720


def test_resolve_k_clamps():
    assert resolve_k(CompressionPlan(retain_k=10), 4) == 4
    assert resolve_k(CompressionPlan(retain_ratio=0.001), 10) == 1


def test_resolve_k_half_up():
    assert resolve_k(CompressionPlan(retain_ratio=0.25), 10) == 3  # 2.5 rounds up
    assert resolve_k(CompressionPlan(retain_ratio=0.24), 10) == 2


def test_resolve_k_bounds_property():
    plan = CompressionPlan(retain_ratio=0.37)
    for m in range(1, 200):
        assert 1 <= resolve_k(plan, m) <= m


def test_resolve_k_requires_exactly_one():
    with pytest.raises(InvalidPlan):
        resolve_k(CompressionPlan(), 10)
    with pytest.raises(InvalidPlan):
        resolve_k(CompressionPlan(retain_k=2, retain_ratio=0.5), 10)


def test_layer_schedule_values():
    assert layer_schedule(32) == [16, 20, 24, 28]
    assert layer_schedule(8) == [4, 5, 6, 7]
    assert layer_schedule(40) == [20, 25, 30, 35]


def test_layer_schedule_too_shallow():
    with pytest.raises(TooShallow):
        layer_schedule(7)


def test_layer_schedule_second_half():
    for n_layers in range(8, 128):
        sched = layer_schedule(n_layers)
        assert all(i >= n_layers // 2 for i in sched)
        assert sched == sorted(set(sched))
        assert all(i < n_layers for i in sched)


def test_plan_validation():
    with pytest.raises(InvalidPlan):
        CompressionPlan(retain_k=0)
    with pytest.raises(InvalidPlan):
        CompressionPlan(retain_ratio=1.5)
    with pytest.raises(InvalidPlan):
        CompressionPlan(tau=1.2)
    with pytest.raises(InvalidPlan):
        CompressionPlan(schedule=(4, 4, 8))
    with pytest.raises(InvalidPlan):
        CompressionPlan(schedule=(4, 40), num_layers=32)


def test_plan_roundtrip():
    plan = CompressionPlan(retain_ratio=0.1, tau=0.05, schedule=(16, 20), num_layers=32)
    assert CompressionPlan.from_dict(plan.to_dict()) == plan
