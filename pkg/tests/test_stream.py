import json

import numpy as np
import pytest

from adfuse.stream import (
    ExpertProfile,
    FusionEvent,
    StreamConfig,
    StreamFormatError,
    generate_stream,
    load_stream,
    save_stream,
    stream_config_from_dict,
    stream_config_to_dict,
)


def _config(experts, length=100, seed=9, **kwargs):
    return StreamConfig(experts=tuple(experts), length=length, seed=seed, **kwargs)


def test_perfect_expert_always_agrees():
    cfg = _config([ExpertProfile("perfect", ((0, 1.0),), 0.0)], length=500)
    for event in generate_stream(cfg):
        assert np.sign(event.decisions[0]) == event.truth


def test_coin_flip_expert_agrees_half_the_time():
    cfg = _config([ExpertProfile("coin", ((0, 0.5),), 0.0)], length=10_000)
    events = generate_stream(cfg)
    agree = np.mean([np.sign(e.decisions[0]) == e.truth for e in events])
    assert abs(agree - 0.5) <= 0.02


def test_determinism_same_seed_byte_identical(tmp_path):
    cfg = _config(
        [ExpertProfile("a", ((0, 0.9),), 0.1), ExpertProfile("b", ((0, 0.7),), 0.2)],
        length=300,
    )
    p1, p2 = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
    save_stream(generate_stream(cfg), p1)
    save_stream(generate_stream(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_different_seed_differs():
    base = _config([ExpertProfile("a", ((0, 0.9),), 0.1)], length=50, seed=1)
    other = _config([ExpertProfile("a", ((0, 0.9),), 0.1)], length=50, seed=2)
    d1 = [tuple(e.decisions) for e in generate_stream(base)]
    d2 = [tuple(e.decisions) for e in generate_stream(other)]
    assert d1 != d2


def test_all_decisions_clamped():
    cfg = _config([ExpertProfile("noisy", ((0, 0.8),), 2.0)], length=2000)
    for event in generate_stream(cfg):
        assert -1.0 <= event.decisions[0] <= 1.0


def test_flip_episode_inverts_agreement_rate():
    cfg = _config(
        [ExpertProfile("flipper", ((0, 0.8),), 0.0, flip_episodes=((5000, 10000),))],
        length=10_000,
    )
    events = generate_stream(cfg)
    outside = np.mean([np.sign(e.decisions[0]) == e.truth for e in events[:5000]])
    inside = np.mean([np.sign(e.decisions[0]) == e.truth for e in events[5000:]])
    assert abs(inside - (1.0 - outside)) <= 0.03


def test_positive_rate_respected():
    cfg = _config([ExpertProfile("a", ((0, 1.0),), 0.0)], length=10_000, positive_rate=0.25)
    events = generate_stream(cfg)
    rate = np.mean([e.truth == 1 for e in events])
    assert abs(rate - 0.25) <= 0.02


def test_accuracy_schedule_piecewise_constant():
    profile = ExpertProfile("sched", ((0, 1.0), (100, 0.0)), 0.0)
    assert profile.accuracy_at(0) == 1.0
    assert profile.accuracy_at(99) == 1.0
    assert profile.accuracy_at(100) == 0.0
    assert profile.accuracy_at(5000) == 0.0


def test_accuracy_schedule_interpolated():
    profile = ExpertProfile("ramp", ((0, 1.0), (100, 0.0)), 0.0, interpolate=True)
    assert profile.accuracy_at(50) == pytest.approx(0.5)
    assert profile.accuracy_at(100) == 0.0


def test_schedule_must_cover_step_zero():
    with pytest.raises(ValueError):
        ExpertProfile("late", ((10, 0.5),))


def test_jsonl_round_trip_exact(tmp_path):
    cfg = _config(
        [ExpertProfile("a", ((0, 0.9),), 0.05), ExpertProfile("b", ((0, 0.6),), 0.3)],
        length=200,
    )
    events = generate_stream(cfg)
    path = tmp_path / "stream.jsonl"
    save_stream(events, path)
    loaded = load_stream(path)
    assert len(loaded) == len(events)
    for a, b in zip(events, loaded):
        assert a.event_id == b.event_id
        assert a.step == b.step
        assert a.truth == b.truth
        assert a.preset_id == b.preset_id
        assert np.array_equal(a.decisions, b.decisions)
    # and the save of the loaded stream is byte-identical
    path2 = tmp_path / "again.jsonl"
    save_stream(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_csv_round_trip_decisions(tmp_path):
    cfg = _config([ExpertProfile("a", ((0, 0.9),), 0.05)], length=50)
    events = generate_stream(cfg)
    path = tmp_path / "stream.csv"
    save_stream(events, path, fmt="csv")
    loaded = load_stream(path)
    assert len(loaded) == 50
    for a, b in zip(events, loaded):
        assert np.array_equal(a.decisions, b.decisions)
        assert a.truth == b.truth


def test_csv_without_truth_column(tmp_path):
    path = tmp_path / "no_truth.csv"
    path.write_text("step,d1,d2\n0,0.5,-0.5\n1,0.25,0.75\n", encoding="utf-8")
    events = load_stream(path)
    assert all(e.truth is None for e in events)
    assert np.allclose(events[1].decisions, [0.25, 0.75])


def test_csv_ragged_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "step,d1,d2,d3,d4,d5\n"
        "0,1,1,1,1,1\n"
        "1,1,1,1,1\n",
        encoding="utf-8",
    )
    with pytest.raises(StreamFormatError) as err:
        load_stream(path)
    assert err.value.line == 3


def test_jsonl_dimension_change_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    rows = [
        {"event_id": "a", "step": 0, "decisions": [0.1, 0.2], "truth": 1, "preset_id": "p"},
        {"event_id": "b", "step": 1, "decisions": [0.1], "truth": -1, "preset_id": "p"},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    with pytest.raises(StreamFormatError) as err:
        load_stream(path)
    assert err.value.line == 2


def test_jsonl_malformed_json_names_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"event_id": "a", "step": 0, "decisions": [0.1], "truth": 1, "preset_id": "p"}\n'
        "{not json}\n",
        encoding="utf-8",
    )
    with pytest.raises(StreamFormatError) as err:
        load_stream(path)
    assert err.value.line == 2


def test_event_truth_validation():
    with pytest.raises(StreamFormatError):
        FusionEvent(event_id="x", step=0, decisions=np.array([0.5]), truth=2)


def test_config_json_round_trip():
    cfg = _config(
        [
            ExpertProfile("a", ((0, 0.9), (50, 0.4)), 0.1, flip_episodes=((10, 20),)),
            ExpertProfile("b", ((0, 0.7),), 0.0, interpolate=True),
        ],
        length=123,
        positive_rate=0.3,
        preset_id="tower-7",
        drift_switch_steps=(10, 20),
    )
    round_tripped = stream_config_from_dict(stream_config_to_dict(cfg))
    assert round_tripped == cfg
    assert [tuple(e.decisions) for e in generate_stream(round_tripped)] == [
        tuple(e.decisions) for e in generate_stream(cfg)
    ]
