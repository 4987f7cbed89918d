"""Data model: time conversion, profile validation, decisions, segments."""

import dataclasses
import random

import pytest

from echo_sched.model import (
    US_PER_SECOND,
    CostProfile,
    Deadline,
    Decision,
    Platform,
    Segment,
    Task,
    TraceError,
    from_seconds,
    to_seconds,
    validate_trace,
)
from conftest import mk_profile, mk_task, sec


def test_from_seconds_examples():
    assert from_seconds(1.0) == 1_000_000
    assert from_seconds(0.0015) == 1_500
    assert from_seconds(0) == 0


def test_to_seconds_round_trip():
    assert to_seconds(2_500_000) == 2.5
    assert to_seconds(from_seconds(0.75)) == 0.75


def test_time_arithmetic_is_exact():
    # integer microseconds: sums associate and commute exactly
    rng = random.Random(11)
    for _ in range(200):
        parts = [rng.randrange(0, 10 * US_PER_SECOND) for _ in range(8)]
        total = sum(parts)
        rng.shuffle(parts)
        acc = 0
        for p in parts:
            acc += p
        assert acc == total


def test_profile_rejects_negative_duration():
    with pytest.raises(TraceError, match="r_mobile"):
        mk_profile(r_mobile=-1.0)


def test_profile_rejects_non_integer_duration():
    with pytest.raises(TraceError):
        CostProfile(r_mobile=1.5, r_edge=1, r_cloud=1, up_edge=0,
                    down_edge=0, up_cloud=0, down_cloud=0)


def test_profile_rejects_bool_duration():
    with pytest.raises(TraceError):
        CostProfile(r_mobile=True, r_edge=1, r_cloud=1, up_edge=0,
                    down_edge=0, up_cloud=0, down_cloud=0)


def test_task_rejects_negative_arrival():
    with pytest.raises(TraceError, match="arrival"):
        mk_task("t0", arrival=-2.0)


def test_task_and_profile_are_frozen():
    task = mk_task("t0")
    with pytest.raises(dataclasses.FrozenInstanceError):
        task.arrival = 5
    with pytest.raises(dataclasses.FrozenInstanceError):
        task.profile.r_mobile = 5


def test_validate_trace_clean():
    tasks = [mk_task("t0"), mk_task("t1", arrival=1.0)]
    assert validate_trace(tasks) == []


def test_validate_trace_warns_slow_edge_upload():
    tasks = [mk_task("t0", up_edge=2.0, up_cloud=1.0)]
    warnings = validate_trace(tasks)
    assert any("edge upload slower than cloud" in w for w in warnings)


def test_validate_trace_warns_slow_cloud_run():
    tasks = [mk_task("t0", r_cloud=5.0, r_edge=4.0)]
    warnings = validate_trace(tasks)
    assert any("cloud run slower than edge" in w for w in warnings)


def test_validate_trace_warns_zero_mobile_run():
    tasks = [mk_task("t0", r_mobile=0.0)]
    warnings = validate_trace(tasks)
    assert any("r_mobile is zero" in w for w in warnings)


def test_validate_trace_rejects_duplicate_ids():
    tasks = [mk_task("t0"), mk_task("t0", arrival=1.0)]
    with pytest.raises(TraceError, match="t0"):
        validate_trace(tasks)


def test_segment_work_must_match_interval():
    seg = Segment(task_id="t0", work=sec(2.0), scheduled_start=sec(1.0),
                  scheduled_end=sec(3.0))
    assert seg.scheduled_end - seg.scheduled_start == seg.work
    with pytest.raises(ValueError):
        Segment(task_id="t0", work=sec(1.0), scheduled_start=sec(1.0),
                scheduled_end=sec(3.0))
    with pytest.raises(ValueError):
        Segment(task_id="t0", work=-sec(2.0), scheduled_start=sec(3.0),
                scheduled_end=sec(1.0))


def test_decision_edge_requires_vm_index():
    with pytest.raises(ValueError, match="vm_index"):
        Decision(platform=Platform.EDGE, predicted_completion=sec(1.0))


def test_decision_vm_index_only_for_edge():
    with pytest.raises(ValueError, match="vm_index"):
        Decision(platform=Platform.MOBILE, predicted_completion=sec(1.0),
                 vm_index=0)


def test_decision_platform_labels():
    edge = Decision(platform=Platform.EDGE, predicted_completion=sec(1.0),
                    vm_index=3, deadline=Deadline(sec(2.0)))
    assert edge.platform_label() == "edge:3"
    cloud = Decision(platform=Platform.CLOUD, predicted_completion=sec(1.0))
    assert cloud.platform_label() == "cloud"
    assert Platform.MOBILE.value == "mobile"
