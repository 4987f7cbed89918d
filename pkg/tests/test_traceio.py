"""Trace generation and JSONL round-tripping."""

import json
import math
import statistics

import pytest

from echo_sched.model import TraceError, to_seconds, validate_trace
from echo_sched.traceio import SCHEMA, MixSpec, TraceFile, generate, load, save

INTERACTIVE = {"ocr", "filter"}
COMPUTE = {"chess", "sudoku", "nqueens"}


def test_save_load_round_trip(tmp_path):
    trace = generate(n=50, lam=2.0, mix=MixSpec.preset("mix-1"), seed=4)
    path = tmp_path / "trace.jsonl"
    save(trace, path)
    loaded = load(path)
    assert loaded.tasks == trace.tasks
    assert loaded.header["schema"] == SCHEMA
    assert loaded.header["generator"]["lambda"] == 2.0


def test_saved_bytes_are_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save(generate(n=30, lam=1.0, mix=MixSpec.preset("mix-2"), seed=9), a)
    save(generate(n=30, lam=1.0, mix=MixSpec.preset("mix-2"), seed=9), b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_file_loads_as_empty_trace(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    trace = load(path)
    assert trace.tasks == []
    assert trace.header["schema"] == SCHEMA


def test_load_rejects_missing_schema(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"schema":"somebody-elses/9"}\n')
    with pytest.raises(TraceError, match="line 1"):
        load(path)
    path.write_text("not json\n")
    with pytest.raises(TraceError, match="line 1"):
        load(path)


def test_load_names_the_offending_line(tmp_path):
    trace = generate(n=3, lam=1.0, mix=MixSpec.preset("mix-1"), seed=0)
    path = tmp_path / "trace.jsonl"
    save(trace, path)
    lines = path.read_text().splitlines()
    lines[2] = "{broken"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceError, match="line 3"):
        load(path)


def test_load_reports_bad_field_values(tmp_path):
    trace = generate(n=2, lam=1.0, mix=MixSpec.preset("mix-1"), seed=0)
    path = tmp_path / "trace.jsonl"
    save(trace, path)
    lines = path.read_text().splitlines()
    row = json.loads(lines[1])
    row["profile"]["r_mobile"] = -5
    lines[1] = json.dumps(row, sort_keys=True, separators=(",", ":"))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceError, match="line 2.*r_mobile"):
        load(path)


def test_blank_lines_are_skipped(tmp_path):
    trace = generate(n=2, lam=1.0, mix=MixSpec.preset("mix-1"), seed=0)
    path = tmp_path / "trace.jsonl"
    save(trace, path)
    path.write_text(path.read_text().replace("\n", "\n\n"))
    assert len(load(path).tasks) == 2


# -------------------------------------------------------------- generator


def test_generate_is_deterministic():
    a = generate(n=40, lam=2.0, mix=MixSpec.preset("mix-1"), seed=123)
    b = generate(n=40, lam=2.0, mix=MixSpec.preset("mix-1"), seed=123)
    assert a.tasks == b.tasks
    assert a.header == b.header


def test_generate_validates_arguments():
    with pytest.raises(ValueError):
        generate(n=0, lam=1.0, mix=MixSpec.preset("mix-1"), seed=0)
    with pytest.raises(ValueError):
        generate(n=5, lam=0.0, mix=MixSpec.preset("mix-1"), seed=0)
    with pytest.raises(ValueError):
        generate(n=5, lam=1.0, seed=0,
                 mix=MixSpec(0.5, interactive_weights={"nope": 1.0}))


def test_mix_presets():
    assert MixSpec.preset("mix-1").interactive_fraction == 0.8
    assert MixSpec.preset("mix-2").interactive_fraction == 0.5
    assert MixSpec.preset("mix-3").interactive_fraction == 0.2
    with pytest.raises(ValueError, match="mix-9"):
        MixSpec.preset("mix-9")
    with pytest.raises(ValueError):
        MixSpec(interactive_fraction=1.5)
    with pytest.raises(ValueError):
        MixSpec(0.5, compute_weights={})


def test_generated_ids_arrivals_and_users():
    trace = generate(n=100, lam=2.0, mix=MixSpec.preset("mix-1"), seed=7)
    assert [t.id for t in trace.tasks] == [f"t{i:05d}" for i in range(100)]
    arrivals = [t.arrival for t in trace.tasks]
    assert all(b >= a for a, b in zip(arrivals, arrivals[1:]))
    assert all(t.user_id.startswith("u") and len(t.user_id) >= 3
               for t in trace.tasks)
    assert validate_trace(trace.tasks) == []


def test_interarrival_mean_matches_lambda():
    n, lam = 10_000, 2.0
    trace = generate(n=n, lam=lam, mix=MixSpec.preset("mix-1"), seed=11)
    gaps = [to_seconds(b.arrival - a.arrival)
            for a, b in zip(trace.tasks, trace.tasks[1:])]
    gaps.insert(0, to_seconds(trace.tasks[0].arrival))
    mean = statistics.fmean(gaps)
    # 3 sigma of the sample mean of Exp(2): 3 * 0.5 / sqrt(n)
    assert abs(mean - 0.5) <= 3 * 0.5 / math.sqrt(n)


def test_class_balance_tracks_the_mix():
    for preset, fraction in (("mix-1", 0.8), ("mix-2", 0.5), ("mix-3", 0.2)):
        trace = generate(n=10_000, lam=2.0, mix=MixSpec.preset(preset), seed=5)
        interactive = sum(t.app in INTERACTIVE for t in trace.tasks)
        assert abs(interactive / 10_000 - fraction) <= 0.02, preset
        assert all(t.app in INTERACTIVE | COMPUTE for t in trace.tasks)


def test_generated_profiles_respect_link_asymmetry():
    # edge legs must beat cloud legs and remote compute must beat local,
    # otherwise offloading scenarios degenerate
    trace = generate(n=1000, lam=2.0, mix=MixSpec.preset("mix-2"), seed=21)
    for task in trace.tasks:
        p = task.profile
        assert p.up_edge < p.up_cloud
        assert p.down_edge < p.down_cloud
        assert p.r_cloud <= p.r_edge < p.r_mobile
        assert p.upload_bytes > 0 and p.download_bytes > 0


def test_custom_profile_config(tmp_path):
    config = tmp_path / "profiles.ini"
    config.write_text(
        "[links]\n"
        "edge_rate_kb_per_s = 1000\n"
        "edge_latency_ms = 10\n"
        "cloud_rate_kb_per_s = 100\n"
        "cloud_latency_ms = 100\n"
        "[app.solo]\n"
        "class = interactive\n"
        "r_mobile_s = 10\n"
        "r_edge_s = 1\n"
        "upload_kb = 100\n"
        "download_kb = 10\n")
    mix = MixSpec(1.0, interactive_weights={"solo": 1.0},
                  compute_weights={"solo": 1.0})
    trace = generate(n=20, lam=1.0, mix=mix, seed=0, profile_config=config)
    assert {t.app for t in trace.tasks} == {"solo"}
    assert trace.header["generator"]["profiles"] == str(config)


def test_missing_profile_config(tmp_path):
    with pytest.raises(TraceError, match="not found"):
        generate(n=5, lam=1.0, mix=MixSpec.preset("mix-1"), seed=0,
                 profile_config=tmp_path / "nope.ini")


def test_save_round_trips_offloadable_flag(tmp_path):
    trace = generate(n=4, lam=1.0, mix=MixSpec.preset("mix-1"), seed=2)
    pinned = trace.tasks[1]
    object.__setattr__(pinned, "offloadable", False)
    path = tmp_path / "trace.jsonl"
    save(TraceFile(header={}, tasks=trace.tasks), path)
    loaded = load(path)
    assert [t.offloadable for t in loaded.tasks] == [True, False, True, True]
