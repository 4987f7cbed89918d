"""Shared test helpers: task builders and the tick-stepping oracle.

step_completions() re-derives per-task completion times of one VM's chunk
schedule by walking a fixed-size clock tick by tick, never using the
scheduler's packing arithmetic.  Scheduler and simulator tests freeze
expected values against it.
"""

from __future__ import annotations

from echo_sched.model import CostProfile, Task, from_seconds

SEC = from_seconds(1.0)


def sec(value: float) -> int:
    return from_seconds(value)


def mk_profile(r_mobile=10.0, r_edge=4.0, r_cloud=3.5, up_edge=0.0,
               down_edge=0.0, up_cloud=1.0, down_cloud=1.0,
               upload_bytes=0, download_bytes=0) -> CostProfile:
    return CostProfile(
        r_mobile=sec(r_mobile),
        r_edge=sec(r_edge),
        r_cloud=sec(r_cloud),
        up_edge=sec(up_edge),
        down_edge=sec(down_edge),
        up_cloud=sec(up_cloud),
        down_cloud=sec(down_cloud),
        upload_bytes=upload_bytes,
        download_bytes=download_bytes,
    )


def mk_task(task_id: str, arrival=0.0, offloadable=True, user_id="u00",
            app="test", **profile_kwargs) -> Task:
    return Task(
        id=task_id,
        user_id=user_id,
        app=app,
        arrival=sec(arrival),
        profile=mk_profile(**profile_kwargs),
        offloadable=offloadable,
    )


def step_completions(chunks, ready, now, dt=1000):
    """Tick-based completion times for an ordered chunk schedule.

    chunks: sequence of (task_id, work_us) in queue order; ready maps task
    ids to their earliest start.  Work and gaps are consumed dt at a time,
    so every duration involved must be a multiple of dt.  Returns the end
    time of each task's last chunk.
    """
    ends: dict[str, int] = {}
    t = now
    for tid, work in chunks:
        if work % dt:
            raise AssertionError(f"work {work} not a multiple of dt {dt}")
        while t < ready[tid]:
            t += dt
        left = work
        while left:
            t += dt
            left -= dt
        ends[tid] = t
    return ends


def schedule_ends(queue) -> dict[str, int]:
    """Per-task end of the last pending segment, via the public schedule."""
    ends: dict[str, int] = {}
    for segment in queue.schedule():
        ends[segment.task_id] = segment.scheduled_end
    return ends
