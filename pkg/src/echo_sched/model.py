"""Domain types shared by the scheduler, decision engine, and simulator.

All times are kept as integer microsecond counts (fixed point), so schedule
arithmetic is exact: no float drift can accumulate across insertions,
evictions, or long simulations.  Public helpers convert to and from seconds
at the edges (CLI flags, report aggregates).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

US_PER_SECOND = 1_000_000


def from_seconds(value: float) -> int:
    """Convert seconds to integer microseconds (rounded to nearest)."""
    return round(value * US_PER_SECOND)


def to_seconds(us: int) -> float:
    return us / US_PER_SECOND


class TraceError(ValueError):
    """A trace violates a hard invariant (duplicate ids, negative durations)."""


def _check_duration(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TraceError(f"{name} must be an integer microsecond count, got {value!r}")
    if value < 0:
        raise TraceError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class CostProfile:
    """Profiled costs of one task on all three platforms.

    Durations are integer microseconds:
      r_mobile   -- execution time locally on the device
      r_edge     -- execution time on one edge VM
      r_cloud    -- execution time on the cloud
      up_edge    -- device-to-edge input transfer time
      down_edge  -- edge-to-device result transfer time
      up_cloud   -- device-to-cloud input transfer time
      down_cloud -- cloud-to-device result transfer time
    upload_bytes / download_bytes are the eager payload sizes behind the
    transfer durations.
    """

    r_mobile: int
    r_edge: int
    r_cloud: int
    up_edge: int
    down_edge: int
    up_cloud: int
    down_cloud: int
    upload_bytes: int = 0
    download_bytes: int = 0

    def __post_init__(self) -> None:
        for name in ("r_mobile", "r_edge", "r_cloud", "up_edge",
                     "down_edge", "up_cloud", "down_cloud"):
            _check_duration(name, getattr(self, name))
        for name in ("upload_bytes", "download_bytes"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise TraceError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class Task:
    """One offloadable method invocation with its arrival time and costs.

    offloadable=False forces local execution regardless of costs (it stands
    in for a code-level rejection: the method touches device state that
    cannot leave the phone).
    """

    id: str
    user_id: str
    app: str
    arrival: int
    profile: CostProfile
    offloadable: bool = True

    def __post_init__(self) -> None:
        _check_duration("arrival", self.arrival)


class Platform(Enum):
    MOBILE = "mobile"
    EDGE = "edge"
    CLOUD = "cloud"


@dataclass(frozen=True)
class Deadline:
    """Absolute completion bound for an edge-admitted task.

    h = arrival + min(local completion time, cloud completion time): running
    at the edge must never be worse than the better of the two alternatives.
    """

    h: int


@dataclass(frozen=True)
class Decision:
    """Platform assignment with the completion time predicted at decision time.

    vm_index is set iff platform is EDGE.  deadline is attached by the
    QoS-guaranteeing engine for edge placements; best-effort edge placements
    (no admission control) leave it None.
    """

    platform: Platform
    predicted_completion: int
    vm_index: int | None = None
    deadline: Deadline | None = None

    def __post_init__(self) -> None:
        if self.platform is Platform.EDGE:
            if self.vm_index is None or self.vm_index < 0:
                raise ValueError("edge decision requires a vm_index")
        elif self.vm_index is not None:
            raise ValueError(f"vm_index only applies to edge decisions, got {self.platform}")

    def platform_label(self) -> str:
        if self.platform is Platform.EDGE:
            return f"edge:{self.vm_index}"
        return self.platform.value


@dataclass(frozen=True)
class Segment:
    """A contiguous slice of one task's execution on one VM."""

    task_id: str
    work: int
    scheduled_start: int
    scheduled_end: int

    def __post_init__(self) -> None:
        if self.scheduled_end - self.scheduled_start != self.work:
            raise ValueError(
                f"segment length mismatch: [{self.scheduled_start}, {self.scheduled_end}] "
                f"vs work {self.work}"
            )
        if self.work < 0 or self.scheduled_start < 0:
            raise ValueError("segment times must be non-negative")


def validate_trace(tasks) -> list[str]:
    """Check a task sequence against the cost-model assumptions.

    Hard violations (duplicate ids; negative durations, which the
    constructors already reject) raise TraceError.  Soft violations of the
    expected platform orderings return human-readable warnings: the trace is
    still usable, but the offloading rationale (edge link faster than cloud
    link, remote executors at least as fast as the device) no longer holds
    for those tasks.
    """
    warnings: list[str] = []
    seen: set[str] = set()
    for task in tasks:
        if task.id in seen:
            raise TraceError(f"duplicate task id {task.id!r}")
        seen.add(task.id)
        p = task.profile
        if p.up_edge >= p.up_cloud:
            warnings.append(
                f"task {task.id}: edge upload slower than cloud "
                f"(up_edge={to_seconds(p.up_edge)}s >= up_cloud={to_seconds(p.up_cloud)}s)"
            )
        if p.r_cloud > p.r_edge:
            warnings.append(
                f"task {task.id}: cloud run slower than edge "
                f"(r_cloud={to_seconds(p.r_cloud)}s > r_edge={to_seconds(p.r_edge)}s)"
            )
        if p.r_mobile == 0:
            warnings.append(f"task {task.id}: r_mobile is zero")
    return warnings
