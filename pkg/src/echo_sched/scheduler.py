"""Per-VM schedule construction with deadline-constrained preemption.

Each VM runs its queue strictly in order.  A new task is inserted ahead of
the first queued task whose remaining work exceeds the newcomer's work
(shortest-remaining-time-first), but only tentatively: if the insertion
pushes any already-admitted task past its completion deadline, the repair
loop pins that task to finish exactly at its deadline by evicting
just-enough of the work scheduled before it (latest-scheduled work first)
and re-inserting the evicted work after it.  The loop repeats down the
queue until no admitted task is late.  Trials are pure; a separate commit
step makes the winning candidate real.

Time is integer microseconds throughout.  A queue's schedule is packed
contiguously from `now`, except that a task's work may never start before
its ready time (its input upload has to finish first), which can leave the
VM idle ahead of an unready head-of-queue.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .model import Segment, Task

logger = logging.getLogger(__name__)

_REPAIR_SLACK = 2  # termination guard headroom over the task count


class SchedulerError(Exception):
    pass


class StaleTrialError(SchedulerError):
    """The queue changed between trial_insert and commit."""


class _TaskEntry:
    """Mutable bookkeeping for one task admitted to a VM queue."""

    __slots__ = ("ready", "deadline", "total", "executed", "arrival",
                 "first_start", "completion")

    def __init__(self, ready: int, deadline: int | None, total: int, arrival: int):
        self.ready = ready
        self.deadline = deadline          # latest allowed execution end; None = best effort
        self.total = total
        self.executed = 0
        self.arrival = arrival
        self.first_start: int | None = None
        self.completion: int | None = None  # execution end, set once the last chunk runs

    def clone(self) -> "_TaskEntry":
        other = _TaskEntry(self.ready, self.deadline, self.total, self.arrival)
        other.executed = self.executed
        other.first_start = self.first_start
        other.completion = self.completion
        return other


class VmQueue:
    """One VM's ordered schedule: executed history plus pending work chunks.

    `_chunks` holds only future work as (task_id, work) pairs in queue
    order; the elapsed part of a preempted or running task has already been
    moved to `_history` by advance() and can never be displaced.
    """

    __slots__ = ("vm_index", "now", "version", "_chunks", "_entries", "_history")

    def __init__(self, vm_index: int, now: int = 0):
        self.vm_index = vm_index
        self.now = now
        self.version = 0
        self._chunks: list[tuple[str, int]] = []
        self._entries: dict[str, _TaskEntry] = {}
        self._history: list[tuple[str, int, int, int]] = []

    # ------------------------------------------------------------- queries

    def remaining_work(self, task_id: str) -> int:
        """Unexecuted work of a task at time `now` (0 once completed)."""
        try:
            entry = self._entries[task_id]
        except KeyError:
            raise SchedulerError(f"unknown task {task_id!r} on vm {self.vm_index}") from None
        return entry.total - entry.executed

    def load(self) -> int:
        """Total pending work (used by best-effort least-loaded placement)."""
        return sum(w for _, w in self._chunks)

    @property
    def future_chunks(self) -> tuple[tuple[str, int], ...]:
        return tuple(self._chunks)

    def ready_of(self, task_id: str) -> int:
        return self._entries[task_id].ready

    def deadline_of(self, task_id: str) -> int | None:
        return self._entries[task_id].deadline

    def first_start_of(self, task_id: str) -> int | None:
        return self._entries[task_id].first_start

    def completion_of(self, task_id: str) -> int | None:
        """Execution end time, known once the task has fully run."""
        return self._entries[task_id].completion

    def horizon(self) -> int:
        """Time by which all currently queued work will have executed."""
        ends = _pack_spans(self._chunks, self._entries, self.now, None)
        return ends[-1][1] if ends else self.now

    def schedule(self) -> list[Segment]:
        """The pending schedule as absolute-time segments."""
        spans = _pack_spans(self._chunks, self._entries, self.now, None)
        return [Segment(tid, w, s, e)
                for (tid, w), (s, e) in zip(self._chunks, spans)]

    @property
    def segments(self) -> list[Segment]:
        """Executed history followed by the pending schedule."""
        done = [Segment(tid, w, s, e) for tid, w, s, e in self._history]
        return done + self.schedule()

    def clone(self) -> "VmQueue":
        other = VmQueue(self.vm_index, self.now)
        other.version = self.version
        other._chunks = list(self._chunks)
        other._entries = {tid: e.clone() for tid, e in self._entries.items()}
        other._history = list(self._history)
        return other

    # ----------------------------------------------------------- mutations

    def advance(self, to: int) -> list[str]:
        """Execute the schedule up to `to`; returns tasks that finished."""
        if to < self.now:
            raise SchedulerError(f"cannot advance vm {self.vm_index} backwards "
                                 f"({self.now} -> {to})")
        if to == self.now:
            return []
        completed: list[str] = []
        chunks = self._chunks
        cursor = self.now
        consumed = 0
        for i, (tid, w) in enumerate(chunks):
            entry = self._entries[tid]
            start = entry.ready if entry.ready > cursor else cursor
            if start >= to:
                break
            run = w if start + w <= to else to - start
            if entry.first_start is None:
                entry.first_start = start
            self._history.append((tid, run, start, start + run))
            entry.executed += run
            cursor = start + run
            if run == w:
                consumed = i + 1
                if entry.executed == entry.total:
                    entry.completion = cursor
                    completed.append(tid)
            else:
                chunks[i] = (tid, w - run)
                break
        if consumed:
            del chunks[:consumed]
        self.now = to
        self.version += 1
        return completed

    def append_fifo(self, task: Task, ready: int) -> int:
        """Best-effort tail append (no deadline, no preemption).

        Returns the execution end time under the current schedule.
        """
        if task.id in self._entries:
            raise SchedulerError(f"task {task.id!r} already on vm {self.vm_index}")
        work = task.profile.r_edge
        self._entries[task.id] = _TaskEntry(ready, None, work, task.arrival)
        self._chunks.append((task.id, work))
        self.version += 1
        return self.horizon()


def _pack_spans(chunks: list[tuple[str, int]],
                entries: dict[str, _TaskEntry],
                now: int,
                extra_ready: dict[str, int] | None) -> list[tuple[int, int]]:
    """Pack chunks contiguously from `now`, honouring per-task ready times."""
    spans: list[tuple[int, int]] = []
    cursor = now
    for tid, w in chunks:
        if extra_ready is not None and tid in extra_ready:
            ready = extra_ready[tid]
        else:
            ready = entries[tid].ready
        start = ready if ready > cursor else cursor
        end = start + w
        spans.append((start, end))
        cursor = end
    return spans


def _pack_ends(chunks: list[tuple[str, int]],
               entries: dict[str, _TaskEntry],
               now: int,
               extra_ready: dict[str, int] | None) -> dict[str, int]:
    """Per-task execution end times (end of each task's last chunk)."""
    ends: dict[str, int] = {}
    cursor = now
    for tid, w in chunks:
        if extra_ready is not None and tid in extra_ready:
            ready = extra_ready[tid]
        else:
            ready = entries[tid].ready
        start = ready if ready > cursor else cursor
        cursor = start + w
        ends[tid] = cursor
    return ends


def _merge_adjacent(chunks: list[tuple[str, int]]) -> list[tuple[str, int]]:
    merged: list[tuple[str, int]] = []
    for tid, w in chunks:
        if w == 0:
            continue
        if merged and merged[-1][0] == tid:
            merged[-1] = (tid, merged[-1][1] + w)
        else:
            merged.append((tid, w))
    return merged


@dataclass
class TrialInsertion:
    """Outcome of tentatively inserting one task into one VM's queue.

    delta_t is the completion-time growth: the newcomer's response time
    plus every delay inflicted on already-queued tasks.  The trial never
    mutates the source queue; commit() applies it.
    """

    vm_index: int
    delta_t: int
    candidate_completion: int
    repair_iterations: int
    candidate_chunks: tuple[tuple[str, int], ...]
    task_id: str
    ready: int
    deadline: int | None
    work: int
    arrival: int
    _source: VmQueue = field(repr=False)
    _source_version: int = field(repr=False)

    @property
    def candidate_queue(self) -> VmQueue:
        """The would-be queue state, materialized (for inspection/tests)."""
        queue = self._source.clone()
        queue._chunks = list(self.candidate_chunks)
        queue._entries[self.task_id] = _TaskEntry(self.ready, self.deadline,
                                                  self.work, self.arrival)
        return queue


def trial_insert(queue: VmQueue, task: Task, ready: int,
                 deadline: int | None) -> TrialInsertion:
    """Tentatively insert `task` (work = its edge run time) into the queue.

    ready is the earliest instant the task's work may execute; deadline is
    the latest allowed execution end for the *queue's* admission guarantee
    (None disables the guarantee for this task).  The insertion scan,
    deadline repair, and eviction follow the preemption-constrained SRTF
    rules described in the module docstring.  If the queue is so saturated
    that even the newcomer's own work lands past its deadline, the late
    placement is returned as-is: rejecting it is the decision engine's job.
    """
    now = queue.now
    if ready < now:
        raise SchedulerError(f"ready {ready} before queue time {now}")
    if task.id in queue._entries:
        raise SchedulerError(f"task {task.id!r} already on vm {queue.vm_index}")
    work = task.profile.r_edge
    entries = queue._entries
    new_ready = {task.id: ready}

    original = queue._chunks
    old_ends = _pack_ends(original, entries, now, None)

    # SRTF scan: first queued task with more remaining work than the newcomer.
    insert_at: int | None = None
    seen: set[str] = set()
    for idx, (tid, _) in enumerate(original):
        if tid in seen:
            continue
        seen.add(tid)
        entry = entries[tid]
        if entry.total - entry.executed > work:
            insert_at = idx
            break

    repair_iterations = 0
    if insert_at is None:
        candidate = list(original)
        candidate.append((task.id, work))
    else:
        candidate, repair_iterations = _repair(
            original, entries, now, new_ready, task.id, work, insert_at,
            queue.vm_index)
        if candidate is None:
            # Preempting here cannot be repaired; appending at the tail
            # delays nobody and is therefore always admissible.
            candidate = list(original)
            candidate.append((task.id, work))

    candidate = _merge_adjacent(candidate)
    new_ends = _pack_ends(candidate, entries, now, new_ready)

    delay = 0
    for tid, end in old_ends.items():
        inflicted = new_ends[tid] - end
        if inflicted < 0:
            raise SchedulerError(
                f"insertion of {task.id!r} pulled {tid!r} earlier on vm "
                f"{queue.vm_index}; schedule corrupted")
        delay += inflicted
    completion = new_ends[task.id]
    delta_t = (completion - task.arrival) + delay

    return TrialInsertion(
        vm_index=queue.vm_index,
        delta_t=delta_t,
        candidate_completion=completion,
        repair_iterations=repair_iterations,
        candidate_chunks=tuple(candidate),
        task_id=task.id,
        ready=ready,
        deadline=deadline,
        work=work,
        arrival=task.arrival,
        _source=queue,
        _source_version=queue.version,
    )


def _repair(original: list[tuple[str, int]],
            entries: dict[str, _TaskEntry],
            now: int,
            new_ready: dict[str, int],
            new_id: str,
            work: int,
            insert_at: int,
            vm_index: int) -> tuple[list[tuple[str, int]] | None, int]:
    """Insert the newcomer at insert_at and repair deadline violations.

    Each round finds the first admitted task past its deadline (in queue
    order), pins it to finish exactly at its deadline by evicting
    just-enough of the latest-scheduled movable work before its final
    chunk, and carries the evicted work forward as the next round's
    insertion.  Pinned tasks and the violator's own chunks are never
    evicted, so a pinned task can only ever finish earlier, and every
    round pins a distinct task: the loop terminates.  Returns
    (None, rounds) when a round has nothing movable left to evict or no
    eviction amount lands the violator exactly on its deadline; the
    caller falls back to a tail append then.
    """
    candidate = list(original)
    pending: list[tuple[str, int]] | None = [(new_id, work)]
    position = insert_at
    # Work at chunk indexes below the floor is frozen: it belongs to tasks
    # already pinned at their deadlines (or scheduled before them), and
    # moving any of it would push a pinned task past its deadline or pull
    # other tasks ahead of their pre-insertion completions.
    floor = 0
    pinned: set[str] = set()
    rounds = 0
    guard = len(entries) + _REPAIR_SLACK
    while pending is not None:
        candidate[position:position] = pending
        pending = None
        ends = _pack_ends(candidate, entries, now, new_ready)
        # The newcomer is exempt: its own lateness is an admission matter
        # for the caller, not a repair matter.  Every admitted task is
        # re-checked each round: an insertion can delay a task whose last
        # chunk lies far past the round's violator, and an earlier round's
        # break must not hide it.
        violator: str | None = None
        seen: set[str] = set()
        for tid, _ in candidate:
            if tid == new_id or tid in pinned or tid in seen:
                continue
            seen.add(tid)
            limit = entries[tid].deadline
            if limit is not None and ends[tid] > limit:
                violator = tid
                break
        if violator is None:
            break
        rounds += 1
        if rounds > guard:
            raise SchedulerError(
                f"repair loop exceeded {guard} rounds on vm {vm_index}")
        limit = entries[violator].deadline
        assert limit is not None
        ready_v = entries[violator].ready
        evicted: list[tuple[str, int]] = []
        feasible = True
        while True:
            spans = _pack_spans(candidate, entries, now, new_ready)
            last = _last_index_of(candidate, violator)
            overshoot = spans[last][1] - limit
            if overshoot <= 0:
                break
            source = None
            for idx in range(last - 1, floor - 1, -1):
                if candidate[idx][0] != violator:
                    source = idx
                    break
            if source is None:
                feasible = False
                break
            tid, w = candidate[source]
            # Everything between the source and the violator's last chunk
            # belongs to the violator (the walk picks the latest movable
            # chunk), so shrinking the source by `take` moves the violator's
            # end earlier by exactly min(take, source_end - ready_v): the
            # violator's ready time caps how far its chain can slide.
            source_end = spans[source][1]
            tail = sum(candidate[i][1] for i in range(source + 1, last + 1))
            before = spans[source - 1][1] if source > 0 else now
            full_end = max(before, ready_v) + tail
            shift_full = spans[last][1] - full_end
            if shift_full <= 0:
                # The chain is gated at the violator's ready time; no
                # eviction anywhere earlier can pull its end in.
                feasible = False
                break
            if shift_full <= overshoot:
                del candidate[source]
                evicted.insert(0, (tid, w))
                continue
            # A partial eviction can land the violator exactly on its
            # deadline; removing the whole chunk would also collapse the
            # idle gap in front of it and overshoot the correction.
            take = source_end - (limit - tail)
            if take >= w or take <= 0:
                feasible = False
                break
            candidate[source] = (tid, w - take)
            evicted.insert(0, (tid, take))
        if not feasible:
            return None, rounds
        pinned.add(violator)
        pending = _merge_adjacent(evicted)
        floor = _last_index_of(candidate, violator) + 1
        position = floor
    return candidate, rounds


def _last_index_of(chunks: list[tuple[str, int]], task_id: str) -> int:
    for idx in range(len(chunks) - 1, -1, -1):
        if chunks[idx][0] == task_id:
            return idx
    raise SchedulerError(f"task {task_id!r} lost from candidate queue")


def best_vm(queues: list[VmQueue], task: Task, ready: int,
            deadline: int | None) -> tuple[int, TrialInsertion]:
    """Trial on every VM; pick minimum completion-time growth (ties: lowest index)."""
    if not queues:
        raise SchedulerError("no VMs configured")
    best: TrialInsertion | None = None
    for queue in queues:
        trial = trial_insert(queue, task, ready, deadline)
        if best is None or trial.delta_t < best.delta_t:
            best = trial
    assert best is not None
    return best.vm_index, best


def commit(queues: list[VmQueue], vm_index: int, trial: TrialInsertion) -> None:
    """Make a trial real.  Refuses trials computed against a stale queue."""
    queue = queues[vm_index]
    if trial.vm_index != vm_index or trial._source is not queue:
        raise StaleTrialError(
            f"trial was computed for vm {trial.vm_index}, not vm {vm_index}")
    if trial._source_version != queue.version:
        raise StaleTrialError(
            f"vm {vm_index} changed since the trial (version "
            f"{trial._source_version} -> {queue.version})")
    queue._chunks = list(trial.candidate_chunks)
    queue._entries[trial.task_id] = _TaskEntry(trial.ready, trial.deadline,
                                               trial.work, trial.arrival)
    queue.version += 1
    logger.debug("vm %d: committed %s (completion %d, growth %d)",
                 vm_index, trial.task_id, trial.candidate_completion, trial.delta_t)
