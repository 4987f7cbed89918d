"""Trace-driven simulator, energy model, reports, and the step oracle.

run() replays a trace through one policy.  Decisions happen only at
arrivals: each arrival first advances every VM's clock to the arrival
instant, then the policy places the task.  Device and cloud tasks complete
at their closed-form times; edge tasks complete when their scheduled work
finishes plus the result download leg.  Everything is integer-microsecond
arithmetic, so a run is deterministic and reports are byte-identical
across repeats.

oracle_step_sim() re-derives every VM's occupancy by ticking a fixed dt
through the committed schedules instead of using the scheduler's packed
times.  It shares the decision flow with run() (the decisions are what is
being realized) but executes them with independent bookkeeping; tests
assert the two reports are identical.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .model import Decision, Platform, Task, to_seconds
from .objectsync import SyncParams, TransferAccountant, TransferCost
from .policies import build_policy
from .scheduler import VmQueue
from .traceio import TraceFile


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyParams:
    """Linear device-energy model: CPU power while computing locally, radio
    power while bytes are in flight, idle draw while waiting on a result."""

    p_cpu_mobile: float = 0.8
    p_net_mobile: float = 0.7
    p_idle: float = 0.02

    def __post_init__(self) -> None:
        for name in ("p_cpu_mobile", "p_net_mobile", "p_idle"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def scaled(self, factor: float) -> "EnergyParams":
        return EnergyParams(self.p_cpu_mobile * factor,
                            self.p_net_mobile * factor,
                            self.p_idle * factor)


@dataclass(frozen=True)
class SimConfig:
    num_vms: int
    lam: float | None = None          # arrival rate label, echoed into reports
    energy: EnergyParams = field(default_factory=EnergyParams)
    seed: int = 0
    provision_delay: int = 0
    sync: SyncParams = field(default_factory=SyncParams)
    estimate_noise: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.num_vms <= 1024:
            raise ValueError(f"num_vms must be in [0, 1024], got {self.num_vms}")
        if self.lam is not None and self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.provision_delay < 0:
            raise ValueError("provision_delay must be >= 0")


@dataclass
class TaskRecord:
    task_id: str
    user_id: str
    app: str
    arrival: int
    platform: str                 # "mobile", "cloud", or "edge:<vm>"
    vm_index: int | None
    predicted_completion: int
    ready: int
    start: int
    completion: int
    waiting: int
    deadline: int | None
    deadline_met: bool | None
    bytes_up: int
    bytes_down: int
    energy_j: float

    def response_time(self) -> int:
        return self.completion - self.arrival


@dataclass
class SimReport:
    policy: str
    config: dict
    records: list[TaskRecord]
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "config": self.config,
            "aggregates": self.aggregates,
            "tasks": [vars(r).copy() for r in self.records],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.records:
                writer.writerow([
                    r.task_id, r.user_id, r.app, r.arrival, r.platform,
                    "" if r.vm_index is None else r.vm_index,
                    r.predicted_completion, r.ready, r.start, r.completion,
                    r.waiting,
                    "" if r.deadline is None else r.deadline,
                    "" if r.deadline_met is None else int(r.deadline_met),
                    r.bytes_up, r.bytes_down, repr(r.energy_j),
                ])

    def summary_text(self) -> str:
        a = self.aggregates
        lines = [f"policy={self.policy} tasks={a['tasks']}"]
        counts = a["platform_counts"]
        lines.append("placements: " + ", ".join(
            f"{name}={counts[name]}" for name in ("mobile", "edge", "cloud")))
        if a["tasks"]:
            lines.append(
                f"completion s: mean={a['mean_completion_s']:.4f} "
                f"median={a['median_completion_s']:.4f} p95={a['p95_completion_s']:.4f}")
        if a["deadline_tasks"]:
            lines.append(
                f"deadline compliance: {100.0 * a['deadline_compliance']:.1f}% "
                f"of {a['deadline_tasks']} guaranteed tasks")
        lines.append(
            f"bytes: up={a['bytes_up']} down={a['bytes_down']} "
            f"backhaul={a['backhaul_bytes']}")
        lines.append(f"energy: {a['energy_j']:.4f} J")
        return "\n".join(lines)


CSV_COLUMNS = [
    "task_id", "user_id", "app", "arrival_us", "platform", "vm_index",
    "predicted_completion_us", "ready_us", "start_us", "completion_us",
    "waiting_us", "deadline_us", "deadline_met", "bytes_up", "bytes_down",
    "energy_j",
]


# --------------------------------------------------------------------------
# energy


def energy_of(task: Task, decision: Decision, bytes_up: int, bytes_down: int,
              params: EnergyParams, completion: int | None = None) -> float:
    """Device-side energy of one realized task, in joules.

    Local execution burns CPU power for the run time.  An offloaded task
    burns radio power while bytes move (transfer legs scaled by the bytes
    actually sent relative to the profiled payload) and idle power for the
    rest of the wait until the realized completion; pass `completion` when
    it differs from the decision's prediction.
    """
    profile = task.profile
    if decision.platform is Platform.MOBILE:
        return params.p_cpu_mobile * to_seconds(profile.r_mobile)
    if completion is None:
        completion = decision.predicted_completion
    if decision.platform is Platform.EDGE:
        up_leg, down_leg = profile.up_edge, profile.down_edge
    else:
        up_leg, down_leg = profile.up_cloud, profile.down_cloud
    transfer = (_scale_leg(up_leg, bytes_up, profile.upload_bytes)
                + _scale_leg(down_leg, bytes_down, profile.download_bytes))
    idle = to_seconds(completion - task.arrival) - transfer
    if idle < 0.0:
        idle = 0.0
    return params.p_net_mobile * transfer + params.p_idle * idle


def _scale_leg(duration_us: int, actual_bytes: int, profiled_bytes: int) -> float:
    seconds = to_seconds(duration_us)
    if profiled_bytes > 0:
        return seconds * (actual_bytes / profiled_bytes)
    return seconds


def effective_upload_us(task: Task, cost: TransferCost) -> int:
    """Edge upload leg duration when only `cost.up_bytes` actually move."""
    base = task.profile.up_edge
    if task.profile.upload_bytes > 0:
        base = round(base * cost.up_bytes / task.profile.upload_bytes)
    return base + cost.up_extra_us


def _eager_cost(task: Task) -> TransferCost:
    return TransferCost(up_bytes=task.profile.upload_bytes,
                        down_bytes=task.profile.download_bytes,
                        up_extra_us=0, backhaul_bytes=0)


# --------------------------------------------------------------------------
# the simulator


def run(trace: TraceFile | list[Task], policy, config: SimConfig) -> SimReport:
    """Replay a trace through a policy; deterministic for fixed inputs."""
    return _simulate(trace, policy, config, stepper=None)


def oracle_step_sim(trace: TraceFile | list[Task], policy, config: SimConfig,
                    dt: int) -> SimReport:
    """run(), but edge executions are re-derived by dt-stepping.

    Requires every arrival, profile duration, provision delay, and derived
    ready instant to be a multiple of dt; raises SimError otherwise.  Used
    only by tests.
    """
    if dt <= 0:
        raise SimError(f"dt must be positive, got {dt}")
    tasks = trace.tasks if isinstance(trace, TraceFile) else trace
    for task in tasks:
        p = task.profile
        values = (task.arrival, p.r_mobile, p.r_edge, p.r_cloud, p.up_edge,
                  p.down_edge, p.up_cloud, p.down_cloud)
        for value in values:
            if value % dt:
                raise SimError(
                    f"dt={dt} does not divide a cost of task {task.id!r}: {value}")
    if config.provision_delay % dt:
        raise SimError(f"dt={dt} does not divide provision_delay")
    return _simulate(trace, policy, config, stepper=dt)


def _simulate(trace: TraceFile | list[Task], policy, config: SimConfig,
              stepper: int | None) -> SimReport:
    tasks = trace.tasks if isinstance(trace, TraceFile) else trace
    if isinstance(policy, str):
        policy = build_policy(policy, provision_delay=config.provision_delay,
                              estimate_noise=config.estimate_noise,
                              noise_seed=config.seed)
    lazy = policy.name == "echo"
    accountant = TransferAccountant(config.sync) if lazy else None

    queues = [VmQueue(i) for i in range(config.num_vms)]
    steppers = ([_SteppedVm(dt=stepper) for _ in queues]
                if stepper is not None else None)
    ordered = sorted(tasks, key=lambda t: t.arrival)

    decisions: dict[str, Decision] = {}
    costs: dict[str, TransferCost] = {}
    clock = 0
    for task in ordered:
        now = task.arrival
        if steppers is not None:
            for svm in steppers:
                svm.step_until(clock, now)
        for queue in queues:
            queue.advance(now)
        clock = now

        if accountant is not None:
            cost = accountant.preview(task)
            upload = effective_upload_us(task, cost)
            if stepper is not None and upload % stepper:
                raise SimError(
                    f"dt={stepper} does not divide the effective upload "
                    f"of task {task.id!r}: {upload}")
            decision = policy.decide(task, queues, now, edge_upload_time=upload)
        else:
            cost = _eager_cost(task)
            decision = policy.decide(task, queues, now)

        if decision.platform is Platform.MOBILE:
            costs[task.id] = TransferCost(0, 0, 0, 0)
        else:
            if accountant is not None:
                cost = accountant.commit(task)
            costs[task.id] = cost
        decisions[task.id] = decision
        if steppers is not None and decision.platform is Platform.EDGE:
            assert decision.vm_index is not None
            steppers[decision.vm_index].resync(queues[decision.vm_index])

    for queue in queues:
        queue.advance(queue.horizon())
    if steppers is not None:
        for svm in steppers:
            svm.drain(clock)

    records = [_realize(task, decisions[task.id], costs[task.id], queues,
                        steppers, config)
               for task in ordered]
    backhaul = sum(cost.backhaul_bytes for cost in costs.values())
    return SimReport(policy=policy.name,
                     config=_config_dict(policy.name, config, len(records)),
                     records=records,
                     aggregates=_aggregate(records, backhaul))


def _realize(task: Task, decision: Decision, cost: TransferCost,
             queues: list[VmQueue], steppers: list["_SteppedVm"] | None,
             config: SimConfig) -> TaskRecord:
    p = task.profile
    arrival = task.arrival
    vm_index = decision.vm_index
    if decision.platform is Platform.MOBILE:
        ready = start = arrival
        completion = arrival + p.r_mobile
        waiting = 0
    elif decision.platform is Platform.CLOUD:
        ready = arrival
        start = arrival + p.up_cloud
        completion = start + p.r_cloud + p.down_cloud
        waiting = 0
    else:
        assert vm_index is not None
        if steppers is None:
            queue = queues[vm_index]
            ready = queue.ready_of(task.id)
            start_opt = queue.first_start_of(task.id)
            exec_end_opt = queue.completion_of(task.id)
        else:
            svm = steppers[vm_index]
            ready = svm.ready[task.id]
            start_opt = svm.first.get(task.id)
            exec_end_opt = svm.done.get(task.id)
        if start_opt is None or exec_end_opt is None:
            raise SimError(f"edge task {task.id!r} never finished executing")
        start = start_opt
        completion = exec_end_opt + p.down_edge
        waiting = exec_end_opt - ready - p.r_edge
    deadline = decision.deadline.h if decision.deadline is not None else None
    met = (completion <= deadline) if deadline is not None else None
    energy = energy_of(task, decision, cost.up_bytes, cost.down_bytes,
                       config.energy, completion=completion)
    return TaskRecord(
        task_id=task.id, user_id=task.user_id, app=task.app, arrival=arrival,
        platform=decision.platform_label(), vm_index=vm_index,
        predicted_completion=decision.predicted_completion,
        ready=ready, start=start, completion=completion, waiting=waiting,
        deadline=deadline, deadline_met=met,
        bytes_up=cost.up_bytes, bytes_down=cost.down_bytes, energy_j=energy,
    )


def _aggregate(records: list[TaskRecord], backhaul: int = 0) -> dict:
    counts = {"mobile": 0, "edge": 0, "cloud": 0}
    responses: list[int] = []
    waits: list[int] = []
    deadline_tasks = 0
    deadline_met = 0
    bytes_up = bytes_down = 0
    energy = 0.0
    for r in records:
        counts[r.platform.split(":")[0]] += 1
        responses.append(r.response_time())
        if r.platform.startswith("edge"):
            waits.append(r.waiting)
        if r.deadline is not None:
            deadline_tasks += 1
            deadline_met += bool(r.deadline_met)
        bytes_up += r.bytes_up
        bytes_down += r.bytes_down
        energy += r.energy_j
    aggregates = {
        "tasks": len(records),
        "platform_counts": counts,
        "mean_completion_s": None,
        "median_completion_s": None,
        "p95_completion_s": None,
        "mean_waiting_s": None,
        "deadline_tasks": deadline_tasks,
        "deadline_compliance": (deadline_met / deadline_tasks
                                if deadline_tasks else None),
        "bytes_up": bytes_up,
        "bytes_down": bytes_down,
        "backhaul_bytes": backhaul,
        "energy_j": energy,
    }
    if responses:
        ordered = sorted(responses)
        rank = -(-95 * len(ordered) // 100)  # ceil(0.95 n)
        aggregates["mean_completion_s"] = statistics.fmean(responses) / 1e6
        aggregates["median_completion_s"] = float(statistics.median(responses)) / 1e6
        aggregates["p95_completion_s"] = to_seconds(ordered[rank - 1])
    if waits:
        aggregates["mean_waiting_s"] = statistics.fmean(waits) / 1e6
    return aggregates


def _config_dict(policy_name: str, config: SimConfig, task_count: int) -> dict:
    return {
        "policy": policy_name,
        "num_vms": config.num_vms,
        "lambda": config.lam,
        "seed": config.seed,
        "provision_delay": config.provision_delay,
        "estimate_noise": config.estimate_noise,
        "tasks": task_count,
        "energy": {
            "p_cpu_mobile": config.energy.p_cpu_mobile,
            "p_net_mobile": config.energy.p_net_mobile,
            "p_idle": config.energy.p_idle,
        },
        "sync": {
            "proxy_header": config.sync.proxy_header,
            "objects_per_task": config.sync.objects_per_task,
            "args_share": config.sync.args_share,
            "referred_share": config.sync.referred_share,
            "change_fraction": config.sync.change_fraction,
            "rtt_us": config.sync.rtt_us,
        },
    }


# --------------------------------------------------------------------------
# the per-tick VM used by oracle_step_sim


class _SteppedVm:
    """Ticks through one VM's committed schedule dt at a time.

    State is rebuilt from the queue only at commit points (the schedule is
    the scheduler's to decide); everything between commits, including when
    each chunk runs, waits, finishes, is re-derived here one tick at a
    time and cross-checked against run() by the tests.
    """

    def __init__(self, dt: int):
        self.dt = dt
        self.items: list[list] = []      # [task_id, remaining work] queue order
        self.ready: dict[str, int] = {}
        self.totals: dict[str, int] = {}
        self.first: dict[str, int] = {}
        self.done: dict[str, int] = {}

    def resync(self, queue: VmQueue) -> None:
        self.items = [[tid, w] for tid, w in queue.future_chunks]
        for tid, _ in self.items:
            if tid not in self.ready:
                self.ready[tid] = queue.ready_of(tid)
                self.totals[tid] = queue.remaining_work(tid)
            if self.ready[tid] % self.dt:
                raise SimError(
                    f"dt={self.dt} does not divide ready time of {tid!r}")

    def step_until(self, t_from: int, t_to: int) -> None:
        t = t_from
        dt = self.dt
        items = self.items
        while t < t_to:
            while items and items[0][1] == 0:
                items.pop(0)
            if not items:
                break
            tid = items[0][0]
            if self.ready[tid] <= t:
                if tid not in self.first:
                    self.first[tid] = t
                items[0][1] -= dt
                self.totals[tid] -= dt
                t += dt
                if self.totals[tid] == 0:
                    if tid in self.done:
                        raise SimError(f"task {tid!r} completed twice in oracle")
                    self.done[tid] = t
            else:
                t += dt

    def drain(self, t_from: int) -> None:
        t = t_from
        while any(rem for _, rem in self.items):
            self.step_until(t, t + self.dt)
            t += self.dt
