"""Offload decision engine: place each task where it finishes soonest.

For every arriving task the engine estimates completion on the device, on
the cloud, and on the best edge VM (via a pure schedule trial), then picks
the platform with the smallest estimate.  Ties prefer edge, then cloud:
when times are equal the nearer or cheaper-for-the-operator option wins.

Choosing the device or the cloud never touches the edge queues.  Choosing
edge commits the trialed insertion and attaches a completion deadline: the
task must finish no later than the best it could have done without the
edge (device vs cloud, whichever is sooner).  That deadline, minus the
result download leg, is what the queue enforces for the task from then on,
so later arrivals can only preempt it if it still finishes in time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .model import Deadline, Decision, Platform, Task
from .scheduler import TrialInsertion, VmQueue, best_vm, commit

logger = logging.getLogger(__name__)

# argmin tie order: prefer edge, then cloud, then the device
_TIE_RANK = {Platform.EDGE: 0, Platform.CLOUD: 1, Platform.MOBILE: 2}


@dataclass(frozen=True)
class PlatformEstimate:
    """Completion-time estimates (durations from decision time) per platform.

    t_edge is None when no VMs exist or the task is not offloadable.
    """

    t_mobile: int
    t_cloud: int
    t_edge: int | None
    chosen: Platform


def estimate(task: Task) -> tuple[int, int]:
    """Device and cloud completion durations for a task.

    The device runs the task locally; the cloud pays both transfer legs
    around its execution.  Neither platform queues in this model: the
    device is the user's own and the cloud scales out per task.
    """
    p = task.profile
    t_mobile = p.r_mobile
    t_cloud = p.up_cloud + p.r_cloud + p.down_cloud
    return t_mobile, t_cloud


def evaluate(task: Task, queues: list[VmQueue], now: int, *,
             provision_delay: int = 0, edge_upload_time: int | None = None,
             estimate_noise: float = 0.0,
             noise_seed: int = 0) -> PlatformEstimate:
    """Estimate all platforms without committing anything."""
    est, _trial = _evaluate(task, queues, now,
                            provision_delay=provision_delay,
                            edge_upload_time=edge_upload_time,
                            estimate_noise=estimate_noise,
                            noise_seed=noise_seed)
    return est


def decide(task: Task, queues: list[VmQueue], now: int, *,
           provision_delay: int = 0, edge_upload_time: int | None = None,
           estimate_noise: float = 0.0,
           noise_seed: int = 0) -> Decision:
    """Place one task; commits the edge insertion when edge wins.

    edge_upload_time overrides the profiled upload leg (the transmission
    layer may move fewer bytes than profiled, so the input arrives early).
    """
    est, trial = _evaluate(task, queues, now,
                           provision_delay=provision_delay,
                           edge_upload_time=edge_upload_time,
                           estimate_noise=estimate_noise,
                           noise_seed=noise_seed)
    if est.chosen is Platform.MOBILE:
        return Decision(Platform.MOBILE, now + est.t_mobile)
    if est.chosen is Platform.CLOUD:
        return Decision(Platform.CLOUD, now + est.t_cloud)
    assert trial is not None and est.t_edge is not None
    commit(queues, trial.vm_index, trial)
    deadline = trial.deadline
    assert deadline is not None
    completion = now + est.t_edge
    logger.debug("task %s -> edge vm %d (t_m=%d t_c=%d t_e=%d)",
                 task.id, trial.vm_index, est.t_mobile, est.t_cloud, est.t_edge)
    return Decision(Platform.EDGE, completion, vm_index=trial.vm_index,
                    deadline=Deadline(deadline + task.profile.down_edge))


def _evaluate(task: Task, queues: list[VmQueue], now: int, *,
              provision_delay: int, edge_upload_time: int | None,
              estimate_noise: float,
              noise_seed: int) -> tuple[PlatformEstimate, TrialInsertion | None]:
    t_mobile, t_cloud = estimate(task)
    if estimate_noise:
        t_mobile = _distort(t_mobile, task.id, noise_seed, estimate_noise)
        t_cloud = _distort(t_cloud, task.id + "/c", noise_seed, estimate_noise)

    if not task.offloadable:
        return PlatformEstimate(t_mobile, t_cloud, None, Platform.MOBILE), None

    t_edge: int | None = None
    trial: TrialInsertion | None = None
    if queues:
        p = task.profile
        # The task may only finish later than its no-edge alternative if it
        # was never admitted; once admitted this bound is its deadline.
        horizon = now + min(t_mobile, t_cloud)
        upload = p.up_edge if edge_upload_time is None else edge_upload_time
        ready = now + provision_delay + upload
        queue_limit = horizon - p.down_edge
        vm_index, trial = best_vm(queues, task, ready, queue_limit)
        t_edge = (trial.candidate_completion - now) + p.down_edge

    candidates: list[tuple[int, int, Platform]] = [
        (t_mobile, _TIE_RANK[Platform.MOBILE], Platform.MOBILE),
        (t_cloud, _TIE_RANK[Platform.CLOUD], Platform.CLOUD),
    ]
    if t_edge is not None:
        candidates.append((t_edge, _TIE_RANK[Platform.EDGE], Platform.EDGE))
    _, _, chosen = min(candidates)
    if chosen is not Platform.EDGE:
        trial = None
    return PlatformEstimate(t_mobile, t_cloud, t_edge, chosen), trial


def _distort(duration: int, key: str, seed: int, magnitude: float) -> int:
    """Deterministically mis-estimate a duration by up to +/- magnitude."""
    from zlib import crc32
    h = crc32(key.encode()) ^ (seed * 0x9E3779B1 & 0xFFFFFFFF)
    unit = (h % 10_000) / 10_000.0            # [0, 1)
    factor = 1.0 + magnitude * (2.0 * unit - 1.0)
    distorted = round(duration * factor)
    return distorted if distorted > 0 else 1
