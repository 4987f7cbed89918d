"""Placement policies sharing one decide() interface.

Every policy looks at one arriving task plus the current edge queues and
returns a Decision.  Only the two edge-aware policies ever mutate the
queues, and only when they actually place the task on a VM.

    end-only      run everything on the device
    cloud-always  offload everything offloadable to the cloud
    thinkair      cloud iff its estimate strictly beats the device
    mcloud        three-way argmin with a queue-blind edge estimate,
                  best-effort FIFO placement on the least-loaded VM
    echo          deadline-guaranteeing edge scheduler (the engine)
"""

from __future__ import annotations

from . import engine
from .model import Decision, Platform, Task
from .scheduler import VmQueue

# tie order everywhere: edge beats cloud beats the device
_TIE_RANK = {Platform.EDGE: 0, Platform.CLOUD: 1, Platform.MOBILE: 2}


class LocalOnlyPolicy:
    """Baseline: never offload."""

    name = "end-only"

    def decide(self, task: Task, queues: list[VmQueue], now: int,
               edge_upload_time: int | None = None) -> Decision:
        return Decision(Platform.MOBILE, now + task.profile.r_mobile)


class CloudAlwaysPolicy:
    """Baseline: every offloadable task goes to the cloud, regardless of cost."""

    name = "cloud-always"

    def decide(self, task: Task, queues: list[VmQueue], now: int,
               edge_upload_time: int | None = None) -> Decision:
        if not task.offloadable:
            return Decision(Platform.MOBILE, now + task.profile.r_mobile)
        _, t_cloud = engine.estimate(task)
        return Decision(Platform.CLOUD, now + t_cloud)


class QueueBlindCloudPolicy:
    """Offload to the cloud only when that strictly beats running locally."""

    name = "thinkair"

    def decide(self, task: Task, queues: list[VmQueue], now: int,
               edge_upload_time: int | None = None) -> Decision:
        t_mobile, t_cloud = engine.estimate(task)
        if task.offloadable and t_cloud < t_mobile:
            return Decision(Platform.CLOUD, now + t_cloud)
        return Decision(Platform.MOBILE, now + t_mobile)


class BestEffortEdgePolicy:
    """Three-way argmin with an edge estimate that ignores queueing.

    The edge estimate assumes a free VM (transfer legs plus execution
    only), so under load the policy keeps piling tasks onto the least
    loaded VM's FIFO tail.  Placements carry no deadline and are never
    revisited; actual completions can run far past the estimate.
    """

    name = "mcloud"

    def __init__(self, provision_delay: int = 0):
        self.provision_delay = provision_delay

    def decide(self, task: Task, queues: list[VmQueue], now: int,
               edge_upload_time: int | None = None) -> Decision:
        t_mobile, t_cloud = engine.estimate(task)
        if not task.offloadable:
            return Decision(Platform.MOBILE, now + t_mobile)
        p = task.profile
        candidates = [
            (t_mobile, _TIE_RANK[Platform.MOBILE], Platform.MOBILE),
            (t_cloud, _TIE_RANK[Platform.CLOUD], Platform.CLOUD),
        ]
        t_edge: int | None = None
        if queues:
            t_edge = p.up_edge + p.r_edge + p.down_edge  # assumes no waiting
            candidates.append((t_edge, _TIE_RANK[Platform.EDGE], Platform.EDGE))
        _, _, chosen = min(candidates)
        if chosen is Platform.MOBILE:
            return Decision(Platform.MOBILE, now + t_mobile)
        if chosen is Platform.CLOUD:
            return Decision(Platform.CLOUD, now + t_cloud)
        assert t_edge is not None
        vm_index = min(range(len(queues)), key=lambda i: (queues[i].load(), i))
        ready = now + self.provision_delay + p.up_edge
        queues[vm_index].append_fifo(task, ready)
        return Decision(Platform.EDGE, now + t_edge, vm_index=vm_index)


class DeadlineAwareEdgePolicy:
    """The decision engine: edge admission with a completion guarantee."""

    name = "echo"

    def __init__(self, provision_delay: int = 0, estimate_noise: float = 0.0,
                 noise_seed: int = 0):
        self.provision_delay = provision_delay
        self.estimate_noise = estimate_noise
        self.noise_seed = noise_seed

    def decide(self, task: Task, queues: list[VmQueue], now: int,
               edge_upload_time: int | None = None) -> Decision:
        return engine.decide(task, queues, now,
                             provision_delay=self.provision_delay,
                             edge_upload_time=edge_upload_time,
                             estimate_noise=self.estimate_noise,
                             noise_seed=self.noise_seed)


POLICY_NAMES = ("end-only", "cloud-always", "thinkair", "mcloud", "echo")


def build_policy(name: str, provision_delay: int = 0,
                 estimate_noise: float = 0.0, noise_seed: int = 0):
    """Instantiate a policy by its CLI name."""
    if name == "end-only":
        return LocalOnlyPolicy()
    if name == "cloud-always":
        return CloudAlwaysPolicy()
    if name == "thinkair":
        return QueueBlindCloudPolicy()
    if name == "mcloud":
        return BestEffortEdgePolicy(provision_delay)
    if name == "echo":
        return DeadlineAwareEdgePolicy(provision_delay, estimate_noise, noise_seed)
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")
