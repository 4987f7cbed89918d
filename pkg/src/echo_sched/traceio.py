"""Trace schema, JSON-Lines serialization, and synthetic trace generation.

A trace file is one JSON header line (schema tag plus an echo of the
generator's configuration) followed by one JSON object per task, field
names exactly as in model.Task.  All times are integer microseconds, so
save/load round-trips are exact.

The generator draws exponential inter-arrivals, assigns each task an app
archetype from a two-class mix (interactive vs compute-heavy), and draws
its cost profile from per-app ranges in a plain INI config shipped with
the package (clearly labeled as non-authoritative estimates).
"""

from __future__ import annotations

import configparser
import json
import logging
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .model import (CostProfile, Task, TraceError, from_seconds,
                    validate_trace)

logger = logging.getLogger(__name__)

SCHEMA = "echo-sched-trace/1"

_PROFILE_JITTER = 0.25          # +/- fraction applied to each drawn quantity
_REMOTE_SPEED_RANGE = (0.8, 1.0)  # cloud execution as a fraction of edge
_USER_POOL = 100


@dataclass(frozen=True)
class MixSpec:
    """Workload mix: class split plus per-app weights within each class."""

    interactive_fraction: float
    interactive_weights: dict[str, float] = field(
        default_factory=lambda: {"ocr": 1.0, "filter": 1.0})
    compute_weights: dict[str, float] = field(
        default_factory=lambda: {"chess": 1.0, "sudoku": 1.0, "nqueens": 1.0})

    def __post_init__(self) -> None:
        if not 0.0 <= self.interactive_fraction <= 1.0:
            raise ValueError(
                f"interactive_fraction must be in [0, 1], got {self.interactive_fraction}")
        for label, weights in (("interactive", self.interactive_weights),
                               ("compute", self.compute_weights)):
            if not weights:
                raise ValueError(f"{label} app weights must not be empty")
            if any(w <= 0 for w in weights.values()):
                raise ValueError(f"{label} app weights must all be positive")

    @classmethod
    def preset(cls, name: str) -> "MixSpec":
        """Named class splits: mix-1 is interactive-heavy, mix-3 compute-heavy."""
        fractions = {"mix-1": 0.8, "mix-2": 0.5, "mix-3": 0.2}
        if name not in fractions:
            raise ValueError(f"unknown mix preset {name!r}; "
                             f"expected one of {', '.join(sorted(fractions))}")
        return cls(interactive_fraction=fractions[name])


@dataclass
class TraceFile:
    header: dict
    tasks: list[Task]


# --------------------------------------------------------------------------
# serialization


def save(trace: TraceFile, path: str | Path) -> None:
    path = Path(path)
    header = dict(trace.header)
    header.setdefault("schema", SCHEMA)
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for task in trace.tasks:
        lines.append(json.dumps(_task_to_dict(task), sort_keys=True,
                                separators=(",", ":")))
    path.write_text("\n".join(lines) + "\n")


def load(path: str | Path) -> TraceFile:
    path = Path(path)
    text = path.read_text()
    if not text.strip():
        return TraceFile(header={"schema": SCHEMA}, tasks=[])
    lines = text.splitlines()
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: line 1: malformed header: {exc}") from None
    if not isinstance(header, dict) or header.get("schema") != SCHEMA:
        raise TraceError(f"{path}: line 1: missing or unsupported schema tag "
                         f"(expected {SCHEMA!r})")
    tasks: list[Task] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            tasks.append(_task_from_dict(row))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TraceError(f"{path}: line {lineno}: {exc}") from None
    for warning in validate_trace(tasks):
        logger.warning("%s: %s", path, warning)
    return TraceFile(header=header, tasks=tasks)


def _task_to_dict(task: Task) -> dict:
    return {
        "id": task.id,
        "user_id": task.user_id,
        "app": task.app,
        "arrival": task.arrival,
        "offloadable": task.offloadable,
        "profile": {
            "r_mobile": task.profile.r_mobile,
            "r_edge": task.profile.r_edge,
            "r_cloud": task.profile.r_cloud,
            "up_edge": task.profile.up_edge,
            "down_edge": task.profile.down_edge,
            "up_cloud": task.profile.up_cloud,
            "down_cloud": task.profile.down_cloud,
            "upload_bytes": task.profile.upload_bytes,
            "download_bytes": task.profile.download_bytes,
        },
    }


def _task_from_dict(row: dict) -> Task:
    if not isinstance(row, dict):
        raise ValueError(f"expected a task object, got {type(row).__name__}")
    profile_row = row["profile"]
    profile = CostProfile(
        r_mobile=profile_row["r_mobile"],
        r_edge=profile_row["r_edge"],
        r_cloud=profile_row["r_cloud"],
        up_edge=profile_row["up_edge"],
        down_edge=profile_row["down_edge"],
        up_cloud=profile_row["up_cloud"],
        down_cloud=profile_row["down_cloud"],
        upload_bytes=profile_row.get("upload_bytes", 0),
        download_bytes=profile_row.get("download_bytes", 0),
    )
    return Task(
        id=row["id"],
        user_id=row["user_id"],
        app=row["app"],
        arrival=row["arrival"],
        profile=profile,
        offloadable=row.get("offloadable", True),
    )


# --------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class _AppArchetype:
    name: str
    interactive: bool
    r_mobile_s: float
    r_edge_s: float
    upload_kb: float
    download_kb: float


@dataclass(frozen=True)
class _LinkParams:
    edge_rate_kb_per_s: float
    edge_latency_ms: float
    cloud_rate_kb_per_s: float
    cloud_latency_ms: float


def _load_profiles(path: str | Path | None) -> tuple[dict[str, _AppArchetype], _LinkParams]:
    parser = configparser.ConfigParser()
    if path is None:
        text = resources.files("echo_sched").joinpath("app_profiles.ini").read_text()
        parser.read_string(text)
    else:
        read = parser.read(str(path))
        if not read:
            raise TraceError(f"profile config not found: {path}")
    try:
        links = _LinkParams(
            edge_rate_kb_per_s=parser.getfloat("links", "edge_rate_kb_per_s"),
            edge_latency_ms=parser.getfloat("links", "edge_latency_ms"),
            cloud_rate_kb_per_s=parser.getfloat("links", "cloud_rate_kb_per_s"),
            cloud_latency_ms=parser.getfloat("links", "cloud_latency_ms"),
        )
        apps: dict[str, _AppArchetype] = {}
        for section in parser.sections():
            if not section.startswith("app."):
                continue
            name = section[len("app."):]
            apps[name] = _AppArchetype(
                name=name,
                interactive=parser.get(section, "class") == "interactive",
                r_mobile_s=parser.getfloat(section, "r_mobile_s"),
                r_edge_s=parser.getfloat(section, "r_edge_s"),
                upload_kb=parser.getfloat(section, "upload_kb"),
                download_kb=parser.getfloat(section, "download_kb"),
            )
    except (configparser.Error, ValueError) as exc:
        raise TraceError(f"bad profile config: {exc}") from None
    if not apps:
        raise TraceError("profile config defines no [app.*] sections")
    return apps, links


def generate(n: int, lam: float, mix: MixSpec, seed: int,
             profile_config: str | Path | None = None) -> TraceFile:
    """Synthesize a trace of n tasks with Exponential(lam) inter-arrivals."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    apps, links = _load_profiles(profile_config)
    for name in list(mix.interactive_weights) + list(mix.compute_weights):
        if name not in apps:
            raise ValueError(f"mix references unknown app {name!r}")

    interactive_names = sorted(mix.interactive_weights)
    interactive_w = [mix.interactive_weights[a] for a in interactive_names]
    compute_names = sorted(mix.compute_weights)
    compute_w = [mix.compute_weights[a] for a in compute_names]

    rng = random.Random(seed)
    tasks: list[Task] = []
    arrival = 0
    for i in range(n):
        arrival += from_seconds(rng.expovariate(lam))
        if rng.random() < mix.interactive_fraction:
            app = rng.choices(interactive_names, weights=interactive_w)[0]
        else:
            app = rng.choices(compute_names, weights=compute_w)[0]
        tasks.append(Task(
            id=f"t{i:05d}",
            user_id=f"u{rng.randrange(_USER_POOL):02d}",
            app=app,
            arrival=arrival,
            profile=_draw_profile(rng, apps[app], links),
        ))
    header = {
        "schema": SCHEMA,
        "generator": {
            "n": n,
            "lambda": lam,
            "seed": seed,
            "mix": {
                "interactive_fraction": mix.interactive_fraction,
                "interactive_weights": mix.interactive_weights,
                "compute_weights": mix.compute_weights,
            },
            "profiles": "builtin" if profile_config is None else str(profile_config),
        },
    }
    return TraceFile(header=header, tasks=tasks)


def _draw_profile(rng: random.Random, app: _AppArchetype,
                  links: _LinkParams) -> CostProfile:
    def jitter(center: float) -> float:
        return center * rng.uniform(1.0 - _PROFILE_JITTER, 1.0 + _PROFILE_JITTER)

    r_mobile = from_seconds(jitter(app.r_mobile_s))
    r_edge = from_seconds(jitter(app.r_edge_s))
    r_cloud = round(r_edge * rng.uniform(*_REMOTE_SPEED_RANGE))
    up_kb = jitter(app.upload_kb)
    down_kb = jitter(app.download_kb)

    def leg(kb: float, rate: float, latency_ms: float) -> int:
        return from_seconds(latency_ms / 1000.0 + kb / rate)

    return CostProfile(
        r_mobile=r_mobile,
        r_edge=r_edge,
        r_cloud=r_cloud,
        up_edge=leg(up_kb, links.edge_rate_kb_per_s, links.edge_latency_ms),
        down_edge=leg(down_kb, links.edge_rate_kb_per_s, links.edge_latency_ms),
        up_cloud=leg(up_kb, links.cloud_rate_kb_per_s, links.cloud_latency_ms),
        down_cloud=leg(down_kb, links.cloud_rate_kb_per_s, links.cloud_latency_ms),
        upload_bytes=round(up_kb * 1024),
        download_bytes=round(down_kb * 1024),
    )
