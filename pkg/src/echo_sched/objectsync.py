"""Lazy object transmission and differential object update.

Two layers live here.  The codec layer is real: diff_encode/diff_apply
implement a block-hashing delta format (fixed-size source blocks, rolling
window match with byte-exact verification and greedy extension), and
lazy_bytes prices a proxy-first transfer of an object set.  The accounting
layer (SyncLedger, TransferAccountant) applies the same pricing rules as
pure arithmetic so the simulator can charge effective bytes per task
without materializing payloads.

Delta wire format, little-endian:

    magic "ODLT" (4) | version u16 | sha256(old) (32) | block_size u32 |
    op_count u32 | ops...

    op COPY   = tag 0x00 | source offset u64 | length u32
    op INSERT = tag 0x01 | length u32 | raw bytes

Applying a delta against the wrong base payload fails the digest check.
For any inputs, len(delta) <= len(new) + DELTA_HEADER_BUDGET as long as
block_size >= MIN_BLOCK (each COPY op's 13 bytes displaces at least
MIN_BLOCK literal bytes).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"ODLT"
WIRE_VERSION = 1
_HEADER = struct.Struct("<4sH32sII")
_COPY = struct.Struct("<BQI")
_INSERT_HEAD = struct.Struct("<BI")
_OP_COPY = 0
_OP_INSERT = 1

MIN_BLOCK = 64
DEFAULT_BLOCK = 1024
# fixed header (46 B) + one COPY op (13 B) and change, rounded up
DELTA_HEADER_BUDGET = 64

ENDPOINTS = ("mobile", "edge", "cloud")
LINKS = ("mobile-edge", "mobile-cloud", "edge-cloud")


class SyncError(Exception):
    pass


class DigestMismatch(SyncError):
    """Delta was produced against a different base payload (stale cache)."""


# --------------------------------------------------------------------------
# delta codec


def _window_keys(data: np.ndarray, block: int) -> np.ndarray:
    """Weak hash of every length-`block` window, vectorized.

    Combines the window byte sum with a position-weighted sum, both exact,
    into one uint64 key.  Collisions are harmless: matches are verified
    byte-for-byte before use.
    """
    x = data.astype(np.int64)
    csum = np.concatenate((np.zeros(1, dtype=np.int64), np.cumsum(x)))
    wsum = csum[block:] - csum[:-block]
    weighted = np.concatenate(
        (np.zeros(1, dtype=np.int64),
         np.cumsum(np.arange(len(x), dtype=np.int64) * x)))
    wpos = weighted[block:] - weighted[:-block]
    j = np.arange(len(wsum), dtype=np.int64)
    s2 = (block + j) * wsum - wpos
    return (wsum.astype(np.uint64) << np.uint64(32)) ^ \
        (s2.astype(np.uint64) & np.uint64(0xFFFFFFFF))


def diff_encode(old: bytes, new: bytes, block_size: int = DEFAULT_BLOCK) -> bytes:
    """Delta from `old` to `new` such that diff_apply(old, delta) == new."""
    if block_size < MIN_BLOCK:
        raise ValueError(f"block_size must be >= {MIN_BLOCK}")
    ops: list[bytes] = []

    if old == new:
        # cached copy is current: no payload bytes at all
        if new:
            ops.append(_COPY.pack(_OP_COPY, 0, len(new)))
    elif len(old) < block_size or len(new) < block_size:
        ops.append(_INSERT_HEAD.pack(_OP_INSERT, len(new)) + new)
    else:
        ops = _encode_blocks(old, new, block_size)

    header = _HEADER.pack(MAGIC, WIRE_VERSION, hashlib.sha256(old).digest(),
                          block_size, len(ops))
    return header + b"".join(ops)


def _encode_blocks(old: bytes, new: bytes, block: int) -> list[bytes]:
    old_arr = np.frombuffer(old, dtype=np.uint8)
    new_arr = np.frombuffer(new, dtype=np.uint8)
    old_keys_all = _window_keys(old_arr, block)
    block_starts = np.arange(0, len(old) - block + 1, block)
    block_keys = old_keys_all[block_starts]

    table: dict[int, list[int]] = {}
    for start, key in zip(block_starts.tolist(), block_keys.tolist()):
        table.setdefault(key, []).append(start)

    new_keys = _window_keys(new_arr, block)
    candidates = np.nonzero(np.isin(new_keys, block_keys))[0]

    ops: list[bytes] = []
    lit_start = 0
    pos = 0
    for cand in candidates.tolist():
        if cand < pos:
            continue
        for off in table.get(int(new_keys[cand]), ()):
            if old[off:off + block] != new[cand:cand + block]:
                continue
            # extend the verified match as far as both sides agree
            limit = min(len(old) - off, len(new) - cand)
            tail_old = old_arr[off + block:off + limit]
            tail_new = new_arr[cand + block:cand + limit]
            diff = np.nonzero(tail_old != tail_new)[0]
            length = block + (int(diff[0]) if diff.size else len(tail_old))
            if cand > lit_start:
                chunk = new[lit_start:cand]
                ops.append(_INSERT_HEAD.pack(_OP_INSERT, len(chunk)) + chunk)
            ops.append(_COPY.pack(_OP_COPY, off, length))
            pos = cand + length
            lit_start = pos
            break
    if lit_start < len(new):
        chunk = new[lit_start:]
        ops.append(_INSERT_HEAD.pack(_OP_INSERT, len(chunk)) + chunk)
    return ops


def diff_apply(old: bytes, delta: bytes) -> bytes:
    """Reconstruct the new payload; rejects deltas built on a different base."""
    if len(delta) < _HEADER.size:
        raise SyncError("delta truncated: missing header")
    magic, version, digest, block_size, op_count = _HEADER.unpack_from(delta, 0)
    if magic != MAGIC:
        raise SyncError(f"bad delta magic {magic!r}")
    if version != WIRE_VERSION:
        raise SyncError(f"unsupported delta version {version}")
    if hashlib.sha256(old).digest() != digest:
        raise DigestMismatch("delta was encoded against a different payload")
    if block_size < MIN_BLOCK:
        raise SyncError(f"corrupt delta: block size {block_size}")

    pieces: list[bytes] = []
    at = _HEADER.size
    for _ in range(op_count):
        if at >= len(delta):
            raise SyncError("delta truncated: missing op")
        tag = delta[at]
        if tag == _OP_COPY:
            _, offset, length = _COPY.unpack_from(delta, at)
            at += _COPY.size
            if offset + length > len(old):
                raise SyncError("copy op out of base payload bounds")
            pieces.append(old[offset:offset + length])
        elif tag == _OP_INSERT:
            _, length = _INSERT_HEAD.unpack_from(delta, at)
            at += _INSERT_HEAD.size
            if at + length > len(delta):
                raise SyncError("delta truncated: insert payload")
            pieces.append(delta[at:at + length])
            at += length
        else:
            raise SyncError(f"unknown delta op tag {tag}")
    if at != len(delta):
        raise SyncError(f"{len(delta) - at} trailing bytes after ops")
    return b"".join(pieces)


# --------------------------------------------------------------------------
# object records and lazy transfer pricing


@dataclass(frozen=True)
class ObjectRecord:
    """One versioned opaque payload."""

    object_id: str
    version: int
    payload: bytes

    def __post_init__(self) -> None:
        if self.version < 1:
            raise ValueError(f"object version must be >= 1, got {self.version}")

    @property
    def digest(self) -> bytes:
        return hashlib.sha256(self.payload).digest()


@dataclass(frozen=True)
class TaskObjectSet:
    """Objects reachable from a task's arguments, flagged by actual use."""

    objects: tuple[tuple[ObjectRecord, bool], ...]

    def __post_init__(self) -> None:
        if not any(referred for _, referred in self.objects):
            raise ValueError("at least the input-argument object must be referred")
        ids = [rec.object_id for rec, _ in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object_id in task object set")


def lazy_bytes(obj_set: TaskObjectSet, proxy_header: int) -> tuple[int, tuple[str, ...]]:
    """Bytes to transmit the set proxy-first: every object costs one proxy
    header, and only referred objects ship their payload."""
    if proxy_header <= 0:
        raise ValueError("proxy_header must be positive")
    total = proxy_header * len(obj_set.objects)
    transmitted: list[str] = []
    for record, referred in obj_set.objects:
        if referred:
            total += len(record.payload)
            transmitted.append(record.object_id)
    return total, tuple(transmitted)


def eager_bytes(obj_set: TaskObjectSet) -> int:
    """Bytes to transmit every payload up front (no proxies)."""
    return sum(len(record.payload) for record, _ in obj_set.objects)


# --------------------------------------------------------------------------
# sync ledger


@dataclass
class LinkCounters:
    proxy_bytes: int = 0
    payload_bytes: int = 0
    delta_bytes: int = 0

    @property
    def total(self) -> int:
        return self.proxy_bytes + self.payload_bytes + self.delta_bytes


def link_name(a: str, b: str) -> str:
    """Canonical link between two endpoints (order-insensitive)."""
    pair = {a, b}
    for name in LINKS:
        left, _, right = name.partition("-")
        if pair == {left, right}:
            return name
    raise ValueError(f"no link between {a!r} and {b!r}")


class SyncLedger:
    """Per-endpoint object caches plus per-link byte counters.

    Every transfer goes through push(): a destination that has never seen
    the object receives the full payload; a destination holding an older
    version receives a real delta; a destination already current receives
    nothing.  Mutations are serialized by the caller (single-threaded use).
    """

    def __init__(self, block_size: int = DEFAULT_BLOCK):
        self.block_size = block_size
        self._caches: dict[str, dict[str, ObjectRecord]] = {e: {} for e in ENDPOINTS}
        self.counters: dict[str, LinkCounters] = {name: LinkCounters() for name in LINKS}

    def seed(self, endpoint: str, record: ObjectRecord) -> None:
        """Install an object at an endpoint without charging any link."""
        self._check_version(endpoint, record)
        self._caches[endpoint][record.object_id] = record

    def cached(self, endpoint: str, object_id: str) -> ObjectRecord | None:
        return self._caches[endpoint].get(object_id)

    def record_proxies(self, src: str, dst: str, count: int, proxy_header: int) -> int:
        if count < 0 or proxy_header <= 0:
            raise ValueError("proxy count must be >= 0 and header positive")
        bytes_ = count * proxy_header
        self.counters[link_name(src, dst)].proxy_bytes += bytes_
        return bytes_

    def push(self, record: ObjectRecord, src: str, dst: str) -> int:
        """Transmit an object src → dst; returns bytes charged to the link."""
        source_copy = self._caches[src].get(record.object_id)
        if source_copy is None or source_copy.version < record.version:
            self._caches[src][record.object_id] = record
        held = self._caches[dst].get(record.object_id)
        counters = self.counters[link_name(src, dst)]
        if held is None:
            charged = len(record.payload)
            counters.payload_bytes += charged
        elif held.version == record.version:
            return 0
        elif held.version > record.version:
            raise SyncError(
                f"stale push of {record.object_id!r} v{record.version} over "
                f"v{held.version} at {dst}")
        else:
            delta = diff_encode(held.payload, record.payload, self.block_size)
            charged = len(delta)
            counters.delta_bytes += charged
            if diff_apply(held.payload, delta) != record.payload:
                raise SyncError(f"delta round-trip failed for {record.object_id!r}")
        self._caches[dst][record.object_id] = record
        return charged

    def _check_version(self, endpoint: str, record: ObjectRecord) -> None:
        held = self._caches[endpoint].get(record.object_id)
        if held is not None and record.version < held.version:
            raise SyncError(
                f"version regression for {record.object_id!r} at {endpoint}: "
                f"{held.version} -> {record.version}")


def propagate_edge_cloud(ledger: SyncLedger, object_id: str) -> int:
    """Bring the staler of edge/cloud up to date with the fresher one.

    Charged to the edge-cloud link only; runs in the background and never
    delays a mobile-facing completion.  Returns payload/delta bytes moved
    (0 when both sides are already current).
    """
    at_edge = ledger.cached("edge", object_id)
    at_cloud = ledger.cached("cloud", object_id)
    if at_edge is None and at_cloud is None:
        raise SyncError(f"object {object_id!r} unknown at both edge and cloud")
    if at_cloud is None or (at_edge is not None and at_edge.version > at_cloud.version):
        return ledger.push(at_edge, "edge", "cloud")
    if at_edge is None or at_cloud.version > at_edge.version:
        return ledger.push(at_cloud, "cloud", "edge")
    return 0


# --------------------------------------------------------------------------
# per-task transfer accounting for the simulator


@dataclass(frozen=True)
class SyncParams:
    """Knobs of the arithmetic transfer model (defaults documented in README).

    A task's profiled upload splits into call arguments (always sent in
    full) and app resource state.  A `referred_share` slice of the state is
    actually used remotely: it ships fully on the first offload of a
    (user, app) pair and as a `change_fraction` delta afterwards.  The
    unreferred remainder travels as proxies only.  `rtt_us` prices the
    demand-fetch round trip of the referred slice into the upload leg.
    """

    proxy_header: int = 64
    objects_per_task: int = 4
    args_share: float = 0.5
    referred_share: float = 0.5
    change_fraction: float = 0.25
    rtt_us: int = 0

    def __post_init__(self) -> None:
        if self.proxy_header <= 0 or self.objects_per_task < 1:
            raise ValueError("need a positive proxy header and >= 1 object per task")
        for name in ("args_share", "referred_share", "change_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.rtt_us < 0:
            raise ValueError("rtt_us must be >= 0")


@dataclass(frozen=True)
class TransferCost:
    up_bytes: int
    down_bytes: int
    up_extra_us: int    # demand-fetch round trips added to the upload leg
    backhaul_bytes: int  # background state sync between edge and cloud


class TransferAccountant:
    """Effective bytes for offloaded tasks under lazy + differential sync.

    Pure arithmetic mirror of the object pipeline: no payloads change
    hands, only the sizes the pipeline would transmit.  State is keyed by
    (user_id, app): the first offload pays the referred resource slice in
    full, later offloads pay deltas.  Baseline policies bypass this class
    entirely and pay profiled bytes as-is.
    """

    def __init__(self, params: SyncParams | None = None):
        self.params = params or SyncParams()
        self._synced: set[tuple[str, str]] = set()

    def preview(self, task) -> TransferCost:
        """Cost if this task offloads now; no state change."""
        return self._cost(task, commit=False)

    def commit(self, task) -> TransferCost:
        """Cost of actually offloading this task; caches the app state."""
        return self._cost(task, commit=True)

    def _cost(self, task, commit: bool) -> TransferCost:
        p = self.params
        profile = task.profile
        args = int(profile.upload_bytes * p.args_share)
        resource = profile.upload_bytes - args
        referred = int(resource * p.referred_share)
        proxies = p.objects_per_task * p.proxy_header

        key = (task.user_id, task.app)
        if referred == 0:
            state_cost = 0
        elif key in self._synced:
            state_cost = int(referred * p.change_fraction) + DELTA_HEADER_BUDGET
        else:
            state_cost = referred
        extra = p.rtt_us if state_cost > 0 else 0
        if commit:
            self._synced.add(key)
        return TransferCost(
            up_bytes=args + proxies + state_cost,
            down_bytes=profile.download_bytes,
            up_extra_us=extra,
            backhaul_bytes=state_cost,
        )
