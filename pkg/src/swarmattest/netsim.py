"""World model for the discrete-event engine: arena, mobility, radio, topologies.

Time is kept as integer microseconds throughout so event ordering never
depends on floating-point rounding. Node positions are floats, but they only
influence the simulation through range comparisons evaluated in a fixed
order, which keeps runs bit-reproducible for a given seed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .crypto import Prng
from .errors import ConfigError

US = 1_000_000


def to_us(seconds: float) -> int:
    return round(seconds * US)


@dataclass
class Arena:
    width: float
    height: float

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return min(max(x, 0.0), self.width), min(max(y, 0.0), self.height)

    def random_point(self, rng: Prng) -> tuple[float, float]:
        return rng.uniform(0.0, self.width), rng.uniform(0.0, self.height)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


@dataclass
class RadioModel:
    range_m: float = 75.0
    data_rate_bps: int = 250_000
    frame_size_bytes: int = 127
    frame_payload_bytes: int = 102
    loss_prob: float = 0.0

    def frames_per_message(self, payload_bytes: int) -> int:
        return -(-payload_bytes // self.frame_payload_bytes)

    def frame_time_us(self) -> int:
        return round(self.frame_size_bytes * 8 * US / self.data_rate_bps)

    def tx_time_us(self, payload_bytes: int) -> int:
        return self.frames_per_message(payload_bytes) * self.frame_time_us()


@dataclass
class NodePose:
    x: float
    y: float
    wx: float
    wy: float
    speed: float

    @property
    def position(self) -> tuple[float, float]:
        return self.x, self.y

    @property
    def velocity(self) -> tuple[float, float]:
        d = math.hypot(self.wx - self.x, self.wy - self.y)
        if d == 0.0:
            return 0.0, 0.0
        return self.speed * (self.wx - self.x) / d, self.speed * (self.wy - self.y) / d


def random_pose(arena: Arena, speed_range: tuple[float, float], rng: Prng) -> NodePose:
    x, y = arena.random_point(rng)
    wx, wy = arena.random_point(rng)
    return NodePose(x, y, wx, wy, rng.uniform(*speed_range))


def mobility_step(pose: NodePose, dt: float, arena: Arena,
                  speed_range: tuple[float, float], rng: Prng) -> NodePose:
    """Random-waypoint update: head to the waypoint, redraw it on arrival."""
    if dt <= 0:
        raise ConfigError("mobility step requires dt > 0")
    dx, dy = pose.wx - pose.x, pose.wy - pose.y
    dist = math.hypot(dx, dy)
    step = pose.speed * dt
    if step >= dist:
        # arrived: sit on the waypoint and pick the next leg
        pose.x, pose.y = pose.wx, pose.wy
        pose.wx, pose.wy = arena.random_point(rng)
        pose.speed = rng.uniform(*speed_range)
    else:
        pose.x += step * dx / dist
        pose.y += step * dy / dist
    pose.x, pose.y = arena.clamp(pose.x, pose.y)
    return pose


class MobilityField:
    """Positions of all nodes plus a uniform grid for range queries."""

    def __init__(self, poses: list[NodePose], arena: Arena, range_m: float):
        self.poses = poses
        self.arena = arena
        self.range_m = range_m
        self._cell = max(range_m, 1e-9)
        self._grid: dict[tuple[int, int], list[int]] = {}
        self.rebuild()

    def rebuild(self) -> None:
        grid: dict[tuple[int, int], list[int]] = {}
        c = self._cell
        for i, p in enumerate(self.poses):
            grid.setdefault((int(p.x // c), int(p.y // c)), []).append(i)
        self._grid = grid

    def neighbors(self, i: int) -> list[int]:
        p = self.poses[i]
        c = self._cell
        cx, cy = int(p.x // c), int(p.y // c)
        r2 = self.range_m * self.range_m
        out = []
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for j in self._grid.get((gx, gy), ()):
                    if j == i:
                        continue
                    q = self.poses[j]
                    if (p.x - q.x) ** 2 + (p.y - q.y) ** 2 <= r2:
                        out.append(j)
        out.sort()
        return out

    def min_distance_to(self, i: int, others: list[int]) -> float:
        p = self.poses[i]
        return min(math.hypot(p.x - self.poses[j].x, p.y - self.poses[j].y)
                   for j in others)


def tree_adjacency(n: int, branching: int) -> list[list[int]]:
    """Complete branching-ary tree: node k's children are k*br+1 .. k*br+br."""
    if branching < 2:
        raise ConfigError("tree branching factor must be >= 2")
    adj: list[list[int]] = [[] for _ in range(n)]
    for k in range(n):
        for c in range(branching * k + 1, branching * k + branching + 1):
            if c < n:
                adj[k].append(c)
                adj[c].append(k)
    return [sorted(a) for a in adj]


def graph_adjacency(n: int, edges: list[list[int]]) -> list[list[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return [sorted(a) for a in adj]


class Topology:
    """Neighbor oracle: range-based when mobile, fixed adjacency otherwise."""

    def __init__(self, kind: str, field: Optional[MobilityField] = None,
                 adjacency: Optional[list[list[int]]] = None):
        self.kind = kind
        self.field = field
        self.adjacency = adjacency

    @property
    def is_mobile(self) -> bool:
        return self.field is not None

    def neighbors(self, i: int) -> list[int]:
        if self.field is not None:
            return self.field.neighbors(i)
        assert self.adjacency is not None
        return self.adjacency[i]


class EventKind(Enum):
    ATTEST_TRIGGER = "attest_trigger"
    BROADCAST_START = "broadcast_start"
    FRAME_DELIVERY = "frame_delivery"
    MOBILITY_TICK = "mobility_tick"
    VERIFIER_QUERY = "verifier_query"
    ADVERSARY_ACTION = "adversary_action"
    VERIFY_DONE = "verify_done"  # engine-internal: a queued MAC check completed


@dataclass(frozen=True)
class SimEvent:
    time_us: int
    seq: int
    kind: EventKind
    payload: object = None


class EventQueue:
    """Min-heap of events ordered by (time, insertion sequence).

    Entries are stored as plain tuples; the unique sequence number breaks
    time ties deterministically and keeps heap comparisons away from the
    (incomparable) kind and payload fields.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, EventKind, object]] = []
        self._seq = 0

    def push(self, time_us: int, kind: EventKind, payload: object = None) -> None:
        heapq.heappush(self._heap, (time_us, self._seq, kind, payload))
        self._seq += 1

    def pop(self) -> tuple[int, int, EventKind, object]:
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)

    def __iter__(self) -> Iterator[SimEvent]:
        return iter(SimEvent(*entry) for entry in sorted(self._heap, key=lambda e: e[:2]))


def graph_diameter(adjacency: list[list[int]]) -> int:
    """Exact diameter by BFS from every vertex; infinite graphs are rejected."""
    n = len(adjacency)
    diameter = 0
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adjacency[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        far = max(dist)
        if min(dist) < 0:
            raise ConfigError("graph is disconnected")
        diameter = max(diameter, far)
    return diameter
