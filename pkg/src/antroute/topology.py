"""Node placement, random-waypoint mobility and unit-disk connectivity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from . import _kernels


@dataclass(frozen=True)
class Arena:
    width: float = 500.0
    height: float = 500.0
    radio_range: float = 100.0

    def __post_init__(self):
        for name in ("width", "height", "radio_range"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"arena.{name} must be positive, got {v!r}")


@dataclass
class MobilityState:
    node_id: int
    x: float
    y: float
    wx: float
    wy: float
    speed: float
    paused_until: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def waypoint(self) -> tuple[float, float]:
        return (self.wx, self.wy)


class LinkDelta(NamedTuple):
    time: float
    node_a: int
    node_b: int
    change: str  # "up" | "down"


class _Graph:
    """Adjacency bookkeeping shared by the mobile and static topologies."""

    def __init__(self, n: int):
        self.n = n
        self._adj: list[set[int]] = [set() for _ in range(n)]
        self._edges: set[tuple[int, int]] = set()

    def _check(self, node_id: int) -> None:
        if not (isinstance(node_id, int) and 0 <= node_id < self.n):
            raise KeyError(f"unknown node id {node_id!r}")

    def neighbors(self, node_id: int, time: Optional[float] = None) -> set[int]:
        """Current neighbor set of ``node_id``; the returned set must not be mutated."""
        self._check(node_id)
        return self._adj[node_id]

    def is_link(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def snapshot_adjacency(self, time: Optional[float] = None) -> dict[int, list[int]]:
        return {i: sorted(self._adj[i]) for i in range(self.n)}

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def _set_edges(self, new_edges: Iterable[tuple[int, int]], time: float) -> list[LinkDelta]:
        new = set(new_edges)
        old = self._edges
        deltas = []
        for a, b in sorted(old - new):
            self._adj[a].discard(b)
            self._adj[b].discard(a)
            deltas.append(LinkDelta(time, a, b, "down"))
        for a, b in sorted(new - old):
            self._adj[a].add(b)
            self._adj[b].add(a)
            deltas.append(LinkDelta(time, a, b, "up"))
        self._edges = new
        return deltas


class StaticTopology(_Graph):
    """Fixed graph from an explicit edge list; never emits link changes."""

    def __init__(self, n: int, edges: Sequence[Sequence[int]]):
        super().__init__(n)
        norm = set()
        for e in edges:
            a, b = int(e[0]), int(e[1])
            self._check(a)
            self._check(b)
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            norm.add((min(a, b), max(a, b)))
        self._set_edges(norm, 0.0)
        self.mobile = False

    def mobility_tick(self, dt: float, rng=None) -> list[LinkDelta]:
        if not dt > 0:
            raise ValueError("dt must be positive")
        return []


class MobileTopology(_Graph):
    """Random-waypoint nodes in a rectangle, linked when within radio range.

    Every node starts with a pause of ``pause_time`` at its initial
    position; with ``pause_time = inf`` the network never moves.
    """

    def __init__(self, n: int, arena: Arena, pause_time: float, v_min: float,
                 v_max: float, rng, positions: Optional[Sequence[Sequence[float]]] = None):
        super().__init__(n)
        if not 0 < v_min <= v_max:
            raise ValueError(f"need 0 < v_min <= v_max, got {v_min!r}, {v_max!r}")
        if not pause_time >= 0:
            raise ValueError(f"pause_time must be >= 0, got {pause_time!r}")
        self.arena = arena
        self.pause_time = float(pause_time)
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.mobile = math.isfinite(self.pause_time)
        self.time = 0.0
        self.nodes: list[MobilityState] = []
        for i in range(n):
            if positions is not None:
                x, y = float(positions[i][0]), float(positions[i][1])
                if not (0 <= x <= arena.width and 0 <= y <= arena.height):
                    raise ValueError(f"node {i} placed outside the arena at ({x}, {y})")
            else:
                x = rng.uniform(0.0, arena.width)
                y = rng.uniform(0.0, arena.height)
            self.nodes.append(MobilityState(i, x, y, x, y, self.v_min, self.pause_time))
        self._xs = [m.x for m in self.nodes]
        self._ys = [m.y for m in self.nodes]
        self._set_edges(_kernels.unit_disk_edges(self._xs, self._ys, arena.radio_range), 0.0)

    def position(self, node_id: int) -> tuple[float, float]:
        self._check(node_id)
        return (self._xs[node_id], self._ys[node_id])

    def _new_leg(self, m: MobilityState, rng) -> None:
        m.wx = rng.uniform(0.0, self.arena.width)
        m.wy = rng.uniform(0.0, self.arena.height)
        m.speed = rng.uniform(self.v_min, self.v_max)

    def mobility_tick(self, dt: float, rng) -> list[LinkDelta]:
        """Advance every node by ``dt`` seconds and return changed links."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        t0 = self.time
        t1 = t0 + dt
        self.time = t1
        if not self.mobile:
            return []
        xs, ys = self._xs, self._ys
        pause = self.pause_time
        for m in self.nodes:
            start = t0
            if m.paused_until > t0:
                if m.paused_until >= t1:
                    continue
                start = m.paused_until
            if m.x == m.wx and m.y == m.wy:
                self._new_leg(m, rng)
            budget = t1 - start
            dx = m.wx - m.x
            dy = m.wy - m.y
            dist = math.hypot(dx, dy)
            step = m.speed * budget
            if step >= dist:
                m.x, m.y = m.wx, m.wy
                m.paused_until = start + (dist / m.speed) + pause
            else:
                f = step / dist
                m.x += dx * f
                m.y += dy * f
            xs[m.node_id] = m.x
            ys[m.node_id] = m.y
        return self._set_edges(_kernels.unit_disk_edges(xs, ys, self.arena.radio_range), t1)
