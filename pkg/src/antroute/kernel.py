"""Discrete-event engine: clock, time-ordered queue, seeded random streams."""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from typing import Any, Callable, Optional, TextIO


class SchedulingError(RuntimeError):
    """An event was scheduled before the current clock (a programming bug)."""


class Event:
    """A timestamped callback.

    ``kind`` is one of the payload names (``PacketHop``, ``AntHop``,
    ``MobilityTick``, ...) and together with ``node`` and ``detail`` makes
    up the trace record.  ``seq`` is assigned by the simulator.
    """

    __slots__ = ("fire_at", "seq", "kind", "node", "detail", "fn", "args")

    def __init__(self, fire_at: float, kind: str, fn: Callable[..., Any],
                 args: tuple = (), node: Optional[int] = None, detail: Any = None):
        self.fire_at = fire_at
        self.seq = -1
        self.kind = kind
        self.node = node
        self.detail = detail
        self.fn = fn
        self.args = args

    def __repr__(self):
        return f"Event({self.fire_at!r}, seq={self.seq}, kind={self.kind!r}, node={self.node})"


def derive_seed(root_seed: int, label: str) -> int:
    """Map ``(root_seed, label)`` to a 64-bit sub-seed, stable across platforms."""
    digest = hashlib.sha256(f"{int(root_seed)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RngStream(random.Random):
    """A named random stream derived from the run's root seed.

    Streams with different labels are independent, so e.g. traffic
    randomness never perturbs mobility.
    """

    def __new__(cls, seed: int, label: str):
        return super().__new__(cls, derive_seed(seed, label))

    def __init__(self, seed: int, label: str):
        self.root_seed = int(seed)
        self.label = label
        super().__init__(derive_seed(seed, label))


class Simulator:
    """Single-threaded event loop ordered by ``(fire_at, seq)``.

    >>> sim = Simulator(seed=1)
    >>> hits = []
    >>> _ = sim.at(2.0, "Demo", hits.append, "b")
    >>> _ = sim.at(1.0, "Demo", hits.append, "a")
    >>> sim.run_until(5.0), hits, sim.now()
    (2, ['a', 'b'], 5.0)
    """

    def __init__(self, seed: int = 0, trace: Optional[TextIO] = None):
        self.seed = int(seed)
        self._now = 0.0
        self._seq = 0
        self._queue: list = []
        self._streams: dict[str, RngStream] = {}
        self.trace = trace
        self.dispatched = 0

    def now(self) -> float:
        return self._now

    def rng(self, label: str) -> RngStream:
        stream = self._streams.get(label)
        if stream is None:
            stream = self._streams[label] = RngStream(self.seed, label)
        return stream

    def schedule(self, event: Event) -> Event:
        t = event.fire_at
        if not t >= self._now or math.isinf(t):
            raise SchedulingError(
                f"cannot schedule {event.kind} at t={t!r} (now={self._now!r})")
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (t, event.seq, event))
        return event

    def at(self, time: float, kind: str, fn: Callable[..., Any], *args,
           node: Optional[int] = None, detail: Any = None) -> Event:
        return self.schedule(Event(time, kind, fn, args, node, detail))

    def after(self, delay: float, kind: str, fn: Callable[..., Any], *args,
              node: Optional[int] = None, detail: Any = None) -> Event:
        return self.schedule(Event(self._now + delay, kind, fn, args, node, detail))

    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, end: float) -> int:
        """Dispatch every event with ``fire_at <= end``; leave the clock at ``end``."""
        if not end >= self._now:
            raise SchedulingError(f"run_until({end!r}) is before now={self._now!r}")
        queue = self._queue
        pop = heapq.heappop
        trace = self.trace
        count = 0
        while queue and queue[0][0] <= end:
            t, seq, ev = pop(queue)
            self._now = t
            if trace is not None:
                trace.write(_trace_line(ev))
            ev.fn(*ev.args)
            count += 1
        self._now = float(end)
        self.dispatched += count
        return count


def _trace_line(ev: Event) -> str:
    node = "-" if ev.node is None else ev.node
    detail = ev.detail
    if detail is None:
        detail = ""
    elif callable(detail):
        detail = detail()
    return f"{ev.fire_at!r}\t{ev.seq}\t{ev.kind}\t{node}\t{detail}\n"
