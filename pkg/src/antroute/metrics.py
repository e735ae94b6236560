"""Delivery accounting, per-run metrics and cross-run aggregation.

Jitter is the mean, over flows, of the mean absolute difference between
the end-to-end delays of consecutive deliveries of the same flow (in
arrival order).  Flows with fewer than two deliveries contribute nothing.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional, Sequence

DROP_CATEGORIES = ("buffer_overflow", "buffer_timeout", "no_route", "loop", "link_failure")

RUN_COLUMNS = (
    "scenario", "protocol", "fant_mode", "pause_time", "seed",
    "pdr", "throughput_bps", "mean_delay_s", "mean_jitter_s", "overhead_ratio",
) + tuple(f"drops_{c}" for c in DROP_CATEGORIES) + (
    "sent", "delivered", "in_flight", "ant_packets", "ant_bits",
    "pdr_run", "throughput_run_bps", "mean_delay_run_s", "mean_jitter_run_s",
)

AGG_METRICS = ("pdr", "throughput_bps", "mean_delay_s", "mean_jitter_s", "overhead_ratio", "ant_packets")
GROUP_KEY = ("protocol", "pause_time", "fant_mode")


class AccountingError(RuntimeError):
    """A packet was reported twice, or with an unknown drop category."""


class DeliveryLog:
    """Per-run record of every data packet's fate."""

    def __init__(self):
        # pid -> (flow, created_at, bits)
        self.sent: dict[int, tuple[int, float, int]] = {}
        # (pid, flow, created_at, delivered_at, bits), in delivery order
        self.deliveries: list[tuple[int, int, float, float, int]] = []
        self.drops: list[tuple[int, str, float]] = []
        self.drop_counts = {c: 0 for c in DROP_CATEGORIES}
        self._closed: set[int] = set()
        self.ant_packets = 0
        self.ant_bits = 0

    def record_send(self, packet) -> None:
        pid = packet.pid
        if pid in self.sent:
            raise AccountingError(f"packet {pid} reported sent twice")
        self.sent[pid] = (packet.flow, packet.created_at, packet.bits)

    def record_delivery(self, packet, time: float) -> None:
        pid = packet.pid
        if pid not in self.sent:
            raise AccountingError(f"packet {pid} delivered but never sent")
        if pid in self._closed:
            raise AccountingError(f"packet {pid} already delivered or dropped")
        if time < packet.created_at:
            raise AccountingError(f"packet {pid} delivered before creation")
        self._closed.add(pid)
        self.deliveries.append((pid, packet.flow, packet.created_at, time, packet.bits))

    def record_drop(self, packet, category: str, time: float) -> None:
        if category not in self.drop_counts:
            raise AccountingError(f"unknown drop category {category!r}")
        pid = packet.pid
        if pid not in self.sent:
            raise AccountingError(f"packet {pid} dropped but never sent")
        if pid in self._closed:
            raise AccountingError(f"packet {pid} already delivered or dropped")
        self._closed.add(pid)
        self.drops.append((pid, category, time))
        self.drop_counts[category] += 1

    def record_ant(self, bits: int, copies: int = 1) -> None:
        self.ant_packets += copies
        self.ant_bits += bits * copies

    @property
    def open_count(self) -> int:
        return len(self.sent) - len(self._closed)


def _mean(values: Sequence[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def jitter(flow_delays: dict[int, list[float]]) -> Optional[float]:
    per_flow = []
    for flow in sorted(flow_delays):
        d = flow_delays[flow]
        if len(d) >= 2:
            per_flow.append(math.fsum(abs(d[i] - d[i - 1]) for i in range(1, len(d))) / (len(d) - 1))
    return _mean(per_flow)


@dataclass
class MetricsRecord:
    scenario: str = ""
    protocol: str = ""
    fant_mode: str = ""
    pause_time: float = 0.0
    seed: int = 0
    pdr: Optional[float] = None
    throughput_bps: float = 0.0
    mean_delay_s: Optional[float] = None
    mean_jitter_s: Optional[float] = None
    overhead_ratio: Optional[float] = None
    drops: dict = field(default_factory=lambda: {c: 0 for c in DROP_CATEGORIES})
    sent: int = 0
    delivered: int = 0
    in_flight: int = 0
    ant_packets: int = 0
    ant_bits: int = 0
    pdr_run: Optional[float] = None
    throughput_run_bps: float = 0.0
    mean_delay_run_s: Optional[float] = None
    mean_jitter_run_s: Optional[float] = None
    window: tuple = (0.0, 0.0)
    empty: bool = False
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {}
        for col in RUN_COLUMNS:
            if col.startswith("drops_"):
                out[col] = self.drops[col[6:]]
            else:
                out[col] = getattr(self, col)
        return out

    @property
    def drops_total(self) -> int:
        return sum(self.drops.values())

    def conserved(self) -> bool:
        return self.sent == self.delivered + self.drops_total + self.in_flight


def finalize(log: DeliveryLog, window_start: float, window_end: float, *,
             in_flight: Optional[int] = None, horizon: Optional[float] = None,
             **meta) -> MetricsRecord:
    """Reduce a delivery log to a :class:`MetricsRecord`.

    Windowed values consider packets created in ``[window_start,
    window_end)``; throughput counts bits delivered inside the window.
    The ``*_run`` fields use the whole run ``[0, horizon]``.
    ``in_flight`` is the simulator's own count of live packets; it is kept
    separate from the log so that conservation is a real check.
    """
    if not window_end > window_start:
        raise ValueError("window_end must exceed window_start")
    if horizon is None:
        horizon = window_end
    rec = MetricsRecord(**meta)
    rec.window = (window_start, window_end)
    rec.sent = len(log.sent)
    rec.delivered = len(log.deliveries)
    rec.drops = dict(log.drop_counts)
    rec.in_flight = log.open_count if in_flight is None else in_flight
    rec.ant_packets = log.ant_packets
    rec.ant_bits = log.ant_bits
    if rec.sent == 0:
        rec.empty = True
        return rec

    win_sent = sum(1 for _, c, _ in log.sent.values() if window_start <= c < window_end)
    win_delays = []
    run_delays = []
    win_flows: dict[int, list[float]] = {}
    run_flows: dict[int, list[float]] = {}
    win_bits = 0
    run_bits = 0
    for _, flow, created, delivered, bits in log.deliveries:
        delay = delivered - created
        run_delays.append(delay)
        run_flows.setdefault(flow, []).append(delay)
        run_bits += bits
        if window_start <= created < window_end:
            win_delays.append(delay)
            win_flows.setdefault(flow, []).append(delay)
        if window_start <= delivered <= window_end:
            win_bits += bits

    rec.pdr = (len(win_delays) / win_sent) if win_sent else None
    rec.throughput_bps = win_bits / (window_end - window_start)
    rec.mean_delay_s = _mean(win_delays)
    rec.mean_jitter_s = jitter(win_flows)
    rec.overhead_ratio = (log.ant_bits / run_bits) if run_bits else None
    rec.pdr_run = rec.delivered / rec.sent
    rec.throughput_run_bps = run_bits / horizon if horizon > 0 else 0.0
    rec.mean_delay_run_s = _mean(run_delays)
    rec.mean_jitter_run_s = jitter(run_flows)
    return rec


@dataclass
class AggregateRow:
    key: tuple
    runs: int
    stats: dict  # metric -> (mean, stddev, ci95_half_width, n) or None

    def row(self) -> dict:
        out = dict(zip(GROUP_KEY, self.key))
        out["runs"] = self.runs
        for m in AGG_METRICS:
            s = self.stats.get(m)
            out[f"{m}_mean"] = None if s is None else s[0]
            out[f"{m}_std"] = None if s is None else s[1]
            out[f"{m}_ci95"] = None if s is None else s[2]
            out[f"{m}_n"] = 0 if s is None else s[3]
        return out


def summarize(values: Sequence[float]) -> tuple[float, float, float, int]:
    """Mean, sample standard deviation and Student-t 95% half-width."""
    n = len(values)
    if n == 0:
        raise ValueError("no values to summarize")
    vals = sorted(values)
    mean = math.fsum(vals) / n
    if n == 1:
        return (mean, 0.0, 0.0, 1)
    sd = statistics.stdev(vals)
    from scipy.stats import t as student_t
    half = float(student_t.ppf(0.975, n - 1)) * sd / math.sqrt(n)
    return (mean, sd, half, n)


def aggregate(records: Iterable[MetricsRecord], group_key: Sequence[str] = GROUP_KEY) -> list[AggregateRow]:
    records = list(records)
    if not records:
        raise ValueError("aggregate() needs at least one record")
    groups: dict[tuple, list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, k) for k in group_key), []).append(r)
    rows = []
    for key in sorted(groups):
        recs = groups[key]
        stats = {}
        for m in AGG_METRICS:
            vals = [getattr(r, m) for r in recs if getattr(r, m) is not None]
            stats[m] = summarize(vals) if vals else None
        rows.append(AggregateRow(key, len(recs), stats))
    return rows


def metrics_fields() -> list[str]:
    return [f.name for f in fields(MetricsRecord)]
