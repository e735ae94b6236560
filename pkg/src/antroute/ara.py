"""ARA / EARA route discovery and stochastic data forwarding over a MANET.

Each node owns a pheromone table.  A source without a route buffers its
packets and sends a forward ant (FANT), flooded or, in forward mode,
unicast along existing pheromone.  The destination answers every FANT
(up to ``bant_cap`` per discovery) with a backward ant (BANT) that
retraces the path and sets the initial pheromone: ``1/hops`` for ARA,
``2/(hops + t)`` for EARA.  Data then follows the pheromone
stochastically and reinforces the links it uses.

Radio model: every node has one FIFO transmitter of fixed bandwidth;
a broadcast occupies it once and reaches every neighbor in range.
Link changes are detected at the mobility tick; packets queued or in
flight over a link that went down are cancelled on the spot.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Optional, TextIO

from .kernel import Simulator
from .metrics import DeliveryLog, MetricsRecord, finalize
from .pheromone import (NoRoute, PheromoneTable, best_neighbor, evaporate, init_classic,
                        init_gamma, next_hop_distribution, reinforce, sample_next_hop)
from .scenario import Scenario, resolved_link
from .topology import Arena, MobileTopology, StaticTopology

COUNTER_NAMES = (
    "fants_sent", "fants_forwarded", "fants_unicast", "fants_flood_copies", "fants_discarded",
    "bants_sent", "bants_created", "bants_dropped", "bant_cap_hits", "ants_lost",
    "discoveries", "retries", "data_hops",
)


class DataPacket:
    __slots__ = ("pid", "flow", "source", "destination", "bits", "created_at", "hops", "trace")

    def __init__(self, pid, flow, source, destination, bits, created_at):
        if bits <= 0:
            raise ValueError("payload_bits must be positive")
        self.pid = pid
        self.flow = flow
        self.source = source
        self.destination = destination
        self.bits = bits
        self.created_at = created_at
        self.hops = 0
        self.trace = [source]


class Fant:
    __slots__ = ("source", "destination", "seq", "mode", "visited", "launched_at", "ttl")

    def __init__(self, source, destination, seq, mode, visited, launched_at, ttl):
        self.source = source
        self.destination = destination
        self.seq = seq
        self.mode = mode
        self.visited = visited  # tuple, starts at source, ends at the sender
        self.launched_at = launched_at
        self.ttl = ttl

    @property
    def hop_count(self) -> int:
        return len(self.visited) - 1

    def __repr__(self):
        return (f"fant src={self.source} dst={self.destination} seq={self.seq} mode={self.mode} "
                f"visited={','.join(map(str, self.visited))} ttl={self.ttl} "
                f"launched={self.launched_at!r}")


class Bant:
    __slots__ = ("source", "destination", "seq", "reverse_path", "trip_time")

    def __init__(self, source, destination, seq, reverse_path, trip_time):
        self.source = source
        self.destination = destination
        self.seq = seq
        self.reverse_path = reverse_path  # destination ... source
        self.trip_time = trip_time

    @property
    def hops(self) -> int:
        return len(self.reverse_path) - 1

    def __repr__(self):
        return (f"bant src={self.source} dst={self.destination} seq={self.seq} "
                f"path={','.join(map(str, self.reverse_path))} trip={self.trip_time!r}")


class Discovery:
    __slots__ = ("destination", "buffer", "active", "retries", "token", "seq")

    def __init__(self, destination):
        self.destination = destination
        self.buffer: deque = deque()
        self.active = False
        self.retries = 0
        self.token = 0
        self.seq = -1


class AraNode:
    __slots__ = ("id", "table", "seen", "next_seq", "discoveries", "bant_counts", "busy_until")

    def __init__(self, node_id, tau_prune):
        self.id = node_id
        self.table = PheromoneTable(node_id, tau_prune)
        self.seen: set = set()
        self.next_seq = 0
        self.discoveries: dict[int, Discovery] = {}
        self.bant_counts: dict = {}
        self.busy_until = 0.0


class _Hop:
    """One reception in progress: ``item`` travelling ``sender -> receiver``."""

    __slots__ = ("sender", "receiver", "kind", "item", "alive")

    def __init__(self, sender, receiver, kind, item):
        self.sender = sender
        self.receiver = receiver
        self.kind = kind  # "data" | "fant" | "bant"
        self.item = item
        self.alive = True


def build_flows(sc: Scenario, sim: Simulator) -> list:
    """Explicit flows plus random pairs drawn from the ``traffic`` stream."""
    flows = []
    for f in sc.traffic.flows:
        flows.append((f.source, f.destination, f.rate, f.packet_bits, f.start,
                      sc.horizon if f.stop is None else f.stop, f.arrival))
    rf = sc.traffic.random_flows
    if rf is not None and rf.count > 0:
        rng = sim.rng("traffic")
        n = sc.node_count
        pairs = set((f[0], f[1]) for f in flows)
        max_pairs = n * (n - 1)
        for _ in range(rf.count):
            if len(pairs) >= max_pairs:
                break
            while True:
                s = rng.randrange(n)
                d = rng.randrange(n - 1)
                if d >= s:
                    d += 1
                if (s, d) not in pairs:
                    break
            pairs.add((s, d))
            start = rng.uniform(rf.start_min, rf.start_max)
            flows.append((s, d, rf.rate, rf.packet_bits, start,
                          sc.horizon if rf.stop is None else rf.stop, rf.arrival))
    return flows


class ManetSimulation:
    """One ARA or EARA run over a mobile (or statically wired) network."""

    def __init__(self, scenario: Scenario, seed: int, trace: Optional[TextIO] = None):
        scenario.validate()
        self.sc = sc = scenario
        self.seed = seed
        self.sim = sim = Simulator(seed, trace)
        self.tracing = trace is not None
        n = sc.node_count
        if sc.edges is not None:
            self.topo = StaticTopology(n, sc.edges)
        else:
            arena = Arena(sc.arena.width, sc.arena.height, sc.arena.radio_range)
            self.topo = MobileTopology(n, arena, sc.mobility.pause_time, sc.mobility.v_min,
                                       sc.mobility.v_max, sim.rng("mobility"), sc.positions)
        self.nodes = [AraNode(i, sc.aco.tau_prune) for i in range(n)]
        self.gamma = sc.protocol == "eara"
        self.mode = sc.fant_mode
        self.k = sc.aco.k
        self.delta_tau = sc.aco.delta_tau
        dd = sc.aco.data_delta_tau
        self.data_delta_tau = sc.aco.delta_tau if dd is None else dd
        self.link = resolved_link(sc)
        self.route_rng = sim.rng("routing")
        self.mobility_rng = sim.rng("mobility")
        self.log = DeliveryLog()
        self.counters = dict.fromkeys(COUNTER_NAMES, 0)
        self.pending: dict[tuple[int, int], dict[int, _Hop]] = {}
        self._hop_ids = 0
        self._pids = 0
        self.delivered_paths: list[tuple[int, tuple]] = []
        self.snapshots: list[dict] = []
        self.bant_log: list[tuple] = []
        self.flows = build_flows(sc, sim)
        self._schedule_background()

    # --- setup -----------------------------------------------------------

    def _schedule_background(self):
        sc, sim = self.sc, self.sim
        if self.topo.mobile:
            sim.at(sc.mobility.tick, "MobilityTick", self._mobility_tick)
        sim.at(sc.aco.evaporation_interval, "EvaporationTick", self._evaporation_tick)
        if sc.stats_interval > 0:
            sim.at(sc.stats_interval, "StatsSnapshot", self._snapshot)
        for i, (s, d, rate, bits, start, stop, arrival) in enumerate(self.flows):
            if start < stop:
                sim.at(start, "SessionStart", self._session_start, i, node=s,
                       detail=f"flow={i} src={s} dst={d}" if self.tracing else None)

    def _session_start(self, flow):
        s, d, rate, bits, start, stop, arrival = self.flows[flow]
        self._app_packet(flow, self.sim.rng(f"traffic.flow{flow}"))

    def _app_packet(self, flow, rng):
        s, d, rate, bits, start, stop, arrival = self.flows[flow]
        now = self.sim.now()
        pkt = DataPacket(self._pids, flow, s, d, bits, now)
        self._pids += 1
        self.log.record_send(pkt)
        self.on_data_from_app(s, pkt)
        gap = rng.expovariate(rate) if arrival == "poisson" else 1.0 / rate
        nxt = now + gap
        if nxt < stop and nxt <= self.sc.horizon:
            self.sim.at(nxt, "AppPacket", self._app_packet, flow, rng, node=s,
                        detail=f"flow={flow}" if self.tracing else None)

    # --- periodic machinery ---------------------------------------------

    def _mobility_tick(self):
        dt = self.sc.mobility.tick
        for delta in self.topo.mobility_tick(dt, self.mobility_rng):
            if delta.change == "down":
                self.handle_link_failure(delta.node_a, delta.node_b)
                self.handle_link_failure(delta.node_b, delta.node_a)
        self.sim.after(dt, "MobilityTick", self._mobility_tick)

    def _evaporation_tick(self):
        lam = self.sc.aco.lam
        for node in self.nodes:
            evaporate(node.table, lam)
        self.sim.after(self.sc.aco.evaporation_interval, "EvaporationTick", self._evaporation_tick)

    def _snapshot(self):
        snap = {"time": self.sim.now(), "sent": len(self.log.sent),
                "delivered": len(self.log.deliveries), **self.counters}
        self.snapshots.append(snap)
        self.sim.after(self.sc.stats_interval, "StatsSnapshot", self._snapshot)

    # --- radio -----------------------------------------------------------

    def _transmit(self, sender: int, receivers, kind: str, item, bits: int):
        """Queue one transmission at ``sender`` reaching every node in ``receivers``."""
        sim = self.sim
        node = self.nodes[sender]
        link = self.link
        start = max(sim.now() + link.processing_s, node.busy_until)
        end = start + bits / link.bandwidth_bps
        node.busy_until = end
        arrive = end + link.propagation_s
        ev_kind = "PacketHop" if kind == "data" else "AntHop"
        for r in receivers:
            hop = _Hop(sender, r, kind, item)
            hid = self._hop_ids
            self._hop_ids += 1
            key = (sender, r)
            bucket = self.pending.get(key)
            if bucket is None:
                bucket = self.pending[key] = {}
            bucket[hid] = hop
            detail = None
            if self.tracing:
                what = f"pkt={item.pid}" if kind == "data" else repr(item)
                detail = f"{kind} from={sender} to={r} {what}"
            sim.at(arrive, ev_kind, self._arrive, key, hid, node=r, detail=detail)

    def _arrive(self, key, hid):
        bucket = self.pending.get(key)
        hop = None if bucket is None else bucket.pop(hid, None)
        if hop is None or not hop.alive:
            return
        if hop.kind == "data":
            pkt = hop.item
            if self.data_delta_tau > 0:
                reinforce(self.nodes[hop.sender].table, pkt.destination, hop.receiver,
                          self.data_delta_tau)
            pkt.trace.append(hop.receiver)
            if hop.receiver == pkt.destination:
                self.log.record_delivery(pkt, self.sim.now())
                self.delivered_paths.append((pkt.pid, tuple(pkt.trace)))
            else:
                self.forward_data(hop.receiver, pkt)
        elif hop.kind == "fant":
            self.handle_fant(hop.receiver, hop.item)
        else:
            self.handle_bant(hop.receiver, hop.item)

    # --- data path -------------------------------------------------------

    def on_data_from_app(self, node: int, pkt: DataPacket) -> None:
        if node != pkt.source:
            raise ValueError("on_data_from_app must run at the packet's source")
        self._route_at_source(pkt)

    def _route_at_source(self, pkt: DataPacket) -> None:
        s = pkt.source
        try:
            dist = next_hop_distribution(self.nodes[s].table, pkt.destination,
                                         self.topo.neighbors(s), self.k)
        except NoRoute:
            self._buffer(pkt)
            return
        self._send_data(s, pkt, sample_next_hop(dist, self.route_rng))

    def _buffer(self, pkt: DataPacket) -> None:
        node = self.nodes[pkt.source]
        disc = node.discoveries.get(pkt.destination)
        if disc is None:
            disc = node.discoveries[pkt.destination] = Discovery(pkt.destination)
        if len(disc.buffer) >= self.sc.ara.buffer_cap:
            self.log.record_drop(pkt, "buffer_overflow", self.sim.now())
            return
        disc.buffer.append(pkt)
        if not disc.active:
            self.start_discovery(pkt.source, pkt.destination)

    def _send_data(self, node: int, pkt: DataPacket, nxt: int) -> None:
        pkt.hops += 1
        self.counters["data_hops"] += 1
        self._transmit(node, (nxt,), "data", pkt, pkt.bits)

    def forward_data(self, node: int, pkt: DataPacket, failure: str = "no_route") -> None:
        if node == pkt.destination:
            raise ValueError("forward_data called at the destination")
        if pkt.hops >= self.sc.ara.max_data_hops:
            self.log.record_drop(pkt, "loop", self.sim.now())
            return
        try:
            dist = next_hop_distribution(self.nodes[node].table, pkt.destination,
                                         self.topo.neighbors(node), self.k)
        except NoRoute:
            self.log.record_drop(pkt, failure, self.sim.now())
            return
        self._send_data(node, pkt, sample_next_hop(dist, self.route_rng))

    # --- discovery -------------------------------------------------------

    def start_discovery(self, node: int, destination: int) -> None:
        n = self.nodes[node]
        disc = n.discoveries.get(destination)
        if disc is None:
            disc = n.discoveries[destination] = Discovery(destination)
        if not disc.active:
            disc.active = True
            disc.retries = 0
            self.counters["discoveries"] += 1
        disc.token += 1
        seq = n.next_seq
        n.next_seq += 1
        disc.seq = seq
        n.seen.add((node, seq))
        fant = Fant(node, destination, seq, self.mode, (node,), self.sim.now(), self.sc.ara.ttl)
        if self._propagate_fant(node, fant):
            self.counters["fants_sent"] += 1
        self.sim.after(self.sc.ara.buffer_timeout, "BufferTimeout", self._buffer_timeout,
                       node, destination, disc.token, node=node,
                       detail=f"dst={destination} seq={seq}" if self.tracing else None)

    def _buffer_timeout(self, node: int, destination: int, token: int) -> None:
        disc = self.nodes[node].discoveries[destination]
        if not disc.active or disc.token != token:
            return
        if not disc.buffer:
            disc.active = False
            return
        if disc.retries < self.sc.ara.max_retries:
            disc.retries += 1
            self.counters["retries"] += 1
            self.start_discovery(node, destination)
            return
        now = self.sim.now()
        while disc.buffer:
            self.log.record_drop(disc.buffer.popleft(), "buffer_timeout", now)
        disc.active = False

    def _propagate_fant(self, node: int, fant: Fant) -> bool:
        """Send ``fant`` on from ``node``; returns False when nobody can receive it."""
        live = self.topo.neighbors(node)
        if not live:
            return False
        visited = fant.visited
        if fant.mode == "forward":
            best = best_neighbor(self.nodes[node].table, fant.destination, live)
            if best is not None:
                self.counters["fants_unicast"] += 1
                self.log.record_ant(self.link.ant_bits)
                self._transmit(node, (best,), "fant", fant, self.link.ant_bits)
                return True
        came_from = visited[-2] if len(visited) >= 2 else None
        receivers = sorted(nb for nb in live if nb != came_from)
        if not receivers:
            return False
        self.counters["fants_flood_copies"] += len(receivers)
        self.log.record_ant(self.link.ant_bits, len(receivers))
        self._transmit(node, receivers, "fant", fant, self.link.ant_bits)
        return True

    def handle_fant(self, node: int, fant: Fant) -> None:
        n = self.nodes[node]
        if node == fant.destination:
            key = (fant.source, fant.seq)
            count = n.bant_counts.get(key, 0)
            if count >= self.sc.ara.bant_cap:
                self.counters["bant_cap_hits"] += 1
                return
            n.bant_counts[key] = count + 1
            path = fant.visited + (node,)
            bant = Bant(fant.source, fant.destination, fant.seq, path[::-1],
                        self.sim.now() - fant.launched_at)
            self.counters["bants_created"] += 1
            self._send_bant(node, bant, 1)
            return
        key = (fant.source, fant.seq)
        if node in fant.visited or fant.ttl <= 0 or key in n.seen:
            self.counters["fants_discarded"] += 1
            return
        n.seen.add(key)
        fwd = Fant(fant.source, fant.destination, fant.seq, fant.mode,
                   fant.visited + (node,), fant.launched_at, fant.ttl - 1)
        if self._propagate_fant(node, fwd):
            self.counters["fants_forwarded"] += 1

    def _send_bant(self, node: int, bant: Bant, next_index: int) -> None:
        nxt = bant.reverse_path[next_index]
        if not self.topo.is_link(node, nxt):
            self.counters["bants_dropped"] += 1
            return
        self.counters["bants_sent"] += 1
        self.log.record_ant(self.link.ant_bits)
        self._transmit(node, (nxt,), "bant", (bant, next_index), self.link.ant_bits)

    def handle_bant(self, node: int, item) -> None:
        bant, i = item
        path = bant.reverse_path
        prev = path[i - 1]
        table = self.nodes[node].table
        dest = bant.destination
        if table.has(dest, prev):
            reinforce(table, dest, prev, self.delta_tau)
        elif self.gamma:
            table.set(dest, prev, init_gamma(i, bant.trip_time * self.sc.aco.time_scale))
        else:
            table.set(dest, prev, init_classic(i))
        self.bant_log.append((self.sim.now(), node, dest, prev, i, bant.trip_time,
                              table.get(dest, prev)))
        if i == len(path) - 1:
            self._discovery_complete(node, dest)
        else:
            self._send_bant(node, bant, i + 1)

    def _discovery_complete(self, node: int, destination: int) -> None:
        disc = self.nodes[node].discoveries.get(destination)
        if disc is None or not disc.active:
            return
        disc.active = False
        disc.token += 1
        waiting = list(disc.buffer)
        disc.buffer.clear()
        for pkt in waiting:
            self._route_at_source(pkt)

    # --- failures --------------------------------------------------------

    def handle_link_failure(self, node: int, dead: int) -> None:
        self.nodes[node].table.remove_neighbor(dead)
        bucket = self.pending.pop((node, dead), None)
        if not bucket:
            return
        for hid in sorted(bucket):
            hop = bucket[hid]
            hop.alive = False
            if hop.kind == "data":
                pkt = hop.item
                pkt.hops -= 1
                if node == pkt.source and pkt.hops == 0:
                    self._route_at_source(pkt)
                else:
                    self.forward_data(node, pkt, failure="link_failure")
            else:
                self.counters["ants_lost"] += 1

    # --- run ---------------------------------------------------------------

    def in_flight(self) -> int:
        buffered = sum(len(d.buffer) for n in self.nodes for d in n.discoveries.values())
        moving = sum(1 for bucket in self.pending.values() for h in bucket.values()
                     if h.alive and h.kind == "data")
        return buffered + moving

    def run(self) -> MetricsRecord:
        sc = self.sc
        self.sim.run_until(sc.horizon)
        rec = finalize(self.log, sc.warmup, sc.horizon, in_flight=self.in_flight(),
                       horizon=sc.horizon, scenario=sc.name, protocol=sc.protocol,
                       fant_mode=sc.fant_mode, pause_time=sc.mobility.pause_time, seed=self.seed)
        rec.extra = dict(self.counters)
        return rec

    def dump_tables(self) -> str:
        return "".join(n.table.dump() for n in self.nodes)
