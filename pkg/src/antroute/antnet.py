"""Simplified AntNet / AntNet-FA on a static wired topology.

Every node launches forward ants toward uniformly chosen destinations
at a fixed interval (independent random phase per node).  Regular
forward ants wait in the same FIFO queues as data; flying ants use the
high-priority queues, as backward ants always do.  The backward ant
retraces the cycle-free forward path and reinforces, at each node, the
entry toward the ant's destination over the forward next hop by
``weight / T_rem``, where ``T_rem`` is the remaining trip delay: the
delay the forward ant actually measured (regular) or the sum of local
per-link delay estimates (flying).

This is a reduced model: no AntNet travel-time statistics, confidence
windows or squash functions.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Optional, TextIO

from .ara import DataPacket, build_flows
from .kernel import Simulator
from .metrics import DeliveryLog, MetricsRecord, finalize
from .pheromone import (NoRoute, PheromoneTable, evaporate, next_hop_distribution, reinforce,
                        sample_next_hop)
from .scenario import Scenario, resolved_link
from .topology import StaticTopology

DATA_BITS_DEFAULT = 4096


class ForwardAnt:
    __slots__ = ("aid", "source", "destination", "mode", "visited", "launched_at", "hops")

    def __init__(self, aid, source, destination, mode, launched_at):
        self.aid = aid
        self.source = source
        self.destination = destination
        self.mode = mode
        self.visited = [(source, launched_at)]
        self.launched_at = launched_at
        self.hops = 0

    def node_ids(self) -> list[int]:
        return [n for n, _ in self.visited]

    def arrive(self, node: int, time: float) -> None:
        """Append ``node``; if already visited, cut the loop back to it first."""
        for i, (n, _) in enumerate(self.visited):
            if n == node:
                del self.visited[i:]
                break
        self.visited.append((node, time))


class BackwardAnt:
    __slots__ = ("aid", "source", "destination", "path", "costs", "forward_trip")

    def __init__(self, aid, source, destination, path, costs, forward_trip):
        self.aid = aid
        self.source = source
        self.destination = destination
        self.path = path    # destination ... source
        self.costs = costs  # costs[i]: delay of forward hop path[i+1] -> path[i]
        self.forward_trip = forward_trip

    def remaining(self, index: int) -> float:
        """Forward-trip delay from ``path[index]`` to the destination."""
        return math.fsum(self.costs[:index])


class LinkDelayEstimator:
    """Exponential moving average of per-link queueing + transmission delay."""

    def __init__(self, alpha: float, fallback: float):
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        self.alpha = alpha
        self.fallback = fallback
        self._est: dict[tuple[int, int], float] = {}

    def sample(self, link: tuple[int, int], delay: float) -> None:
        old = self._est.get(link)
        self._est[link] = delay if old is None else old + self.alpha * (delay - old)

    def estimate(self, link: tuple[int, int]) -> float:
        return self._est.get(link, self.fallback)


class LinkQueue:
    """One outgoing link: FIFO data queue, priority queue, single server."""

    __slots__ = ("src", "dst", "data", "prio", "busy", "served_prio", "served_data")

    def __init__(self, src, dst):
        self.src = src
        self.dst = dst
        self.data: deque = deque()
        self.prio: deque = deque()
        self.busy = False
        self.served_prio = 0
        self.served_data = 0


def route_data_distribution(table: PheromoneTable, destination: int, neighbors, k: float,
                            best_fraction: float) -> list[tuple[int, float]]:
    """Eq.-(3.3)-style distribution kept to neighbors with tau >= best_fraction * max tau."""
    row = table.row(destination)
    live = [nb for nb in neighbors if row.get(nb, 0.0) > 0.0]
    if not live:
        raise NoRoute(destination)
    top = max(row[nb] for nb in live)
    keep = {nb for nb in live if row[nb] >= best_fraction * top}
    return next_hop_distribution(table, destination, keep, k)


class AntNetSimulation:
    """One run of the AntNet mode with ``ant_mode`` regular or flying."""

    def __init__(self, scenario: Scenario, seed: int, trace: Optional[TextIO] = None):
        scenario.validate()
        if scenario.edges is None:
            raise ValueError("antnet mode needs an explicit edge list")
        self.sc = sc = scenario
        self.seed = seed
        self.sim = sim = Simulator(seed, trace)
        self.tracing = trace is not None
        self.topo = StaticTopology(sc.node_count, sc.edges)
        cfg = sc.antnet
        self.mode = cfg.ant_mode
        link = resolved_link(sc)
        self.bw = link.bandwidth_bps
        self.prop = link.propagation_s
        self.ant_bits = link.ant_bits
        self.k = sc.aco.k
        self.max_ant_hops = cfg.max_ant_hops or 2 * sc.node_count
        self.route_rng = sim.rng("routing")
        self.tables = [PheromoneTable(i, sc.aco.tau_prune) for i in range(sc.node_count)]
        for i, table in enumerate(self.tables):
            for d in range(sc.node_count):
                if d != i:
                    for nb in sorted(self.topo.neighbors(i)):
                        table.set(d, nb, cfg.tau_init)
        self.flows = build_flows(sc, sim)
        data_bits = self.flows[0][3] if self.flows else DATA_BITS_DEFAULT
        self.estimator = LinkDelayEstimator(cfg.alpha, data_bits / self.bw)
        self.queues = {}
        for a, b in self.topo.edges():
            self.queues[(a, b)] = LinkQueue(a, b)
            self.queues[(b, a)] = LinkQueue(b, a)
        self.log = DeliveryLog()
        self._pids = 0
        self._aids = 0
        self.forward_trips: list[tuple[int, int, int, float]] = []  # (aid, src, dst, trip)
        self.reinforcements: list[tuple[int, int, int, float]] = []  # (node, dest, nb, amount)
        self.counters = {"ants_launched": 0, "ants_arrived": 0, "ants_completed": 0,
                         "ants_killed": 0, "bants_dropped": 0}
        self._schedule_background()

    # --- setup -----------------------------------------------------------

    def _schedule_background(self):
        sc, sim = self.sc, self.sim
        n = sc.node_count
        interval = sc.antnet.launch_interval
        if n > 1:
            for node in range(n):
                rng = sim.rng(f"ants.{node}")
                phase = rng.uniform(0.0, interval)
                if phase < sc.horizon:
                    sim.at(phase, "AntLaunchTick", self._launch, node, rng, node=node)
        sim.at(sc.aco.evaporation_interval, "EvaporationTick", self._evaporation_tick)
        for i, (s, d, rate, bits, start, stop, arrival) in enumerate(self.flows):
            if start < stop:
                sim.at(start, "SessionStart", self._app_packet, i,
                       sim.rng(f"traffic.flow{i}"), node=s)

    def _evaporation_tick(self):
        for table in self.tables:
            evaporate(table, self.sc.aco.lam)
        self.sim.after(self.sc.aco.evaporation_interval, "EvaporationTick", self._evaporation_tick)

    # --- queues ----------------------------------------------------------

    def _enqueue(self, src: int, dst: int, kind: str, item, bits: int, priority: bool):
        q = self.queues[(src, dst)]
        entry = (kind, item, bits, self.sim.now())
        (q.prio if priority else q.data).append(entry)
        if not q.busy:
            self._serve(q)

    def _serve(self, q: LinkQueue):
        if q.prio:
            entry = q.prio.popleft()
            q.served_prio += 1
        elif q.data:
            entry = q.data.popleft()
            q.served_data += 1
        else:
            q.busy = False
            return
        q.busy = True
        self.sim.after(entry[2] / self.bw, "LinkService", self._depart, q, entry, node=q.src)

    def _depart(self, q: LinkQueue, entry):
        kind, item, bits, t_enq = entry
        now = self.sim.now()
        self.estimator.sample((q.src, q.dst), now - t_enq)
        ev_kind = "PacketHop" if kind == "data" else "AntHop"
        detail = f"{kind} from={q.src} to={q.dst}" if self.tracing else None
        self.sim.at(now + self.prop, ev_kind, self._arrive, q.dst, kind, item, node=q.dst,
                    detail=detail)
        self._serve(q)

    def _arrive(self, node: int, kind: str, item):
        if kind == "data":
            item.trace.append(node)
            if node == item.destination:
                self.log.record_delivery(item, self.sim.now())
            else:
                self.route_data_stochastic(node, item)
        elif kind == "fant":
            item.arrive(node, self.sim.now())
            if node == item.destination:
                self._at_destination(item)
            else:
                self.forward_ant_step(node, item)
        else:
            bant, index = item
            self.backward_ant_update(node, bant, index)

    # --- ants --------------------------------------------------------------

    def _launch(self, node: int, rng):
        n = self.sc.node_count
        dest = rng.randrange(n - 1)
        if dest >= node:
            dest += 1
        ant = ForwardAnt(self._aids, node, dest, self.mode, self.sim.now())
        self._aids += 1
        self.counters["ants_launched"] += 1
        self.forward_ant_step(node, ant)
        nxt = self.sim.now() + self.sc.antnet.launch_interval
        if nxt < self.sc.horizon:
            self.sim.at(nxt, "AntLaunchTick", self._launch, node, rng, node=node)

    def forward_ant_step(self, node: int, ant: ForwardAnt) -> None:
        if ant.hops >= self.max_ant_hops:
            self.counters["ants_killed"] += 1
            return
        nbs = self.topo.neighbors(node)
        if not nbs:
            self.counters["ants_killed"] += 1
            return
        rng = self.sim.rng(f"ants.{node}")
        seen = set(ant.node_ids())
        fresh = [nb for nb in sorted(nbs) if nb not in seen]
        if fresh:
            try:
                dist = next_hop_distribution(self.tables[node], ant.destination, fresh, self.k)
                nxt = sample_next_hop(dist, rng)
            except NoRoute:
                nxt = fresh[rng.randrange(len(fresh))]
        else:
            pool = sorted(nbs)
            nxt = pool[rng.randrange(len(pool))]
        ant.hops += 1
        self.log.record_ant(self.ant_bits)
        self._enqueue(node, nxt, "fant", ant, self.ant_bits, priority=(self.mode == "flying"))

    def _at_destination(self, ant: ForwardAnt):
        trip = self.sim.now() - ant.launched_at
        self.counters["ants_arrived"] += 1
        self.forward_trips.append((ant.aid, ant.source, ant.destination, trip))
        fwd = ant.visited
        if self.mode == "regular":
            costs_fwd = [fwd[i + 1][1] - fwd[i][1] for i in range(len(fwd) - 1)]
        else:
            costs_fwd = [self.estimator.estimate((fwd[i][0], fwd[i + 1][0])) + self.prop
                         for i in range(len(fwd) - 1)]
        path = [n for n, _ in reversed(fwd)]
        bant = BackwardAnt(ant.aid, ant.source, ant.destination, path, costs_fwd[::-1], trip)
        self._send_backward(bant, 0)

    def _send_backward(self, bant: BackwardAnt, index: int):
        here = bant.path[index]
        nxt = bant.path[index + 1]
        if not self.topo.is_link(here, nxt):
            self.counters["bants_dropped"] += 1
            return
        self.log.record_ant(self.ant_bits)
        self._enqueue(here, nxt, "bant", (bant, index + 1), self.ant_bits, priority=True)

    def backward_ant_update(self, node: int, bant: BackwardAnt, index: int) -> None:
        t_rem = bant.remaining(index)
        amount = self.sc.antnet.weight / t_rem
        via = bant.path[index - 1]
        reinforce(self.tables[node], bant.destination, via, amount)
        self.reinforcements.append((node, bant.destination, via, amount))
        if index == len(bant.path) - 1:
            self.counters["ants_completed"] += 1
        else:
            self._send_backward(bant, index)

    # --- data ------------------------------------------------------------

    def _app_packet(self, flow, rng):
        s, d, rate, bits, start, stop, arrival = self.flows[flow]
        now = self.sim.now()
        pkt = DataPacket(self._pids, flow, s, d, bits, now)
        self._pids += 1
        self.log.record_send(pkt)
        self.route_data_stochastic(s, pkt)
        gap = rng.expovariate(rate) if arrival == "poisson" else 1.0 / rate
        nxt = now + gap
        if nxt < stop and nxt <= self.sc.horizon:
            self.sim.at(nxt, "AppPacket", self._app_packet, flow, rng, node=s)

    def route_data_stochastic(self, node: int, pkt: DataPacket) -> None:
        if pkt.hops >= self.sc.ara.max_data_hops:
            self.log.record_drop(pkt, "loop", self.sim.now())
            return
        try:
            dist = route_data_distribution(self.tables[node], pkt.destination,
                                           self.topo.neighbors(node), self.k,
                                           self.sc.antnet.best_fraction)
        except NoRoute:
            self.log.record_drop(pkt, "no_route", self.sim.now())
            return
        pkt.hops += 1
        self._enqueue(node, sample_next_hop(dist, self.route_rng), "data", pkt, pkt.bits,
                      priority=False)

    # --- run ---------------------------------------------------------------

    def in_flight(self) -> int:
        queued = sum(1 for q in self.queues.values() for e in q.data if e[0] == "data")
        # packets in service or propagating are not in any queue
        return queued + self._moving_data()

    def _moving_data(self) -> int:
        count = 0
        for _, _, ev in self.sim._queue:
            if ev.kind == "LinkService" and ev.args[1][0] == "data":
                count += 1
            elif ev.kind == "PacketHop":
                count += 1
        return count

    def mean_forward_trip(self) -> Optional[float]:
        if not self.forward_trips:
            return None
        return math.fsum(t for *_, t in self.forward_trips) / len(self.forward_trips)

    def run(self) -> MetricsRecord:
        sc = self.sc
        self.sim.run_until(sc.horizon)
        rec = finalize(self.log, sc.warmup, sc.horizon, in_flight=self.in_flight(),
                       horizon=sc.horizon, scenario=sc.name, protocol="antnet",
                       fant_mode=self.mode, pause_time=math.inf, seed=self.seed)
        rec.extra = dict(self.counters)
        rec.extra["mean_forward_trip_s"] = self.mean_forward_trip()
        return rec

    def dump_tables(self) -> str:
        return "".join(t.dump() for t in self.tables)
