"""Scenario and sweep definitions, validation, and YAML (de)serialization.

The default MANET scenario (25 nodes, 500 m x 500 m, 100 m range,
1-10 m/s, 8 CBR flows of 4 x 512-byte packets/s, 300 s) is this
package's own desk-scale choice.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Optional

import yaml

SCENARIO_SCHEMA = "antroute-scenario/1"
SWEEP_SCHEMA = "antroute-sweep/1"


class ScenarioError(ValueError):
    """Validation failure; ``problems`` lists every violated field."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))


@dataclass
class ArenaConfig:
    width: float = 500.0
    height: float = 500.0
    radio_range: float = 100.0


@dataclass
class MobilityConfig:
    pause_time: float = 0.0
    v_min: float = 1.0
    v_max: float = 10.0
    tick: float = 0.1


@dataclass
class FlowConfig:
    source: int
    destination: int
    rate: float = 4.0
    packet_bits: int = 4096
    start: float = 0.0
    stop: Optional[float] = None
    arrival: str = "cbr"  # cbr | poisson


@dataclass
class RandomFlowsConfig:
    count: int = 8
    rate: float = 4.0
    packet_bits: int = 4096
    start_min: float = 0.0
    start_max: float = 10.0
    stop: Optional[float] = None
    arrival: str = "cbr"


@dataclass
class TrafficConfig:
    flows: list = field(default_factory=list)
    random_flows: Optional[RandomFlowsConfig] = None


@dataclass
class AcoConfig:
    delta_tau: float = 0.1
    lam: float = 0.02
    k: float = 2.0
    tau_prune: float = 1e-6
    evaporation_interval: float = 1.0
    data_delta_tau: Optional[float] = None  # None -> same as delta_tau
    time_scale: float = 1.0


@dataclass
class AraConfig:
    ttl: int = 16
    max_retries: int = 3
    buffer_cap: int = 64
    buffer_timeout: float = 2.0
    max_data_hops: int = 32
    bant_cap: int = 8


@dataclass
class LinkConfig:
    bandwidth_bps: Optional[float] = None  # None -> per-mode default
    propagation_s: Optional[float] = None
    processing_s: float = 0.0
    ant_bits: int = 512


LINK_DEFAULTS = {
    "manet": {"bandwidth_bps": 2e6, "propagation_s": 1e-6},
    "antnet": {"bandwidth_bps": 1e6, "propagation_s": 1e-3},
}


def resolved_link(sc: "Scenario") -> LinkConfig:
    """The scenario's link settings with per-mode defaults filled in."""
    d = LINK_DEFAULTS.get(sc.mode, LINK_DEFAULTS["manet"])
    return LinkConfig(
        bandwidth_bps=d["bandwidth_bps"] if sc.link.bandwidth_bps is None else sc.link.bandwidth_bps,
        propagation_s=d["propagation_s"] if sc.link.propagation_s is None else sc.link.propagation_s,
        processing_s=sc.link.processing_s,
        ant_bits=sc.link.ant_bits,
    )


@dataclass
class AntNetConfig:
    ant_mode: str = "regular"  # regular | flying
    launch_interval: float = 0.5
    weight: float = 0.1
    alpha: float = 0.3
    best_fraction: float = 0.5
    tau_init: float = 1.0
    max_ant_hops: int = 0  # 0 -> 2 * node_count


@dataclass
class Scenario:
    name: str = "default"
    mode: str = "manet"  # manet | antnet
    node_count: int = 25
    protocol: str = "ara"  # ara | eara
    fant_mode: str = "flood"  # flood | forward
    horizon: float = 300.0
    warmup_fraction: float = 0.1
    arena: ArenaConfig = field(default_factory=ArenaConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    edges: Optional[list] = None
    positions: Optional[list] = None
    traffic: TrafficConfig = field(default_factory=lambda: TrafficConfig(random_flows=RandomFlowsConfig()))
    aco: AcoConfig = field(default_factory=AcoConfig)
    ara: AraConfig = field(default_factory=AraConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    antnet: AntNetConfig = field(default_factory=AntNetConfig)
    stats_interval: float = 0.0

    @property
    def warmup(self) -> float:
        return self.horizon * self.warmup_fraction

    @property
    def static(self) -> bool:
        return self.edges is not None or not math.isfinite(self.mobility.pause_time)

    def replace(self, **changes) -> "Scenario":
        """Deep copy with dotted-path overrides, e.g. ``replace(**{"mobility.pause_time": 30})``."""
        new = copy.deepcopy(self)
        for path, value in changes.items():
            target = new
            parts = path.split(".")
            for p in parts[:-1]:
                target = getattr(target, p)
            if not hasattr(target, parts[-1]):
                raise AttributeError(f"no scenario field {path!r}")
            setattr(target, parts[-1], value)
        return new

    def validate(self) -> None:
        problems = _validate(self)
        if problems:
            raise ScenarioError(problems)

    def to_dict(self) -> dict:
        d = {"schema": SCENARIO_SCHEMA}
        d.update(_plain(asdict(self)))
        return d

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return obj  # yaml writes .inf
    return obj


def _positive(problems, path, v, allow_zero=False, allow_inf=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and not math.isnan(v)
    if ok:
        ok = v >= 0 if allow_zero else v > 0
        if ok and math.isinf(v) and not allow_inf:
            ok = False
    if not ok:
        problems.append(f"{path}: must be {'non-negative' if allow_zero else 'positive'}"
                        f"{'' if allow_inf else ' and finite'}, got {v!r}")


def _int_field(problems, path, v, minimum):
    if not (isinstance(v, int) and not isinstance(v, bool) and v >= minimum):
        problems.append(f"{path}: must be an integer >= {minimum}, got {v!r}")


def _validate(sc: Scenario) -> list[str]:
    p: list[str] = []
    if sc.mode not in ("manet", "antnet"):
        p.append(f"mode: must be 'manet' or 'antnet', got {sc.mode!r}")
    _int_field(p, "node_count", sc.node_count, 1)
    if sc.protocol not in ("ara", "eara"):
        p.append(f"protocol: must be 'ara' or 'eara', got {sc.protocol!r}")
    if sc.fant_mode not in ("flood", "forward"):
        p.append(f"fant_mode: must be 'flood' or 'forward', got {sc.fant_mode!r}")
    _positive(p, "horizon", sc.horizon)
    if not (isinstance(sc.warmup_fraction, (int, float)) and 0 <= sc.warmup_fraction < 1):
        p.append(f"warmup_fraction: must lie in [0, 1), got {sc.warmup_fraction!r}")
    n = sc.node_count if isinstance(sc.node_count, int) else 0

    _positive(p, "arena.width", sc.arena.width)
    _positive(p, "arena.height", sc.arena.height)
    _positive(p, "arena.radio_range", sc.arena.radio_range)
    _positive(p, "mobility.pause_time", sc.mobility.pause_time, allow_zero=True, allow_inf=True)
    _positive(p, "mobility.v_min", sc.mobility.v_min)
    _positive(p, "mobility.v_max", sc.mobility.v_max)
    _positive(p, "mobility.tick", sc.mobility.tick)
    if isinstance(sc.mobility.v_min, (int, float)) and isinstance(sc.mobility.v_max, (int, float)) \
            and sc.mobility.v_min > sc.mobility.v_max:
        p.append(f"mobility.v_min: must not exceed v_max ({sc.mobility.v_min!r} > {sc.mobility.v_max!r})")

    if sc.edges is not None:
        if not isinstance(sc.edges, list):
            p.append("edges: must be a list of [a, b] pairs")
        else:
            for i, e in enumerate(sc.edges):
                if not (isinstance(e, (list, tuple)) and len(e) == 2
                        and all(isinstance(x, int) and 0 <= x < n for x in e) and e[0] != e[1]):
                    p.append(f"edges[{i}]: must be two distinct node ids < node_count, got {e!r}")
    elif sc.mode == "antnet":
        p.append("edges: antnet mode requires an explicit edge list")
    if sc.positions is not None:
        if not (isinstance(sc.positions, list) and len(sc.positions) == n):
            p.append("positions: must list one [x, y] per node")
        else:
            for i, xy in enumerate(sc.positions):
                if not (isinstance(xy, (list, tuple)) and len(xy) == 2
                        and 0 <= xy[0] <= sc.arena.width and 0 <= xy[1] <= sc.arena.height):
                    p.append(f"positions[{i}]: must be [x, y] inside the arena, got {xy!r}")

    if not isinstance(sc.traffic.flows, list):
        p.append("traffic.flows: must be a list")
    else:
        for i, f in enumerate(sc.traffic.flows):
            pre = f"traffic.flows[{i}]"
            for attr in ("source", "destination"):
                v = getattr(f, attr)
                if not (isinstance(v, int) and 0 <= v < n):
                    p.append(f"{pre}.{attr}: must be a node id < node_count, got {v!r}")
            if f.source == f.destination:
                p.append(f"{pre}: source and destination must differ")
            _positive(p, f"{pre}.rate", f.rate)
            _int_field(p, f"{pre}.packet_bits", f.packet_bits, 1)
            _positive(p, f"{pre}.start", f.start, allow_zero=True)
            if f.stop is not None and not (isinstance(f.stop, (int, float)) and f.stop > f.start):
                p.append(f"{pre}.stop: must exceed start, got {f.stop!r}")
            if f.arrival not in ("cbr", "poisson"):
                p.append(f"{pre}.arrival: must be 'cbr' or 'poisson', got {f.arrival!r}")
    rf = sc.traffic.random_flows
    if rf is not None:
        _int_field(p, "traffic.random_flows.count", rf.count, 0)
        _positive(p, "traffic.random_flows.rate", rf.rate)
        _int_field(p, "traffic.random_flows.packet_bits", rf.packet_bits, 1)
        _positive(p, "traffic.random_flows.start_min", rf.start_min, allow_zero=True)
        if not (isinstance(rf.start_max, (int, float)) and rf.start_max >= rf.start_min):
            p.append(f"traffic.random_flows.start_max: must be >= start_min, got {rf.start_max!r}")
        if rf.arrival not in ("cbr", "poisson"):
            p.append(f"traffic.random_flows.arrival: must be 'cbr' or 'poisson', got {rf.arrival!r}")
        if isinstance(rf.count, int) and rf.count > 0 and n < 2:
            p.append("traffic.random_flows.count: needs at least two nodes")

    a = sc.aco
    _positive(p, "aco.delta_tau", a.delta_tau)
    if not (isinstance(a.lam, (int, float)) and 0 < a.lam < 1):
        p.append(f"aco.lam: must lie in (0, 1), got {a.lam!r}")
    _positive(p, "aco.k", a.k)
    _positive(p, "aco.tau_prune", a.tau_prune, allow_zero=True)
    _positive(p, "aco.evaporation_interval", a.evaporation_interval)
    if a.data_delta_tau is not None:
        _positive(p, "aco.data_delta_tau", a.data_delta_tau, allow_zero=True)
    _positive(p, "aco.time_scale", a.time_scale)

    r = sc.ara
    _int_field(p, "ara.ttl", r.ttl, 1)
    _int_field(p, "ara.max_retries", r.max_retries, 0)
    _int_field(p, "ara.buffer_cap", r.buffer_cap, 1)
    _positive(p, "ara.buffer_timeout", r.buffer_timeout)
    _int_field(p, "ara.max_data_hops", r.max_data_hops, 1)
    _int_field(p, "ara.bant_cap", r.bant_cap, 1)

    if sc.link.bandwidth_bps is not None:
        _positive(p, "link.bandwidth_bps", sc.link.bandwidth_bps)
    if sc.link.propagation_s is not None:
        _positive(p, "link.propagation_s", sc.link.propagation_s, allow_zero=True)
    _positive(p, "link.processing_s", sc.link.processing_s, allow_zero=True)
    _int_field(p, "link.ant_bits", sc.link.ant_bits, 1)

    an = sc.antnet
    if an.ant_mode not in ("regular", "flying"):
        p.append(f"antnet.ant_mode: must be 'regular' or 'flying', got {an.ant_mode!r}")
    _positive(p, "antnet.launch_interval", an.launch_interval)
    _positive(p, "antnet.weight", an.weight)
    if not (isinstance(an.alpha, (int, float)) and 0 < an.alpha < 1):
        p.append(f"antnet.alpha: must lie in (0, 1), got {an.alpha!r}")
    if not (isinstance(an.best_fraction, (int, float)) and 0 <= an.best_fraction <= 1):
        p.append(f"antnet.best_fraction: must lie in [0, 1], got {an.best_fraction!r}")
    _positive(p, "antnet.tau_init", an.tau_init)
    _int_field(p, "antnet.max_ant_hops", an.max_ant_hops, 0)
    _positive(p, "stats_interval", sc.stats_interval, allow_zero=True)
    return p


_NESTED = {
    "arena": ArenaConfig, "mobility": MobilityConfig, "aco": AcoConfig,
    "ara": AraConfig, "link": LinkConfig, "antnet": AntNetConfig,
}


def _build(cls, data: Any, path: str, problems: list[str]):
    if not isinstance(data, dict):
        problems.append(f"{path}: must be a mapping")
        return cls()
    known = {f.name for f in fields(cls)}
    for k in data:
        if k not in known:
            problems.append(f"{path}.{k}: unknown field")
    kwargs = {k: v for k, v in data.items() if k in known}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        problems.append(f"{path}: {exc}")
        return None


def scenario_from_dict(data: dict, check_schema: bool = True) -> Scenario:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: scenario must be a mapping"])
    data = dict(data)
    schema = data.pop("schema", None)
    if check_schema and schema != SCENARIO_SCHEMA:
        problems.append(f"schema: expected {SCENARIO_SCHEMA!r}, got {schema!r}")
    known = {f.name for f in fields(Scenario)}
    for k in data:
        if k not in known:
            problems.append(f"{k}: unknown field")
    kwargs = {}
    for k, v in data.items():
        if k not in known:
            continue
        if k in _NESTED:
            kwargs[k] = _build(_NESTED[k], v, k, problems)
        elif k == "traffic":
            kwargs[k] = _traffic_from(v, problems)
        else:
            kwargs[k] = v
    if problems:
        raise ScenarioError(problems)
    sc = Scenario(**kwargs)
    sc.validate()
    return sc


def _traffic_from(v, problems) -> TrafficConfig:
    if not isinstance(v, dict):
        problems.append("traffic: must be a mapping")
        return TrafficConfig()
    for k in v:
        if k not in ("flows", "random_flows"):
            problems.append(f"traffic.{k}: unknown field")
    flows = []
    for i, f in enumerate(v.get("flows") or []):
        built = _build(FlowConfig, f, f"traffic.flows[{i}]", problems)
        if built is not None:
            flows.append(built)
    rf = v.get("random_flows")
    rf = _build(RandomFlowsConfig, rf, "traffic.random_flows", problems) if rf is not None else None
    return TrafficConfig(flows=flows, random_flows=rf)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return scenario_from_dict(data)


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as fh:
        fh.write(sc.dump())


@dataclass
class SweepSpec:
    base: Scenario = field(default_factory=Scenario)
    pause_times: list = field(default_factory=lambda: [0.0, 30.0, 60.0, 120.0])
    protocols: list = field(default_factory=lambda: ["ara", "eara"])
    fant_modes: list = field(default_factory=lambda: ["flood"])
    seeds: list = field(default_factory=lambda: list(range(1, 11)))
    jobs: int = 1

    def cells(self) -> list[tuple[Scenario, int]]:
        """Every (scenario, seed) cell, ordered by group key then seed."""
        out = []
        for proto in self.protocols:
            for pause in self.pause_times:
                for fmode in self.fant_modes:
                    sc = self.base.replace(protocol=proto, fant_mode=fmode,
                                           **{"mobility.pause_time": float(pause)})
                    for seed in self.seeds:
                        out.append((sc, int(seed)))
        return out

    def validate(self) -> None:
        p = [f"base.{m}" for m in _validate(self.base)]
        for name in ("pause_times", "protocols", "fant_modes", "seeds"):
            v = getattr(self, name)
            if not (isinstance(v, list) and v):
                p.append(f"{name}: must be a non-empty list")
        for i, proto in enumerate(self.protocols or []):
            if proto not in ("ara", "eara"):
                p.append(f"protocols[{i}]: must be 'ara' or 'eara', got {proto!r}")
        for i, m in enumerate(self.fant_modes or []):
            if m not in ("flood", "forward"):
                p.append(f"fant_modes[{i}]: must be 'flood' or 'forward', got {m!r}")
        for i, t in enumerate(self.pause_times or []):
            if not (isinstance(t, (int, float)) and t >= 0):
                p.append(f"pause_times[{i}]: must be non-negative, got {t!r}")
        for i, s in enumerate(self.seeds or []):
            if not isinstance(s, int):
                p.append(f"seeds[{i}]: must be an integer, got {s!r}")
        if not (isinstance(self.jobs, int) and self.jobs >= 1):
            p.append(f"jobs: must be an integer >= 1, got {self.jobs!r}")
        if p:
            raise ScenarioError(p)

    def to_dict(self) -> dict:
        base = self.base.to_dict()
        base.pop("schema")
        return {"schema": SWEEP_SCHEMA, "base": base, "pause_times": list(self.pause_times),
                "protocols": list(self.protocols), "fant_modes": list(self.fant_modes),
                "seeds": list(self.seeds), "jobs": self.jobs}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def sweep_from_dict(data: dict, base_dir=None) -> SweepSpec:
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: sweep must be a mapping"])
    data = dict(data)
    problems = []
    schema = data.pop("schema", None)
    if schema != SWEEP_SCHEMA:
        problems.append(f"schema: expected {SWEEP_SCHEMA!r}, got {schema!r}")
    base = data.pop("base", None)
    if isinstance(base, str):
        import os
        path = base if base_dir is None or os.path.isabs(base) else os.path.join(base_dir, base)
        base_sc = load_scenario(path)
    elif isinstance(base, dict):
        try:
            base_sc = scenario_from_dict(base, check_schema=False)
        except ScenarioError as exc:
            problems.extend(f"base.{m}" for m in exc.problems)
            base_sc = Scenario()
    elif base is None:
        base_sc = Scenario()
    else:
        problems.append("base: must be a mapping or a scenario file path")
        base_sc = Scenario()
    known = {f.name for f in fields(SweepSpec)} - {"base"}
    for k in data:
        if k not in known:
            problems.append(f"{k}: unknown field")
    if problems:
        raise ScenarioError(problems)
    spec = SweepSpec(base=base_sc, **{k: v for k, v in data.items() if k in known})
    spec.validate()
    return spec


def load_sweep(path) -> SweepSpec:
    import os
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return sweep_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def default_scenario() -> Scenario:
    return Scenario()


def is_config(obj) -> bool:
    return is_dataclass(obj)
