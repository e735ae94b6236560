"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py`` for just the summary lines.
Settings are stated in each check; all use the shipped scenario files.
"""

import io
import json
import math
import random
import re
import statistics
import sys
import time
from pathlib import Path

import networkx as nx
import pytest

from antroute.antnet import AntNetSimulation
from antroute.ara import ManetSimulation
from antroute.pheromone import (PheromoneTable, evaporate, init_classic, init_gamma,
                                next_hop_distribution, reinforce)
from antroute.runner import run_scenario, write_runs_csv
from antroute.scenario import load_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
GOLDENS = Path(__file__).resolve().parent / "goldens"


def _line(cid, title, ok, detail, secs):
    return f"[{'PASS' if ok else 'FAIL'}] C{cid:<2} {title}: {detail} ({secs:.1f} s)"


def _finish(capsys, cid, title, ok, detail, t0):
    line = _line(cid, title, ok, detail, time.perf_counter() - t0)
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok, line


def _rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


# --- 1: equation unit suite -------------------------------------------------

def check_equations(capsys=None):
    t0 = time.perf_counter()
    failures = []

    def expect(name, got, want, tol):
        if _rel(got, want) > tol:
            failures.append(f"{name}: {got!r} != {want!r}")

    t = PheromoneTable(0)
    t.set(9, 1, 1.0)
    reinforce(t, 9, 1, 0.5)
    expect("reinforce 1.0+0.5", t.get(9, 1), 1.5, 1e-12)
    t = PheromoneTable(0)
    reinforce(t, 9, 1, 0.3)
    expect("reinforce absent+0.3", t.get(9, 1), 0.3, 1e-12)
    t = PheromoneTable(0)
    t.set(9, 1, 1.0)
    reinforce(t, 9, 1, 0.2)
    reinforce(t, 9, 1, 0.2)
    expect("reinforce twice 0.2", t.get(9, 1), 1.4, 1e-12)

    t = PheromoneTable(0, 1e-6)
    t.set(9, 1, 1.0)
    evaporate(t, 0.1)
    expect("evaporate 1.0 @0.1", t.get(9, 1), 0.9, 1e-12)
    t = PheromoneTable(0, 0.0)
    t.set(9, 1, 2.5)
    for _ in range(50):
        evaporate(t, 0.02)
    expect("evaporate closed form n=50", t.get(9, 1), 2.5 * 0.98 ** 50, 1e-12)
    t = PheromoneTable(0, 1e-6)
    t.set(9, 1, 1e-7)
    evaporate(t, 0.1)
    if t.has(9, 1):
        failures.append("pruning: 1e-7 entry survived")

    t = PheromoneTable(0)
    for nb, v in ((1, 2.0), (2, 1.0), (3, 1.0)):
        t.set(9, nb, v)
    for k, want in ((1.0, {1: 0.5, 2: 0.25, 3: 0.25}), (2.0, {1: 2 / 3, 2: 1 / 6, 3: 1 / 6})):
        got = dict(next_hop_distribution(t, 9, {1, 2, 3}, k))
        for nb in want:
            expect(f"distribution k={k} nb={nb}", got[nb], want[nb], 1e-9)
    t = PheromoneTable(0)
    t.set(9, 4, 0.7)
    expect("single neighbor", dict(next_hop_distribution(t, 9, {4}, 2.0))[4], 1.0, 1e-9)

    expect("classic hops=1", init_classic(1), 1.0, 1e-12)
    expect("classic hops=4", init_classic(4), 0.25, 1e-12)
    if not all(init_classic(h) > init_classic(h + 1) for h in range(1, 20)):
        failures.append("classic not decreasing")
    expect("gamma 3,1.0", init_gamma(3, 1.0), 0.5, 1e-12)
    expect("gamma 1,1.0", init_gamma(1, 1.0), 1.0, 1e-12)
    if not init_gamma(3, 0.5) > init_gamma(3, 1.0):
        failures.append("gamma not decreasing in t")

    ok = not failures
    detail = "all worked examples reproduced" if ok else "; ".join(failures)
    return _finish(capsys, 1, "equation unit suite", ok, detail, t0)


# --- 2: normalization property ------------------------------------------------

def check_normalization(capsys=None):
    t0 = time.perf_counter()
    rng = random.Random(2)
    worst_sum = 0.0
    worst_scale = 0.0
    for _ in range(10_000):
        size = rng.randint(1, 8)
        taus = [10 ** rng.uniform(-6, 3) for _ in range(size)]
        k = rng.choice([0.5, 1.0, 2.0, 5.0])
        c = 10 ** rng.uniform(-3, 3)
        a, b = PheromoneTable(0, 0.0), PheromoneTable(0, 0.0)
        for nb, v in enumerate(taus):
            a.set(0, nb + 1, v)
            b.set(0, nb + 1, v * c)
        live = set(range(1, size + 1))
        pa = next_hop_distribution(a, 0, live, k)
        pb = next_hop_distribution(b, 0, live, k)
        worst_sum = max(worst_sum, abs(math.fsum(p for _, p in pa) - 1.0))
        worst_scale = max(worst_scale, max(abs(x - y) for (_, x), (_, y) in zip(pa, pb)))
    ok = worst_sum <= 1e-9 and worst_scale <= 1e-9
    detail = f"10000 tables, max |sum-1| = {worst_sum:.2e}, max scaling drift = {worst_scale:.2e}"
    return _finish(capsys, 2, "normalization and scale invariance", ok, detail, t0)


# --- 3: evaporation closed form ---------------------------------------------------

def check_evaporation(capsys=None):
    t0 = time.perf_counter()
    lam, tau0 = 0.02, 1.0
    worst = 0.0
    for n in (1, 10, 1000):
        t = PheromoneTable(0, 0.0)
        t.set(0, 1, tau0)
        for _ in range(n):
            evaporate(t, lam)
        worst = max(worst, _rel(t.get(0, 1), tau0 * (1 - lam) ** n))
    ok = worst <= 1e-9
    return _finish(capsys, 3, "evaporation closed form", ok,
                   f"n in {{1, 10, 1000}}, lambda 0.02, max relative error {worst:.2e}", t0)


# --- 4: determinism --------------------------------------------------------------

def check_determinism(capsys=None, tmp=None):
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "default.yaml")
    blobs = []
    for _ in range(2):
        trace = io.StringIO()
        rec = ManetSimulation(sc, 42, trace).run()
        if tmp is not None:
            path = Path(tmp) / f"runs{len(blobs)}.csv"
            write_runs_csv([rec], str(path))
            row = path.read_bytes()
        else:
            row = repr(rec.row()).encode()
        blobs.append((row, trace.getvalue().encode()))
    (row_a, tr_a), (row_b, tr_b) = blobs
    events = tr_a.count(b"\n")
    ok = row_a == row_b and tr_a == tr_b and events > 0
    detail = (f"seed 42 twice: CSV rows {'identical' if row_a == row_b else 'DIFFER'}, "
              f"traces {'identical' if tr_a == tr_b else 'DIFFER'} ({events} events)")
    return _finish(capsys, 4, "determinism", ok, detail, t0)


# --- 5: conservation ----------------------------------------------------------------

def check_conservation(capsys=None):
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "default.yaml")
    bad = []
    for seed in range(1, 51):
        r = run_scenario(sc, seed)
        if r.sent != r.delivered + r.drops_total + r.in_flight:
            bad.append(seed)
    ok = not bad
    detail = "50 seeds, sent = delivered + drops + in_flight in every run" if ok else f"broken seeds {bad}"
    return _finish(capsys, 5, "conservation", ok, detail, t0)


# --- 6: double bridge ----------------------------------------------------------------

SHORT, LONG = (0, 1, 2), (0, 3, 4, 2)


def check_double_bridge(capsys=None):
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "double_bridge.yaml")
    # independent oracle: enumerate simple paths, cost = hops x per-hop delay
    per_hop = 4096 / 2e6 + 1e-6
    g = nx.Graph([tuple(e) for e in sc.edges])
    costs = {tuple(p): (len(p) - 1) * per_hop for p in nx.all_simple_paths(g, 0, 2)}
    oracle_ok = min(costs, key=costs.get) == SHORT and set(costs) == {SHORT, LONG}

    golden = json.loads((GOLDENS / "double_bridge_pilot.json").read_text())
    start = golden["measure_from_s"]
    wins = 0
    minority = 0
    matches_pilot = True
    for seed in range(1, 21):
        m = ManetSimulation(sc, seed)
        m.run()
        after = [p for pid, p in m.delivered_paths if m.log.sent[pid][1] >= start]
        s = sum(p == SHORT for p in after)
        l = sum(p == LONG for p in after)
        wins += s > l
        minority += l > 0
        matches_pilot &= golden["seeds"][str(seed)] == {"short": s, "long": l, "delivered": len(after)}
    ok = oracle_ok and matches_pilot and wins >= 18 and minority == 20
    detail = (f"short share > long share in {wins}/20 seeds (need >= 18); long share > 0 in "
              f"{minority}/20 (need 20); oracle {'ok' if oracle_ok else 'FAILED'}; "
              f"pilot golden {'reproduced' if matches_pilot else 'CHANGED'}")
    return _finish(capsys, 6, "double-bridge emergence", ok, detail, t0)


# --- 7 and 8: paired orderings ----------------------------------------------------------

def _paired(a, b, seeds):
    ra = [run_scenario(a, s) for s in seeds]
    rb = [run_scenario(b, s) for s in seeds]
    return ra, rb


def _gate(ra, rb, metric, better):
    """Mean ordering plus per-pair win rate >= 60% for ``b`` against ``a``."""
    pairs = [(getattr(x, metric), getattr(y, metric)) for x, y in zip(ra, rb)]
    pairs = [(x, y) for x, y in pairs if x is not None and y is not None]
    ma = statistics.fmean(x for x, _ in pairs)
    mb = statistics.fmean(y for _, y in pairs)
    if better == "higher":
        wins = sum(y > x for x, y in pairs)
        mean_ok = mb >= ma
    else:
        wins = sum(y < x for x, y in pairs)
        mean_ok = mb <= ma
    ok = mean_ok and wins >= math.ceil(0.6 * len(pairs))
    return ok, f"{metric} {ma:.5g} vs {mb:.5g}, wins {wins}/{len(pairs)}"


def check_eara_vs_ara(capsys=None):
    t0 = time.perf_counter()
    base = load_scenario(SCENARIOS / "default.yaml").replace(**{"mobility.pause_time": 0.0})
    ra, rb = _paired(base.replace(protocol="ara"), base.replace(protocol="eara"), range(1, 31))
    results = [_gate(ra, rb, "pdr", "higher"), _gate(ra, rb, "throughput_bps", "higher"),
               _gate(ra, rb, "mean_jitter_s", "lower")]
    delay = _gate(ra, rb, "mean_delay_s", "lower")[1]
    ok = all(r[0] for r in results)
    detail = "ARA vs EARA, pause 0, 30 seeds: " + "; ".join(
        f"{r[1]} [{'ok' if r[0] else 'fail'}]" for r in results) + f"; (ungated) {delay}"
    return _finish(capsys, 7, "EARA vs ARA ordering", ok, detail, t0)


def check_fant_modes(capsys=None):
    t0 = time.perf_counter()
    base = load_scenario(SCENARIOS / "default.yaml")
    mobile = base.replace(**{"mobility.pause_time": 0.0})
    ra, rb = _paired(mobile.replace(fant_mode="flood"), mobile.replace(fant_mode="forward"), range(1, 31))
    pdr_ok, pdr_txt = _gate(ra, rb, "pdr", "higher")
    calm = base.replace(**{"mobility.pause_time": 120.0})
    ra, rb = _paired(calm.replace(fant_mode="forward"), calm.replace(fant_mode="flood"), range(1, 31))
    ovh_ok, ovh_txt = _gate(ra, rb, "ant_packets", "higher")
    ok = pdr_ok and ovh_ok
    detail = (f"pause 0 flood vs forward {pdr_txt} [{'ok' if pdr_ok else 'fail'}]; "
              f"pause 120 forward vs flood {ovh_txt} [{'ok' if ovh_ok else 'fail'}]")
    return _finish(capsys, 8, "FANT mode ordering", ok, detail, t0)


# --- 9: AntNet-FA queue contrast -------------------------------------------------------------

def check_flying_ants(capsys=None):
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "antnet6.yaml")
    offered = sum(f.rate * f.packet_bits for f in sc.traffic.flows if f.source in (0, 1))
    load = offered / sc.link.bandwidth_bps
    wins = 0
    gaps = []
    for seed in range(1, 21):
        trip = {}
        for mode in ("regular", "flying"):
            m = AntNetSimulation(sc.replace(**{"antnet.ant_mode": mode}), seed)
            m.run()
            trip[mode] = m.mean_forward_trip()
        wins += trip["flying"] < trip["regular"]
        gaps.append(trip["regular"] - trip["flying"])
    ok = wins >= 19 and math.isclose(load, 0.7, rel_tol=1e-12)
    detail = (f"bottleneck load {load:.2f}, flying faster in {wins}/20 seeds (need >= 19), "
              f"mean gap {statistics.fmean(gaps) * 1e3:.2f} ms")
    return _finish(capsys, 9, "AntNet-FA queue contrast", ok, detail, t0)


# --- 10: gamma-filter gradient from the trace --------------------------------------------------

BANT_RE = re.compile(r"AntHop\t\d+\tbant from=\d+ to=\d+ \(bant src=(\d+) dst=(\d+) seq=\d+ "
                     r"path=([\d,]+) trip=([^,]+), (\d+)\)")
TABLE_RE = re.compile(r"^(\d+)\t(\d+)\t(\d+)\t(\S+)$")


def replay_gamma_trace(trace_text, table_text):
    """Independent checker: recompute tau from trace fields, compare with the dumped tables."""
    bants = [BANT_RE.search(line) for line in trace_text.splitlines()]
    bants = [b for b in bants if b]
    taus = {}
    for line in table_text.splitlines():
        m = TABLE_RE.match(line)
        if m:
            taus[(int(m[1]), int(m[2]), int(m[3]))] = float(m[4])
    checked = []
    for b in bants:
        dest = int(b[2])
        path = [int(x) for x in b[3].split(",")]
        trip = float(b[4])
        i = int(b[5])
        node, via = path[i], path[i - 1]
        want = 2.0 / (i + trip)
        checked.append((node, taus.get((node, dest, via)), want))
    return bants, checked


def check_gamma_gradient(capsys=None):
    t0 = time.perf_counter()
    sc = load_scenario(SCENARIOS / "line5.yaml")
    trace = io.StringIO()
    m = ManetSimulation(sc, 1, trace)
    m.run()
    bants, checked = replay_gamma_trace(trace.getvalue(), m.dump_tables())
    nodes = sorted(n for n, _, _ in checked)
    exact = all(got == want for _, got, want in checked)
    ok = exact and nodes == [0, 1, 2, 3] and len({b[4] for b in bants}) == 1
    detail = (f"{len(checked)} on-path nodes, tau == 2/(hops_remaining + trip) "
              f"{'exactly' if exact else 'MISMATCH'}: "
              + ", ".join(f"n{n}={got!r}" for n, got, _ in sorted(checked)))
    return _finish(capsys, 10, "gamma-filter gradient", ok, detail, t0)


# --- pytest entry points ---------------------------------------------------------------------

def test_c01_equation_examples(capsys):
    ok, line = check_equations(capsys)
    assert ok, line


def test_c02_normalization(capsys):
    ok, line = check_normalization(capsys)
    assert ok, line


def test_c03_evaporation_closed_form(capsys):
    ok, line = check_evaporation(capsys)
    assert ok, line


def test_c04_determinism(capsys, tmp_path):
    ok, line = check_determinism(capsys, tmp_path)
    assert ok, line


def test_c05_conservation(capsys):
    ok, line = check_conservation(capsys)
    assert ok, line


def test_c06_double_bridge(capsys):
    ok, line = check_double_bridge(capsys)
    assert ok, line


def test_c07_eara_vs_ara(capsys):
    ok, line = check_eara_vs_ara(capsys)
    assert ok, line


def test_c08_fant_modes(capsys):
    ok, line = check_fant_modes(capsys)
    assert ok, line


def test_c09_flying_ants(capsys):
    ok, line = check_flying_ants(capsys)
    assert ok, line


def test_c10_gamma_gradient(capsys):
    ok, line = check_gamma_gradient(capsys)
    assert ok, line


CHECKS = (check_equations, check_normalization, check_evaporation, check_determinism,
          check_conservation, check_double_bridge, check_eara_vs_ara, check_fant_modes,
          check_flying_ants, check_gamma_gradient)

if __name__ == "__main__":
    results = [check() for check in CHECKS]
    passed = sum(ok for ok, _ in results)
    print(f"{passed}/{len(results)} criteria pass")
    sys.exit(0 if passed == len(results) else 1)
