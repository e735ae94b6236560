"""Run single scenarios and parameter sweeps; write CSV reports and charts.

Every cell of a sweep is an isolated run seeded only by ``(scenario,
seed)``.  Cells sharing a seed draw mobility and traffic from identical
named streams, so protocol and FANT-mode comparisons use common random
numbers.  Results are merged in canonical order (group key, then seed)
regardless of the number of worker processes.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence, TextIO

from .metrics import AGG_METRICS, GROUP_KEY, RUN_COLUMNS, AggregateRow, MetricsRecord, aggregate
from .scenario import Scenario, SweepSpec

CHART_METRICS = (
    ("pdr", "Packet delivery ratio"),
    ("throughput_bps", "Throughput (bit/s)"),
    ("mean_delay_s", "Mean end-to-end delay (s)"),
    ("mean_jitter_s", "Mean jitter (s)"),
)


class SweepCellError(RuntimeError):
    """A sweep cell raised; ``cell`` identifies it."""

    def __init__(self, cell: dict, cause: BaseException):
        self.cell = cell
        self.cause = cause
        ident = ", ".join(f"{k}={v}" for k, v in cell.items())
        super().__init__(f"sweep cell failed ({ident}): {type(cause).__name__}: {cause}")


def make_simulation(scenario: Scenario, seed: int, trace: Optional[TextIO] = None):
    if scenario.mode == "antnet":
        from .antnet import AntNetSimulation
        return AntNetSimulation(scenario, seed, trace)
    from .ara import ManetSimulation
    return ManetSimulation(scenario, seed, trace)


def run_scenario(scenario: Scenario, seed: int, trace: Optional[TextIO] = None) -> MetricsRecord:
    """Validate ``scenario`` and run it once with root seed ``seed``."""
    scenario.validate()
    return make_simulation(scenario, seed, trace).run()


def _cell_id(sc: Scenario, seed: int) -> dict:
    return {"protocol": sc.protocol, "fant_mode": sc.fant_mode,
            "pause_time": sc.mobility.pause_time, "seed": seed}


def _run_cell(args) -> MetricsRecord:
    sc, seed = args
    try:
        return run_scenario(sc, seed)
    except Exception as exc:
        raise SweepCellError(_cell_id(sc, seed), exc) from exc


def _canonical(rec: MetricsRecord):
    return tuple(getattr(rec, k) for k in GROUP_KEY) + (rec.seed,)


def run_sweep(sweep: SweepSpec, out_dir: Optional[str] = None,
              jobs: Optional[int] = None) -> tuple[list[MetricsRecord], list[AggregateRow]]:
    """Execute every cell; optionally write the report to ``out_dir``."""
    sweep.validate()
    jobs = sweep.jobs if jobs is None else jobs
    if not (isinstance(jobs, int) and jobs >= 1):
        raise ValueError(f"jobs must be a positive integer, got {jobs!r}")
    cells = sweep.cells()
    if jobs == 1 or len(cells) == 1:
        records = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells))
    records.sort(key=_canonical)
    rows = aggregate(records)
    if out_dir is not None:
        emit_report(records, out_dir)
    return records, rows


# --- report ----------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_runs_csv(records: Sequence[MetricsRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for rec in records:
            row = rec.row()
            w.writerow([_cell(row[c]) for c in RUN_COLUMNS])


def write_aggregate_csv(rows: Sequence[AggregateRow], path: str) -> None:
    cols = list(GROUP_KEY) + ["runs"]
    for m in AGG_METRICS:
        cols += [f"{m}_mean", f"{m}_std", f"{m}_ci95", f"{m}_n"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            d = r.row()
            w.writerow([_cell(d[c]) for c in cols])


def chart_series(rows: Sequence[AggregateRow], metric: str) -> dict:
    """``{(protocol, fant_mode): [(pause_time, mean, ci95), ...]}`` sorted by pause time."""
    series: dict = {}
    for r in rows:
        key = dict(zip(GROUP_KEY, r.key))
        s = r.stats.get(metric)
        pts = series.setdefault((key["protocol"], key["fant_mode"]), [])
        if s is not None and math.isfinite(key["pause_time"]):
            pts.append((key["pause_time"], s[0], s[2]))
    for pts in series.values():
        pts.sort()
    return series


def write_chart(rows: Sequence[AggregateRow], metric: str, label: str, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "antroute", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for (proto, fmode), pts in sorted(chart_series(rows, metric).items()):
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            err = [p[2] for p in pts]
            ax.errorbar(xs, ys, yerr=err, marker="o", capsize=3, label=f"{proto.upper()} ({fmode})")
        ax.set_xlabel("Pause time (s)")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_report(records: Sequence[MetricsRecord], out_dir: str) -> list[str]:
    """Write runs.csv, aggregate.csv and one SVG chart per metric; return the paths."""
    records = sorted(records, key=_canonical)
    if not records:
        raise ValueError("emit_report() needs at least one record")
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory {out_dir!r} is not writable")
    rows = aggregate(records)
    paths = [os.path.join(out_dir, "runs.csv"), os.path.join(out_dir, "aggregate.csv")]
    write_runs_csv(records, paths[0])
    write_aggregate_csv(rows, paths[1])
    for metric, label in CHART_METRICS:
        p = os.path.join(out_dir, f"{metric}.svg")
        write_chart(rows, metric, label, p)
        paths.append(p)
    return paths
