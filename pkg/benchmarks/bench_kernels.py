"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--skip-run]

Part 1 times each kernel call directly on both backends.  Part 2 times a
full default-scenario run in a subprocess, once with the compiled
backend and once with ANTROUTE_PURE_PYTHON=1, and checks the two runs
produce the same CSV row.
"""

import argparse
import os
import random
import subprocess
import sys
import timeit

from antroute._kernels import _pykernels, compiled_module

RUN_SNIPPET = """
import sys, time
from antroute import BACKEND
from antroute.runner import run_scenario
from antroute.scenario import default_scenario
t0 = time.perf_counter()
rec = run_scenario(default_scenario(), 42)
dt = time.perf_counter() - t0
print(BACKEND, dt, repr(sorted(rec.row().items())), sep="\\t")
"""


def kernel_cases(rng):
    n = 25
    xs = [rng.uniform(0, 500) for _ in range(n)]
    ys = [rng.uniform(0, 500) for _ in range(n)]
    taus = [rng.uniform(0.01, 2.0) for _ in range(6)]
    probs = [t / sum(taus) for t in taus]
    return {
        "unit_disk_edges(25 nodes)": ("unit_disk_edges", (xs, ys, 100.0)),
        "power_normalize(6, k=2)": ("power_normalize", (taus, 2.0)),
        "pick_index(6)": ("pick_index", (probs, 0.73)),
    }


def bench_kernels(repeat):
    compiled = compiled_module()
    rng = random.Random(7)
    cases = kernel_cases(rng)
    print(f"{'kernel':<28}{'python us':>12}{'compiled us':>14}{'speedup':>10}")
    for label, (fname, args) in cases.items():
        py_fn = getattr(_pykernels, fname)
        number = 20000 if fname != "unit_disk_edges" else 2000
        t_py = min(timeit.repeat(lambda: py_fn(*args), number=number, repeat=repeat)) / number
        if compiled is None:
            print(f"{label:<28}{t_py * 1e6:>12.3f}{'n/a':>14}{'':>10}")
            continue
        c_fn = getattr(compiled, fname)
        assert c_fn(*args) == py_fn(*args), f"{fname}: backends disagree"
        t_c = min(timeit.repeat(lambda: c_fn(*args), number=number, repeat=repeat)) / number
        print(f"{label:<28}{t_py * 1e6:>12.3f}{t_c * 1e6:>14.3f}{t_py / t_c:>9.1f}x")


def bench_run():
    results = {}
    for pure in (False, True):
        env = dict(os.environ)
        if pure:
            env["ANTROUTE_PURE_PYTHON"] = "1"
        else:
            env.pop("ANTROUTE_PURE_PYTHON", None)
        out = subprocess.run([sys.executable, "-c", RUN_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.strip()
        backend, secs, row = out.split("\t")
        results[backend] = (float(secs), row)
    print()
    for backend, (secs, _) in results.items():
        print(f"default scenario, seed 42, backend={backend:<8} {secs:.3f} s")
    rows = {row for _, row in results.values()}
    print("identical results across backends:", len(rows) == 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-run", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.skip_run:
        bench_run()


if __name__ == "__main__":
    main()
