"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call each backend module directly. The end-to-end simulation
timing runs in a subprocess per backend, selected with ``CFMM_PURE_PYTHON``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cfmm import _kernels

SIM_SNIPPET = """
import time
from cfmm import BACKEND
from cfmm.scenario import load_scenario
from cfmm.simulation import run_simulation
cfg = load_scenario({path!r}).to_config(steps=5000)
t = time.perf_counter()
run_simulation(cfg)
print(BACKEND, time.perf_counter() - t)
"""


def bench_penalized(mod, n):
    args = (1000.0, 900.0, 0.997, 1.2, _kernels.BUY_ALPHA, 1e-6, 1e-6, 0.0, 1.0, 200, 1e-10, 1e-12)
    return min(timeit.repeat(lambda: mod.penalized_alpha(*args), number=n, repeat=5)) / n


def bench_mean_dual(mod, n):
    rng = np.random.default_rng(0)
    k = 5
    r = rng.uniform(10, 1000, k)
    w = rng.dirichlet(np.ones(k))
    m = np.exp(rng.normal(0, 1, k))
    g = np.full(k, 0.997)
    z = np.zeros(k)
    log_k = float(w @ np.log(r))
    out = np.empty(k)
    return min(timeit.repeat(lambda: mod.mean_dual_solve(r, w, g, m, z, z, log_k, 400, out),
                             number=n, repeat=5)) / n


def bench_simulation(backend):
    here = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(here, "..", "scenarios", "no_drift.yaml")
    env = dict(os.environ, CFMM_PURE_PYTHON="1" if backend == "python" else "0")
    out = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(path=path)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=2000, help="calls per kernel timing")
    args = p.parse_args()
    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'benchmark':28s}" + "".join(f"{name:>14s}" for name in backends) + "   speedup")
    for label, fn, n in (("penalized_alpha [us/call]", bench_penalized, args.repeat),
                         ("mean_dual_solve [us/call]", bench_mean_dual, max(args.repeat // 10, 1))):
        times = {name: fn(mod, n) * 1e6 for name, mod in backends.items()}
        ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:28s}" + "".join(f"{t:14.2f}" for t in times.values()) + f"   {ratio:6.1f}x")
    sims = {}
    for name in backends:
        actual, seconds = bench_simulation(name)
        sims[actual] = seconds
    ratio = sims["python"] / sims["cython"] if "cython" in sims else float("nan")
    print(f"{'simulate 5000 steps [s]':28s}" + "".join(f"{sims[n]:14.3f}" for n in backends if n in sims)
          + f"   {ratio:6.1f}x")


if __name__ == "__main__":
    main()
