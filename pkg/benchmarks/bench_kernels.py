"""Time one full benchmark run on the numba and numpy backends.

Usage: python3 benchmarks/bench_kernels.py [--sizes 50,100,200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from compforce import _kernels
from compforce.config import benchmark_config
from compforce.harness import run_experiment


def best_of(cfg, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        rec = run_experiment(cfg, backend)
        times.append(time.perf_counter() - t0)
    return min(times), rec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--method", default="composite-rls")
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if "numba" in backends:
        # first call compiles (or loads the on-disk cache)
        t0 = time.perf_counter()
        run_experiment(benchmark_config(n_neurons=10, train_steps=20, predict_steps=20), "numba")
        print(f"numba warm-up: {time.perf_counter() - t0:.2f}s")

    print(f"{'N':>5} {'backend':>8} {'seconds':>9} {'speedup':>8} {'predict_mse':>12}")
    for n in (int(s) for s in args.sizes.split(",")):
        cfg = benchmark_config(n_neurons=n, method=args.method, seed=1)
        base = None
        for b in backends:
            t, rec = best_of(cfg, b, args.repeat)
            base = base or t
            print(f"{n:>5} {b:>8} {t:>9.3f} {base / t:>7.1f}x {rec.predict_mse:>12.4g}")
        # chaotic amplification means the two backends only agree early on
        if len(backends) == 2:
            short = cfg.replace(train_steps=50, predict_steps=0)
            gap = np.abs(run_experiment(short, "numpy").z - run_experiment(short, "numba").z).max()
            print(f"{n:>5} first-50-step output gap {gap:.1e}")


if __name__ == "__main__":
    main()
