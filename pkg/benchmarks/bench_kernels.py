"""Compare the compiled and numpy potential kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Prints per-call times for the vertex kernel (all 2^N outcomes) and the
per-row kernel, plus a full-solve timing under each backend.
"""

import argparse
import importlib
import time

import numpy as np

from defcast import _kernels_py, kernels


def _timeit(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _inputs(n, K, rows, rng):
    coef = rng.normal(size=(n, K))
    eta = np.geomspace(1e-3, np.exp(-1), K)
    gamma = rng.dirichlet(np.ones(n))
    omegas = rng.random((rows, n))
    return coef, eta, gamma, omegas


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    backends = {"numpy": _kernels_py}
    try:
        backends["cython"] = importlib.import_module("defcast._kernels")
    except ImportError:
        print("compiled extension not built; numpy backend only")
    rng = np.random.default_rng(0)
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':<8}{'N':>4}{'K':>5}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for n in (2, 4, 8, 12):
        for K in (1, 32, 64):
            coef, eta, gamma, omegas = _inputs(n, K, 256, rng)
            ll = omegas @ gamma
            for kname, call in (
                ("vertex", lambda m: m.vertex_logf(coef, eta, gamma)),
                ("rows", lambda m: m.rows_logf(ll, omegas, coef, eta)),
            ):
                times = {b: _timeit(lambda m=m: call(m), args.repeat) for b, m in backends.items()}
                speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
                cells = "".join(f"{times[b] * 1e6:>11.1f} us" for b in backends)
                print(f"{kname:<8}{n:>4}{K:>5}{cells}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
