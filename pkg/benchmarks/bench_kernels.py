"""Benchmark the compiled kernels against the interpreter fallback.

Run: python benchmarks/bench_kernels.py [--fallback-fraction F]

The fallback executes the same code without numba (TEMPOMAP_NUMBA=0), so it
is timed in a subprocess on a scaled-down workload (default 2% of the
compiled workload) and normalized per operation.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def build_inputs():
    from tempomap.graphs import lattice
    from tempomap.rng import stream

    net = lattice(11, 11)
    gen = stream(1234, "bench")
    return net, gen


def bench_dijkstra(count):
    from tempomap import kernels
    net, gen = build_inputs()
    rows = np.where(gen.random((count, net.n_slots)) < 0.2, np.inf,
                    gen.exponential(size=(count, net.n_slots)))
    out = np.empty((count, net.n))
    t0 = time.perf_counter()
    kernels.dijkstra_batch(net.indptr, net.indices, rows, np.int64(60),
                           np.float64(np.inf), out)
    return time.perf_counter() - t0


def bench_discrete(count):
    from tempomap import kernels
    from tempomap.simulate import transmission_table
    net, gen = build_inputs()
    steps = 5
    p = transmission_table(net, 0.4)
    u_inf = gen.random((count, steps, net.n))
    u_rec = gen.random((count, steps, net.n))
    t_inf = np.empty((count, net.n))
    t_rec = np.empty((count, net.n))
    t0 = time.perf_counter()
    kernels.discrete_sir_batch(net.indptr, net.indices, p, np.float64(0.2),
                               np.int64(60), u_inf, u_rec, t_inf, t_rec)
    return time.perf_counter() - t0


def bench_gillespie(count):
    from tempomap import kernels
    net, gen = build_inputs()
    u = gen.random((count, 4 * net.n + 4))
    t_inf = np.empty((count, net.n))
    t_rec = np.empty((count, net.n))
    t0 = time.perf_counter()
    kernels.gillespie_batch(net.indptr, net.indices, np.float64(0.5),
                            np.float64(0.3), np.int64(60), u,
                            np.float64(np.inf), t_inf, t_rec)
    return time.perf_counter() - t0


def bench_percolation(count):
    from tempomap import kernels
    net, gen = build_inputs()
    member = np.empty(net.n, dtype=np.bool_)
    queue = np.empty(net.n, dtype=np.int64)
    keeps = gen.random((count, net.n_edges)) < 0.7
    t0 = time.perf_counter()
    for k in range(count):
        kernels.component_mask(net.indptr, net.indices, net.csr_edge_id,
                               keeps[k], np.int64(60), member, queue)
    return time.perf_counter() - t0


BENCHES = {
    "dijkstra_batch": (bench_dijkstra, 20_000),
    "discrete_sir_batch": (bench_discrete, 20_000),
    "gillespie_batch": (bench_gillespie, 20_000),
    "component_mask": (bench_percolation, 20_000),
}


def run_all(fraction):
    results = {}
    for name, (fn, base_count) in BENCHES.items():
        count = max(1, int(base_count * fraction))
        fn(max(1, count // 10))  # warm up (JIT compile on the compiled path)
        elapsed = fn(count)
        results[name] = elapsed / count * 1e6  # microseconds per op
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--fallback-fraction", type=float, default=0.02,
                        help="fraction of the workload for the interpreter path")
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.inner:
        print(json.dumps(run_all(args.fallback_fraction)))
        return

    from tempomap.accel import NUMBA_ENABLED
    if not NUMBA_ENABLED:
        print("TEMPOMAP_NUMBA=0 is set; nothing to compare against.")
        return
    compiled = run_all(1.0)
    env = dict(os.environ, TEMPOMAP_NUMBA="0")
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--inner",
         "--fallback-fraction", str(args.fallback_fraction)],
        capture_output=True, text=True, env=env, check=True)
    fallback = json.loads(proc.stdout.strip().splitlines()[-1])

    print(f"{'kernel':<22}{'numba us/op':>14}{'python us/op':>15}{'speedup':>10}")
    for name in BENCHES:
        ratio = fallback[name] / compiled[name]
        print(f"{name:<22}{compiled[name]:>14.2f}{fallback[name]:>15.2f}"
              f"{ratio:>9.0f}x")


if __name__ == "__main__":
    main()
