"""Time the hot kernels compiled (numba) against the interpreted fallback.

The switch between the two paths is the import-time environment variable
GEOGOSSIP_DISABLE_NUMBA, so one process cannot measure both.  The default
invocation therefore re-executes this script twice as a subprocess, once per
mode, and merges the rows into a single table:

    python3 benchmarks/bench_kernels.py

Each workload is timed around its hot section only (state construction is
excluded), after one untimed warmup call so compilation never lands in a
measurement.  The reported figure is the median of --repeat runs.
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np


def _workloads():
    from geogossip import build_graph, connectivity_radius, sample_points
    from geogossip.affine import (norm_square_trajectories, random_alpha,
                                  spike_vector)
    from geogossip.engine import run
    from geogossip.experiment import ExperimentConfig, build_state
    from geogossip.routing import greedy_route

    def affine_updates():
        alpha = random_alpha(64, np.random.default_rng(0))
        x0 = spike_vector(64)
        t0 = time.perf_counter()
        norm_square_trajectories(x0, alpha, 2000, 50, seed=1)
        return time.perf_counter() - t0

    def graph_build():
        pts = sample_points(8000, seed=0)
        radius = connectivity_radius(8000)
        t0 = time.perf_counter()
        build_graph(pts, radius)
        return time.perf_counter() - t0

    def route_pairs():
        pts = sample_points(4096, seed=2)
        graph = build_graph(pts, connectivity_radius(4096))
        rng = np.random.default_rng(3)
        pairs = rng.integers(0, 4096, size=(500, 2))
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        t0 = time.perf_counter()
        for s, d in pairs:
            greedy_route(graph, int(s), int(d))
        return time.perf_counter() - t0

    def engine_ticks(algorithm):
        cfg = ExperimentConfig(algorithm=algorithm, n=1024, seed=0,
                               threshold=64, eps=0.01)
        cfg.validate()
        state = build_state(cfg)
        t0 = time.perf_counter()
        run(state, max_ticks=50_000)
        return time.perf_counter() - t0

    return [
        ("affine_updates", "affine gossip, 100k pair updates",
         affine_updates),
        ("graph_build", "graph build, n=8000", graph_build),
        ("route_pairs", "greedy routing, 500 pairs on n=4096", route_pairs),
        ("hier_ticks", "hierarchical engine, 50k ticks at n=1024",
         lambda: engine_ticks("hier")),
        ("boyd_ticks", "pairwise baseline, 50k ticks at n=1024",
         lambda: engine_ticks("boyd")),
    ]


def run_worker(repeat: int) -> int:
    from geogossip._jit import NUMBA_DISABLED

    print(f"MODE {'numpy' if NUMBA_DISABLED else 'numba'}", flush=True)
    for key, _, fn in _workloads():
        fn()  # warmup; compiles on the numba path
        times = [fn() for _ in range(repeat)]
        print(f"ROW {key} {statistics.median(times):.6f}", flush=True)
    return 0


def _collect(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env["GEOGOSSIP_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--repeat", str(repeat)],
        env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stdout + proc.stderr)
        raise RuntimeError(f"worker exited with {proc.returncode}")
    rows = {}
    mode = None
    for line in proc.stdout.splitlines():
        if line.startswith("MODE "):
            mode = line.split()[1]
        elif line.startswith("ROW "):
            _, key, seconds = line.split()
            rows[key] = float(seconds)
    expected = "numpy" if disable else "numba"
    if mode != expected:
        raise RuntimeError(f"worker reported mode {mode!r}, wanted "
                           f"{expected!r}; check the environment")
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed runs per workload, median reported")
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.repeat < 1:
        parser.error("--repeat must be >= 1")

    if args.worker:
        return run_worker(args.repeat)

    print(f"timing {args.repeat} runs per workload per mode "
          f"(median, warmup excluded)")
    jit = _collect(disable=False, repeat=args.repeat)
    plain = _collect(disable=True, repeat=args.repeat)

    labels = {key: label for key, label, _ in _workloads()}
    width = max(len(v) for v in labels.values())
    print(f"\n{'workload':<{width}}  {'numba':>10}  {'numpy':>10}  "
          f"{'speedup':>8}")
    for key, label, _ in _workloads():
        ratio = plain[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{label:<{width}}  {jit[key]:>9.4f}s  {plain[key]:>9.4f}s  "
              f"{ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
