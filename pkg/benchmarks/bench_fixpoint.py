#!/usr/bin/env python3
"""Benchmark the batch fixpoint across kernel backends and thread counts.

Builds a random bipartite share graph, then times compute_fixpoint under:
  * numba backend, 1 thread (sequential reference)
  * numba backend, N threads (parallel)
  * pure-numpy backend
and verifies all three produce bit-identical reputations.

Run from a checkout:  python benchmarks/bench_fixpoint.py --edges 1000000
Set NUMBA_NUM_THREADS before launching to raise the thread ceiling.
"""

import argparse
import math
import random
import time

import numpy as np

from hoaxrank import kernels
from hoaxrank.engine import EngineConfig, SeedLabels, compute_fixpoint
from hoaxrank.graph import EdgeKind, NodeId, NodeKind, ReputationGraph


def build_graph(n_items: int, n_users: int, n_edges: int, rng_seed: int):
    g = ReputationGraph()
    items = [g.add_item(f"https://s{k % 4999}.example/i{k}") for k in range(n_items)]
    users = [g.add_source(f"u{k}", NodeKind.USER) for k in range(n_users)]
    rng = np.random.default_rng(rng_seed)
    ii = rng.integers(0, n_items, n_edges)
    uu = rng.integers(0, n_users, n_edges)
    for k in range(n_edges):
        g.add_edge(items[ii[k]], users[uu[k]], 1, EdgeKind.TWEET, float(k))
    seed_rows = random.Random(rng_seed).sample(range(n_items), max(2, n_items // 20))
    half = len(seed_rows) // 2
    labels = SeedLabels(
        frozenset(NodeId(NodeKind.ITEM, r) for r in seed_rows[:half]),
        frozenset(NodeId(NodeKind.ITEM, r) for r in seed_rows[half:]),
    )
    return g, labels


def time_best(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--items", type=int, default=200_000)
    parser.add_argument("--users", type=int, default=20_000)
    parser.add_argument("--edges", type=int, default=1_000_000)
    parser.add_argument("--iterations", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--rng-seed", type=int, default=0)
    args = parser.parse_args()

    print(f"building graph: {args.items} items, {args.users} users, {args.edges} edges ...")
    t0 = time.perf_counter()
    g, labels = build_graph(args.items, args.users, args.edges, args.rng_seed)
    print(f"  built in {time.perf_counter() - t0:.1f}s ({g.n_edges} edges after dedup)")
    config = EngineConfig(iterations=args.iterations)
    g.engine_view(True, True)  # CSR outside the timings

    results = {}
    states = {}

    if kernels.HAS_NUMBA:
        kernels.warmup()
        kernels.set_threads(1)
        compute_fixpoint(g, labels, config, backend="numba")
        results["numba, 1 thread"] = time_best(
            lambda: compute_fixpoint(g, labels, config, backend="numba"), args.repeats
        )
        states["numba, 1 thread"] = g.item_q.view().copy()

        threads = min(args.threads, kernels.max_threads())
        kernels.set_threads(threads)
        compute_fixpoint(g, labels, config, backend="numba")
        results[f"numba, {threads} threads"] = time_best(
            lambda: compute_fixpoint(g, labels, config, backend="numba"), args.repeats
        )
        states[f"numba, {threads} threads"] = g.item_q.view().copy()
        kernels.set_threads(1)
    else:
        print("numba not importable; benchmarking numpy only")

    compute_fixpoint(g, labels, config, backend="numpy")
    results["numpy"] = time_best(
        lambda: compute_fixpoint(g, labels, config, backend="numpy"), args.repeats
    )
    states["numpy"] = g.item_q.view().copy()

    baseline = next(iter(states.values()))
    print(f"\n{'backend':24s} {'best time':>12s} {'edges/s':>14s}  bit-identical")
    for name, elapsed in results.items():
        rate = args.iterations * 2 * g.n_edges / elapsed
        same = np.array_equal(states[name], baseline)
        print(f"{name:24s} {elapsed * 1000:9.1f} ms {rate:14.3e}  {same}")


if __name__ == "__main__":
    main()
