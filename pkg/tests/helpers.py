"""Shared test utilities: independent oracles and random-graph builders.

The oracles deliberately avoid the package's CSR machinery: they are
direct dict-based transcriptions of the update equations, kept naive on
purpose so they can't share a bug with the optimized paths they check.
"""

from __future__ import annotations

import math
import random

import numpy as np

from hoaxrank.engine import EngineConfig, SeedLabels
from hoaxrank.graph import EdgeKind, NodeKind, ReputationGraph


# ----------------------------------------------------------------------
# naive fixpoint oracle
# ----------------------------------------------------------------------


def naive_fixpoint(items, sources, edges, fake, nonfake, c=0.02, iterations=3):
    """Scalar-arithmetic reference for the batch fixpoint.

    items/sources: ordered key lists; edges: (item_key, source_key, polarity)
    in insertion order; fake/nonfake: seed item key sets.
    Returns (q_items, q_sources) dicts.
    """
    q_items = {}
    for key in items:
        q_items[key] = -1.0 if key in fake else (1.0 if key in nonfake else 0.0)
    q_src = {key: 0.0 for key in sources}

    for _ in range(iterations):
        for u in sources:
            a = c
            b = c
            for item_key, src_key, pol in edges:
                if src_key != u:
                    continue
                x = pol * q_items[item_key]
                if x > 0:
                    a += x
                elif x < 0:
                    b -= x
            q_src[u] = (a - b) / (a + b)
        for i in items:
            if i in fake or i in nonfake:
                continue
            a = c
            b = c
            for item_key, src_key, pol in edges:
                if item_key != i:
                    continue
                x = pol * q_src[src_key]
                if x > 0:
                    a += x
                elif x < 0:
                    b -= x
            q_items[i] = (a - b) / (a + b)
    return q_items, q_src


# ----------------------------------------------------------------------
# random graph builder
# ----------------------------------------------------------------------


def build_random_graph(
    rng: random.Random,
    max_nodes: int = 50,
    max_edges: int = 200,
    kinds=(EdgeKind.TWEET,),
    seed_fraction: float = 0.3,
):
    """Random bipartite graph plus its raw edge list and seed labels.

    Returns (graph, items, sources, edges, labels) where edges is the
    deduplicated (item_key, source_key, polarity) list actually stored, in
    insertion order, ready for the naive oracle.
    """
    n_items = rng.randint(2, max(2, max_nodes // 2))
    n_sources = rng.randint(1, max(1, max_nodes - n_items))
    n_edges = rng.randint(1, max_edges)

    graph = ReputationGraph()
    items = [f"https://s{k % 7}.example/i{k}" for k in range(n_items)]
    sources = [f"user{k}" for k in range(n_sources)]
    item_nodes = [graph.add_item(u) for u in items]
    source_nodes = [graph.add_source(s, NodeKind.USER) for s in sources]

    stored = {}
    order = []
    for _ in range(n_edges):
        i = rng.randrange(n_items)
        s = rng.randrange(n_sources)
        kind = rng.choice(kinds)
        pol = rng.choice((-1, 1)) if kind == EdgeKind.VOTE else 1
        ts = float(rng.randint(1, 10**6))
        graph.add_edge(item_nodes[i], source_nodes[s], pol, kind, ts)
        key = (i, s, kind)
        if key not in stored:
            order.append(key)
            stored[key] = (pol, ts)
        else:
            old_pol, old_ts = stored[key]
            if kind == EdgeKind.VOTE and (ts, pol) > (old_ts, old_pol):
                stored[key] = (pol, ts)

    edges = [(items[i], sources[s], stored[(i, s, k)][0]) for (i, s, k) in order]

    n_seed = max(2, int(seed_fraction * n_items))
    seed_rows = rng.sample(range(n_items), min(n_seed, n_items))
    half = len(seed_rows) // 2
    fake_rows = seed_rows[:half] or seed_rows[:1]
    nonfake_rows = seed_rows[half:] if seed_rows[half:] else []
    labels = SeedLabels(
        frozenset(item_nodes[r] for r in fake_rows),
        frozenset(item_nodes[r] for r in nonfake_rows if r not in fake_rows),
    )
    fake = {items[r] for r in fake_rows}
    nonfake = {items[r] for r in nonfake_rows if r not in fake_rows}
    return graph, items, sources, edges, labels, fake, nonfake


# ----------------------------------------------------------------------
# dense gradient-descent logistic oracle
# ----------------------------------------------------------------------


def dense_gd_logistic(x, y, class_weight=None, lr=1.0, epochs=2000, l2=0.0):
    """Plain full-batch gradient descent on dense arrays (reference only)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    cw = np.ones(n) if class_weight is None else np.asarray(class_weight, dtype=float)
    for _ in range(epochs):
        z = x @ w + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -30, 30)))
        g = cw * (p - y)
        w -= lr * (x.T @ g / n + l2 * w)
        b -= lr * g.sum() / n
    return w, b


# ----------------------------------------------------------------------
# brute-force correlation oracle
# ----------------------------------------------------------------------


def brute_correlation(records, site_a, site_b, site_fn):
    """Explicit pairwise-sum evaluation of T_ab / sqrt(T_a T_b)."""
    users = sorted({r.user for r in records})
    t_ab = t_a = t_b = 0.0
    for u in users:
        ca = sum(1 for r in records if r.user == u and site_fn(r.url) == site_a)
        cb = sum(1 for r in records if r.user == u and site_fn(r.url) == site_b)
        t_ab += ca * cb
        t_a += ca * ca
        t_b += cb * cb
    if t_a == 0 or t_b == 0:
        return 0.0
    return t_ab / math.sqrt(t_a * t_b)
