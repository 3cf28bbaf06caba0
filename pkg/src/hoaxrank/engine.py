"""Harmonic reputation engine: batch fixpoint and online propagation.

The batch path alternates a source phase (every user/site recomputed from
current item reputations) and an item phase (every non-seed item recomputed
from the fresh source reputations), a fixed number of times, starting from
the seed initialization. The online path applies the bounded-depth,
thresholded local update to the beta state when a single edge arrives,
avoiding a global recompute.

Sign convention: q < 0 means fake for items and unreliable for sources;
q = 0 ties resolve to reliable.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

import numpy as np

from . import kernels
from .errors import (
    InconsistentStateError,
    InsufficientCandidatesError,
    InvalidInputError,
    InvalidLabelsError,
)
from .graph import Edge, EdgeKind, NodeId, NodeKind, ReputationGraph


class Label(str, Enum):
    FAKE = "fake"
    RELIABLE = "reliable"


def label_of(q: float) -> Label:
    """An item is fake iff its reputation is strictly negative."""
    return Label.FAKE if q < 0.0 else Label.RELIABLE


@dataclass(frozen=True)
class Classification:
    label: Label
    reputation: float


@dataclass(frozen=True)
class SeedLabels:
    """Disjoint fake / non-fake item sets anchoring the fixpoint."""

    fake_items: frozenset[NodeId]
    nonfake_items: frozenset[NodeId]

    def __post_init__(self):
        object.__setattr__(self, "fake_items", frozenset(self.fake_items))
        object.__setattr__(self, "nonfake_items", frozenset(self.nonfake_items))
        overlap = self.fake_items & self.nonfake_items
        if overlap:
            raise InvalidLabelsError(f"{len(overlap)} items labeled both fake and non-fake")
        for node in self.fake_items | self.nonfake_items:
            if node.kind != NodeKind.ITEM:
                raise InvalidLabelsError(f"seed label on non-item node: {node!r}")


_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True)
class EngineConfig:
    """Propagation parameters; defaults follow the reference settings."""

    c: float = 0.02
    iterations: int = 3
    propagation_depth: int = 1
    propagation_threshold: float = 0.02
    include_editorial: bool = True
    include_votes: bool = True

    def __post_init__(self):
        if not (self.c > 0):
            raise InvalidInputError("c must be positive")
        if not (self.propagation_threshold > 0):
            raise InvalidInputError("propagation_threshold must be positive")
        if self.iterations < 1:
            raise InvalidInputError("iterations must be >= 1")
        if self.propagation_depth < 0:
            raise InvalidInputError("propagation_depth must be >= 0")

    @classmethod
    def from_file(cls, path) -> "EngineConfig":
        """Parse a plain-text ``key = value`` config file."""
        values = {}
        fields = {f.name: f.type for f in cls.__dataclass_fields__.values()}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidInputError(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                key = key.strip().lower()
                value = value.strip()
                if key not in fields:
                    raise InvalidInputError(f"{path}:{lineno}: unknown option {key!r}")
                if key in ("iterations", "propagation_depth"):
                    values[key] = int(value)
                elif key in ("include_editorial", "include_votes"):
                    low = value.lower()
                    if low in _TRUE:
                        values[key] = True
                    elif low in _FALSE:
                        values[key] = False
                    else:
                        raise InvalidInputError(f"{path}:{lineno}: bad boolean {value!r}")
                else:
                    values[key] = float(value)
        return cls(**values)

    def with_overrides(self, **overrides) -> "EngineConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean) if clean else self

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "iterations": self.iterations,
            "propagation_depth": self.propagation_depth,
            "propagation_threshold": self.propagation_threshold,
            "include_editorial": self.include_editorial,
            "include_votes": self.include_votes,
        }


DEFAULT_CONFIG = EngineConfig()


# ----------------------------------------------------------------------
# seeding
# ----------------------------------------------------------------------


def _label_rows(nodes: frozenset[NodeId]) -> np.ndarray:
    return np.fromiter((n.index for n in nodes), dtype=np.int64, count=len(nodes))


def _validate_labels(graph: ReputationGraph, fake_rows, nonfake_rows) -> None:
    for rows in (fake_rows, nonfake_rows):
        if rows.size and not ((rows >= 0).all() and (rows < graph.n_items).all()):
            bad = rows[(rows < 0) | (rows >= graph.n_items)][0]
            raise InvalidLabelsError(f"seed item index {bad} not in graph")


def seed(graph: ReputationGraph, labels: SeedLabels, c: float | None = None) -> None:
    """Pin seed items at q = +-1 and reset everything else to baseline.

    Seeds store (alpha, beta) = (1 + c, c) for non-fake and (c, 1 + c) for
    fake, with q clamped to exactly +-1: the algorithm fixes q, not
    alpha/beta, for seeds. All other items and all sources return to
    (c, c, 0), the state a fresh node is born with.
    """
    fake_rows = _label_rows(labels.fake_items)
    nonfake_rows = _label_rows(labels.nonfake_items)
    _validate_labels(graph, fake_rows, nonfake_rows)
    c = graph.c if c is None else float(c)
    graph.item_alpha[:] = c
    graph.item_beta[:] = c
    graph.item_q[:] = 0.0
    graph.item_seed[:] = 0
    if nonfake_rows.size:
        graph.item_alpha[nonfake_rows] = 1.0 + c
        graph.item_q[nonfake_rows] = 1.0
        graph.item_seed[nonfake_rows] = 1
    if fake_rows.size:
        graph.item_beta[fake_rows] = 1.0 + c
        graph.item_q[fake_rows] = -1.0
        graph.item_seed[fake_rows] = -1
    graph.src_alpha[:] = c
    graph.src_beta[:] = c
    graph.src_q[:] = 0.0


def seed_item(graph: ReputationGraph, node: NodeId, sign: int, c: float | None = None) -> None:
    """Pin a single newly created item as a seed without resetting the graph.

    Used by stream replay when a seed-listed URL first appears mid-stream.
    """
    if sign not in (-1, 1):
        raise InvalidLabelsError(f"seed sign must be +1 or -1, got {sign!r}")
    row = graph.item_row(node)
    c = graph.c if c is None else float(c)
    graph.item_alpha[row] = 1.0 + c if sign > 0 else c
    graph.item_beta[row] = c if sign > 0 else 1.0 + c
    graph.item_q[row] = float(sign)
    graph.item_seed[row] = sign


def current_seed_labels(graph: ReputationGraph) -> SeedLabels:
    fake = frozenset(
        NodeId(NodeKind.ITEM, r) for r, s in enumerate(graph.item_seed) if s < 0
    )
    nonfake = frozenset(
        NodeId(NodeKind.ITEM, r) for r, s in enumerate(graph.item_seed) if s > 0
    )
    return SeedLabels(fake, nonfake)


# ----------------------------------------------------------------------
# batch fixpoint
# ----------------------------------------------------------------------


def compute_fixpoint(
    graph: ReputationGraph,
    labels: SeedLabels | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
    backend: str | None = None,
) -> None:
    """Recompute all reputations in place from the seed initialization.

    A full recompute always restarts from the seeded state (seeds at +-1,
    everything else at zero), so the result depends only on the graph, the
    labels, and the config; any drift accumulated by online updates is
    discarded. When labels is None the seed marks already recorded on the
    graph are reused.
    """
    if labels is None:
        labels = current_seed_labels(graph)
    seed(graph, labels, c=config.c)

    view = graph.engine_view(config.include_editorial, config.include_votes)
    # The phases run in place on the graph's own state arrays.
    item_alpha = graph.item_alpha.view()
    item_beta = graph.item_beta.view()
    item_q = graph.item_q.view()
    seed_mask = graph.item_seed.view()
    src_alpha = graph.src_alpha.view()
    src_beta = graph.src_beta.view()
    src_q = graph.src_q.view()

    backend = backend or kernels.active_backend()
    for _ in range(config.iterations):
        kernels.source_phase(view, item_q, config.c, src_alpha, src_beta, src_q, backend)
        kernels.item_phase(view, src_q, seed_mask, config.c, item_alpha, item_beta, item_q, backend)
    graph.mark_state_dirty()


def run_fixpoint(
    graph: ReputationGraph,
    labels: SeedLabels | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
    backend: str | None = None,
) -> dict[str, Classification]:
    """compute_fixpoint plus the materialized per-item classification table."""
    compute_fixpoint(graph, labels, config, backend)
    return classifications(graph)


def classifications(graph: ReputationGraph) -> dict[str, Classification]:
    """Current per-item classification table, in item creation order."""
    return {
        url: Classification(label_of(q), float(q))
        for url, q in zip(graph.urls(), graph.item_q)
    }


def reputation(graph: ReputationGraph, url: str) -> Classification:
    """Current reputation of one URL; raises NotFoundError if unknown."""
    node = graph.lookup_url(url)
    q = float(graph.item_q[node.index])
    return Classification(label_of(q), q)


def write_classifications_csv(graph: ReputationGraph, path) -> None:
    """Export url, q, label, degree for every item."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["url", "q", "label", "degree"])
        for row, url in enumerate(graph.urls()):
            q = float(graph.item_q[row])
            writer.writerow([url, repr(q), label_of(q).value, len(graph.item_adjacency(row))])


# ----------------------------------------------------------------------
# online propagation
# ----------------------------------------------------------------------


def ingest_edge_online(
    graph: ReputationGraph,
    edge: Edge,
    config: EngineConfig = DEFAULT_CONFIG,
) -> set[NodeId]:
    """Locally propagate one already-inserted edge; returns flipped items.

    The edge's net contribution q_source * polarity is applied to the item:
    positive deltas raise alpha, negative deltas raise beta. If the item's
    reputation moved by at least propagation_threshold and depth remains,
    the move is forwarded to the node's neighbors, alternating sides. Seed
    items are never modified and absorb the update without propagating it.
    Depth-first processing in adjacency order makes replay deterministic.
    """
    irow = graph.item_row(edge.item)
    srow = graph.source_row(edge.source)
    kind = EdgeKind(edge.kind)
    slot = graph.edge_slot(edge.item, edge.source, kind)
    if slot is None:
        raise InconsistentStateError(
            f"edge not present in graph: {edge.item!r} -> {edge.source!r} ({kind.name})"
        )
    if kind == EdgeKind.EDITORIAL and not config.include_editorial:
        return set()
    if kind == EdgeKind.VOTE and not config.include_votes:
        return set()

    polarity = float(graph.edge_pol[slot])
    delta = graph.src_q[srow] * polarity
    kappa = config.propagation_threshold
    flipped: set[NodeId] = set()

    # Explicit worklist instead of call-stack recursion: high-degree nodes
    # would otherwise overflow the stack. Neighbors are pushed in reverse so
    # pops replay the recursive order exactly.
    stack: list[tuple[bool, int, float, int]] = [
        (True, irow, delta, config.propagation_depth)
    ]
    while stack:
        is_item, row, d, depth = stack.pop()
        if is_item:
            if graph.item_seed[row] != 0:
                continue
            alpha = graph.item_alpha[row]
            beta = graph.item_beta[row]
            q_old = graph.item_q[row]
            if d > 0.0:
                alpha += d
            elif d < 0.0:
                beta -= d
            q_new = (alpha - beta) / (alpha + beta)
            graph.item_alpha[row] = alpha
            graph.item_beta[row] = beta
            graph.item_q[row] = q_new
            if (q_old < 0.0) != (q_new < 0.0):
                flipped.add(NodeId(NodeKind.ITEM, row))
            dq = q_new - q_old
            if depth > 0 and abs(dq) >= kappa:
                neighbors = _filtered_neighbors(graph, graph.item_adjacency(row), config, True)
                for nrow in reversed(neighbors):
                    stack.append((False, nrow, dq, depth - 1))
        else:
            alpha = graph.src_alpha[row]
            beta = graph.src_beta[row]
            q_old = graph.src_q[row]
            if d > 0.0:
                alpha += d
            elif d < 0.0:
                beta -= d
            q_new = (alpha - beta) / (alpha + beta)
            graph.src_alpha[row] = alpha
            graph.src_beta[row] = beta
            graph.src_q[row] = q_new
            dq = q_new - q_old
            if depth > 0 and abs(dq) >= kappa:
                neighbors = _filtered_neighbors(graph, graph.source_adjacency(row), config, False)
                for nrow in reversed(neighbors):
                    stack.append((True, nrow, dq, depth - 1))
    graph.mark_state_dirty()
    return flipped


def _filtered_neighbors(graph, slots, config, from_item: bool) -> list[int]:
    rows = []
    for slot in slots:
        kind = graph.edge_kind[slot]
        if kind == int(EdgeKind.EDITORIAL) and not config.include_editorial:
            continue
        if kind == int(EdgeKind.VOTE) and not config.include_votes:
            continue
        rows.append(graph.edge_src[slot] if from_item else graph.edge_item[slot])
    return rows


# ----------------------------------------------------------------------
# training-label selection
# ----------------------------------------------------------------------


def select_training_labels(
    graph: ReputationGraph,
    fake_site_domains: Iterable[str],
    sample_multiplier: int,
    rng_seed: int,
    site_fn=None,
) -> SeedLabels:
    """Label all items on listed fake sites, plus a matched random sample.

    I_F holds every graph item whose registered domain is in the fake site
    list (n items); I_N holds sample_multiplier * n items drawn uniformly
    without replacement from the remainder. The draw is deterministic for a
    given rng_seed.
    """
    if int(sample_multiplier) != sample_multiplier or sample_multiplier < 1:
        raise InvalidInputError("sample_multiplier must be a positive integer")
    if site_fn is None:
        from .ingest import site_of

        site_fn = site_of
    domains = {d.lower() for d in fake_site_domains}
    fake_rows: list[int] = []
    other_rows: list[int] = []
    for row, url in enumerate(graph.urls()):
        (fake_rows if site_fn(url) in domains else other_rows).append(row)
    n = len(fake_rows)
    k = int(sample_multiplier) * n
    if len(other_rows) < k:
        raise InsufficientCandidatesError(
            f"need {k} non-fake candidates, only {len(other_rows)} available"
        )
    rng = random.Random(rng_seed)
    chosen = rng.sample(other_rows, k)
    return SeedLabels(
        frozenset(NodeId(NodeKind.ITEM, r) for r in fake_rows),
        frozenset(NodeId(NodeKind.ITEM, r) for r in chosen),
    )
