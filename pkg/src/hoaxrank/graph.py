"""Bipartite item/source reputation graph.

Items are news URLs; sources are Twitter users and publishing sites.
Edges are signed and typed (tweet, editorial, vote) and carry timestamps.
Every node holds a beta-distribution state (alpha, beta, q) that the
propagation engine reads and writes in place.

Node indices are dense per kind so the engine can run over flat arrays
without hashing. Lookup tables map URLs, handles, and domains back to
nodes. Mutation is single-writer; read-only traversal may be shared.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterator, NamedTuple

import numpy as np

from .errors import (
    InvalidEdgeError,
    InvalidInputError,
    NotFoundError,
)

DEFAULT_C = 0.02


class NodeKind(IntEnum):
    ITEM = 0
    USER = 1
    SITE = 2


class EdgeKind(IntEnum):
    TWEET = 0
    EDITORIAL = 1
    VOTE = 2


class NodeId(NamedTuple):
    """Dense per-kind node identifier; (kind, index) is globally unique."""

    kind: NodeKind
    index: int


class InsertOutcome(Enum):
    INSERTED = "inserted"
    DUPLICATE = "duplicate"


@dataclass(frozen=True)
class BetaState:
    """Per-node (alpha, beta, q) triple.

    q equals (alpha - beta) / (alpha + beta) for every non-seed node.
    Seed items store q clamped to exactly +-1 (the engine fixes q, not
    alpha/beta, for seeds), so the identity is intentionally relaxed there.
    """

    alpha: float
    beta: float
    q: float


@dataclass(frozen=True)
class Edge:
    item: NodeId
    source: NodeId
    polarity: int
    kind: EdgeKind
    timestamp: float


@dataclass(frozen=True)
class EngineView:
    """CSR adjacency snapshot filtered by edge kind, shared with kernels.

    Within-node edge order is insertion order on both sides; the kernels
    accumulate in exactly this order so results are reproducible across
    backends and thread counts.
    """

    n_items: int
    n_sources: int
    item_indptr: np.ndarray
    item_edge_src: np.ndarray
    item_edge_pol: np.ndarray
    item_edge_owner: np.ndarray
    src_indptr: np.ndarray
    src_edge_item: np.ndarray
    src_edge_pol: np.ndarray
    src_edge_owner: np.ndarray


_SOURCE_KINDS = (NodeKind.USER, NodeKind.SITE)


def _check_key(value: str, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise InvalidInputError(f"{what} must be a non-empty string")
    if any(ch in value for ch in "\t\n\r"):
        raise InvalidInputError(f"{what} may not contain tabs or newlines")
    return value


class StateVec:
    """Growable numpy vector backing per-node state.

    The engine phases run directly on ``view()`` with no copying, which is
    what keeps the batch fixpoint memory-bandwidth bound instead of
    serialization bound. Scalar reads/writes serve the online path.
    """

    __slots__ = ("_data", "_n")

    def __init__(self, dtype):
        self._data = np.empty(16, dtype=dtype)
        self._n = 0

    def append(self, value) -> None:
        if self._n == self._data.size:
            grown = np.empty(self._data.size * 2, dtype=self._data.dtype)
            grown[: self._n] = self._data
            self._data = grown
        self._data[self._n] = value
        self._n += 1

    def view(self) -> np.ndarray:
        return self._data[: self._n]

    def __len__(self) -> int:
        return self._n

    def __iter__(self):
        return iter(self._data[: self._n])

    def __getitem__(self, index):
        return self._data[: self._n][index]

    def __setitem__(self, index, value) -> None:
        self._data[: self._n][index] = value

    def tolist(self) -> list:
        return self._data[: self._n].tolist()


class ReputationGraph:
    """Mutable bipartite share graph with per-node beta state.

    Duplicate tweet/editorial edges are ignored (set semantics: one user
    cannot multiply their influence on one item). A duplicate vote with a
    newer timestamp replaces the stored polarity (latest vote wins), which
    keeps construction independent of edge arrival order.
    """

    def __init__(self, c: float = DEFAULT_C):
        if not (c > 0):
            raise InvalidInputError("regularization constant c must be positive")
        self.c = float(c)

        self._urls: list[str] = []
        self._url_index: dict[str, int] = {}
        self.item_alpha = StateVec(np.float64)
        self.item_beta = StateVec(np.float64)
        self.item_q = StateVec(np.float64)
        self.item_seed = StateVec(np.int8)  # 0 unlabeled, +1 non-fake, -1 fake
        self._item_adj: list[list[int]] = []

        self._source_keys: list[str] = []
        self._source_kinds: list[int] = []
        self._source_kind_index: list[int] = []
        self._user_rows: list[int] = []
        self._site_rows: list[int] = []
        self._handle_index: dict[str, int] = {}  # handle -> user kind-index
        self._site_index: dict[str, int] = {}  # domain -> site kind-index
        self.src_alpha = StateVec(np.float64)
        self.src_beta = StateVec(np.float64)
        self.src_q = StateVec(np.float64)
        self._src_adj: list[list[int]] = []

        self.edge_item: list[int] = []  # item row per edge slot
        self.edge_src: list[int] = []  # source row per edge slot
        self.edge_pol: list[int] = []
        self.edge_kind: list[int] = []
        self.edge_ts: list[float] = []
        self._edge_slot: dict[tuple[int, int, int], int] = {}

        self._version = 0
        self._view_cache: dict[tuple[int, bool, bool], EngineView] = {}

    # ------------------------------------------------------------------
    # node management
    # ------------------------------------------------------------------

    def add_item(self, url: str) -> NodeId:
        """Return the item node for a canonical URL, creating it if new.

        Fresh items start at alpha = beta = c, q = 0.
        """
        _check_key(url, "url")
        row = self._url_index.get(url)
        if row is None:
            row = len(self._urls)
            self._urls.append(url)
            self._url_index[url] = row
            self.item_alpha.append(self.c)
            self.item_beta.append(self.c)
            self.item_q.append(0.0)
            self.item_seed.append(0)
            self._item_adj.append([])
        return NodeId(NodeKind.ITEM, row)

    def add_source(self, key: str, kind: NodeKind) -> NodeId:
        """Return the user/site node for a handle or domain, creating it if new."""
        _check_key(key, "source key")
        if kind not in _SOURCE_KINDS:
            raise InvalidInputError(f"source kind must be USER or SITE, got {kind!r}")
        index_map = self._handle_index if kind == NodeKind.USER else self._site_index
        kind_index = index_map.get(key)
        if kind_index is None:
            row = len(self._source_keys)
            rows = self._user_rows if kind == NodeKind.USER else self._site_rows
            kind_index = len(rows)
            rows.append(row)
            index_map[key] = kind_index
            self._source_keys.append(key)
            self._source_kinds.append(int(kind))
            self._source_kind_index.append(kind_index)
            self.src_alpha.append(self.c)
            self.src_beta.append(self.c)
            self.src_q.append(0.0)
            self._src_adj.append([])
        return NodeId(kind, kind_index)

    def lookup_url(self, url: str) -> NodeId:
        row = self._url_index.get(url)
        if row is None:
            raise NotFoundError(f"unknown url: {url}")
        return NodeId(NodeKind.ITEM, row)

    def lookup_source(self, key: str, kind: NodeKind) -> NodeId:
        index_map = self._handle_index if kind == NodeKind.USER else self._site_index
        kind_index = index_map.get(key)
        if kind_index is None:
            raise NotFoundError(f"unknown {kind.name.lower()}: {key}")
        return NodeId(kind, kind_index)

    def has_url(self, url: str) -> bool:
        return url in self._url_index

    def url_of(self, node: NodeId) -> str:
        if node.kind != NodeKind.ITEM or not 0 <= node.index < len(self._urls):
            raise NotFoundError(f"not an item node: {node!r}")
        return self._urls[node.index]

    def source_key_of(self, node: NodeId) -> str:
        return self._source_keys[self.source_row(node)]

    def source_row(self, node: NodeId) -> int:
        """Translate a USER/SITE NodeId into its dense engine row."""
        if node.kind == NodeKind.USER:
            rows = self._user_rows
        elif node.kind == NodeKind.SITE:
            rows = self._site_rows
        else:
            raise InvalidInputError(f"not a source node: {node!r}")
        if not 0 <= node.index < len(rows):
            raise NotFoundError(f"unknown source node: {node!r}")
        return rows[node.index]

    def source_node_of_row(self, row: int) -> NodeId:
        return NodeId(NodeKind(self._source_kinds[row]), self._source_kind_index[row])

    def item_row(self, node: NodeId) -> int:
        if node.kind != NodeKind.ITEM:
            raise InvalidInputError(f"not an item node: {node!r}")
        if not 0 <= node.index < len(self._urls):
            raise NotFoundError(f"unknown item node: {node!r}")
        return node.index

    # ------------------------------------------------------------------
    # edges
    # ------------------------------------------------------------------

    def add_edge(
        self,
        item: NodeId,
        source: NodeId,
        polarity: int,
        kind: EdgeKind,
        timestamp: float,
    ) -> InsertOutcome:
        """Insert one typed edge; returns whether graph state changed.

        Tweet/editorial duplicates are no-ops. A duplicate vote replaces the
        stored polarity when its timestamp is not older (latest vote wins).
        """
        irow = self.item_row(item)
        srow = self.source_row(source)
        kind = EdgeKind(kind)
        if polarity not in (-1, 1):
            raise InvalidEdgeError(f"polarity must be +1 or -1, got {polarity!r}")
        if kind in (EdgeKind.TWEET, EdgeKind.VOTE) and source.kind != NodeKind.USER:
            raise InvalidEdgeError(f"{kind.name.lower()} edges require a USER source")
        if kind == EdgeKind.EDITORIAL and source.kind != NodeKind.SITE:
            raise InvalidEdgeError("editorial edges require a SITE source")
        if kind in (EdgeKind.TWEET, EdgeKind.EDITORIAL) and polarity != 1:
            raise InvalidEdgeError(f"{kind.name.lower()} edges always have polarity +1")
        ts = float(timestamp)

        key = (irow, srow, int(kind))
        slot = self._edge_slot.get(key)
        if slot is not None:
            if kind != EdgeKind.VOTE:
                return InsertOutcome.DUPLICATE
            # Order-independent replacement: strictly newer wins; on a
            # timestamp tie the higher polarity wins.
            old = (self.edge_ts[slot], self.edge_pol[slot])
            if (ts, polarity) <= old:
                return InsertOutcome.DUPLICATE
            self.edge_pol[slot] = polarity
            self.edge_ts[slot] = ts
            self._bump()
            return InsertOutcome.INSERTED

        slot = len(self.edge_item)
        self.edge_item.append(irow)
        self.edge_src.append(srow)
        self.edge_pol.append(polarity)
        self.edge_kind.append(int(kind))
        self.edge_ts.append(ts)
        self._edge_slot[key] = slot
        self._item_adj[irow].append(slot)
        self._src_adj[srow].append(slot)
        self._bump()
        return InsertOutcome.INSERTED

    def edge_slot(self, item: NodeId, source: NodeId, kind: EdgeKind) -> int | None:
        try:
            key = (self.item_row(item), self.source_row(source), int(EdgeKind(kind)))
        except (NotFoundError, InvalidInputError):
            return None
        return self._edge_slot.get(key)

    # ------------------------------------------------------------------
    # state access
    # ------------------------------------------------------------------

    @property
    def n_items(self) -> int:
        return len(self._urls)

    @property
    def n_sources(self) -> int:
        return len(self._source_keys)

    @property
    def n_users(self) -> int:
        return len(self._user_rows)

    @property
    def n_sites(self) -> int:
        return len(self._site_rows)

    @property
    def n_edges(self) -> int:
        return len(self.edge_item)

    @property
    def version(self) -> int:
        return self._version

    def urls(self) -> Iterator[str]:
        return iter(self._urls)

    def item_degree(self, node: NodeId) -> int:
        return len(self._item_adj[self.item_row(node)])

    def source_degree(self, node: NodeId) -> int:
        return len(self._src_adj[self.source_row(node)])

    def item_state(self, node: NodeId) -> BetaState:
        row = self.item_row(node)
        return BetaState(
            float(self.item_alpha[row]), float(self.item_beta[row]), float(self.item_q[row])
        )

    def source_state(self, node: NodeId) -> BetaState:
        row = self.source_row(node)
        return BetaState(
            float(self.src_alpha[row]), float(self.src_beta[row]), float(self.src_q[row])
        )

    def state_of(self, node: NodeId) -> BetaState:
        if node.kind == NodeKind.ITEM:
            return self.item_state(node)
        return self.source_state(node)

    def item_adjacency(self, row: int) -> list[int]:
        """Edge slots incident to an item row, in insertion order."""
        return self._item_adj[row]

    def source_adjacency(self, row: int) -> list[int]:
        return self._src_adj[row]

    def _bump(self) -> None:
        self._version += 1
        if self._view_cache:
            self._view_cache.clear()

    def mark_state_dirty(self) -> None:
        """Record an engine write to node state (adjacency is unchanged)."""
        # Adjacency views remain valid: state arrays live outside the view.

    # ------------------------------------------------------------------
    # engine view (CSR)
    # ------------------------------------------------------------------

    def engine_view(
        self, include_editorial: bool = True, include_votes: bool = True
    ) -> EngineView:
        """Build (or reuse) the CSR adjacency restricted to enabled kinds."""
        key = (self._version, include_editorial, include_votes)
        view = self._view_cache.get(key)
        if view is not None:
            return view

        eitem = np.asarray(self.edge_item, dtype=np.int64)
        esrc = np.asarray(self.edge_src, dtype=np.int64)
        epol = np.asarray(self.edge_pol, dtype=np.float64)
        ekind = np.asarray(self.edge_kind, dtype=np.int64)

        mask = np.ones(len(self.edge_item), dtype=bool)
        if not include_editorial:
            mask &= ekind != int(EdgeKind.EDITORIAL)
        if not include_votes:
            mask &= ekind != int(EdgeKind.VOTE)
        pos = np.flatnonzero(mask)

        def _csr(node_of_edge, other_of_edge, pol, n):
            counts = np.bincount(node_of_edge, minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            order = np.argsort(node_of_edge, kind="stable")
            owner = node_of_edge[order]
            return indptr, other_of_edge[order], pol[order], owner

        item_indptr, item_edge_src, item_pol, item_owner = _csr(
            eitem[pos], esrc[pos], epol[pos], self.n_items
        )
        src_indptr, src_edge_item, src_pol, src_owner = _csr(
            esrc[pos], eitem[pos], epol[pos], self.n_sources
        )
        view = EngineView(
            n_items=self.n_items,
            n_sources=self.n_sources,
            item_indptr=item_indptr,
            item_edge_src=item_edge_src,
            item_edge_pol=item_pol,
            item_edge_owner=item_owner,
            src_indptr=src_indptr,
            src_edge_item=src_edge_item,
            src_edge_pol=src_pol,
            src_edge_owner=src_owner,
        )
        self._view_cache[key] = view
        return view

    # ------------------------------------------------------------------
    # integrity / serialization
    # ------------------------------------------------------------------

    def check_consistency(self) -> None:
        """Full-graph audit used by tests; raises AssertionError on damage."""
        assert len(self._urls) == len(self.item_alpha) == len(self._item_adj)
        assert len(self._source_keys) == len(self.src_alpha) == len(self._src_adj)
        seen = set()
        for irow, slots in enumerate(self._item_adj):
            for slot in slots:
                assert self.edge_item[slot] == irow
                assert slot not in seen
                seen.add(slot)
        assert len(seen) == self.n_edges
        seen_src = set()
        for srow, slots in enumerate(self._src_adj):
            for slot in slots:
                assert self.edge_src[slot] == srow
                assert slot not in seen_src
                seen_src.add(slot)
        assert len(seen_src) == self.n_edges
        for (irow, srow, kind), slot in self._edge_slot.items():
            assert self.edge_item[slot] == irow
            assert self.edge_src[slot] == srow
            assert self.edge_kind[slot] == kind
        for url, row in self._url_index.items():
            assert self._urls[row] == url
        for handle, kidx in self._handle_index.items():
            assert self._source_keys[self._user_rows[kidx]] == handle
        for domain, kidx in self._site_index.items():
            assert self._source_keys[self._site_rows[kidx]] == domain

    def save(self, path) -> None:
        """Write the versioned line-oriented snapshot (structure, not state).

        Format: a header line, one node line per node in creation order,
        then one edge line per edge slot:
            node<TAB>{item|user|site}<TAB>key
            edge<TAB>item-url<TAB>source-key<TAB>source-kind<TAB>polarity<TAB>edge-kind<TAB>timestamp
        """
        kind_names = {NodeKind.ITEM: "item", NodeKind.USER: "user", NodeKind.SITE: "site"}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"#hoaxrank-graph v1 c={self.c!r}\n")
            for url in self._urls:
                fh.write(f"node\titem\t{url}\n")
            for row, key in enumerate(self._source_keys):
                fh.write(f"node\t{kind_names[NodeKind(self._source_kinds[row])]}\t{key}\n")
            for slot in range(self.n_edges):
                url = self._urls[self.edge_item[slot]]
                srow = self.edge_src[slot]
                skind = kind_names[NodeKind(self._source_kinds[srow])]
                ekind = EdgeKind(self.edge_kind[slot]).name.lower()
                fh.write(
                    f"edge\t{url}\t{self._source_keys[srow]}\t{skind}\t"
                    f"{self.edge_pol[slot]}\t{ekind}\t{self.edge_ts[slot]!r}\n"
                )

    @classmethod
    def load(cls, path) -> "ReputationGraph":
        node_kinds = {"item": NodeKind.ITEM, "user": NodeKind.USER, "site": NodeKind.SITE}
        edge_kinds = {"tweet": EdgeKind.TWEET, "editorial": EdgeKind.EDITORIAL, "vote": EdgeKind.VOTE}
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("#hoaxrank-graph v1"):
                raise InvalidInputError(f"unrecognized graph snapshot header: {header!r}")
            c = DEFAULT_C
            for field in header.split():
                if field.startswith("c="):
                    c = float(field[2:])
            graph = cls(c=c)
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                if parts[0] == "node" and len(parts) == 3:
                    kind = node_kinds.get(parts[1])
                    if kind is None:
                        raise InvalidInputError(f"line {lineno}: bad node kind {parts[1]!r}")
                    if kind == NodeKind.ITEM:
                        graph.add_item(parts[2])
                    else:
                        graph.add_source(parts[2], kind)
                elif parts[0] == "edge" and len(parts) == 7:
                    _, url, skey, skind, pol, ekind, ts = parts
                    item = graph.add_item(url)
                    source = graph.add_source(skey, node_kinds[skind])
                    graph.add_edge(item, source, int(pol), edge_kinds[ekind], float(ts))
                elif not parts or parts == [""]:
                    continue
                else:
                    raise InvalidInputError(f"line {lineno}: unparsable snapshot line")
        return graph
