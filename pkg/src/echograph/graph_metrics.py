"""Follow graph storage and node-level network measures.

The follow graph is directed: an edge ``u -> v`` means ``u`` follows ``v``.
Both adjacency views are kept as CSR-style offset/index arrays so that
followees (forward) and followers (reverse) are O(degree) lookups.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _csr(n: int, rows: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and sorted column indices for the (already deduplicated) pairs."""
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return offsets, cols.astype(np.int64, copy=True)


@dataclass(frozen=True, eq=False)
class FollowGraph:
    """Immutable directed graph over opaque user ids.

    Node indices are dense ``0..n-1`` in the order of :attr:`ids`.
    """

    ids: tuple[str, ...]
    out_offsets: np.ndarray
    out_targets: np.ndarray
    in_offsets: np.ndarray
    in_sources: np.ndarray
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {u: i for i, u in enumerate(self.ids)})

    @classmethod
    def from_index_pairs(
        cls,
        ids: Sequence[str],
        src: np.ndarray,
        dst: np.ndarray,
    ) -> "FollowGraph":
        n = len(ids)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if src.size and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint out of range")
        loops = src == dst
        n_loops = int(loops.sum())
        src, dst = src[~loops], dst[~loops]
        key = np.unique(src * max(n, 1) + dst)
        n_dups = int(src.size - key.size)
        src, dst = key // max(n, 1), key % max(n, 1)
        out_off, out_tgt = _csr(n, src, dst)
        in_off, in_src = _csr(n, dst, src)
        return cls(
            ids=tuple(ids),
            out_offsets=_readonly(out_off),
            out_targets=_readonly(out_tgt),
            in_offsets=_readonly(in_off),
            in_sources=_readonly(in_src),
            self_loops_dropped=n_loops,
            duplicates_dropped=n_dups,
        )

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], nodes: Iterable[str] = ()) -> "FollowGraph":
        """Build from id pairs; nodes are indexed in first-appearance order."""
        index: dict[str, int] = {}
        for u in nodes:
            index.setdefault(u, len(index))
        src: list[int] = []
        dst: list[int] = []
        for u, v in edges:
            src.append(index.setdefault(u, len(index)))
            dst.append(index.setdefault(v, len(index)))
        return cls.from_index_pairs(list(index), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return int(self.out_targets.size)

    def index_of(self, user_id: str) -> int:
        try:
            return self._index[user_id]
        except KeyError:
            raise KeyError(f"user {user_id!r} not in graph") from None

    def __contains__(self, user_id: object) -> bool:
        return user_id in self._index

    def followees(self, i: int) -> np.ndarray:
        return self.out_targets[self.out_offsets[i] : self.out_offsets[i + 1]]

    def followers(self, i: int) -> np.ndarray:
        return self.in_sources[self.in_offsets[i] : self.in_offsets[i + 1]]

    def edges(self) -> Iterable[tuple[str, str]]:
        """Canonical edge list: sorted by (follower index, followee index)."""
        for i in range(self.node_count):
            for j in self.followees(i):
                yield self.ids[i], self.ids[j]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), np.diff(self.out_offsets))
        return src, self.out_targets

    def adjacency(self) -> sp.csr_matrix:
        """Sparse 0/1 matrix with ``A[u, v] = 1`` iff ``u`` follows ``v``."""
        n = self.node_count
        data = np.ones(self.edge_count, dtype=np.float64)
        return sp.csr_matrix((data, self.out_targets, self.out_offsets), shape=(n, n))

    def undirected(self) -> sp.csr_matrix:
        a = self.adjacency()
        u = ((a + a.T) > 0).astype(np.int64).tocsr()
        u.sort_indices()
        return u

    def subgraph(self, keep: Iterable[str]) -> "FollowGraph":
        """Induced subgraph on ``keep``, preserving the current index order."""
        keep_set = set(keep)
        mask = np.array([u in keep_set for u in self.ids], dtype=bool)
        new_index = np.full(self.node_count, -1, dtype=np.int64)
        new_index[mask] = np.arange(int(mask.sum()))
        src, dst = self.edge_arrays()
        sel = mask[src] & mask[dst]
        ids = [u for u, m in zip(self.ids, mask) if m]
        return FollowGraph.from_index_pairs(ids, new_index[src[sel]], new_index[dst[sel]])


@dataclass(frozen=True)
class NodeMetricVector:
    name: str
    values: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __len__(self) -> int:
        return int(self.values.size)

    def as_dict(self, g: FollowGraph) -> dict[str, float]:
        return {u: float(x) for u, x in zip(g.ids, self.values)}


def pagerank(
    g: FollowGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NodeMetricVector:
    """PageRank by power iteration; rank flows from follower to followee.

    Nodes without followees spread their mass uniformly. Iteration stops when
    the L1 change drops below ``tol`` or after ``max_iter`` sweeps; the
    returned vector records which happened.
    """
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must lie in (0, 1), got {damping}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.node_count
    if n == 0:
        raise ValueError("pagerank of an empty graph is undefined")

    out_deg = np.diff(g.out_offsets).astype(np.float64)
    dangling = out_deg == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / out_deg[~dangling]
    # transpose of the row-normalised adjacency: x_new = P^T x
    pt = (sp.diags(inv) @ g.adjacency()).T.tocsr()

    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dangling_mass = x[dangling].sum()
        x_new = damping * (pt @ x + dangling_mass / n) + (1.0 - damping) / n
        x_new /= x_new.sum()
        delta = np.abs(x_new - x).sum()
        x = x_new
        if delta < tol:
            converged = True
            break
    return NodeMetricVector("pagerank", _readonly(x), converged=converged, iterations=it)


def _triangles_block(u: sp.csr_matrix, lo: int, hi: int) -> np.ndarray:
    rows = u[lo:hi]
    # (U^2 ∘ U) row sums count each triangle at a node twice
    closed = (rows @ u).multiply(rows)
    return np.asarray(closed.sum(axis=1)).ravel() // 2


def triangle_counts(g: FollowGraph, threads: int = 1, block: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Per-node triangle count T and undirected degree d of the undirected projection."""
    u = g.undirected()
    n = g.node_count
    d = np.diff(u.indptr).astype(np.int64)
    bounds = [(lo, min(lo + block, n)) for lo in range(0, n, block)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _triangles_block(u, *b), bounds))
    else:
        parts = [_triangles_block(u, lo, hi) for lo, hi in bounds]
    t = np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, dtype=np.int64)
    return t, d


def clustering_coefficient(g: FollowGraph, threads: int = 1) -> NodeMetricVector:
    """cc(u) = 2T / (d (d-1)) on the undirected projection; 0 when d < 2."""
    t, d = triangle_counts(g, threads=threads)
    cc = np.zeros(g.node_count)
    ok = d >= 2
    cc[ok] = 2.0 * t[ok] / (d[ok] * (d[ok] - 1.0))
    return NodeMetricVector("clustering", _readonly(cc))


def degrees(g: FollowGraph) -> tuple[NodeMetricVector, NodeMetricVector, NodeMetricVector]:
    in_deg = np.diff(g.in_offsets).astype(np.float64)
    out_deg = np.diff(g.out_offsets).astype(np.float64)
    und = np.diff(g.undirected().indptr).astype(np.float64)
    return (
        NodeMetricVector("in_degree", _readonly(in_deg)),
        NodeMetricVector("out_degree", _readonly(out_deg)),
        NodeMetricVector("degree", _readonly(und)),
    )


def all_metrics(
    g: FollowGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> list[NodeMetricVector]:
    return [pagerank(g, damping, tol, max_iter), clustering_coefficient(g, threads), *degrees(g)]


def metric_rows(g: FollowGraph, vectors: Sequence[NodeMetricVector]) -> Iterable[tuple[str, str, float]]:
    """Rows for the ``user_id,metric,value`` export."""
    for vec in vectors:
        if len(vec) != g.node_count:
            raise ValueError(f"metric {vec.name} has {len(vec)} values for {g.node_count} nodes")
        for u, x in zip(g.ids, vec.values):
            yield u, vec.name, float(x)
