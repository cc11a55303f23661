"""Undirected simple graphs in compressed adjacency form, plus loaders."""
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from egp import kernels

_SPLIT = re.compile(r"[\s,]+")


class GraphLoadError(ValueError):
    pass


@dataclass(frozen=True)
class LoadSummary:
    self_loops: int = 0
    duplicate_edges: int = 0
    isolated_nodes: int = 0

    def warnings(self):
        out = []
        if self.self_loops:
            out.append(f"dropped {self.self_loops} self-loop(s)")
        if self.duplicate_edges:
            out.append(f"collapsed {self.duplicate_edges} duplicate edge(s)")
        if self.isolated_nodes:
            out.append(f"{self.isolated_nodes} isolated node(s) are ineligible as egos")
        return out


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    ``indptr``/``indices`` hold sorted neighbor lists per dense node index;
    ``ids[i]`` is the external id of internal node ``i``.
    """

    indptr: np.ndarray
    indices: np.ndarray
    ids: tuple
    summary: LoadSummary = field(default_factory=LoadSummary)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def n(self):
        return self.indptr.size - 1

    @property
    def m(self):
        return self.indices.size // 2

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self):
        """Edges (u, v) with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = src < self.indices
        return np.column_stack((src[keep], self.indices[keep]))

    def index_of(self, external_ids):
        lookup = {ext: i for i, ext in enumerate(self.ids)}
        as_int = all(isinstance(x, int) for x in self.ids)
        try:
            return np.array(
                [lookup[_normalize_id(x) if as_int else str(x)] for x in external_ids],
                dtype=np.int64,
            )
        except KeyError as exc:
            raise KeyError(f"unknown node id {exc.args[0]!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.ids == other.ids
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    @classmethod
    def from_edges(cls, edges, n=None, ids=None):
        """Build from 0-based integer pairs; loops and duplicates are normalized away."""
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if n is None:
            n = int(arr.max()) + 1 if arr.size else 0
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        if ids is None:
            ids = tuple(range(n))
        return _build(arr[:, 0], arr[:, 1], n, tuple(ids))


@dataclass(frozen=True, eq=False)
class EgoSubgraph:
    """Second-neighborhood graph restricted to egos, indexed by position in ``ego_ids``."""

    ego_ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def size(self):
        return self.ego_ids.size

    @property
    def edge_count(self):
        return self.indices.size // 2

    def edges(self):
        src = np.repeat(np.arange(self.size, dtype=np.int64), np.diff(self.indptr))
        keep = src < self.indices
        return np.column_stack((src[keep], self.indices[keep]))


def _csr(src, dst, n):
    both_src = np.concatenate((src, dst))
    both_dst = np.concatenate((dst, src))
    order = np.lexsort((both_dst, both_src))
    indices = both_dst[order].astype(np.int64)
    counts = np.bincount(both_src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


def _build(u, v, n, ids):
    loops = u == v
    u, v = u[~loops], v[~loops]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    pairs = np.unique(np.column_stack((lo, hi)), axis=0) if lo.size else np.zeros((0, 2), np.int64)
    indptr, indices = _csr(pairs[:, 0], pairs[:, 1], n)
    summary = LoadSummary(
        self_loops=int(loops.sum()),
        duplicate_edges=int(lo.size - pairs.shape[0]),
        isolated_nodes=int(np.count_nonzero(np.diff(indptr) == 0)),
    )
    return Graph(indptr, indices, ids, summary)


def _normalize_id(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    s = str(x).strip()
    try:
        return int(s)
    except ValueError:
        return s


def _read_edgelist(path):
    tokens = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "%#":
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) < 2:
            raise GraphLoadError(f"{path}:{lineno}: expected an id pair, got {raw!r}")
        tokens.append((parts[0], parts[1]))
    if not tokens:
        raise GraphLoadError(f"{path}: no edges")
    flat = [t for pair in tokens for t in pair]
    try:
        flat = [int(t) for t in flat]
    except ValueError:
        pass
    ids = sorted(set(flat))
    lookup = {ext: i for i, ext in enumerate(ids)}
    arr = np.fromiter((lookup[x] for x in flat), dtype=np.int64, count=len(flat))
    return arr[0::2], arr[1::2], len(ids), tuple(ids)


def _read_mtx(path):
    n = None
    us, vs = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "%":
            continue
        parts = line.split()
        try:
            if n is None:
                rows, cols = int(parts[0]), int(parts[1])
                n = max(rows, cols)
                continue
            i, j = int(parts[0]), int(parts[1])
        except (ValueError, IndexError):
            raise GraphLoadError(f"{path}:{lineno}: cannot parse {raw!r}") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphLoadError(f"{path}:{lineno}: index out of range 1..{n}")
        us.append(i - 1)
        vs.append(j - 1)
    if n is None:
        raise GraphLoadError(f"{path}: missing MatrixMarket size line")
    return np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), n, tuple(range(1, n + 1))


def load_graph(path, fmt="edgelist"):
    """Load an edge list or MatrixMarket pattern file.

    Edge-list ids are remapped to dense indices in sorted id order; MatrixMarket
    ids ``1..N`` map to ``0..N-1``. Self-loops and duplicates are dropped and
    counted in ``graph.summary``.
    """
    path = Path(path)
    if not path.exists():
        raise GraphLoadError(f"{path}: no such file")
    if fmt == "edgelist":
        u, v, n, ids = _read_edgelist(path)
    elif fmt == "mtx":
        u, v, n, ids = _read_mtx(path)
    else:
        raise GraphLoadError(f"unknown graph format {fmt!r}")
    g = _build(u, v, n, ids)
    if g.m == 0:
        raise GraphLoadError(f"{path}: graph has no edges after normalization")
    return g


def write_edgelist(g, path):
    lines = [f"{g.ids[u]} {g.ids[v]}" for u, v in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def second_neighborhood_ego_graph(g, egos):
    """Egos joined when non-adjacent in ``g`` but sharing a common neighbor.

    Never materializes the full second-neighborhood matrix; cost is the sum of
    ``d_k`` over neighbors ``k`` of each ego.
    """
    egos = np.asarray(egos)
    if egos.dtype == bool:
        egos = np.flatnonzero(egos)
    egos = np.unique(egos.astype(np.int64))
    if egos.size and (egos[0] < 0 or egos[-1] >= g.n):
        raise ValueError("ego id out of range")
    src, dst = kernels.second_neighbor_pairs(g.indptr, g.indices, egos)
    indptr, indices = _csr(src, dst, egos.size)
    return EgoSubgraph(egos, indptr, indices)
