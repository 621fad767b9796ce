"""Sparse undirected graphs and the deterministic algorithms run on them.

Vertices are ``0..n-1``. Edges are stored as an ``(m, 2)`` int64 array with
``u < v`` in every row; an edge is referred to by its row index. Everything
here is a pure function of its inputs (results cached on a graph are derived
from immutable data).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "UNREACHABLE",
    "CYCLE_OVERFLOW",
    "NO_CYCLE",
    "SimpleGraph",
    "DisjointSets",
    "ComponentDecomposition",
    "components",
    "bfs_distances",
    "tree_diameter",
    "graph_diameter",
    "conn_edges",
    "bridges",
    "two_core_mask",
    "surplus",
    "girth",
    "count_simple_cycles",
    "component_subgraph",
]

#: Hop distance reported for vertices outside the source's component.
UNREACHABLE = np.iinfo(np.int64).max // 4
#: Returned by :func:`count_simple_cycles` when the count exceeds ``cap``.
CYCLE_OVERFLOW = -1
#: Girth of an acyclic component.
NO_CYCLE = UNREACHABLE


class SimpleGraph:
    """Undirected simple graph on vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array-like of shape (m, 2)
        Unordered vertex pairs. Rows are normalised to ``u < v``; the row order
        is kept so callers can refer to edges by index.
    """

    __slots__ = ("n", "edges", "__dict__")

    def __init__(self, n: int, edges=()):
        n = int(n)
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        arr = np.sort(arr, axis=1)
        if arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(arr[:, 0] == arr[:, 1]):
                raise ValueError("self-loops are not allowed")
            keys = arr[:, 0] * n + arr[:, 1]
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate edges are not allowed")
        arr.setflags(write=False)
        self.n = n
        self.edges = arr

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def __repr__(self) -> str:
        return f"SimpleGraph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimpleGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def keys(self) -> np.ndarray:
        """Integer key ``u * n + v`` of every edge."""
        return self.edges[:, 0] * self.n + self.edges[:, 1]

    def edge_key_set(self) -> frozenset[int]:
        return frozenset(self.keys.tolist())

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR adjacency ``(indptr, neighbour, edge_id)``.

        The neighbours of ``x`` are ``neighbour[indptr[x]:indptr[x+1]]`` and
        ``edge_id`` holds the index of the connecting edge.
        """
        m = self.m
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, dst[order], eid[order]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def neighbours(self, x: int) -> np.ndarray:
        indptr, nbr, _ = self.adjacency
        return nbr[indptr[x]:indptr[x + 1]]

    def adjacency_lists(self) -> list[list[tuple[int, int]]]:
        """Per-vertex ``[(neighbour, edge_id), ...]`` as plain Python lists."""
        indptr, nbr, eid = self.adjacency
        nbr_l, eid_l, ptr = nbr.tolist(), eid.tolist(), indptr.tolist()
        return [list(zip(nbr_l[ptr[x]:ptr[x + 1]], eid_l[ptr[x]:ptr[x + 1]]))
                for x in range(self.n)]

    def csr_matrix(self):
        m = self.m
        data = np.ones(2 * m, dtype=np.int8)
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        return coo_matrix((data, (rows, cols)), shape=(self.n, self.n)).tocsr()

    def edge_subgraph(self, edge_ids) -> "SimpleGraph":
        """Graph on the same vertex set keeping only ``edge_ids`` (in order)."""
        return SimpleGraph._trusted(self.n, self.edges[np.asarray(edge_ids, dtype=np.int64)])

    @classmethod
    def _trusted(cls, n: int, edges: np.ndarray) -> "SimpleGraph":
        # Skips validation; callers guarantee u < v rows without duplicates.
        g = cls.__new__(cls)
        arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
        arr.setflags(write=False)
        g.n = int(n)
        g.edges = arr
        return g

    @classmethod
    def from_keys(cls, n: int, keys) -> "SimpleGraph":
        keys = np.asarray(keys, dtype=np.int64)
        return cls._trusted(n, np.stack([keys // n, keys % n], axis=1))


class DisjointSets:
    """Union-find over ``0..n-1`` with union by rank and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.n_classes = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        """Merge the classes of ``a`` and ``b``; return False if already merged."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.n_classes -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


@dataclass(frozen=True)
class ComponentDecomposition:
    """Connected components ordered by decreasing size.

    Ties between equal sizes go to the component holding the smaller vertex
    label. ``labels[x]`` is the component index of vertex ``x``.
    """

    labels: np.ndarray
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.sizes.size)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def edge_labels(self, g: SimpleGraph) -> np.ndarray:
        return self.labels[g.edges[:, 0]] if g.m else np.zeros(0, dtype=np.int64)


def components(g: SimpleGraph) -> ComponentDecomposition:
    """Connected components of ``g`` in canonical order."""
    cached = g.__dict__.get("_components")
    if cached is not None:
        return cached
    if g.n == 0:
        out = ComponentDecomposition(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    else:
        k, raw = connected_components(g.csr_matrix(), directed=False)
        sizes = np.bincount(raw, minlength=k)
        first = np.full(k, g.n, dtype=np.int64)
        np.minimum.at(first, raw, np.arange(g.n))
        order = np.lexsort((first, -sizes))
        rank = np.empty(k, dtype=np.int64)
        rank[order] = np.arange(k)
        out = ComponentDecomposition(rank[raw].astype(np.int64), sizes[order].astype(np.int64))
    g.__dict__["_components"] = out
    return out


def component_subgraph(g: SimpleGraph, c: int) -> tuple[SimpleGraph, np.ndarray, np.ndarray]:
    """Extract component ``c`` relabelled to ``0..size-1``.

    Returns ``(subgraph, vertices, edge_ids)`` where ``vertices[i]`` is the
    original label of local vertex ``i`` and ``edge_ids`` index into ``g``.
    """
    comp = components(g)
    verts = comp.members(c)
    eids = np.flatnonzero(comp.edge_labels(g) == c)
    local = np.full(g.n, -1, dtype=np.int64)
    local[verts] = np.arange(verts.size)
    sub = SimpleGraph._trusted(verts.size, local[g.edges[eids]])
    return sub, verts, eids


def _hops(g: SimpleGraph, sources) -> np.ndarray:
    """Hop distances from each source, ``inf`` where unreachable."""
    return shortest_path(g.csr_matrix(), method="D", directed=False,
                         unweighted=True, indices=sources)


def bfs_distances(g: SimpleGraph, source: int) -> np.ndarray:
    """Hop distances from ``source``; :data:`UNREACHABLE` outside its component."""
    if not 0 <= source < g.n:
        raise ValueError("source out of range")
    d = _hops(g, [source])[0]
    out = np.full(g.n, UNREACHABLE, dtype=np.int64)
    finite = np.isfinite(d)
    out[finite] = d[finite].astype(np.int64)
    return out


def two_core_mask(g: SimpleGraph) -> np.ndarray:
    """Boolean mask of the edges surviving repeated removal of degree-1 vertices."""
    alive = np.ones(g.m, dtype=bool)
    if g.m == 0:
        return alive
    u, v = g.edges[:, 0], g.edges[:, 1]
    while True:
        deg = np.bincount(u[alive], minlength=g.n) + np.bincount(v[alive], minlength=g.n)
        leafy = alive & ((deg[u] == 1) | (deg[v] == 1))
        if not leafy.any():
            return alive
        alive &= ~leafy


def _bridge_flags(n: int, edges: list[tuple[int, int]]) -> list[bool]:
    """Iterative Tarjan low-link; ``flags[i]`` is True iff edge ``i`` is a bridge."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    disc = [-1] * n
    low = [0] * n
    flags = [False] * len(edges)
    t = 0
    for root in range(n):
        if disc[root] != -1 or not adj[root]:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            x, via, it = stack[-1]
            advanced = False
            for y, e in it:
                if e == via:
                    continue
                if disc[y] == -1:
                    disc[y] = low[y] = t
                    t += 1
                    stack.append((y, e, iter(adj[y])))
                    advanced = True
                    break
                if disc[y] < low[x]:
                    low[x] = disc[y]
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                if low[x] < low[parent]:
                    low[parent] = low[x]
                if low[x] > disc[parent]:
                    flags[via] = True
    return flags


def conn_edges(g: SimpleGraph) -> np.ndarray:
    """Sorted indices of the edges lying on at least one cycle (non-bridges).

    Only the 2-core can carry cycles, so bridge-finding runs on it alone;
    on critical random graphs the 2-core is tiny compared to the graph.
    """
    cached = g.__dict__.get("_conn")
    if cached is not None:
        return cached
    core = np.flatnonzero(two_core_mask(g))
    if core.size == 0:
        out = core.astype(np.int64)
    else:
        sub_edges = g.edges[core]
        verts, inv = np.unique(sub_edges, return_inverse=True)
        local = inv.reshape(-1, 2).tolist()
        flags = _bridge_flags(verts.size, [tuple(e) for e in local])
        out = core[~np.asarray(flags, dtype=bool)].astype(np.int64)
    out.setflags(write=False)
    g.__dict__["_conn"] = out
    return out


def bridges(g: SimpleGraph) -> np.ndarray:
    """Sorted indices of the bridges of ``g``."""
    mask = np.ones(g.m, dtype=bool)
    mask[conn_edges(g)] = False
    return np.flatnonzero(mask)


def surplus(g: SimpleGraph, component: int) -> int:
    """``#edges - #vertices + 1`` of the given component."""
    comp = components(g)
    if not 0 <= component < comp.count:
        raise ValueError("no such component")
    m_c = int(np.count_nonzero(comp.edge_labels(g) == component))
    return m_c - int(comp.sizes[component]) + 1


def tree_diameter(g: SimpleGraph, component: int) -> int:
    """Diameter (in hops) of an acyclic component, by double BFS."""
    if surplus(g, component) != 0:
        raise ValueError("tree_diameter requires an acyclic component")
    sub, _, _ = component_subgraph(g, component)
    if sub.n == 1:
        return 0
    d0 = _hops(sub, [0])[0]
    far = int(np.argmax(d0))
    return int(_hops(sub, [far])[0].max())


def graph_diameter(g: SimpleGraph) -> int:
    """Largest finite hop distance over all components, by BFS from every vertex."""
    touched = np.unique(g.edges)
    if touched.size == 0:
        return 0
    local = np.full(g.n, -1, dtype=np.int64)
    local[touched] = np.arange(touched.size)
    sub = SimpleGraph._trusted(touched.size, local[g.edges])
    best = 0
    block = max(1, 4_000_000 // max(sub.n, 1))
    for start in range(0, sub.n, block):
        d = _hops(sub, np.arange(start, min(sub.n, start + block)))
        finite = d[np.isfinite(d)]
        if finite.size:
            best = max(best, int(finite.max()))
    return best


def _core_of_component(g: SimpleGraph, component: int) -> tuple[int, list[tuple[int, int]]]:
    """2-core of a component as ``(vertex_count, local_edge_list)``."""
    comp = components(g)
    if not 0 <= component < comp.count:
        raise ValueError("no such component")
    in_comp = comp.edge_labels(g) == component
    core = two_core_mask(g) & in_comp
    edges = g.edges[core]
    if edges.size == 0:
        return 0, []
    verts, inv = np.unique(edges, return_inverse=True)
    return int(verts.size), [tuple(e) for e in inv.reshape(-1, 2).tolist()]


def girth(g: SimpleGraph, component: int) -> int:
    """Length of the shortest cycle in a component, :data:`NO_CYCLE` if acyclic.

    BFS from every vertex of the component's 2-core; a non-tree edge ``(x, y)``
    met during the search from ``r`` closes a walk of length
    ``d(x) + d(y) + 1``, and the minimum over all roots is the girth.
    """
    k, edges = _core_of_component(g, component)
    if k == 0:
        return NO_CYCLE
    adj: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    best = NO_CYCLE
    for r in range(k):
        dist = {r: 0}
        via = {r: -1}
        frontier = [r]
        while frontier:
            nxt = []
            for x in frontier:
                dx = dist[x]
                if 2 * dx + 1 >= best:
                    break
                for y, e in adj[x]:
                    if e == via[x]:
                        continue
                    if y in dist:
                        length = dx + dist[y] + 1
                        if length < best:
                            best = length
                    else:
                        dist[y] = dx + 1
                        via[y] = e
                        nxt.append(y)
            frontier = nxt
    return best


def count_simple_cycles(g: SimpleGraph, component: int, cap: int = 10**6) -> int:
    """Number of distinct simple cycles in a component.

    The component's 2-core is contracted to a multigraph on its branch
    vertices (degree >= 3), every maximal degree-2 path becoming one edge;
    simple cycles of the component correspond one-to-one to simple cycles of
    that multigraph, which are enumerated by DFS. Returns
    :data:`CYCLE_OVERFLOW` once the count exceeds ``cap``.
    """
    k, edges = _core_of_component(g, component)
    if k == 0:
        return 0
    adj: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for i, (a, b) in enumerate(edges):
        adj[a].append((b, i))
        adj[b].append((a, i))
    branch = [x for x in range(k) if len(adj[x]) >= 3]
    if not branch:
        return 1  # the 2-core of a connected graph is connected: a single cycle

    # Contract degree-2 chains into multigraph edges between branch vertices.
    index = {x: i for i, x in enumerate(branch)}
    seen = [False] * len(edges)
    multi: list[tuple[int, int]] = []
    for x in branch:
        for y, e in adj[x]:
            if seen[e]:
                continue
            seen[e] = True
            cur = y
            while cur not in index:
                (a, ea), (b, eb) = adj[cur]
                cur, e = (b, eb) if ea == e else (a, ea)
                seen[e] = True
            multi.append((index[x], index[cur]))
    return _count_multigraph_cycles(len(branch), multi, cap)


def _count_multigraph_cycles(k: int, edges: list[tuple[int, int]], cap: int) -> int:
    loops = sum(1 for a, b in edges if a == b)
    if loops > cap:
        return CYCLE_OVERFLOW
    adj: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for i, (a, b) in enumerate(edges):
        if a != b:
            adj[a].append((b, i))
            adj[b].append((a, i))
    # Each non-loop cycle is found twice (once per direction) from its
    # smallest vertex, so the directed count is compared to 2 * cap.
    directed = 0
    limit = 2 * (cap - loops)
    for s in range(k):
        on_path = [False] * k
        on_path[s] = True
        stack = [(s, -1, iter(adj[s]))]
        while stack:
            x, via, it = stack[-1]
            advanced = False
            for y, e in it:
                if e == via or y < s:
                    continue
                if y == s:
                    directed += 1
                    if directed > limit:
                        return CYCLE_OVERFLOW
                elif not on_path[y]:
                    on_path[y] = True
                    stack.append((y, e, iter(adj[y])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                on_path[x] = False
    return loops + directed // 2
