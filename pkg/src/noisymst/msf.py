"""Minimum spanning forests: Kruskal, reverse-delete and random cycle-breaking.

Kruskal is the production path. Reverse-delete (repeatedly drop the heaviest
edge that still lies on a cycle) is kept as an independent cross-check, and
is also what the joint kernel runs on each graph. The random kernels
``k_infinity`` / ``k_infinity_joint`` sample the MSF law of a graph under
exchangeable distinct weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from .graph import DisjointSets, SimpleGraph, _bridge_flags, conn_edges
from .sampler import CoupledSample, DerivedGraphs

__all__ = [
    "DuplicateWeightError",
    "WeightedEdgeList",
    "JointAssignment",
    "JointMsfResult",
    "kruskal_mask",
    "kruskal_msf",
    "reverse_delete_msf",
    "k_infinity",
    "k_infinity_joint",
    "joint_msf_from_sample",
]

Ties = Literal["reject", "index"]
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class DuplicateWeightError(ValueError):
    """Two edges of one graph carry the same weight."""


@dataclass(frozen=True)
class WeightedEdgeList:
    base: SimpleGraph
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.base.m,):
            raise ValueError("one weight per edge is required")
        object.__setattr__(self, "weights", w)

    def has_ties(self) -> bool:
        return np.unique(self.weights).size != self.weights.size


def _order(weights: np.ndarray, ties: Ties) -> np.ndarray:
    """Ascending edge order; equal weights are rejected or broken by index."""
    order = np.argsort(weights, kind="stable")
    if ties == "reject" and order.size > 1 and np.any(np.diff(weights[order]) == 0):
        raise DuplicateWeightError("edge weights must be distinct")
    return order


def kruskal_mask(g: WeightedEdgeList, ties: Ties = "reject") -> np.ndarray:
    """Boolean mask of the edges Kruskal's algorithm keeps."""
    order = _order(g.weights, ties)
    keep = np.zeros(g.base.m, dtype=bool)
    ds = DisjointSets(g.base.n)
    u = g.base.edges[:, 0].tolist()
    v = g.base.edges[:, 1].tolist()
    target = g.base.n - 1
    kept = 0
    for e in order.tolist():
        if ds.union(u[e], v[e]):
            keep[e] = True
            kept += 1
            if kept == target:
                break
    return keep


def kruskal_msf(g: WeightedEdgeList, ties: Ties = "reject") -> SimpleGraph:
    """Minimum spanning forest by Kruskal's algorithm (edges keep input order)."""
    return g.base.edge_subgraph(np.flatnonzero(kruskal_mask(g, ties)))


def _path_avoiding(adj: list[dict[int, int]], a: int, b: int, skip: int) -> bool:
    """True if ``a`` reaches ``b`` without using edge ``skip``."""
    if a == b:
        return True
    seen = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        for y, e in adj[x].items():
            if e == skip or y in seen:
                continue
            if y == b:
                return True
            seen.add(y)
            stack.append(y)
    return False


def reverse_delete_msf(g: WeightedEdgeList, ties: Ties = "reject") -> SimpleGraph:
    """Minimum spanning forest by reverse-delete.

    Edges are scanned from heaviest to lightest and an edge is deleted when it
    still lies on a cycle of the current graph. This deletes, at every step,
    the heaviest edge of the current cycle set: an edge that is a bridge when
    scanned stays a bridge once more edges are removed.
    """
    order = _order(g.weights, ties)[::-1]
    n = g.base.n
    u = g.base.edges[:, 0].tolist()
    v = g.base.edges[:, 1].tolist()
    adj: list[dict[int, int]] = [dict() for _ in range(n)]
    for e in range(g.base.m):
        adj[u[e]][v[e]] = e
        adj[v[e]][u[e]] = e
    keep = np.ones(g.base.m, dtype=bool)
    cyclic = [not f for f in _bridge_flags(n, list(zip(u, v)))]
    for e in order.tolist():
        if not cyclic[e]:
            continue
        a, b = u[e], v[e]
        if _path_avoiding(adj, a, b, e):
            del adj[a][b]
            del adj[b][a]
            keep[e] = False
    return g.base.edge_subgraph(np.flatnonzero(keep))


def _as_generator(rng: SeedLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _component_rngs(rng: SeedLike):
    """Per-component generator factory.

    A seed yields an independent stream per component id; a live generator is
    shared and consumed in component order.
    """
    if isinstance(rng, np.random.Generator):
        return lambda c: rng
    entropy = rng.entropy if isinstance(rng, np.random.SeedSequence) else rng
    return lambda c: np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(c,)))


def _break_cycles(n: int, edges: list[tuple[int, int]], gen: np.random.Generator) -> list[int]:
    """Indices of ``edges`` deleted by uniform cycle-breaking."""
    alive = list(range(len(edges)))
    dropped = []
    while True:
        flags = _bridge_flags(n, [edges[i] for i in alive])
        cyc = [alive[i] for i, f in enumerate(flags) if not f]
        if not cyc:
            return dropped
        drop = cyc[int(gen.integers(len(cyc)))]
        alive.remove(drop)
        dropped.append(drop)


def k_infinity(g: SimpleGraph, rng: SeedLike = None) -> SimpleGraph:
    """Random cycle-breaking: delete a uniform edge of the cycle set until acyclic.

    With a live generator the whole graph is broken in one loop drawing from
    it. With a seed, each component carrying a cycle draws from its own
    stream labelled by the component's canonical index, so the result does not
    depend on the order components are processed in. Acyclic graphs consume
    no randomness either way.
    """
    from .graph import components

    edges = [tuple(e) for e in g.edges.tolist()]
    if all(_bridge_flags(g.n, edges)):
        return g
    keep = np.ones(g.m, dtype=bool)
    if isinstance(rng, np.random.Generator):
        keep[_break_cycles(g.n, edges, rng)] = False
        return g.edge_subgraph(np.flatnonzero(keep))
    conn = conn_edges(g)
    labels = components(g).edge_labels(g)
    make_rng = _component_rngs(rng)
    for c in np.unique(labels[conn]).tolist():
        eids = np.flatnonzero(labels == c)
        verts, inv = np.unique(g.edges[eids], return_inverse=True)
        local = [tuple(x) for x in inv.reshape(-1, 2).tolist()]
        keep[eids[_break_cycles(verts.size, local, make_rng(c))]] = False
    return g.edge_subgraph(np.flatnonzero(keep))


@dataclass(frozen=True, eq=False)
class JointAssignment:
    """Two graphs with weights that agree exactly on the shared edge set ``h``.

    ``h`` holds edge keys (``u * n + v``); both graphs share the vertex count.
    """

    g1: SimpleGraph
    g2: SimpleGraph
    h: frozenset
    weights1: np.ndarray
    weights2: np.ndarray

    def __post_init__(self):
        if self.g1.n != self.g2.n:
            raise ValueError("graphs must share the vertex set")
        k1 = self.g1.keys.tolist()
        k2 = self.g2.keys.tolist()
        if not self.h <= set(k1) & set(k2):
            raise ValueError("h must be contained in both edge sets")
        w1 = dict(zip(k1, np.asarray(self.weights1, float).tolist()))
        w2 = dict(zip(k2, np.asarray(self.weights2, float).tolist()))
        for key in set(k1) & set(k2):
            if (w1[key] == w2[key]) != (key in self.h):
                raise ValueError("weights must agree exactly on h and nowhere else")

    @classmethod
    def random(cls, g1: SimpleGraph, g2: SimpleGraph, h, rng: SeedLike = None) -> "JointAssignment":
        """i.i.d. uniform weights on the union of edges, one shared value per edge of ``h``."""
        gen = _as_generator(rng)
        h = frozenset(int(x) for x in h)
        k1 = g1.keys.tolist()
        k2 = g2.keys.tolist()
        if not h <= set(k1) & set(k2):
            raise ValueError("h must be contained in both edge sets")
        s1 = set(k1)
        union = sorted(s1 | set(k2))
        shared = dict(zip(union, gen.random(len(union)).tolist()))
        own2 = gen.random(len(k2)).tolist()
        w1 = np.array([shared[k] for k in k1])
        w2 = np.array([shared[k] if k in h or k not in s1 else own2[i]
                       for i, k in enumerate(k2)])
        return cls(g1, g2, h, w1, w2)


def k_infinity_joint(a: Union[JointAssignment, SimpleGraph], g2: Optional[SimpleGraph] = None,
                     h=None, rng: SeedLike = None) -> tuple[SimpleGraph, SimpleGraph]:
    """Joint cycle-breaking of two graphs whose weights coincide exactly on ``h``.

    Accepts either a :class:`JointAssignment` or ``(g1, g2, h, rng)``, in which
    case exchangeable weights are drawn first.
    """
    if not isinstance(a, JointAssignment):
        a = JointAssignment.random(a, g2, h if h is not None else (), rng)
    m1 = reverse_delete_msf(WeightedEdgeList(a.g1, a.weights1), ties="index")
    m2 = reverse_delete_msf(WeightedEdgeList(a.g2, a.weights2), ties="index")
    return m1, m2


@dataclass(frozen=True, eq=False)
class JointMsfResult:
    m: SimpleGraph
    m_eps: SimpleGraph
    j_set: np.ndarray  # edge keys of Conn(g) & Conn(g_eps)
    derived: DerivedGraphs

    @property
    def j_size(self) -> int:
        return int(self.j_set.size)


def _msf_keep_cycles_only(g: SimpleGraph, weights: np.ndarray) -> SimpleGraph:
    # Bridges belong to every spanning forest; Kruskal only has to decide the
    # cycle edges, and every cycle of g lies inside them.
    conn = conn_edges(g)
    keep = np.ones(g.m, dtype=bool)
    if conn.size:
        sub = WeightedEdgeList(g.edge_subgraph(conn), weights[conn])
        keep[conn] = kruskal_mask(sub, ties="index")
    return g.edge_subgraph(np.flatnonzero(keep))


def joint_msf_from_sample(d: DerivedGraphs, sample: CoupledSample) -> JointMsfResult:
    """The realised MSF pair under the coupled weights, plus the bad-edge set."""
    m = _msf_keep_cycles_only(d.g, sample.w[d.g_index])
    m_eps = _msf_keep_cycles_only(d.g_eps, sample.w_eps[d.g_eps_index])
    j = np.intersect1d(d.g.keys[conn_edges(d.g)], d.g_eps.keys[conn_edges(d.g_eps)])
    return JointMsfResult(m, m_eps, j, d)
