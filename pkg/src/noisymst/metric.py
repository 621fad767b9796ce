"""Finite measured metric spaces, rescaled graphs and GHP distances.

The GHP distance between two finite spaces of equal total mass is taken in
its correspondence/coupling form::

    d(X, Y) = min over full correspondences R of
              max( dis(R) / 2, min over couplings pi of pi(complement of R) )

``ghp_exact`` evaluates it exactly for tiny spaces, ``ghp_upper_bound`` gives
a cheap certified upper bound for anything larger.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .graph import SimpleGraph, _hops, component_subgraph, components, graph_diameter

__all__ = [
    "EXACT_LIMIT",
    "FiniteMeasuredMetricSpace",
    "scale_components",
    "scale_probability",
    "distortion",
    "max_transport_on_support",
    "ghp_exact",
    "ghp_upper_bound",
    "ghp",
    "ghp_to_zero",
    "ghp4",
    "symmetric_difference_bound",
    "read_space",
    "write_space",
]

#: Largest ``|X| * |Y|`` handled by :func:`ghp_exact`.
EXACT_LIMIT = 20
_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteMeasuredMetricSpace:
    dist: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        mu = np.asarray(self.mass, dtype=float).reshape(-1)
        k = mu.size
        if d.shape != (k, k):
            raise ValueError("distance matrix must be k x k for k masses")
        if np.any(mu < 0) or np.any(d < 0):
            raise ValueError("masses and distances must be nonnegative")
        if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must be symmetric with zero diagonal")
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "mass", mu)

    @property
    def k(self) -> int:
        return int(self.mass.size)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.mass.tolist())

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.k else 0.0

    def satisfies_triangle(self, tol: float = 1e-12) -> bool:
        d = self.dist
        return bool(np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + tol))

    def relabel(self, perm: Sequence[int]) -> "FiniteMeasuredMetricSpace":
        perm = np.asarray(perm)
        return FiniteMeasuredMetricSpace(self.dist[np.ix_(perm, perm)], self.mass[perm])


def _hop_space(g: SimpleGraph, scale: float, mass) -> FiniteMeasuredMetricSpace:
    d = _hops(g, np.arange(g.n)) if g.n else np.zeros((0, 0))
    return FiniteMeasuredMetricSpace(d * scale, np.full(g.n, mass, dtype=float))


def scale_components(g: SimpleGraph, n: int) -> list[FiniteMeasuredMetricSpace]:
    """One space per component, hop metric times ``n**(-1/3)``, vertex mass ``n**(-2/3)``.

    Components come in canonical order (largest first).
    """
    out = []
    for c in range(components(g).count):
        sub, _, _ = component_subgraph(g, c)
        out.append(_hop_space(sub, n ** (-1.0 / 3.0), n ** (-2.0 / 3.0)))
    return out


def scale_probability(g: SimpleGraph, n: int) -> FiniteMeasuredMetricSpace:
    """A connected graph with hop metric times ``n**(-1/3)`` and uniform probability."""
    if components(g).count != 1:
        raise ValueError("scale_probability needs a connected graph")
    return _hop_space(g, n ** (-1.0 / 3.0), 1.0 / g.n)


def distortion(x: FiniteMeasuredMetricSpace, y: FiniteMeasuredMetricSpace,
               pairs: np.ndarray, chunk: int = 2048) -> float:
    """``max |d_x(i, i') - d_y(j, j')|`` over pairs ``(i, j), (i', j')`` of ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    i, j = pairs[:, 0], pairs[:, 1]
    best = 0.0
    for s in range(0, i.size, chunk):
        block = np.abs(x.dist[np.ix_(i[s:s + chunk], i)] - y.dist[np.ix_(j[s:s + chunk], j)])
        if block.size:
            best = max(best, float(block.max()))
    return best


def max_transport_on_support(mx: np.ndarray, my: np.ndarray, support) -> float:
    """Largest mass a coupling of ``mx`` and ``my`` can place on ``support``.

    By max-flow/min-cut on the bipartite network, this equals the minimum over
    subsets ``A`` of the smaller side of ``mass(side minus A) + mass(N(A))``,
    which is enumerated directly.
    """
    support = list(support)
    flip = mx.size > my.size
    if flip:
        mx, my = my, mx
        support = [(j, i) for i, j in support]
    nbrs = [0] * mx.size
    for i, j in support:
        nbrs[i] |= 1 << j
    mx_list, my_list = mx.tolist(), my.tolist()
    best = np.inf
    for bits in range(1 << len(mx_list)):
        reach = 0
        terms = []
        for i, m in enumerate(mx_list):
            if bits >> i & 1:
                reach |= nbrs[i]
            else:
                terms.append(m)
        terms.extend(my_list[j] for j in range(len(my_list)) if reach >> j & 1)
        # fsum is correctly rounded, so equal cuts compare equal whatever the labelling.
        best = min(best, math.fsum(terms))
    return float(best)


def _check_masses(x, y):
    if abs(x.total_mass - y.total_mass) > _MASS_TOL * max(1.0, x.total_mass):
        raise ValueError("ghp_exact requires equal total masses")


def _maximal_cliques(adj: list[int], size: int):
    """Bron-Kerbosch with pivoting over bitmask adjacency."""
    def expand(r, p, x):
        if not p and not x:
            yield r
            return
        pivot = max(range(size), key=lambda u: bin(adj[u] & p).count("1") if (p | x) >> u & 1 else -1)
        cand = p & ~adj[pivot]
        while cand:
            v = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            yield from expand(r | 1 << v, p & adj[v], x & adj[v])
            p &= ~(1 << v)
            x |= 1 << v

    yield from expand(0, (1 << size) - 1, 0)


def ghp_exact(x: FiniteMeasuredMetricSpace, y: FiniteMeasuredMetricSpace) -> float:
    """Exact GHP distance for ``|X| * |Y| <= EXACT_LIMIT`` and equal total mass.

    For each candidate distortion level ``delta`` (ascending), the
    correspondences with ``dis(R) <= delta`` are the cliques of a
    compatibility graph on point pairs. Missing mass only shrinks as ``R``
    grows, so only maximal cliques that are full need checking. The search
    stops once ``delta / 2`` reaches the incumbent.
    """
    if x.k * y.k > EXACT_LIMIT:
        raise ValueError(f"ghp_exact is limited to |X|*|Y| <= {EXACT_LIMIT}")
    if x.k == 0 or y.k == 0:
        raise ValueError("spaces must be nonempty")
    _check_masses(x, y)
    cells = [(i, j) for i in range(x.k) for j in range(y.k)]
    size = len(cells)
    gap = np.zeros((size, size))
    for a, (i, j) in enumerate(cells):
        for b, (i2, j2) in enumerate(cells):
            gap[a, b] = abs(x.dist[i, i2] - y.dist[j, j2])
    full_x = (1 << x.k) - 1
    full_y = (1 << y.k) - 1
    best = np.inf
    for delta in np.unique(gap):
        if delta / 2 >= best:
            break
        adj = [0] * size
        for a in range(size):
            for b in range(size):
                if a != b and gap[a, b] <= delta:
                    adj[a] |= 1 << b
        for clique in _maximal_cliques(adj, size):
            members = [cells[a] for a in range(size) if clique >> a & 1]
            cov_x = cov_y = 0
            for i, j in members:
                cov_x |= 1 << i
                cov_y |= 1 << j
            if cov_x != full_x or cov_y != full_y:
                continue
            flow = max_transport_on_support(x.mass, y.mass, members)
            missing = max(0.0, min(x.total_mass, y.total_mass) - flow)
            best = min(best, max(delta / 2, missing))
    return float(best)


def _eccentricity_order(s: FiniteMeasuredMetricSpace) -> np.ndarray:
    ecc = s.dist.max(axis=1) if s.k else np.zeros(0)
    return np.lexsort((np.arange(s.k), ecc))


def ghp_upper_bound(x: FiniteMeasuredMetricSpace, y: FiniteMeasuredMetricSpace) -> float:
    """Upper bound from a greedy monotone coupling of the two spaces.

    Points of both spaces are sorted by eccentricity (ties by label) and the
    masses are matched along that order by the north-west-corner rule. The
    coupling's support plus a rank-matched partner for any zero-mass point is
    a full correspondence carrying all transportable mass, so the bound is
    ``max(dis(R) / 2, |mass(X) - mass(Y)|)``.
    """
    if x.k == 0 or y.k == 0:
        return ghp_to_zero(y if x.k == 0 else x) if x.k + y.k else 0.0
    ox, oy = _eccentricity_order(x), _eccentricity_order(y)
    mx, my = x.mass[ox].astype(float), y.mass[oy].astype(float)
    pairs = set()
    a = b = 0
    rx, ry = (mx[0] if mx.size else 0.0), (my[0] if my.size else 0.0)
    while a < x.k and b < y.k:
        pairs.add((int(ox[a]), int(oy[b])))
        if rx <= ry:
            ry -= rx
            a += 1
            rx = mx[a] if a < x.k else 0.0
        else:
            rx -= ry
            b += 1
            ry = my[b] if b < y.k else 0.0
    # Points never reached (zero mass, or past the shorter total) get a rank partner.
    covered_x = {i for i, _ in pairs}
    covered_y = {j for _, j in pairs}
    for r in range(x.k):
        if int(ox[r]) not in covered_x:
            pairs.add((int(ox[r]), int(oy[min(y.k - 1, r * y.k // x.k)])))
    for r in range(y.k):
        if int(oy[r]) not in covered_y:
            pairs.add((int(ox[min(x.k - 1, r * x.k // y.k)]), int(oy[r])))
    dis = distortion(x, y, np.array(sorted(pairs)))
    return float(max(dis / 2, abs(x.total_mass - y.total_mass)))


def ghp_to_zero(x: FiniteMeasuredMetricSpace) -> float:
    """Distance to the zero space, taken as ``max(diam / 2, total mass)``."""
    return max(x.diameter / 2, x.total_mass)


Mode = Literal["exact", "bound"]


def ghp(x: FiniteMeasuredMetricSpace, y: FiniteMeasuredMetricSpace, mode: Mode = "exact") -> float:
    """Exact distance when admissible and requested, otherwise the upper bound."""
    admissible = x.k * y.k <= EXACT_LIMIT and abs(x.total_mass - y.total_mass) <= _MASS_TOL
    if mode == "exact" and admissible and x.k and y.k:
        return ghp_exact(x, y)
    return ghp_upper_bound(x, y)


def ghp4(s: Sequence[FiniteMeasuredMetricSpace], t: Sequence[FiniteMeasuredMetricSpace],
         mode: Mode = "exact") -> float:
    """l4 aggregate of per-index GHP distances, the shorter list padded with the zero space."""
    total = 0.0
    for idx in range(max(len(s), len(t))):
        if idx >= len(s):
            d = ghp_to_zero(t[idx])
        elif idx >= len(t):
            d = ghp_to_zero(s[idx])
        else:
            d = ghp(s[idx], t[idx], mode)
        total += d ** 4
    return total ** 0.25


def symmetric_difference_bound(g: SimpleGraph, g_eps: SimpleGraph, n: int,
                               vertices=None) -> float:
    """``max(n^{-2/3} |D|, n^{-1/3} diam(D))`` for the edge symmetric difference ``D``.

    ``diam(D)`` is the largest hop distance inside any component of the graph
    formed by ``D``'s edges. When ``vertices`` is given, only edges with an
    endpoint in that set count.
    """
    if g.n != g_eps.n:
        raise ValueError("graphs must share the vertex set")
    keys = np.setxor1d(g.keys, g_eps.keys)
    delta = SimpleGraph.from_keys(g.n, keys)
    if vertices is not None:
        inside = np.zeros(g.n, dtype=bool)
        inside[np.asarray(vertices, dtype=np.int64)] = True
        sel = inside[delta.edges[:, 0]] | inside[delta.edges[:, 1]]
        delta = delta.edge_subgraph(np.flatnonzero(sel))
    if delta.m == 0:
        return 0.0
    return max(n ** (-2.0 / 3.0) * delta.m, n ** (-1.0 / 3.0) * graph_diameter(delta))


def read_space(path) -> FiniteMeasuredMetricSpace:
    """Parse ``k``, then ``k`` masses, then ``k`` rows of the distance matrix."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    k = int(lines[0])
    if len(lines) != 1 + 2 * k:
        raise ValueError(f"expected {1 + 2 * k} nonblank lines, found {len(lines)}")
    mass = [float(t) for t in lines[1:1 + k]]
    dist = [[float(t) for t in ln.split()] for ln in lines[1 + k:]]
    return FiniteMeasuredMetricSpace(np.array(dist).reshape(k, k), np.array(mass))


def write_space(space: FiniteMeasuredMetricSpace, path) -> None:
    rows = [str(space.k)]
    rows += [repr(float(m)) for m in space.mass]
    rows += [" ".join(repr(float(d)) for d in row) for row in space.dist]
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
