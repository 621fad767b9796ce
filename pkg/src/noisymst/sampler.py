"""Sparse sampling of the coupled weight process on the complete graph.

Every pair ``e`` of K_n carries ``w_e ~ U[0,1]``, a resampling flag
``b_e ~ Ber(eps)`` and a fresh weight ``w'_e ~ U[0,1]``; the noisy weight is
``w_e`` when ``b_e = 0`` and ``w'_e`` otherwise. Only pairs whose smaller
weight ``min(w_e, w_eps_e)`` falls below a horizon are materialised, which is
all that graphs at thresholds up to the horizon can see.

Pairs are visited in lexicographic order ``(u, v), u < v`` and split into
fixed blocks of :data:`BLOCK` consecutive pair indices. Each block owns its
own generator seeded by ``(seed, stream, block)``, so the sample is a pure
function of the seed whatever order blocks are produced in.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .graph import SimpleGraph

__all__ = [
    "BLOCK",
    "DEFAULT_BUDGET",
    "NoiseParameters",
    "EdgeWeightTriple",
    "CoupledSample",
    "DerivedGraphs",
    "critical_p",
    "default_horizon",
    "inclusion_probability",
    "theta",
    "rho",
    "sample_coupled",
    "extend_horizon",
    "derive_graphs",
    "sample_until_connected",
    "pair_index_to_edge",
    "edge_to_pair_index",
    "save_sample",
    "load_sample",
]

BLOCK = 1 << 24
#: Largest admissible ``p_horizon * n**2``.
DEFAULT_BUDGET = 2e8

_BASE_STREAM = 0
_EXTENSION_STREAM = 1


def critical_p(n: int, lam: float) -> float:
    """Edge probability ``1/n + lam / n**(4/3)`` of the critical window."""
    return 1.0 / n + lam / n ** (4.0 / 3.0)


def default_horizon(n: int, lam: Optional[float], full_mst: bool, c: float = 3.0) -> float:
    """Sampling horizon: ``p(n, lam)``, raised to ``c ln(n)/n`` for a full MST."""
    p = critical_p(n, lam) if lam is not None else 0.0
    if full_mst:
        p = max(p, c * math.log(n) / n)
    return min(1.0, p)


@dataclass(frozen=True)
class NoiseParameters:
    n: int
    epsilon: float
    p_horizon: float
    lam: Optional[float] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 < self.p_horizon <= 1.0:
            raise ValueError("p_horizon must lie in (0, 1]")
        if self.lam is not None:
            p = critical_p(self.n, self.lam)
            if not 0.0 < p <= self.p_horizon * (1 + 1e-12):
                raise ValueError(f"p(n, lambda) = {p} must lie in (0, p_horizon]")

    @property
    def p(self) -> float:
        """Critical threshold ``p(n, lambda)``; needs ``lam`` to be set."""
        if self.lam is None:
            raise ValueError("lambda is not set")
        return critical_p(self.n, self.lam)


class EdgeWeightTriple(NamedTuple):
    edge: tuple[int, int]
    w: float
    b: int
    w_prime: float

    @property
    def w_eps(self) -> float:
        return self.w if self.b == 0 else self.w_prime


def inclusion_probability(p_horizon: float, epsilon: float) -> float:
    """Probability that ``min(w, w_eps) <= p_horizon`` for a single pair."""
    p = p_horizon
    return (1.0 - epsilon) * p + epsilon * (1.0 - (1.0 - p) ** 2)


def theta(p: float, epsilon: float) -> float:
    """Edge density of the intersection graph: ``P(w <= p, w_eps <= p)``."""
    return p * (1.0 - epsilon + epsilon * p)


def rho(p: float, epsilon: float) -> float:
    """``P(e in G | e not in G cap G_eps) = p eps (1-p) / (1 - theta)``."""
    th = theta(p, epsilon)
    if th >= 1.0:
        raise ValueError("rho is undefined when theta >= 1")
    return p * epsilon * (1.0 - p) / (1.0 - th)


def pair_index_to_edge(k, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Invert the lexicographic pair numbering of K_n."""
    k = np.asarray(k, dtype=np.int64)
    a = 2 * n - 1
    u = np.floor((a - np.sqrt(np.maximum(a * a - 8.0 * k, 0.0))) / 2).astype(np.int64)
    u = np.clip(u, 0, n - 2)

    def start(x):
        return x * (2 * n - x - 1) // 2

    # Float rounding can leave u off by one either way.
    u = np.where(start(u) > k, u - 1, u)
    u = np.where(start(u + 1) <= k, u + 1, u)
    v = k - start(u) + u + 1
    return u, v


def edge_to_pair_index(u, v, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


@dataclass(frozen=True, eq=False)
class CoupledSample:
    """Materialised triples for every pair with ``min(w, w_eps) <= p_horizon``.

    Column arrays are sorted by pair. ``w_prime`` is NaN where ``b = 0``.
    """

    params: NoiseParameters
    seed: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    b: np.ndarray
    w_prime: np.ndarray
    extensions: int = 0
    _w_eps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w_eps = np.where(self.b == 1, self.w_prime, self.w)
        object.__setattr__(self, "_w_eps", w_eps)
        for arr in (self.u, self.v, self.w, self.b, self.w_prime, w_eps):
            arr.setflags(write=False)

    @property
    def w_eps(self) -> np.ndarray:
        return self._w_eps

    def __len__(self) -> int:
        return int(self.u.size)

    @property
    def keys(self) -> np.ndarray:
        return self.u * self.params.n + self.v

    def triples(self) -> list[EdgeWeightTriple]:
        return [EdgeWeightTriple((a, c), w, b, wp) for a, c, w, b, wp in
                zip(self.u.tolist(), self.v.tolist(), self.w.tolist(),
                    self.b.tolist(), self.w_prime.tolist())]

    def same_as(self, other: "CoupledSample") -> bool:
        return (self.params == other.params and self.seed == other.seed
                and all(np.array_equal(getattr(self, f), getattr(other, f), equal_nan=f == "w_prime")
                        for f in ("u", "v", "w", "b", "w_prime")))


def _block_rng(seed: int, stream: int, label: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, label, block)))


def _skip_sample(total: int, q: float, seed: int, stream: int, label: int):
    """Geometric skip-sampling of pair indices with inclusion probability ``q``.

    Yields ``(rng, indices)`` per nonempty block; the caller keeps drawing the
    per-pair payload from the same generator.
    """
    if q <= 0.0:
        return
    for block in range(-(-total // BLOCK)):
        lo = block * BLOCK
        hi = min(total, lo + BLOCK)
        rng = _block_rng(seed, stream, label, block)
        if q >= 1.0:
            idx = np.arange(lo, hi, dtype=np.int64)
        else:
            size = hi - lo
            mean = q * size
            draw = int(mean + 6.0 * math.sqrt(mean) + 16)
            pos = np.cumsum(rng.geometric(q, size=draw)) - 1
            while pos[-1] < size:
                more = np.cumsum(rng.geometric(q, size=draw)) + pos[-1]
                pos = np.concatenate([pos, more])
            idx = lo + pos[pos < size]
        if idx.size:
            yield rng, idx


def _shell_triples(rng: np.random.Generator, count: int, lo: float, hi: float, eps: float):
    """Draw triples conditioned on ``lo < min(w, w_eps) <= hi``.

    The region splits into three rectangles: ``b = 0`` with ``w`` in
    ``(lo, hi]``; ``b = 1`` with ``w`` in ``(lo, hi]`` and ``w'`` in
    ``(lo, 1]``; ``b = 1`` with ``w`` in ``(hi, 1]`` and ``w'`` in ``(lo, hi]``.
    """
    width = hi - lo
    area = np.array([(1.0 - eps) * width,
                     eps * width * (1.0 - lo),
                     eps * (1.0 - hi) * width])
    case = rng.choice(3, size=count, p=area / area.sum())
    r1 = rng.random(count)
    r2 = rng.random(count)
    w = np.where(case == 2, hi + (1.0 - hi) * r1, lo + width * r1)
    w_prime = np.where(case == 1, lo + (1.0 - lo) * r2, lo + width * r2)
    b = (case > 0).astype(np.uint8)
    w_prime = np.where(b == 1, w_prime, np.nan)
    return w, b, w_prime


def _check_budget(n: int, p: float, budget: float) -> None:
    if p * n * n > budget:
        raise MemoryError(f"p_horizon * n^2 = {p * n * n:.3g} exceeds the budget {budget:.3g}")


def sample_coupled(params: NoiseParameters, seed: int, budget: float = DEFAULT_BUDGET) -> CoupledSample:
    """Sample all pairs with ``min(w, w_eps) <= params.p_horizon``."""
    n, eps, ph = params.n, params.epsilon, params.p_horizon
    _check_budget(n, ph, budget)
    total = n * (n - 1) // 2
    q = inclusion_probability(ph, eps)
    parts = []
    for rng, idx in _skip_sample(total, q, seed, _BASE_STREAM, 0):
        parts.append((idx, *_shell_triples(rng, idx.size, 0.0, ph, eps)))
    return _assemble(params, seed, parts, extensions=0)


def _assemble(params, seed, parts, extensions) -> CoupledSample:
    if parts:
        idx, w, b, wp = (np.concatenate(c) for c in zip(*parts))
    else:
        idx = np.zeros(0, dtype=np.int64)
        w, wp = np.zeros(0), np.zeros(0)
        b = np.zeros(0, dtype=np.uint8)
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    u, v = pair_index_to_edge(idx, params.n)
    return CoupledSample(params, seed, u, v, w[order], b[order], wp[order], extensions)


def extend_horizon(sample: CoupledSample, p_new: float, seed: int,
                   budget: float = DEFAULT_BUDGET) -> CoupledSample:
    """Raise the horizon to ``p_new`` without touching existing triples.

    Each absent pair joins independently with probability
    ``(q(p_new) - q(p_old)) / (1 - q(p_old))`` and then carries a triple
    conditioned on ``p_old < min(w, w_eps) <= p_new``; the result has the
    law of a fresh sample at ``p_new``.
    """
    params = sample.params
    p_old = params.p_horizon
    if not p_new > p_old:
        raise ValueError("p_new must exceed the current horizon")
    p_new = min(1.0, p_new)
    n, eps = params.n, params.epsilon
    _check_budget(n, p_new, budget)
    q_old = inclusion_probability(p_old, eps)
    q_new = inclusion_probability(p_new, eps)
    r = 1.0 if q_old >= 1.0 else (q_new - q_old) / (1.0 - q_old)
    present = edge_to_pair_index(sample.u, sample.v, n)
    total = n * (n - 1) // 2
    parts = [(present, sample.w, sample.b, sample.w_prime)]
    label = (seed * 0x9E3779B1 + sample.extensions) & 0xFFFFFFFF
    for rng, idx in _skip_sample(total, r, sample.seed, _EXTENSION_STREAM, label):
        w, b, wp = _shell_triples(rng, idx.size, p_old, p_new, eps)
        keep = ~np.isin(idx, present, assume_unique=True)
        parts.append((idx[keep], w[keep], b[keep], wp[keep]))
    new_params = replace(params, p_horizon=p_new)
    return _assemble(new_params, sample.seed, parts, sample.extensions + 1)


@dataclass(frozen=True, eq=False)
class DerivedGraphs:
    """The graph pair at threshold ``p`` plus the two intersection graphs.

    ``*_index`` arrays map each graph's edge rows back to sample rows, so the
    weights of ``g`` are ``sample.w[g_index]``.
    """

    g: SimpleGraph
    g_eps: SimpleGraph
    i_cap: SimpleGraph
    i_check: SimpleGraph
    p: float
    g_index: np.ndarray
    g_eps_index: np.ndarray
    i_cap_index: np.ndarray
    i_check_index: np.ndarray


def derive_graphs(sample: CoupledSample, p: float) -> DerivedGraphs:
    """Threshold the coupled weights at ``p <= p_horizon``."""
    if p > sample.params.p_horizon:
        raise ValueError("threshold exceeds the sampled horizon")
    n = sample.params.n
    in_g = sample.w <= p
    in_ge = sample.w_eps <= p
    in_cap = in_g & in_ge
    in_check = in_cap & (sample.b == 0)
    edges = np.stack([sample.u, sample.v], axis=1)

    def build(mask):
        idx = np.flatnonzero(mask)
        return SimpleGraph._trusted(n, edges[idx]), idx

    (g, gi), (ge, gei), (ic, ici), (ik, iki) = map(build, (in_g, in_ge, in_cap, in_check))
    return DerivedGraphs(g, ge, ic, ik, p, gi, gei, ici, iki)


def sample_until_connected(params: NoiseParameters, seed: int, which: str = "both",
                           budget: float = DEFAULT_BUDGET) -> CoupledSample:
    """Sample, doubling the horizon until the graphs at the horizon are connected.

    ``which`` is ``"g"``, ``"g_eps"`` or ``"both"``. The number of doublings
    used is ``result.extensions``.
    """
    from .graph import components

    sample = sample_coupled(params, seed, budget)
    while True:
        d = derive_graphs(sample, sample.params.p_horizon)
        targets = {"g": (d.g,), "g_eps": (d.g_eps,), "both": (d.g, d.g_eps)}[which]
        if all(components(t).count == 1 for t in targets):
            return sample
        sample = extend_horizon(sample, min(1.0, 2 * sample.params.p_horizon), seed, budget)


_MAGIC = b"NMSTCS01"
_HEADER = struct.Struct("<8sqddqqq")
_ROW = np.dtype([("u", "<i8"), ("v", "<i8"), ("w", "<f8"), ("b", "u1"), ("w_prime", "<f8")])


def save_sample(sample: CoupledSample, path) -> None:
    """Binary dump: header ``{magic, n, eps, p_horizon, seed, extensions, count}``
    followed by little-endian rows ``(u:i8, v:i8, w:f8, b:u1, w_prime:f8)``.
    ``lam`` is not stored; a reloaded sample has ``params.lam = None``."""
    p = sample.params
    rows = np.empty(len(sample), dtype=_ROW)
    for name in _ROW.names:
        rows[name] = getattr(sample, name)
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, p.n, p.epsilon, p.p_horizon, sample.seed,
                              sample.extensions, len(sample)))
        fh.write(rows.tobytes())


def load_sample(path) -> CoupledSample:
    data = Path(path).read_bytes()
    magic, n, eps, ph, seed, ext, count = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("not a coupled-sample dump")
    rows = np.frombuffer(data, dtype=_ROW, count=count, offset=_HEADER.size)
    params = NoiseParameters(n=n, epsilon=eps, p_horizon=ph)
    return CoupledSample(params, seed, rows["u"].copy(), rows["v"].copy(), rows["w"].copy(),
                         rows["b"].copy(), rows["w_prime"].copy(), ext)
