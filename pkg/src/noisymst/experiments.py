"""Named Monte Carlo campaigns over the coupled MSF pair.

Trial ``i`` of a campaign draws all of its randomness from a seed derived
from ``(master seed, i)``, so records do not depend on how trials are spread
over worker processes. Records are sorted by trial index before any
reduction or output.
"""
from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing as mp
from collections import Counter
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import stats as sps

from . import graph as gr
from .metric import symmetric_difference_bound
from .msf import WeightedEdgeList, joint_msf_from_sample, k_infinity, k_infinity_joint, kruskal_mask
from .sampler import (NoiseParameters, critical_p, default_horizon, derive_graphs,
                      sample_coupled, sample_until_connected)
from .stats import ZeroVarianceError, fisher_ci, pearson, scalar_summary

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "trial_seed",
    "run_trial",
    "run_trials",
    "summarize",
    "run_experiment",
    "records_to_csv",
    "summary_to_json",
    "write_outputs",
    "kernel_catalog",
    "run_mst_weight",
    "run_bad_edges",
    "run_sensitivity",
    "run_stability",
    "run_component_structure",
    "run_joint_kernel_validation",
]

ZETA3 = 1.2020569031595942
_SOURCE_STREAM = 7
_KERNEL_STREAM = 11


class ConfigError(ValueError):
    """Parameters not admissible for the requested experiment."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One campaign. ``epsilon`` and ``t`` are alternatives: ``eps = t * n**(-1/3)``."""

    name: str
    n: int = 1000
    lam: float = 0.0
    epsilon: Optional[float] = None
    t: Optional[float] = None
    trials: int = 100
    seed: int = 0
    j_max: int = 3
    sources: int = 32
    full_mst: bool = False

    @property
    def eps(self) -> float:
        if self.epsilon is not None:
            return float(self.epsilon)
        if self.t is not None:
            return float(self.t) * self.n ** (-1.0 / 3.0)
        return 0.0

    @property
    def eps3n(self) -> float:
        return self.eps ** 3 * self.n

    def validate(self) -> "ExperimentConfig":
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.epsilon is not None and self.t is not None:
            raise ConfigError("give epsilon or t, not both")
        if not 0.0 <= self.eps <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.j_max < 1 or self.sources < 1:
            raise ConfigError("j_max and sources must be positive")
        if self.name != "mst-weight" and self.name != "kernel-check":
            p = critical_p(self.n, self.lam)
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"p(n, lambda) = {p} is not a probability")
        if self.name == "bad-edges" and self.eps <= 0.0:
            raise ConfigError("bad-edges needs epsilon > 0")
        return self

    def echo(self) -> dict:
        out = asdict(self)
        out["eps"] = self.eps
        out["eps3n"] = self.eps3n
        return out


def trial_seed(master: int, index: int) -> int:
    """Seed of trial ``index``: a pure function of the master seed and the index."""
    state = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


# -- per-trial functionals -------------------------------------------------

def _largest_tree_functionals(forest: gr.SimpleGraph, n: int, sources: int,
                              seed: int) -> tuple[float, float, float]:
    """Rescaled diameter, size and mean pairwise distance of the largest tree."""
    sub, _, _ = gr.component_subgraph(forest, 0)
    size = sub.n
    if size == 1:
        return 0.0, n ** (-2.0 / 3.0), 0.0
    diam = gr.tree_diameter(forest, 0)
    if size <= sources:
        src = np.arange(size)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SOURCE_STREAM,)))
        src = np.sort(rng.choice(size, size=sources, replace=False))
    d = gr._hops(sub, src)
    mean_dist = float(d.sum()) / (src.size * (size - 1))
    scale = n ** (-1.0 / 3.0)
    return diam * scale, size * n ** (-2.0 / 3.0), mean_dist * scale


def _conn_keys_by_component(g: gr.SimpleGraph, j_max: int) -> list[frozenset]:
    conn = gr.conn_edges(g)
    comp = gr.components(g)
    labels = comp.edge_labels(g)[conn]
    keys = g.keys[conn]
    return [frozenset(keys[labels == j].tolist()) if j < comp.count else frozenset()
            for j in range(j_max)]


def _top_vertices(g: gr.SimpleGraph, j_max: int) -> np.ndarray:
    comp = gr.components(g)
    return np.flatnonzero(comp.labels < j_max)


def _msf_pair_trial(cfg: ExperimentConfig, seed: int, bounds: bool = False) -> dict:
    n, eps, p = cfg.n, cfg.eps, critical_p(cfg.n, cfg.lam)
    horizon = default_horizon(n, cfg.lam, cfg.full_mst)
    params = NoiseParameters(n=n, epsilon=eps, p_horizon=horizon, lam=cfg.lam)
    if cfg.full_mst:
        sample = sample_until_connected(params, seed)
    else:
        sample = sample_coupled(params, seed)
    d = derive_graphs(sample, p)
    res = joint_msf_from_sample(d, sample)
    rec: dict = {}
    for tag, forest in (("", res.m), ("_eps", res.m_eps)):
        diam, size, mean = _largest_tree_functionals(forest, n, cfg.sources, seed)
        rec["diameter" + tag] = diam
        rec["size" + tag] = size
        rec["mean_distance" + tag] = mean
    rec["j_size"] = res.j_size

    c_g = _conn_keys_by_component(d.g, cfg.j_max)
    c_e = _conn_keys_by_component(d.g_eps, cfg.j_max)
    c_i = _conn_keys_by_component(d.i_check, cfg.j_max)
    rec["conn_equal"] = int(all(a == b == c for a, b, c in zip(c_g, c_e, c_i)))
    if bounds:
        # Exact diameters of the difference graph are only affordable while it
        # stays subcritical, i.e. in the small-noise regime.
        top = np.union1d(_top_vertices(d.g, cfg.j_max), _top_vertices(d.g_eps, cfg.j_max))
        rec["sd_bound"] = symmetric_difference_bound(d.g, d.g_eps, n, vertices=top)
        rec["sd_bound_global"] = symmetric_difference_bound(d.g, d.g_eps, n)
    if cfg.full_mst:
        rec.update(_full_mst_functionals(sample, cfg, seed))
    rec["extensions"] = sample.extensions
    return rec


def _stability_trial(cfg: ExperimentConfig, seed: int) -> dict:
    return _msf_pair_trial(cfg, seed, bounds=True)


def _full_mst_functionals(sample, cfg: ExperimentConfig, seed: int) -> dict:
    d = derive_graphs(sample, sample.params.p_horizon)
    out = {}
    for tag, g, w in (("", d.g, sample.w[d.g_index]), ("_eps", d.g_eps, sample.w_eps[d.g_eps_index])):
        keep = kruskal_mask(WeightedEdgeList(g, w), ties="index")
        tree = g.edge_subgraph(np.flatnonzero(keep))
        diam, _, mean = _largest_tree_functionals(tree, cfg.n, cfg.sources, seed)
        out["mst_diameter" + tag] = diam
        out["mst_mean_distance" + tag] = mean
        out["mst_weight" + tag] = float(w[keep].sum())
    return out


def _mst_weight_trial(cfg: ExperimentConfig, seed: int) -> dict:
    n = cfg.n
    params = NoiseParameters(n=n, epsilon=cfg.eps, p_horizon=default_horizon(n, None, True))
    sample = sample_until_connected(params, seed)
    d = derive_graphs(sample, sample.params.p_horizon)
    rec = {}
    for tag, g, w in (("", d.g, sample.w[d.g_index]), ("_eps", d.g_eps, sample.w_eps[d.g_eps_index])):
        rec["weight" + tag] = float(w[kruskal_mask(WeightedEdgeList(g, w), ties="index")].sum())
    rec["extensions"] = sample.extensions
    return rec


def _bad_edges_trial(cfg: ExperimentConfig, seed: int) -> dict:
    n, eps, p = cfg.n, cfg.eps, critical_p(cfg.n, cfg.lam)
    sample = sample_coupled(NoiseParameters(n=n, epsilon=eps, p_horizon=p, lam=cfg.lam), seed)
    d = derive_graphs(sample, p)
    conn_g = d.g.keys[gr.conn_edges(d.g)]
    conn_e = d.g_eps.keys[gr.conn_edges(d.g_eps)]
    return {
        "j_size": int(np.intersect1d(conn_g, conn_e).size),
        "eps_inv": 1.0 / eps,
        "conn_size": int(conn_g.size),
        "conn_size_eps": int(conn_e.size),
        "i_cap_edges": d.i_cap.m,
    }


_COMPONENT_SLOTS = 5


def _components_trial(cfg: ExperimentConfig, seed: int) -> dict:
    n, p = cfg.n, critical_p(cfg.n, cfg.lam)
    sample = sample_coupled(NoiseParameters(n=n, epsilon=cfg.eps, p_horizon=p, lam=cfg.lam), seed)
    g = derive_graphs(sample, p).g
    comp = gr.components(g)
    rec = {}
    for j in range(_COMPONENT_SLOTS):
        k = j + 1
        if j < comp.count:
            r = gr.girth(g, j)
            rec[f"size_{k}"] = float(comp.sizes[j]) * n ** (-2.0 / 3.0)
            rec[f"surplus_{k}"] = gr.surplus(g, j)
            rec[f"cycles_{k}"] = gr.count_simple_cycles(g, j)
            rec[f"girth_{k}"] = math.inf if r == gr.NO_CYCLE else r * n ** (-1.0 / 3.0)
        else:
            rec.update({f"size_{k}": 0.0, f"surplus_{k}": 0, f"cycles_{k}": 0, f"girth_{k}": math.inf})
    return rec


# -- joint-kernel catalog --------------------------------------------------

def _graph(n, pairs):
    return gr.SimpleGraph(n, pairs)


def kernel_catalog() -> dict:
    """Small ``(g1, g2, h)`` instances exercising the joint kernel.

    ``disjoint-conn``: the graphs share edges but ``h`` avoids their common
    cycle edges. ``shared-all``: ``g1 = g2 = C5`` with every edge shared.
    ``K4-marginal``: ``g1 = g2 = K4`` with half the edges shared.
    """
    g1 = _graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])
    g2 = _graph(5, [(1, 2), (2, 3), (3, 4), (1, 4)])
    c5 = _graph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
    k4 = _graph(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])
    return {
        "disjoint-conn": (g1, g2, frozenset([2 * 5 + 3, 3 * 5 + 4])),
        "shared-all": (c5, c5, c5.edge_key_set()),
        "K4-marginal": (k4, k4, frozenset(k4.keys[:3].tolist())),
    }


def forest_label(forest: gr.SimpleGraph) -> str:
    """Canonical text label of a forest's edge set."""
    return " ".join(f"{u}-{v}" for u, v in sorted(map(tuple, forest.edges.tolist())))


def _kernel_trial(cfg: ExperimentConfig, seed: int) -> dict:
    cat = kernel_catalog()
    ss = np.random.SeedSequence(seed, spawn_key=(_KERNEL_STREAM,))
    gens = [np.random.default_rng(s) for s in ss.spawn(5)]
    rec = {}
    g1, g2, h = cat["disjoint-conn"]
    m1, m2 = k_infinity_joint(g1, g2, h, gens[0])
    rec["disjoint_m1"] = forest_label(m1)
    rec["disjoint_m2"] = forest_label(m2)
    g1, g2, h = cat["shared-all"]
    m1, m2 = k_infinity_joint(g1, g2, h, gens[1])
    removed = g1.edge_key_set() - m1.edge_key_set()
    rec["shared_identity"] = int(m2.edge_key_set() == g2.edge_key_set() - removed)
    g1, g2, h = cat["K4-marginal"]
    m1, m2 = k_infinity_joint(g1, g2, h, gens[2])
    rec["k4_m1"] = forest_label(m1)
    rec["k4_m2"] = forest_label(m2)
    rec["k4_reference"] = forest_label(k_infinity(g1, gens[3]))
    return rec


# -- registry and runner ---------------------------------------------------

@dataclass(frozen=True)
class _Experiment:
    trial: Callable[[ExperimentConfig, int], dict]
    correlations: tuple = ()
    extra: Optional[Callable[[ExperimentConfig, list], dict]] = None


_FUNCTIONALS = ("diameter", "size", "mean_distance")
_MST_FUNCTIONALS = ("mst_diameter", "mst_mean_distance")
_PAIRS = tuple((f, f + "_eps") for f in _FUNCTIONALS + _MST_FUNCTIONALS)


def _component_extra(cfg, records):
    s1 = Counter(r["surplus_1"] for r in records)
    total = len(records)
    return {"surplus_1_distribution": {str(k): s1[k] / total for k in sorted(s1)},
            "p_surplus_1_le_10": sum(v for k, v in s1.items() if k <= 10) / total}


def _independence_pvalue(a: list, b: list) -> float:
    la, lb = sorted(set(a)), sorted(set(b))
    if len(la) < 2 or len(lb) < 2:
        return 1.0
    ia = {x: i for i, x in enumerate(la)}
    ib = {x: i for i, x in enumerate(lb)}
    table = np.zeros((len(la), len(lb)))
    for x, y in zip(a, b):
        table[ia[x], ib[y]] += 1
    return float(sps.chi2_contingency(table)[1])


def _homogeneity_pvalue(a: list, b: list) -> float:
    labels = sorted(set(a) | set(b))
    ca, cb = Counter(a), Counter(b)
    table = np.array([[ca[x] for x in labels], [cb[x] for x in labels]], dtype=float)
    if table.shape[1] < 2:
        return 1.0
    return float(sps.chi2_contingency(table)[1])


def _kernel_extra(cfg, records):
    col = lambda k: [r[k] for r in records]
    return {
        "disjoint_conn_independence_p": _independence_pvalue(col("disjoint_m1"), col("disjoint_m2")),
        "shared_all_identity_rate": sum(col("shared_identity")) / len(records),
        "k4_marginal1_p": _homogeneity_pvalue(col("k4_m1"), col("k4_reference")),
        "k4_marginal2_p": _homogeneity_pvalue(col("k4_m2"), col("k4_reference")),
    }


def _pair_extra(cfg, records):
    out = {"conn_agreement_frequency": float(np.mean([r["conn_equal"] for r in records]))}
    return out


EXPERIMENTS: dict[str, _Experiment] = {
    "mst-weight": _Experiment(_mst_weight_trial, (("weight", "weight_eps"),)),
    "bad-edges": _Experiment(_bad_edges_trial),
    "sensitivity": _Experiment(_msf_pair_trial, _PAIRS, _pair_extra),
    "stability": _Experiment(_stability_trial, _PAIRS, _pair_extra),
    "components": _Experiment(_components_trial, (), _component_extra),
    "kernel-check": _Experiment(_kernel_trial, (), _kernel_extra),
}


def run_trial(cfg: ExperimentConfig, index: int) -> dict:
    """Record of trial ``index``, starting with its index and seed."""
    seed = trial_seed(cfg.seed, index)
    rec = {"trial": index, "seed": seed}
    rec.update(EXPERIMENTS[cfg.name].trial(cfg, seed))
    return rec


def _run_one(args):
    return run_trial(*args)


def run_trials(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    cfg.validate()
    jobs = [(cfg, i) for i in range(cfg.trials)]
    if threads <= 1:
        records = [_run_one(j) for j in jobs]
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        with ctx.Pool(threads) as pool:
            records = list(pool.imap_unordered(_run_one, jobs, chunksize=max(1, cfg.trials // (4 * threads))))
    return sorted(records, key=lambda r: r["trial"])


def _finite_summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    finite = v[np.isfinite(v)]
    out = scalar_summary(finite)
    if finite.size != v.size:
        out["nonfinite"] = int(v.size - finite.size)
    return out


def summarize(cfg: ExperimentConfig, records: list[dict]) -> dict:
    """Per-scalar statistics, per-pair correlations and experiment extras."""
    exp = EXPERIMENTS[cfg.name]
    scalars = {}
    for key in records[0]:
        if key in ("trial", "seed") or isinstance(records[0][key], str):
            continue
        scalars[key] = _finite_summary([r[key] for r in records])
    corr = {}
    for a, b in exp.correlations:
        if a not in records[0]:
            continue
        name = "r_" + a
        try:
            r = pearson([x[a] for x in records], [x[b] for x in records])
            lo, hi = fisher_ci(r, len(records))
            corr[name] = {"value": r, "ci95_low": lo, "ci95_high": hi, "count": len(records)}
        except (ZeroVarianceError, ValueError) as exc:
            corr[name] = {"value": math.nan, "ci95_low": math.nan, "ci95_high": math.nan,
                          "count": len(records), "flag": str(exc)}
    out = {"scalars": scalars, "correlations": corr}
    if exp.extra is not None:
        out.update(exp.extra(cfg, records))
    return out


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def records_to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(records[0])
    writer.writerow(header)
    for r in records:
        writer.writerow([_format(r[k]) for k in header])
    return buf.getvalue()


def summary_to_json(cfg: ExperimentConfig, summary: dict) -> str:
    return json.dumps({"config": cfg.echo(), "summary": summary}, indent=2, sort_keys=True) + "\n"


def write_outputs(cfg: ExperimentConfig, records: list[dict], summary: dict, out_dir,
                  stem: Optional[str] = None) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or cfg.name
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    csv_path.write_text(records_to_csv(records))
    json_path.write_text(summary_to_json(cfg, summary))
    return csv_path, json_path


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[dict], dict]:
    records = run_trials(cfg, threads)
    return records, summarize(cfg, records)


def _named(name: str):
    def run(cfg: ExperimentConfig, threads: int = 1) -> dict:
        if cfg.name != name:
            cfg = replace(cfg, name=name)
        return run_experiment(cfg, threads)[1]
    run.__name__ = "run_" + name.replace("-", "_")
    run.__doc__ = f"Run the {name!r} campaign and return its summary."
    return run


run_mst_weight = _named("mst-weight")
run_bad_edges = _named("bad-edges")
run_sensitivity = _named("sensitivity")
run_stability = _named("stability")
run_component_structure = _named("components")
run_joint_kernel_validation = _named("kernel-check")
