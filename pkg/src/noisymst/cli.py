"""Command-line front end: run campaigns, write CSV/JSON, plot sweeps, compare spaces."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .experiments import (EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment,
                          summary_to_json, write_outputs)
from .metric import ghp, read_space
from .svg import AxesSpec, SeriesPoint, render_svg

__all__ = ["main", "parse_config_file", "resolve_configs", "EXIT_USAGE", "EXIT_INVALID"]

EXIT_USAGE = 2
EXIT_INVALID = 3

# config-file key -> (argparse dest, type)
_KEYS = {
    "n": ("n", int),
    "lambda": ("lam", float),
    "epsilon": ("epsilon", float),
    "t": ("t", float),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "out": ("out", str),
    "sweep": ("sweep", str),
    "threads": ("threads", int),
    "j_max": ("j_max", int),
    "sources": ("sources", int),
    "full_mst": ("full_mst", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
}
_SWEEPABLE = {"epsilon": ("epsilon", float), "n": ("n", int), "lambda": ("lam", float), "t": ("t", float)}


def parse_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = _KEYS[key]
        try:
            values[dest] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def _parse_sweep(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise ConfigError("--sweep expects PARAM=v1,v2,...")
    name, raw = spec.split("=", 1)
    name = name.strip()
    if name not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep {name!r}; choose from {', '.join(_SWEEPABLE)}")
    _, conv = _SWEEPABLE[name]
    try:
        vals = [conv(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from None
    if not vals:
        raise ConfigError("sweep needs at least one value")
    return name, vals


def resolve_configs(name: str, opts: dict) -> tuple[list[tuple[Optional[str], ExperimentConfig]], dict]:
    """Merge options into validated configs, one per sweep point.

    Returns ``([(stem_suffix, config), ...], run_options)`` where the suffix
    is None without a sweep.
    """
    fields = {k: opts[k] for k in ("n", "lam", "epsilon", "t", "trials", "seed", "j_max",
                                   "sources", "full_mst") if opts.get(k) is not None}
    base = ExperimentConfig(name=name, **fields)
    run = {"out": opts.get("out") or ".", "threads": opts.get("threads") or 1,
           "sweep": opts.get("sweep")}
    if run["threads"] < 1:
        raise ConfigError("--threads must be at least 1")
    if not run["sweep"]:
        return [(None, base.validate())], run
    pname, values = _parse_sweep(run["sweep"])
    dest, _ = _SWEEPABLE[pname]
    out = []
    for v in values:
        change = {dest: v}
        if pname == "t":
            change["epsilon"] = None
        elif pname == "epsilon":
            change["t"] = None
        cfg = replace(base, **change).validate()
        out.append((f"{pname}_{v}", cfg))
    run["sweep_param"] = pname
    return out, run


def _run_command(name: str, opts: dict) -> int:
    configs, run = resolve_configs(name, opts)
    points = []
    for suffix, cfg in configs:
        records, summary = run_experiment(cfg, run["threads"])
        stem = name if suffix is None else f"{name}_{suffix}"
        csv_path, json_path = write_outputs(cfg, records, summary, run["out"], stem)
        print(f"wrote {csv_path} and {json_path}")
        if suffix is not None:
            points.append({"param": run["sweep_param"], "value": getattr(cfg, _SWEEPABLE[run["sweep_param"]][0]),
                           "config": cfg.echo(), "summary": summary})
    if points:
        path = Path(run["out"]) / f"{name}_sweep.json"
        doc = {"experiment": name, "param": run["sweep_param"], "points": points}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    return 0


def _lookup_x(point: dict, key: str) -> float:
    cfg = point["config"]
    key = {"lambda": "lam"}.get(key, key)
    if key == "epsilon":
        key = "eps"
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"unknown x key {key!r}")
    return float(cfg[key])


def _lookup_y(summary: dict, key: str) -> SeriesPoint:
    corr = summary.get("correlations", {})
    scal = summary.get("scalars", {})
    if key in corr:
        c = corr[key]
        return SeriesPoint(0.0, c["value"], c["ci95_low"], c["ci95_high"])
    if key in scal:
        s = scal[key]
        half = s["ci95_half_width"]
        return SeriesPoint(0.0, s["mean"], s["mean"] - half, s["mean"] + half)
    if isinstance(summary.get(key), (int, float)):
        return SeriesPoint(0.0, float(summary[key]))
    raise ConfigError(f"unknown y key {key!r}")


def load_series(doc: dict, x: str, y: str) -> list[SeriesPoint]:
    """Series of ``(x, y, ci)`` points from a sweep or single-summary JSON document."""
    points = doc["points"] if "points" in doc else [doc]
    out = []
    for pt in points:
        yv = _lookup_y(pt["summary"], y)
        out.append(replace(yv, x=_lookup_x(pt, x)))
    return out


def _plot_command(args) -> int:
    doc = json.loads(Path(args.input).read_text())
    series = load_series(doc, args.x, args.y)
    log_x = args.log_x or args.x == "eps3n"
    spec = AxesSpec(xlabel=args.x, ylabel=args.y, title=args.title or doc.get("experiment", ""), log_x=log_x)
    svg = render_svg(series, spec)
    out = Path(args.out) if args.out else Path(args.input).with_name(f"{Path(args.input).stem}_{args.y}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    print(f"wrote {out}")
    return 0


def _ghp_command(args) -> int:
    x, y = read_space(args.x), read_space(args.y)
    print(format(ghp(x, y, args.mode), ".17g"))
    return 0


def _experiment_parser(sub, name: str, help_text: str):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t", type=float, help="noise level as eps = t * n^(-1/3)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--sweep", help="PARAM=v1,v2,... over epsilon, n, lambda or t")
    p.add_argument("--threads", type=int)
    p.add_argument("--j-max", dest="j_max", type=int)
    p.add_argument("--sources", type=int, help="BFS sources for mean pairwise distance")
    p.add_argument("--full-mst", dest="full_mst", action="store_const", const=True)
    p.set_defaults(command=name)
    return p


_HELP = {
    "mst-weight": "total weight of the MST of K_n",
    "bad-edges": "size of the common cycle-edge set of the two critical graphs",
    "sensitivity": "functional correlations of the MSF pair (large noise)",
    "stability": "cycle-set equality, symmetric-difference bound and correlations (small noise)",
    "components": "component sizes, surplus, cycle counts and girth at criticality",
    "kernel-check": "chi-square checks of the joint cycle-breaking kernel",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisymst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _experiment_parser(sub, name, _HELP[name])
    g = sub.add_parser("ghp", help="GHP distance between two space files")
    g.add_argument("x")
    g.add_argument("y")
    g.add_argument("--mode", choices=("exact", "bound"), default="exact")
    g.set_defaults(command="ghp")
    p = sub.add_parser("plot", help="SVG plot of a summary or sweep JSON")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--out")
    p.add_argument("--title")
    p.add_argument("--log-x", dest="log_x", action="store_true")
    p.set_defaults(command="plot")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.command == "plot":
            return _plot_command(args)
        if args.command == "ghp":
            return _ghp_command(args)
        opts = parse_config_file(args.config) if args.config else {}
        opts.update({k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")})
        return _run_command(args.command, opts)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"noisymst: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
