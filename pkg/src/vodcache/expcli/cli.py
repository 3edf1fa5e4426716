"""Command-line entry point: ``vodcache {analyze,simulate,sweep,figure}``."""
import argparse
import json
import os
import sys
from dataclasses import replace

from ..cachesim import REPORT_COLUMNS, ConfigError, SimConfig, run_simulation
from ..policies import POLICIES
from ..recgraph import RecommendationGraph
from .analysis import analyze_model
from .config import load_config, make_config
from .figures import PRESETS, UnknownFigureError, build_manifest, run_manifest
from .sweep import AXES, SweepSpec, run_sweep

# flag -> SimConfig field
_FLAG_FIELDS = {
    "n": "n", "m": "m", "gamma": "gamma", "users": "u", "pcont": "p_cont", "beta": "beta",
    "kappa": "kappa", "cache_size": "cache_size", "r": "r", "alpha": "alpha",
    "graph": "graph_mode", "weight_mode": "weight_mode", "pin": "p_in", "pout": "p_out",
    "seed": "seed", "horizon": "horizon", "warmup": "warmup",
}


def parse_int_list(text):
    """``"1,2,5"`` or an inclusive range ``"1..8"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def parse_values(text):
    vals = []
    for part in text.split(","):
        f = float(part)
        vals.append(int(f) if f.is_integer() and "." not in part else f)
    return tuple(vals)


def _common(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--users", type=int)
    p.add_argument("--pcont", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--cache-size", type=int)
    p.add_argument("--r", type=int, help="prefetch depth (prefetch policy only)")
    p.add_argument("--alpha", type=float, help="prefetch fraction (prefetch policy only)")
    p.add_argument("--graph", choices=("ba", "directed"))
    p.add_argument("--weight-mode", choices=("distance", "zipf-rank"))
    p.add_argument("--pin", type=float)
    p.add_argument("--pout", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=parse_int_list, help="e.g. 0,1,2 or 0..4")
    p.add_argument("--horizon", type=float)
    p.add_argument("--warmup", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-graph", metavar="PATH")
    p.add_argument("--load-graph", metavar="PATH")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vodcache", description="Recommendation-driven VoD request model and edge-cache simulator."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytic properties of the request model")
    _common(p)

    p = sub.add_parser("simulate", help="run the cache simulation")
    _common(p)
    p.add_argument("--policy", choices=POLICIES, default="lru")

    p = sub.add_parser("sweep", help="sweep one parameter over seeds and policies")
    _common(p)
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--values", type=parse_values)
    p.add_argument("--policies", default="lru,prefetch")
    p.add_argument("--r-search", type=parse_int_list, help="candidate r values, e.g. 1..8")
    p.add_argument("--manifest", help="re-run the sweep recorded in this manifest")

    p = sub.add_parser("figure", help="regenerate the data behind a named figure")
    _common(p)
    p.add_argument("figure_id", help="preset id, or 'list'")
    return parser


def config_from_args(args, **extra):
    values = load_config(args.config) if args.config else {}
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    values.update(extra)
    return make_config(**values)


def _load_graph(args):
    if not args.load_graph:
        return None
    with open(args.load_graph) as fh:
        return RecommendationGraph.from_text(fh.read())


def _dump_graph(args, config, graph=None):
    if not args.dump_graph:
        return
    from ..cachesim import build_model

    graph, _ = build_model(config, graph)
    with open(args.dump_graph, "w") as fh:
        fh.write(graph.to_text())


def _emit(args, name, text):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args):
    graph = _load_graph(args)
    extra = {"n": graph.n} if graph is not None else {}
    config = config_from_args(args, **extra)
    _dump_graph(args, config, graph)
    res = analyze_model(config, graph)
    if args.out:
        res.write(args.out)
    else:
        sys.stdout.write(res.metrics_csv())
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_simulate(args):
    graph = _load_graph(args)
    extra = {"n": graph.n} if graph is not None else {}
    config = config_from_args(args, **extra)
    _dump_graph(args, config, graph)
    seeds = args.seeds or (config.seed,)
    lines = [",".join(("policy",) + REPORT_COLUMNS + ("cost_per_request",))]
    for seed in seeds:
        rep = run_simulation(replace(config, seed=seed), args.policy, graph=graph)
        lines.append(f"{rep.policy},{rep.csv_row()},{rep.cost_per_request:.10g}")
    _emit(args, "report.csv", "\n".join(lines) + "\n")
    return 0


def cmd_sweep(args):
    if args.manifest:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        spec = SweepSpec.from_dict(manifest["spec"])
    else:
        if not args.axis or not args.values:
            raise ConfigError("sweep needs --axis and --values (or --manifest)")
        config = config_from_args(args)
        policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
        spec = SweepSpec(config, args.axis, args.values, args.seeds or (config.seed,),
                         policies, args.r_search)
    result = run_sweep(spec, jobs=args.jobs)
    _emit(args, "runs.csv", result.runs_csv())
    if args.out:
        _emit(args, "summary.csv", result.summary_csv())
        manifest = {"kind": "sweep", "figure": None, "description": "ad hoc sweep", "spec": spec.to_dict()}
        _emit(args, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_figure(args):
    if args.figure_id == "list":
        for fid, p in PRESETS.items():
            print(f"{fid}\t{p.kind}\t{p.description}")
        return 0
    if args.figure_id not in PRESETS:
        raise UnknownFigureError(args.figure_id)
    out = args.out or os.path.join("figures", args.figure_id)
    seeds = args.seeds or (args.seed if args.seed is not None else 0,)
    manifest = build_manifest(args.figure_id, seeds, horizon=args.horizon)
    for w in run_manifest(manifest, out, jobs=args.jobs):
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {args.figure_id} to {out}", file=sys.stderr)
    return 0


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "sweep": cmd_sweep, "figure": cmd_figure}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UnknownFigureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
