"""Named presets that regenerate the data behind each reference figure."""
import json
import os
from dataclasses import asdict, dataclass, replace

from ..cachesim import SimConfig, _fmt
from ..recgraph import bidirectional_fraction, generate_directed_graph
from .analysis import analyze_model
from .sweep import SweepSpec, run_sweep

__all__ = ["Preset", "PRESETS", "replicate_figure", "run_manifest", "UnknownFigureError"]

# gamma grid: only 1, 11 and 63 are fixed by the reference plots
GAMMA_GRID = (1, 3, 7, 11, 15, 31, 63)
R_SEARCH = tuple(range(1, 9))
ANALYSIS_BASE = SimConfig(n=2000, m=20)
DIRECTED_BASE = SimConfig(graph_mode="directed", m=40)


class UnknownFigureError(KeyError):
    def __str__(self):
        return f"unknown figure {self.args[0]!r}; available: {', '.join(PRESETS)}"


@dataclass(frozen=True)
class Preset:
    kind: str  # "sweep", "analysis" or "bidirectional"
    description: str
    base: SimConfig
    axis: str = None
    values: tuple = ()
    r_search: tuple = None
    policies: tuple = ("lru", "prefetch")


def _sweep(desc, axis, values, **over):
    return Preset("sweep", desc, replace(SimConfig(), **over), axis, tuple(values), R_SEARCH)


PRESETS = {
    "fig2": Preset("analysis", "popularity profile vs Zipf parameter", ANALYSIS_BASE,
                   "beta", (0.6, 0.8, 1.0, 1.2, 1.5, 2.0)),
    "fig3": Preset("analysis", "popularity profile vs p_cont", ANALYSIS_BASE,
                   "p_cont", (0.2, 0.3, 0.4, 0.5, 0.6)),
    "fig4": Preset("analysis", "median CTR vs kappa", ANALYSIS_BASE, "kappa", (0.4, 0.8, 1.2, 1.6)),
    "fig5": Preset("analysis", "CDF of CTR", ANALYSIS_BASE),
    "fig10": _sweep("cost vs gamma, LRU and PreFetch with optimal r", "gamma", GAMMA_GRID),
    "fig11": _sweep("optimal r vs gamma", "gamma", GAMMA_GRID),
    "fig12": _sweep("hit rate vs number of users (gamma=63)", "u", (1, 2, 3, 4, 5, 10), gamma=63),
    "fig13": Preset("analysis", "in-degree distribution of the directed model",
                    replace(SimConfig(), graph_mode="directed", n=10000, m=20)),
    "fig14": Preset("analysis", "directed-model popularity profile", replace(DIRECTED_BASE, n=2000)),
    "fig15": Preset("analysis", "directed-model CTR", replace(DIRECTED_BASE, n=2000)),
    "fig16": Preset("bidirectional", "bidirectional link fraction vs p_in (p_out = p_in)",
                    replace(DIRECTED_BASE, n=2000, m=20), "p_in", (0.1, 0.2, 0.3, 0.4, 0.5)),
    "fig17": Preset("analysis", "distorted popularity at p_in = p_out = 0.2",
                    replace(DIRECTED_BASE, n=2000, p_in=0.2, p_out=0.2)),
    "fig18": _sweep("directed model: cost vs gamma", "gamma", GAMMA_GRID, graph_mode="directed", m=40),
    "fig19": _sweep("directed model: optimal r vs gamma", "gamma", GAMMA_GRID, graph_mode="directed", m=40),
    "fig22": _sweep("cost vs alpha (gamma=63)", "alpha", (0.25, 0.5, 0.75, 1.0), gamma=63),
    "users-g1": _sweep("cost vs number of users (gamma=1)", "u", (1, 2, 3, 4, 5, 10), gamma=1),
    "users-g63": _sweep("cost vs number of users (gamma=63)", "u", (1, 2, 3, 4, 5, 10), gamma=63),
    "pcont-g11": _sweep("cost vs p_cont (gamma=11)", "p_cont", (0.2, 0.3, 0.4, 0.5, 0.6), gamma=11),
    "pcont-g63": _sweep("cost vs p_cont (gamma=63)", "p_cont", (0.2, 0.3, 0.4, 0.5, 0.6), gamma=63),
    "beta-g63": _sweep("cost vs Zipf parameter (gamma=63)", "beta", (0.6, 0.8, 1.0, 1.5, 2.0), gamma=63),
    "cache-g63": _sweep("cost vs cache size (gamma=63)", "cache_size", (50, 100, 200, 300, 400), gamma=63),
    "alpha-g11": _sweep("cost vs alpha (gamma=11)", "alpha", (0.25, 0.5, 0.75, 1.0), gamma=11),
}


def _write(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def _prefixed(header_prefix, blocks):
    """Concatenate CSV texts, prefixing each data row with its key columns."""
    lines = None
    for prefix, text in blocks:
        rows = text.splitlines()
        if lines is None:
            lines = [header_prefix + "," + rows[0]]
        lines += [prefix + "," + r for r in rows[1:]]
    return "\n".join(lines or []) + "\n"


def _run_analysis(manifest, out_dir):
    base = SimConfig(**manifest["base"])
    axis = manifest.get("axis")
    values = manifest.get("values") or [None]
    outputs = {}
    warnings = []
    for value in values:
        for seed in manifest["seeds"]:
            over = {"seed": seed}
            if axis is not None:
                over[axis] = value
            cfg = replace(base, **over)
            # exact path length is quadratic; the large in-degree preset skips it
            res = analyze_model(cfg, small_world=cfg.n <= 2000)
            key = f"{axis or '-'},{_fmt(value) if value is not None else '-'},{seed}"
            for name, text in res.files().items():
                outputs.setdefault(name, []).append((key, text))
            warnings += [f"{key}: {w}" for w in res.warnings]
    for name, blocks in outputs.items():
        _write(out_dir, name, _prefixed("axis,value,seed", blocks))
    return warnings


def _run_bidirectional(manifest, out_dir):
    base = SimConfig(**manifest["base"])
    lines = ["p_in,p_out,seed,bidirectional_fraction"]
    for p in manifest["values"]:
        for seed in manifest["seeds"]:
            g = generate_directed_graph(base.n, base.m, p, p, seed=seed)
            lines.append(f"{_fmt(p)},{_fmt(p)},{seed},{_fmt(bidirectional_fraction(g))}")
    _write(out_dir, "bidirectional.csv", "\n".join(lines) + "\n")
    return []


def _run_sweep(manifest, out_dir, jobs):
    spec = SweepSpec.from_dict(manifest["spec"])
    result = run_sweep(spec, jobs=jobs)
    _write(out_dir, "runs.csv", result.runs_csv())
    _write(out_dir, "summary.csv", result.summary_csv())
    return []


def build_manifest(figure_id, seeds, horizon=None):
    if figure_id not in PRESETS:
        raise UnknownFigureError(figure_id)
    p = PRESETS[figure_id]
    base = replace(p.base, horizon=horizon) if horizon is not None else p.base
    manifest = {"figure": figure_id, "kind": p.kind, "description": p.description}
    if p.kind == "sweep":
        spec = SweepSpec(base, p.axis, p.values, tuple(seeds), p.policies, p.r_search)
        manifest["spec"] = spec.to_dict()
    else:
        manifest.update(base=asdict(base), axis=p.axis, values=list(p.values), seeds=list(seeds))
    return manifest


def run_manifest(manifest, out_dir, jobs=1):
    """Execute a manifest dict (or path to one) and write its outputs."""
    if isinstance(manifest, (str, os.PathLike)):
        with open(manifest) as fh:
            manifest = json.load(fh)
    os.makedirs(out_dir, exist_ok=True)
    kind = manifest["kind"]
    if kind == "sweep":
        warnings = _run_sweep(manifest, out_dir, jobs)
    elif kind == "analysis":
        warnings = _run_analysis(manifest, out_dir)
    elif kind == "bidirectional":
        warnings = _run_bidirectional(manifest, out_dir)
    else:
        raise ValueError(f"unknown manifest kind {kind!r}")
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return warnings


def replicate_figure(figure_id, seeds, out_dir, jobs=1, horizon=None):
    """Write the CSVs for ``figure_id`` plus a manifest that can re-run them."""
    return run_manifest(build_manifest(figure_id, seeds, horizon), out_dir, jobs)
