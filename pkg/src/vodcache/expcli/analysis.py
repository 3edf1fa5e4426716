"""Analytic model report: popularity, CTR, degree and small-world metrics."""
import os
from dataclasses import dataclass, field

import numpy as np

from ..cachesim import _fmt, build_model
from ..recgraph import (
    GraphDisconnectedError,
    bidirectional_fraction,
    characteristic_path_length,
    clustering_coefficient,
    degree_distribution,
)
from ..reqmodel import (
    check_popularity_shape,
    ctr_cdf,
    expected_chain_count,
    median_ctr,
    popularity_profile,
    stationary_distribution,
)

__all__ = ["ModelAnalysis", "analyze_model"]


@dataclass
class ModelAnalysis:
    config: object
    popularity: np.ndarray
    median_ctr: np.ndarray
    ctr: object
    degrees: dict
    metrics: dict
    warnings: list = field(default_factory=list)

    def popularity_csv(self):
        lines = ["rank,popularity"]
        lines += [f"{k},{_fmt(float(p))}" for k, p in enumerate(self.popularity, 1)]
        return "\n".join(lines) + "\n"

    def ctr_csv(self):
        lines = ["rank,median_ctr,cdf"]
        for k, (med, c) in enumerate(zip(self.median_ctr, self.ctr.cdf), 1):
            lines.append(f"{k},{_fmt(float(med))},{_fmt(float(c))}")
        return "\n".join(lines) + "\n"

    def degrees_csv(self):
        lines = ["mode,degree,count"]
        for mode, hist in self.degrees.items():
            lines += [f"{mode},{d},{c}" for d, c in hist.items()]
        return "\n".join(lines) + "\n"

    def metrics_csv(self):
        lines = ["metric,value"]
        lines += [f"{k},{_fmt(v)}" for k, v in self.metrics.items()]
        return "\n".join(lines) + "\n"

    def files(self):
        return {
            "popularity.csv": self.popularity_csv(),
            "ctr.csv": self.ctr_csv(),
            "degrees.csv": self.degrees_csv(),
            "metrics.csv": self.metrics_csv(),
        }

    def write(self, out_dir, prefix=""):
        os.makedirs(out_dir, exist_ok=True)
        for name, text in self.files().items():
            with open(os.path.join(out_dir, prefix + name), "w") as fh:
                fh.write(text)


def analyze_model(config, graph=None, small_world=True):
    """Build the graph and chain for ``config`` and compute every analytic view."""
    graph, matrix = build_model(config, graph)
    stat = stationary_distribution(matrix)
    profile = popularity_profile(stat)
    ctr = ctr_cdf(matrix, stat)
    shape = check_popularity_shape(profile)
    row_sums = np.asarray(matrix.to_sparse().sum(axis=1)).ravel()

    metrics = {
        "n": graph.n,
        "directed_edges": graph.num_edges,
        "row_sum_max_error": float(np.abs(row_sums - 1.0).max()),
        "stationary_iterations": stat.iterations,
        "stationary_residual": stat.residual,
        "expected_chain_count": expected_chain_count(config.p_cont),
        "bidirectional_fraction": bidirectional_fraction(graph),
        "head_slope": shape["head_slope"],
        "tail_slope": shape["tail_slope"],
        "head_rms": shape["head_rms"],
        "tail_steeper": int(shape["tail_steeper"]),
        "distorted": int(shape["distorted"]),
    }
    warnings = []
    if small_world:
        metrics["clustering_coefficient"] = clustering_coefficient(graph)
        try:
            pl = characteristic_path_length(graph, seed=config.seed)
            metrics["characteristic_path_length"] = pl.value
            metrics["path_length_estimated"] = int(pl.estimated)
            metrics["path_length_sources"] = pl.sources
        except GraphDisconnectedError as exc:
            warnings.append(str(exc))
    if shape["distorted"]:
        warnings.append(
            "popularity profile departs from a power law over the popular videos "
            f"(head rms {shape['head_rms']:.3f}, head slope {shape['head_slope']:.3f}, "
            f"tail slope {shape['tail_slope']:.3f})"
        )
    degrees = {mode: degree_distribution(graph, mode) for mode in ("in", "out", "undirected")}
    return ModelAnalysis(config, profile, median_ctr(matrix), ctr, degrees, metrics, warnings)
