"""Parameter sweeps over the cache simulation, with optional optimal-r search."""
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from ..cachesim import REPORT_COLUMNS, SimConfig, _fmt, run_simulation
from ..policies import POLICIES

__all__ = ["SweepSpec", "SweepResult", "run_sweep", "AXES", "RUN_COLUMNS", "SUMMARY_COLUMNS"]

AXES = ("gamma", "u", "p_cont", "beta", "cache_size", "alpha", "p_in")

RUN_COLUMNS = ("axis", "value", "policy", "status") + REPORT_COLUMNS + ("cost_per_request",)
SUMMARY_COLUMNS = (
    "axis", "value", "policy", "r", "mean_cost", "mean_cost_per_request",
    "mean_hit_rate", "mean_fetch_units", "mean_delayed_startups", "seeds",
)


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    axis: str
    values: tuple
    seeds: tuple
    policies: tuple = POLICIES
    r_search: tuple = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values or not self.seeds:
            raise ValueError("sweep needs at least one value and one seed")
        bad = set(self.policies) - set(POLICIES)
        if bad or not self.policies:
            raise ValueError(f"unknown policies {sorted(bad)}")
        if self.r_search is not None and "prefetch" not in self.policies:
            raise ValueError("r_search only applies to the prefetch policy")

    def points(self):
        """(value, seed, policy, r) in emission order."""
        for value in self.values:
            for seed in self.seeds:
                for policy in self.policies:
                    if policy == "prefetch" and self.r_search is not None:
                        for r in self.r_search:
                            yield value, seed, policy, r
                    else:
                        yield value, seed, policy, self.base.r

    def config_for(self, value, seed, r):
        over = {self.axis: value, "seed": seed, "r": r}
        if self.axis == "p_in":
            over["p_out"] = value
        return replace(self.base, **over)

    def to_dict(self):
        return {
            "base": asdict(self.base),
            "axis": self.axis,
            "values": list(self.values),
            "seeds": list(self.seeds),
            "policies": list(self.policies),
            "r_search": list(self.r_search) if self.r_search is not None else None,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            base=SimConfig(**d["base"]),
            axis=d["axis"],
            values=tuple(d["values"]),
            seeds=tuple(d["seeds"]),
            policies=tuple(d["policies"]),
            r_search=tuple(d["r_search"]) if d.get("r_search") is not None else None,
        )


@dataclass
class RunRecord:
    axis: str
    value: object
    policy: str
    r: int
    seed: int
    report: object = None
    error: str = None

    def row(self):
        head = [self.axis, _fmt(self.value), self.policy]
        if self.report is None:
            return head + [f"error: {self.error}"] + [""] * (len(RUN_COLUMNS) - 4)
        return head + ["ok"] + self.report.row() + [_fmt(self.report.cost_per_request)]


def _simulate(task):
    config, policy = task
    try:
        return run_simulation(config, policy), None
    except Exception as exc:  # recorded as an error row
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class SweepResult:
    spec: SweepSpec
    runs: list

    def runs_csv(self):
        lines = [",".join(RUN_COLUMNS)]
        lines.extend(",".join(rec.row()) for rec in self.runs)
        return "\n".join(lines) + "\n"

    def mean_costs(self):
        """``{(value, policy, r): (mean cost, mean hit rate, ...)}`` over seeds."""
        groups = OrderedDict()
        for rec in self.runs:
            if rec.report is None:
                continue
            groups.setdefault((rec.value, rec.policy, rec.r), []).append(rec.report)
        out = OrderedDict()
        for key, reps in groups.items():
            out[key] = {
                "mean_cost": float(np.mean([x.cost for x in reps])),
                "mean_cost_per_request": float(np.mean([x.cost_per_request for x in reps])),
                "mean_hit_rate": float(np.mean([x.hit_rate for x in reps])),
                "mean_fetch_units": float(np.mean([x.fetch_units for x in reps])),
                "mean_delayed_startups": float(np.mean([x.delayed_startups for x in reps])),
                "seeds": len(reps),
            }
        return out

    def summary(self):
        """One row per (value, policy); prefetch keeps its lowest mean-cost r."""
        means = self.mean_costs()
        rows = []
        for value in self.spec.values:
            for policy in self.spec.policies:
                cands = [(r, m) for (v, p, r), m in means.items() if v == value and p == policy]
                if not cands:
                    continue
                r, best = min(cands, key=lambda c: (c[1]["mean_cost"], c[0]))
                rows.append({"axis": self.spec.axis, "value": value, "policy": policy, "r": r, **best})
        return rows

    def summary_csv(self):
        lines = [",".join(SUMMARY_COLUMNS)]
        for row in self.summary():
            lines.append(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS))
        return "\n".join(lines) + "\n"

    def optimal_r(self):
        return {row["value"]: row["r"] for row in self.summary() if row["policy"] == "prefetch"}


def run_sweep(spec, jobs=1):
    """Run every point of ``spec``.

    The delay penalty does not influence any decision in the simulation, so
    points that differ only in ``gamma`` share one trajectory and are
    re-costed. Failed runs become error rows.
    """
    points = list(spec.points())
    tasks = OrderedDict()
    for value, seed, policy, r in points:
        try:
            cfg = spec.config_for(value, seed, r)
        except Exception:
            continue
        tasks.setdefault((replace(cfg, gamma=0.0), policy), None)
    keys = list(tasks)
    if jobs > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_simulate, keys))
    else:
        results = [_simulate(k) for k in keys]
    done = dict(zip(keys, results))
    runs = []
    for value, seed, policy, r in points:
        try:
            cfg = spec.config_for(value, seed, r)
        except Exception as exc:
            runs.append(RunRecord(spec.axis, value, policy, r, seed, error=f"{type(exc).__name__}: {exc}"))
            continue
        report, error = done[(replace(cfg, gamma=0.0), policy)]
        if report is not None:
            report = report.with_gamma(cfg.gamma)
        runs.append(RunRecord(spec.axis, value, policy, r, seed, report, error))
    return SweepResult(spec, runs)
