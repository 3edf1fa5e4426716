"""Discrete-event simulation of one edge cache in front of a central server.

``u`` users each stream one video at a time. Service times are Exp(1);
when a stream ends the user immediately requests the next video from the
Markov request model. A pluggable policy decides admissions, evictions and
prefetches. Costs follow ``Cost(t) = F(t) + gamma * D(t)`` with one full
fetch as the unit of bandwidth.
"""
import heapq
import math
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, fields, replace
from functools import lru_cache
from typing import NamedTuple

from ._rng import UniformBuffer, keyed_generator
from .recgraph import generate_ba_graph, generate_directed_graph
from .reqmodel import WEIGHT_MODES, build_transition_matrix

__all__ = [
    "SimConfig",
    "ConfigError",
    "PolicyContractError",
    "CacheState",
    "CostLedger",
    "SimReport",
    "Admit",
    "Evict",
    "Prefetch",
    "CachePolicy",
    "Simulator",
    "REPORT_COLUMNS",
    "build_model",
    "run_simulation",
]

GRAPH_MODES = ("ba", "directed")

REPORT_COLUMNS = (
    "graph_mode", "n", "m", "beta", "kappa", "p_cont", "gamma", "u", "cache_size",
    "r", "alpha", "seed", "total_requests", "fetch_units", "delayed_startups",
    "hits", "misses", "hit_rate", "cost",
)


class ConfigError(ValueError):
    pass


class PolicyContractError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Full parameter record for one run."""

    n: int = 1000
    m: int = 20
    beta: float = 0.8
    kappa: float = 0.8
    p_cont: float = 0.4
    gamma: float = 1.0
    u: int = 1
    cache_size: int = 200
    r: int = 1
    alpha: float = 1.0
    p_in: float = 0.4
    p_out: float = 0.4
    graph_mode: str = "ba"
    weight_mode: str = "distance"
    horizon: float = 1e5
    seed: int = 0
    warmup: float = 0.0

    def __post_init__(self):
        problems = []
        if self.n < 2:
            problems.append(f"n must be >= 2 (got {self.n})")
        if not 1 <= self.m < self.n:
            problems.append(f"need 1 <= m < n (got m={self.m})")
        if self.beta <= 0 or self.kappa <= 0:
            problems.append("beta and kappa must be positive")
        if not 0 < self.p_cont < 1:
            problems.append(f"p_cont must lie in (0, 1) (got {self.p_cont})")
        if self.gamma < 0:
            problems.append(f"gamma must be >= 0 (got {self.gamma})")
        if self.u < 1:
            problems.append(f"u must be >= 1 (got {self.u})")
        if self.cache_size <= self.u:
            problems.append(f"cache_size must exceed the user count (got {self.cache_size} <= {self.u})")
        if self.r < 0:
            problems.append(f"r must be >= 0 (got {self.r})")
        if not 0 < self.alpha <= 1:
            problems.append(f"alpha must lie in (0, 1] (got {self.alpha})")
        if self.graph_mode not in GRAPH_MODES:
            problems.append(f"graph_mode must be one of {GRAPH_MODES} (got {self.graph_mode!r})")
        if self.weight_mode not in WEIGHT_MODES:
            problems.append(f"weight_mode must be one of {WEIGHT_MODES} (got {self.weight_mode!r})")
        if self.graph_mode == "directed" and (
            self.p_in < 0 or self.p_out < 0 or not 0 < self.p_in + self.p_out <= 1
        ):
            problems.append("need p_in, p_out >= 0 and 0 < p_in + p_out <= 1")
        if not self.horizon > 0:
            problems.append(f"horizon must be positive (got {self.horizon})")
        if self.warmup < 0:
            problems.append("warmup must be >= 0")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


class Admit(NamedTuple):
    video: int


class Evict(NamedTuple):
    video: int


class Prefetch(NamedTuple):
    video: int
    fraction: float


class CacheState:
    """Cached videos in recency order plus per-video stream counts.

    ``order`` runs from least to most recently stamped; a video's stamp is
    its last request time, or its prefetch time if never requested since.
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.order = OrderedDict()  # video -> stamp
        self.fraction = {}
        self.in_use = {}

    def __contains__(self, video):
        return video in self.fraction

    def __len__(self):
        return len(self.fraction)

    @property
    def full(self):
        return len(self.fraction) >= self.capacity

    def in_use_count(self, video):
        return self.in_use.get(video, 0)

    def least_recent(self):
        return next(iter(self.order))

    def insert(self, video, fraction, t):
        if len(self.fraction) >= self.capacity:
            raise PolicyContractError(f"cache full ({self.capacity}) when inserting {video}")
        self.fraction[video] = fraction
        self.order[video] = t

    def evict(self, video):
        if video not in self.fraction:
            raise PolicyContractError(f"policy evicted video {video}, which is not cached")
        del self.fraction[video]
        del self.order[video]

    def touch(self, video, t):
        self.order[video] = t
        self.order.move_to_end(video)
        self.fraction[video] = 1.0


@dataclass
class CostLedger:
    gamma: float
    fetch_units: float = 0.0
    delayed_startups: int = 0
    demand_fetches: int = 0
    prefetches: int = 0
    hits: int = 0
    misses: int = 0
    total_requests: int = 0

    @property
    def cost(self):
        return self.fetch_units + self.gamma * self.delayed_startups


class CachePolicy:
    """Decision interface used by :class:`Simulator`.

    ``on_request`` is called after the requested video's stream count has
    been incremented and returns the actions to apply, in order.
    ``on_release`` fires when the last stream of a video ends.
    """

    name = "base"

    def on_request(self, video, cache, t):
        raise NotImplementedError

    def on_release(self, video, t):
        pass

    def check(self, cache):
        """Debug hook: raise AssertionError if internal state is inconsistent."""


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    policy: str
    fetch_units: float
    delayed_startups: int
    hits: int
    misses: int
    total_requests: int
    prefetches: int
    demand_fetches: int
    runtime: float = 0.0

    @property
    def gamma(self):
        return self.config.gamma

    @property
    def cost(self):
        return self.fetch_units + self.config.gamma * self.delayed_startups

    @property
    def hit_rate(self):
        return self.hits / self.total_requests if self.total_requests else 0.0

    @property
    def cost_per_request(self):
        return self.cost / self.total_requests if self.total_requests else 0.0

    def with_gamma(self, gamma):
        """Same trajectory re-costed under another delay penalty."""
        return replace(self, config=replace(self.config, gamma=gamma))

    def row(self):
        c = self.config
        values = dict(asdict(c))
        values.update(
            total_requests=self.total_requests, fetch_units=self.fetch_units,
            delayed_startups=self.delayed_startups, hits=self.hits, misses=self.misses,
            hit_rate=self.hit_rate, cost=self.cost,
        )
        return [_fmt(values[k]) for k in REPORT_COLUMNS]

    def csv_row(self):
        return ",".join(self.row())


def _fmt(x):
    if isinstance(x, bool) or isinstance(x, (int, str)):
        return str(x)
    return f"{x:.10g}"


@lru_cache(maxsize=32)
def _cached_model(graph_mode, n, m, p_in, p_out, seed, beta, kappa, p_cont, weight_mode):
    if graph_mode == "ba":
        graph = generate_ba_graph(n, m, seed=seed)
    else:
        graph = generate_directed_graph(n, m, p_in, p_out, seed=seed)
    matrix = build_transition_matrix(graph, beta, kappa, p_cont, weight_mode=weight_mode, seed=seed)
    return graph, matrix


def build_model(config, graph=None):
    """Recommendation graph and transition matrix for ``config``.

    Generated models are memoised on the parameters they depend on.
    """
    if graph is not None:
        if graph.n != config.n:
            raise ConfigError(f"loaded graph has n={graph.n} but config has n={config.n}")
        matrix = build_transition_matrix(
            graph, config.beta, config.kappa, config.p_cont,
            weight_mode=config.weight_mode, seed=config.seed,
        )
        return graph, matrix
    directed = config.graph_mode == "directed"
    return _cached_model(
        config.graph_mode, config.n, config.m,
        config.p_in if directed else None, config.p_out if directed else None,
        config.seed, config.beta, config.kappa, config.p_cont, config.weight_mode,
    )


class Simulator:
    """Event loop for one run; see :func:`run_simulation`."""

    def __init__(self, config, policy, matrix, debug=False, observer=None):
        self.config = config
        self.policy = policy
        self.matrix = matrix
        self.debug = debug
        self.observer = observer
        self.cache = CacheState(config.cache_size)
        self.ledger = CostLedger(config.gamma)
        self._scratch = CostLedger(config.gamma)
        self._last_cost = 0.0

    def _ledger_at(self, t):
        return self.ledger if t >= self.config.warmup else self._scratch

    def handle_request(self, video, t):
        cache = self.cache
        ledger = self._ledger_at(t)
        ledger.total_requests += 1
        frac = cache.fraction.get(video)
        if frac is None:
            ledger.misses += 1
            ledger.demand_fetches += 1
            ledger.fetch_units += 1.0
            ledger.delayed_startups += 1
        else:
            ledger.hits += 1
            if frac < 1.0:
                ledger.fetch_units += 1.0 - frac
        cache.in_use[video] = cache.in_use.get(video, 0) + 1
        for action in self.policy.on_request(video, cache, t):
            self._apply(action, video, frac is None, ledger, t)
        if video not in cache:
            if frac is None:
                raise PolicyContractError(f"policy did not admit missed video {video}")
            raise PolicyContractError(f"policy evicted requested video {video}")
        cache.touch(video, t)
        if self.debug:
            self._check()
        if self.observer is not None:
            self.observer(video, t, self)

    def _apply(self, action, video, missed, ledger, t):
        cache = self.cache
        if isinstance(action, Evict):
            cache.evict(action.video)
        elif isinstance(action, Admit):
            if action.video != video or not missed or action.video in cache:
                raise PolicyContractError(f"invalid admit of video {action.video}")
            cache.insert(video, 1.0, t)
        elif isinstance(action, Prefetch):
            if action.video in cache:
                raise PolicyContractError(f"prefetch of cached video {action.video}")
            if not 0 < action.fraction <= 1:
                raise PolicyContractError(f"prefetch fraction {action.fraction} outside (0, 1]")
            cache.insert(action.video, action.fraction, t)
            ledger.fetch_units += action.fraction
            ledger.prefetches += 1
        else:
            raise PolicyContractError(f"unknown action {action!r}")
        if len(cache) > cache.capacity:
            raise PolicyContractError("capacity exceeded")

    def release(self, video, t):
        cache = self.cache
        left = cache.in_use[video] - 1
        if left:
            cache.in_use[video] = left
        else:
            del cache.in_use[video]
            self.policy.on_release(video, t)
        if self.debug:
            self._check()

    def _check(self):
        cache = self.cache
        assert len(cache) <= cache.capacity
        stamps = list(cache.order.values())
        assert all(a <= b for a, b in zip(stamps, stamps[1:]))
        assert set(cache.order) == set(cache.fraction)
        led = self.ledger
        assert led.hits + led.misses == led.total_requests
        cost = led.fetch_units + led.gamma * led.delayed_startups
        assert cost == led.cost
        assert cost >= self._last_cost
        self._last_cost = cost
        self.policy.check(cache)

    def run(self):
        cfg = self.config
        step = self.matrix.step
        draws = [UniformBuffer(keyed_generator(cfg.seed, "user", k)) for k in range(cfg.u)]
        current = [0] * cfg.u
        events = []
        for k in range(cfg.u):
            draw = draws[k]
            v = self.matrix.zipf_pick(draw())
            current[k] = v
            self.handle_request(v, 0.0)
            heapq.heappush(events, (-math.log(1.0 - draw()), k))
        horizon = cfg.horizon
        while events:
            t, k = heapq.heappop(events)
            if t > horizon:
                break
            self.release(current[k], t)
            draw = draws[k]
            v = step(current[k], draw(), draw())
            current[k] = v
            self.handle_request(v, t)
            heapq.heappush(events, (t - math.log(1.0 - draw()), k))
        return self.ledger


def run_simulation(config, policy="lru", graph=None, debug=False, observer=None):
    """Simulate ``config`` under ``policy`` and return a :class:`SimReport`.

    Parameters
    ----------
    config : SimConfig
    policy : str or CachePolicy
        ``"lru"``, ``"prefetch"``, or a policy instance.
    graph : RecommendationGraph, optional
        Use this graph instead of generating one from the config.
    debug : bool
        Re-verify cache, ledger and tag invariants after every event.
    observer : callable, optional
        Called as ``observer(video, t, simulator)`` after each request.

    All randomness derives from ``config.seed``: each user and the policy
    own separate keyed streams.
    """
    from .policies import make_policy

    start = time.perf_counter()
    _, matrix = build_model(config, graph)
    if isinstance(policy, str):
        policy = make_policy(policy, config, matrix)
    sim = Simulator(config, policy, matrix, debug=debug, observer=observer)
    led = sim.run()
    return SimReport(
        config=config,
        policy=policy.name,
        fetch_units=led.fetch_units,
        delayed_startups=led.delayed_startups,
        hits=led.hits,
        misses=led.misses,
        total_requests=led.total_requests,
        prefetches=led.prefetches,
        demand_fetches=led.demand_fetches,
        runtime=time.perf_counter() - start,
    )
