"""Markov request model driven by a recommendation graph.

State 0 is the dummy source standing for every request that does not come
from a recommendation click (homepage, external links). States 1..n are
videos. From a video the chain moves to state 0 with probability
``1 - p_cont`` and to one of the video's recommendations otherwise; from
state 0 it picks a video from a Zipf law.
"""
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._rng import UniformBuffer, keyed_generator

__all__ = [
    "TransitionMatrix",
    "StationaryDistribution",
    "CtrProfile",
    "ConvergenceError",
    "WEIGHT_MODES",
    "build_transition_matrix",
    "ranked_recommendations",
    "stationary_distribution",
    "median_ctr",
    "ctr_cdf",
    "ctr_per_rank",
    "expected_chain_count",
    "sample_next",
    "simulate_chain_count",
    "popularity_profile",
    "loglog_slope",
    "head_tail_slopes",
    "head_rms_residual",
    "check_popularity_shape",
    "HEAD_DISTORTION_RMS",
]

WEIGHT_MODES = ("distance", "zipf-rank")


class ConvergenceError(RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


def _ranked(targets, probs):
    order = sorted(range(len(targets)), key=lambda k: (-probs[k], targets[k]))
    return [targets[k] for k in order], [probs[k] for k in order]


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic transition matrix over states ``0..n``.

    Recommendations of each video are stored already ranked (descending
    probability, ascending id on ties). ``rec_probs`` hold the unconditional
    ``P[i, j]``, so each video's list sums to ``p_cont``.
    """

    n: int
    p_cont: float
    zipf: tuple  # P[0, j] for j = 1..n, index 0 unused
    rec_targets: tuple
    rec_probs: tuple
    _zipf_cdf: list = field(init=False, repr=False)
    _rec_cdf: tuple = field(init=False, repr=False)

    def __post_init__(self):
        zipf_cdf = np.cumsum(self.zipf[1:]).tolist()
        zipf_cdf[-1] = 1.0
        rec_cdf = []
        for probs in self.rec_probs:
            if len(probs):
                c = (np.cumsum(probs) / sum(probs)).tolist()
                c[-1] = 1.0
            else:
                c = []
            rec_cdf.append(c)
        object.__setattr__(self, "_zipf_cdf", zipf_cdf)
        object.__setattr__(self, "_rec_cdf", tuple(rec_cdf))

    @classmethod
    def from_rows(cls, n, p_cont, zipf, recommendations):
        """Build from raw rows.

        ``zipf`` gives ``P[0, j]`` for ``j = 1..n`` and ``recommendations[i]``
        maps each recommended video of ``i`` to ``P[i, j]`` (``i = 1..n``).
        """
        targets, probs = [()], [()]
        for i in range(1, n + 1):
            row = recommendations.get(i, {}) if isinstance(recommendations, dict) else recommendations[i - 1]
            t, p = _ranked(list(row.keys()), [float(x) for x in row.values()])
            targets.append(tuple(t))
            probs.append(tuple(p))
        return cls(n, float(p_cont), (0.0,) + tuple(float(z) for z in zipf), tuple(targets), tuple(probs))

    def exit_probability(self, i):
        """``P[i, 0]``; a video with no recommendations always exits."""
        return 1.0 - self.p_cont if self.rec_targets[i] else 1.0

    def row(self, i):
        """Row ``i`` as ``(target, probability)`` pairs, descending probability."""
        if i == 0:
            pairs = [(j, self.zipf[j]) for j in range(1, self.n + 1)]
        else:
            pairs = [(0, self.exit_probability(i))]
            pairs += list(zip(self.rec_targets[i], self.rec_probs[i]))
        return sorted(pairs, key=lambda e: (-e[1], e[0]))

    def to_sparse(self):
        rows, cols, vals = [], [], []
        for i in range(self.n + 1):
            for j, p in self.row(i):
                rows.append(i)
                cols.append(j)
                vals.append(p)
        size = self.n + 1
        return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))

    def dump(self):
        """Diagnostic text dump: ``i j p`` rows sorted by (i, j)."""
        lines = []
        for i in range(self.n + 1):
            for j, p in sorted(self.row(i)):
                lines.append(f"{i} {j} {p:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text, p_cont):
        zipf = {}
        recs = {}
        for ln in text.splitlines():
            if not ln.strip():
                continue
            i, j, p = ln.split()
            i, j, p = int(i), int(j), float(p)
            if i == 0:
                zipf[j] = p
            elif j != 0:
                recs.setdefault(i, {})[j] = p
        n = max(zipf)
        return cls.from_rows(n, p_cont, [zipf[j] for j in range(1, n + 1)], recs)

    def zipf_pick(self, u):
        return min(bisect_right(self._zipf_cdf, u), self.n - 1) + 1

    def step(self, current, u_branch, u_pick):
        """Deterministic transition from ``current`` given two uniforms.

        The pass through the dummy state is folded in, so the result is
        always a video.
        """
        targets = self.rec_targets[current]
        if targets and u_branch < self.p_cont:
            k = bisect_right(self._rec_cdf[current], u_pick)
            return targets[min(k, len(targets) - 1)]
        return self.zipf_pick(u_pick)


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    video_popularity: np.ndarray  # index k is video k + 1
    iterations: int
    residual: float


@dataclass(frozen=True)
class CtrProfile:
    """Per-rank click-through statistics, rank 1 at index 0.

    ``increments`` are the per-rank CTR shares, so ``cdf`` is their running
    sum clipped to end at exactly 1.
    """

    ctr: np.ndarray
    increments: np.ndarray
    cdf: np.ndarray


def _zipf_row(n, beta):
    w = np.arange(1, n + 1, dtype=float) ** (-beta)
    return w / w.sum()


def build_transition_matrix(graph, beta, kappa, p_cont, weight_mode="distance", seed=0):
    """Transition matrix for the request chain over ``graph``.

    Parameters
    ----------
    graph : RecommendationGraph
    beta : float
        Zipf exponent of the dummy-state row.
    kappa : float
        Exponent on the recommendation weights.
    p_cont : float
        Probability that the next request is a recommendation click.
    weight_mode : {"distance", "zipf-rank"}
        ``distance`` weights recommendation ``j`` of ``i`` by ``|i - j| ** -kappa``.
        ``zipf-rank`` shuffles each video's recommendations (keyed by
        ``seed``) and weights position ``k`` by ``k ** -kappa``.
    """
    if not 0 < p_cont < 1:
        raise ValueError(f"p_cont must lie in (0, 1), got {p_cont}")
    if beta <= 0 or kappa <= 0:
        raise ValueError(f"beta and kappa must be positive, got {beta}, {kappa}")
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    n = graph.n
    targets, probs = [()], [()]
    for i in range(1, n + 1):
        nbrs = np.asarray(graph.out_edges[i], dtype=np.int64)
        if nbrs.size == 0:
            raise ValueError(f"video {i} has no recommendations")
        if weight_mode == "distance":
            w = np.abs(nbrs - i).astype(float) ** (-kappa)
        else:
            perm = keyed_generator(seed, "permutation", i).permutation(nbrs.size)
            w = np.empty(nbrs.size)
            w[perm] = np.arange(1, nbrs.size + 1, dtype=float) ** (-kappa)
        p = p_cont * w / w.sum()
        t, pr = _ranked(nbrs.tolist(), p.tolist())
        targets.append(tuple(t))
        probs.append(tuple(pr))
    zipf = (0.0,) + tuple(_zipf_row(n, beta).tolist())
    return TransitionMatrix(n, float(p_cont), zipf, tuple(targets), tuple(probs))


def ranked_recommendations(matrix, i):
    if not 1 <= i <= matrix.n:
        raise ValueError(f"video {i} outside 1..{matrix.n}")
    return list(matrix.rec_targets[i])


def stationary_distribution(matrix, tol=1e-10, max_iters=1_000_000):
    """Stationary law by power iteration from the uniform vector.

    ``matrix`` is a :class:`TransitionMatrix` or any square row-stochastic
    array or sparse matrix. Stops once ``max |pi P - pi| <= tol``.

    Raises
    ------
    ConvergenceError
        If the residual is still above ``tol`` after ``max_iters`` steps.
    """
    if isinstance(matrix, TransitionMatrix):
        p = matrix.to_sparse()
    else:
        p = sp.csr_matrix(matrix)
    pt = p.T.tocsr()
    size = p.shape[0]
    pi = np.full(size, 1.0 / size)
    residual = np.inf
    for it in range(1, max_iters + 1):
        nxt = pt @ pi
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).max())
        pi = nxt
        if residual <= tol:
            break
    else:
        raise ConvergenceError(max_iters, residual)
    residual = float(np.abs(pt @ pi - pi).max())
    videos = pi[1:] / pi[1:].sum()
    return StationaryDistribution(pi, videos, it, residual)


def median_ctr(matrix):
    """Median over videos of ``P[i, rank-r recommendation]`` for each rank.

    Rank ``r`` only aggregates videos that have at least ``r``
    recommendations.
    """
    depth = max((len(t) for t in matrix.rec_targets), default=0)
    out = np.zeros(depth)
    for r in range(depth):
        vals = [p[r] for p in matrix.rec_probs[1:] if len(p) > r]
        out[r] = float(np.median(vals))
    return out


def ctr_per_rank(matrix, pi):
    """``CTR(r) = sum_i pi(i) P[i, rank-r recommendation]``.

    ``pi`` is the chain's stationary vector over states ``0..n``. Terms are
    accumulated in video order so the result is non-increasing in ``r``
    without rounding exceptions.
    """
    pi = pi.pi if isinstance(pi, StationaryDistribution) else np.asarray(pi)
    depth = max((len(t) for t in matrix.rec_targets), default=0)
    ctr = [0.0] * depth
    for i in range(1, matrix.n + 1):
        w = float(pi[i])
        for r, p in enumerate(matrix.rec_probs[i]):
            ctr[r] += w * p
    return np.array(ctr)


def ctr_cdf(matrix, pi):
    """CDF of click-through rate over recommendation ranks."""
    ctr = ctr_per_rank(matrix, pi)
    total = ctr.sum()
    inc = ctr / total
    cdf = np.minimum(np.cumsum(inc), 1.0)
    if cdf.size:
        cdf[-1] = 1.0
    return CtrProfile(ctr, inc, cdf)


def expected_chain_count(p_cont):
    if not 0 <= p_cont < 1:
        raise ValueError(f"p_cont must lie in [0, 1), got {p_cont}")
    return 1.0 / (1.0 - p_cont)


def sample_next(matrix, current, rng):
    """Next requested video after ``current``, drawing from ``rng``."""
    u = rng.random(2)
    return matrix.step(current, float(u[0]), float(u[1]))


def simulate_chain_count(matrix, num_chains, seed=0):
    """Mean number of videos per recommendation chain, by simulation.

    A chain starts with a Zipf pick and grows while the recommendation
    branch fires.
    """
    if num_chains < 1:
        raise ValueError("num_chains must be >= 1")
    draw = UniformBuffer(keyed_generator(seed, "sampling", 1), block=65536)
    total = 0
    p_cont = matrix.p_cont
    for _ in range(num_chains):
        v = matrix.zipf_pick(draw())
        length = 1
        while matrix.rec_targets[v] and draw() < p_cont:
            v = matrix.step(v, 0.0, draw())
            length += 1
        total += length
    return total / num_chains


def popularity_profile(stationary):
    """Video popularity sorted in decreasing order (rank 1 first)."""
    pop = stationary.video_popularity if isinstance(stationary, StationaryDistribution) else stationary
    return np.sort(np.asarray(pop))[::-1]


def loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def head_tail_slopes(profile):
    """Log-log rank slopes over the top decile and the bottom quartile."""
    n = len(profile)
    ranks = np.arange(1, n + 1)
    head = max(n // 10, 2)
    tail = max(n // 4, 2)
    return (
        loglog_slope(ranks[:head], profile[:head]),
        loglog_slope(ranks[n - tail:], profile[n - tail:]),
    )


# RMS log-residual above which the popular half of the profile no longer
# looks like a single power law
HEAD_DISTORTION_RMS = 0.1


def head_rms_residual(profile):
    """RMS residual of a straight log-log fit over the most popular half."""
    n = len(profile)
    h = max(n // 2, 2)
    x = np.log(np.arange(1, h + 1, dtype=float))
    y = np.log(np.asarray(profile[:h], dtype=float))
    coef = np.polyfit(x, y, 1)
    return float(np.sqrt(np.mean((y - np.polyval(coef, x)) ** 2)))


def check_popularity_shape(profile):
    """Shape diagnostics for a rank-popularity profile.

    ``tail_steeper`` holds when the bottom quartile falls off faster than
    the top decile. ``distorted`` flags a head that bends away from a
    single power law.
    """
    head, tail = head_tail_slopes(profile)
    rms = head_rms_residual(profile)
    return {
        "head_slope": head,
        "tail_slope": tail,
        "tail_steeper": tail < head,
        "head_rms": rms,
        "distorted": rms > HEAD_DISTORTION_RMS or not tail < head,
    }
