"""LRU and recommendation-aware PreFetch cache policies."""
from .cachesim import Admit, CachePolicy, Evict, Prefetch
from ._rng import UniformBuffer, keyed_generator

__all__ = ["LruPolicy", "PreFetchPolicy", "make_policy", "POLICIES"]


class LruPolicy(CachePolicy):
    """Admit every missed video, evicting the least recently requested one.

    In-use videos are not protected.
    """

    name = "lru"

    def on_request(self, video, cache, t):
        if video in cache:
            return []
        if not cache.full:
            return [Admit(video)]
        return [Evict(cache.least_recent()), Admit(video)]


class PreFetchPolicy(CachePolicy):
    """Prefetch the top ``r`` recommendations of every requested video.

    Victims come from ``V`` (cached, not in use, not tagged) in LRU order;
    if ``V`` is empty a tagged video not in use is evicted uniformly at
    random. A video is tagged while it is among the top ``r``
    recommendations of some video in use. In-use videos are never evicted.

    Parameters
    ----------
    matrix : TransitionMatrix
        Source of the ranked recommendation lists.
    r : int
        Prefetch depth.
    alpha : float
        Leading fraction of each video fetched ahead of demand.
    rng : numpy.random.Generator
        Stream for random victim selection among tagged videos.
    """

    name = "prefetch"

    def __init__(self, matrix, r, alpha=1.0, rng=None):
        if r < 0:
            raise ValueError("r must be >= 0")
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        self.matrix = matrix
        self.r = r
        self.alpha = alpha
        self._draw = UniformBuffer(rng if rng is not None else keyed_generator(0, "policy"), block=256)
        self.tag_count = {}

    def top(self, video):
        return self.matrix.rec_targets[video][: self.r]

    def tagged(self, cache):
        return {v for v, c in self.tag_count.items() if c and v in cache}

    def on_request(self, video, cache, t):
        if cache.in_use_count(video) == 1:
            for rec in self.top(video):
                self.tag_count[rec] = self.tag_count.get(rec, 0) + 1

        actions = []
        evicted = set()
        added = set()
        size = len(cache)

        def cached(v):
            return (v in cache and v not in evicted) or v in added

        def pick_victim():
            # V in LRU order; videos added during this request are in U or T
            for v in cache.order:
                if v in evicted or cache.in_use.get(v) or self.tag_count.get(v):
                    continue
                return v
            # a tagged video may itself be streaming; U is never a victim
            pool = sorted(v for v, c in self.tag_count.items() if c and cached(v) and not cache.in_use.get(v))
            if not pool:
                return None
            return pool[int(self._draw() * len(pool))]

        if not cached(video):
            if size >= cache.capacity:
                victim = pick_victim()
                if victim is None:
                    return actions  # engine reports the unadmitted miss
                actions.append(Evict(victim))
                evicted.add(victim)
                size -= 1
            actions.append(Admit(video))
            added.add(video)
            size += 1

        for rec in self.top(video):
            if cached(rec):
                continue
            if size >= cache.capacity:
                victim = pick_victim()
                if victim is None:
                    break
                actions.append(Evict(victim))
                evicted.add(victim)
                added.discard(victim)
                size -= 1
            actions.append(Prefetch(rec, self.alpha))
            added.add(rec)
            size += 1
        return actions

    def on_release(self, video, t):
        for rec in self.top(video):
            left = self.tag_count[rec] - 1
            if left:
                self.tag_count[rec] = left
            else:
                del self.tag_count[rec]

    def check(self, cache):
        expected = set()
        for v in cache.in_use:
            expected.update(self.top(v))
        expected &= set(cache.fraction)
        assert self.tagged(cache) == expected, "tag set drifted from recomputation"
        counts = {}
        for v in cache.in_use:
            for rec in self.top(v):
                counts[rec] = counts.get(rec, 0) + 1
        assert counts == self.tag_count, "tag reference counts drifted"


POLICIES = ("lru", "prefetch")


def make_policy(name, config, matrix):
    """Instantiate a policy by name for one run of ``config``."""
    if name == "lru":
        return LruPolicy()
    if name == "prefetch":
        return PreFetchPolicy(
            matrix, config.r, config.alpha, rng=keyed_generator(config.seed, "policy")
        )
    raise ValueError(f"unknown policy {name!r}; choose from {POLICIES}")
