"""Subgraph samplers used as baselines against a real follower graph.

All samplers return the induced subgraph on the selected nodes, with
``labels`` holding the source graph's labels (or dense ids). Walk-based
samplers move on the undirected projection so that follower dead ends do
not trap them.
"""

from dataclasses import dataclass

import numpy as np

from .rng import stream

METHODS = ("random_node", "forest_fire", "random_walk", "pagerank_node", "mhrw")
STRUCTURE_PRESERVING = ("forest_fire", "random_walk", "pagerank_node", "mhrw")


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    method: str
    target: int
    seed: int = 0
    p_forward: float = 0.7
    restart: float = 0.15
    damping: float = 0.85
    stuck_factor: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise SamplingError(f"unknown sampling method {self.method!r}; choose from {METHODS}")
        if self.target < 1:
            raise SamplingError("target must be at least 1")
        for name in ("p_forward", "restart", "damping"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise SamplingError(f"{name} must lie in [0, 1), got {v}")


def _check(g, spec):
    if spec.target > g.n:
        raise SamplingError(f"target {spec.target} exceeds source size {g.n}")


def _start_order(g, spec):
    # shared by every sampler so that degenerate settings coincide with random_node
    rng = stream(spec.seed, "sample")
    return rng, rng.permutation(g.n)


class _Seeds:
    """Hands out unvisited nodes in a fixed random order."""

    def __init__(self, order, visited):
        self.order = order
        self.visited = visited
        self.pos = 0

    def next(self):
        while self.order[self.pos] in self.visited:
            self.pos += 1
        return int(self.order[self.pos])


def random_node(g, spec):
    _check(g, spec)
    _, order = _start_order(g, spec)
    return g.induced(order[: spec.target])


def forest_fire(g, spec):
    """Repeated fires from random seeds, each node burning a geometric
    number (mean ``p/(1-p)``) of its unvisited out-neighbours."""
    _check(g, spec)
    rng, order = _start_order(g, spec)
    A = g.out_adjacency
    visited = set()
    seeds = _Seeds(order, visited)
    while len(visited) < spec.target:
        s = seeds.next()
        visited.add(s)
        frontier = [s]
        while frontier and len(visited) < spec.target:
            u = frontier.pop(0)
            burn = int(rng.geometric(1.0 - spec.p_forward)) - 1
            if burn == 0:
                continue
            nbrs = [v for v in A.indices[A.indptr[u]:A.indptr[u + 1]].tolist() if v not in visited]
            if not nbrs:
                continue
            picks = rng.choice(nbrs, size=min(burn, len(nbrs)), replace=False)
            for v in picks.tolist():
                if len(visited) >= spec.target:
                    break
                visited.add(v)
                frontier.append(v)
    return g.induced(sorted(visited))


def mh_accept(deg_u, deg_v):
    """Acceptance probability of a Metropolis-Hastings move ``u -> v``."""
    return min(1.0, deg_u / deg_v)


def _walk(g, spec, mh):
    _check(g, spec)
    rng, order = _start_order(g, spec)
    A = g.undirected
    indptr, indices = A.indptr, A.indices
    deg = np.diff(indptr)
    visited = set()
    seeds = _Seeds(order, visited)
    budget = spec.stuck_factor * spec.target
    start = u = seeds.next()
    visited.add(u)
    idle = 0
    while len(visited) < spec.target:
        if deg[u] == 0 or idle > budget:
            start = u = seeds.next()
            visited.add(u)
            idle = 0
            continue
        if not mh and rng.random() < spec.restart:
            u = start
        else:
            v = int(indices[indptr[u] + rng.integers(deg[u])])
            if not mh or rng.random() < mh_accept(deg[u], deg[v]):
                u = v
        if u in visited:
            idle += 1
        else:
            visited.add(u)
            idle = 0
    return g.induced(sorted(visited))


def random_walk(g, spec):
    """Uniform-neighbour walk with restarts to its starting node."""
    return _walk(g, spec, mh=False)


def mhrw(g, spec):
    """Metropolis-Hastings walk: accept a move ``u -> v`` with ``min(1, deg(u)/deg(v))``."""
    return _walk(g, spec, mh=True)


def mhrw_visits(g, steps, seed=0, start=0):
    """Visit counts of a Metropolis-Hastings walk of ``steps`` steps."""
    rng = stream(seed, "mhrw-visits")
    A = g.undirected
    indptr, indices = A.indptr, A.indices
    deg = np.diff(indptr)
    counts = np.zeros(g.n, dtype=np.int64)
    picks = rng.random(steps)
    accept = rng.random(steps)
    u = start
    for t in range(steps):
        v = int(indices[indptr[u] + int(picks[t] * deg[u])])
        if accept[t] < mh_accept(deg[u], deg[v]):
            u = v
        counts[u] += 1
    return counts


def pagerank(g, damping=0.85, tol=1e-8, max_iter=10_000):
    """Power-iteration PageRank over follow edges (``i -> j`` passes rank to ``j``).

    Dangling nodes spread their rank uniformly. Stops when the L1 change
    drops below ``tol``.
    """
    n = g.n
    A = g.out_adjacency.astype(float)
    outdeg = np.asarray(A.sum(axis=1)).ravel()
    dangling = outdeg == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / outdeg[~dangling]
    M = A.T.tocsr()
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = damping * (M @ (x * inv) + x[dangling].sum() / n) + (1.0 - damping) / n
        err = np.abs(new - x).sum()
        x = new
        if err < tol:
            break
    return x


def pagerank_node(g, spec):
    """Top ``target`` nodes by PageRank, ties to the lower id."""
    _check(g, spec)
    score = pagerank(g, spec.damping)
    ids = np.arange(g.n)
    top = np.lexsort((ids, -score))[: spec.target]
    return g.induced(top)


SAMPLERS = {
    "random_node": random_node,
    "forest_fire": forest_fire,
    "random_walk": random_walk,
    "pagerank_node": pagerank_node,
    "mhrw": mhrw,
}


def sample(g, spec):
    return SAMPLERS[spec.method](g, spec)
