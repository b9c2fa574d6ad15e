"""Five-metric structural fingerprint and the NED realism score.

Density is measured on the directed graph; clustering, connectivity,
shortest paths and modularity on its undirected projection.
"""

import json
import math
from dataclasses import asdict, dataclass

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .rng import stream

METRICS = ("density", "avg_clustering", "lcc_proportion", "norm_shortest_path", "modularity")
DEFAULT_MAX_PAIRS = 10**6

# full Bluesky follower graph
BLUESKY = {
    "density": 8.6e-6,
    "avg_clustering": 0.262,
    "lcc_proportion": 1.0,
    "norm_shortest_path": 0.230,
    "modularity": 0.85,
}


@dataclass
class MetricsReport:
    density: float
    avg_clustering: float
    lcc_proportion: float
    norm_shortest_path: float
    modularity: float
    n: int
    e: int
    sp_pairs_sampled: int
    seed: int

    def vector(self):
        return np.array([getattr(self, m) for m in METRICS], dtype=float)

    def is_defined(self):
        return bool(np.isfinite(self.vector()).all())

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None  # undefined value marker
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        for m in METRICS:
            kw[m] = float("nan") if kw.get(m) is None else float(kw[m])
        return cls(**kw)


@dataclass(frozen=True)
class ReferenceTargets:
    values: dict
    scales: dict = None

    def __post_init__(self):
        missing = [m for m in METRICS if m not in self.values]
        if missing:
            raise ValueError(f"targets missing metrics {missing}")
        if self.scales is not None and any(self.scales[m] <= 0 for m in METRICS if m in self.scales):
            raise ValueError("NED scales must be positive")

    def vector(self):
        return np.array([self.values[m] for m in METRICS], dtype=float)

    @classmethod
    def bluesky(cls):
        return cls(dict(BLUESKY))

    @classmethod
    def from_report(cls, report):
        return cls({m: getattr(report, m) for m in METRICS})

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        return cls({m: float(d[m]) for m in METRICS}, d.get("scales"))


def density(g):
    if g.n < 2:
        raise ValueError("density needs at least 2 nodes")
    return g.e / (g.n * (g.n - 1))


def local_clustering(g):
    A = g.undirected.astype(np.int64)
    deg = np.diff(A.indptr)
    # row sums of (A @ A) * A count each neighbour-pair edge twice
    tri2 = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel()
    out = np.zeros(g.n)
    ok = deg >= 2
    out[ok] = tri2[ok] / (deg[ok] * (deg[ok] - 1.0))
    return out


def avg_clustering(g):
    return float(local_clustering(g).mean()) if g.n else 0.0


def _components(g):
    return connected_components(g.undirected, directed=False)


def lcc_proportion(g):
    if g.n == 0:
        raise ValueError("empty graph")
    _, labels = _components(g)
    return float(np.bincount(labels).max() / g.n)


def lcc_nodes(g):
    _, labels = _components(g)
    return np.nonzero(labels == np.argmax(np.bincount(labels)))[0]


def norm_shortest_path(g, max_pairs=DEFAULT_MAX_PAIRS, seed=0, return_pairs=False, batch=64):
    """Mean hop distance between node pairs of the largest component, over ``log2(N)``.

    All pairs are used when the component has at most ``max_pairs``
    ordered pairs; otherwise BFS runs from ``ceil(max_pairs / (L - 1))``
    uniformly sampled sources of the component of size ``L``. A graph
    without edges yields ``nan``.
    """
    if g.n < 2:
        raise ValueError("shortest path needs at least 2 nodes")
    nodes = lcc_nodes(g)
    L = len(nodes)
    if g.e == 0 or L < 2:
        return (float("nan"), 0) if return_pairs else float("nan")
    n_src = min(L, -(-max_pairs // (L - 1)))
    if n_src < L:
        sources = np.sort(stream(seed, "sp-sources").choice(nodes, size=n_src, replace=False))
    else:
        sources = nodes
    A = g.undirected[nodes][:, nodes]
    local = np.searchsorted(nodes, sources)
    total = 0.0
    for lo in range(0, len(local), batch):
        D = shortest_path(A, method="D", unweighted=True, indices=local[lo:lo + batch])
        total += D.sum()
    pairs = len(sources) * (L - 1)
    value = total / pairs / math.log2(g.n)
    return (float(value), int(pairs)) if return_pairs else float(value)


def to_networkx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    A = g.undirected
    rows = np.repeat(np.arange(g.n), np.diff(A.indptr))
    mask = rows < A.indices
    G.add_edges_from(zip(rows[mask].tolist(), A.indices[mask].tolist()))
    return G


def modularity_of(g, partition):
    """Newman modularity of ``partition`` (community id per node) on the undirected projection."""
    A = g.undirected
    m = A.nnz / 2
    if m == 0:
        raise ValueError("modularity undefined without edges")
    part = np.asarray(partition)
    deg = np.diff(A.indptr).astype(float)
    rows = np.repeat(np.arange(g.n), np.diff(A.indptr))
    inside = (part[rows] == part[A.indices]).sum() / 2
    k = np.bincount(part, weights=deg)
    return float(inside / m - ((k / (2 * m)) ** 2).sum())


def louvain_modularity(g, seed=0):
    """Return ``(Q, partition)`` from seeded Louvain on the undirected projection."""
    if g.e == 0:
        raise ValueError("modularity undefined without edges")
    G = to_networkx(g)
    communities = nx.community.louvain_communities(G, seed=int(seed))
    part = np.empty(g.n, dtype=np.int64)
    for cid, members in enumerate(sorted(communities, key=min)):
        part[list(members)] = cid
    return modularity_of(g, part), part


def report(g, max_pairs=DEFAULT_MAX_PAIRS, seed=0):
    nsp, pairs = norm_shortest_path(g, max_pairs=max_pairs, seed=seed, return_pairs=True)
    Q = louvain_modularity(g, seed)[0] if g.e else float("nan")
    return MetricsReport(
        density=density(g),
        avg_clustering=avg_clustering(g),
        lcc_proportion=lcc_proportion(g),
        norm_shortest_path=nsp,
        modularity=Q,
        n=g.n,
        e=g.e,
        sp_pairs_sampled=pairs,
        seed=seed,
    )


def mean_report(reports):
    """Field-wise mean of several reports (counts rounded)."""
    vec = np.mean([r.vector() for r in reports], axis=0)
    base = reports[0]
    return MetricsReport(
        *[float(x) for x in vec],
        n=base.n,
        e=int(round(np.mean([r.e for r in reports]))),
        sp_pairs_sampled=int(round(np.mean([r.sp_pairs_sampled for r in reports]))),
        seed=base.seed,
    )


def pool_scales(vectors):
    """Per-metric ``max - min`` over a pool of fingerprints."""
    V = np.asarray(vectors, dtype=float)
    return dict(zip(METRICS, (np.nanmax(V, axis=0) - np.nanmin(V, axis=0)).tolist()))


def ned(report, targets, scales):
    """Normalized Euclidean distance between two fingerprints.

    Metrics whose scale is zero contribute nothing.
    """
    x = report.vector() if hasattr(report, "vector") else np.asarray([report[m] for m in METRICS], float)
    t = targets.vector() if hasattr(targets, "vector") else np.asarray([targets[m] for m in METRICS], float)
    s = np.array([scales[m] for m in METRICS], dtype=float)
    if not (np.isfinite(x).all() and np.isfinite(t).all()):
        return float("inf")
    z = np.zeros_like(x)
    ok = s > 0
    z[ok] = (x[ok] - t[ok]) / s[ok]
    return float(np.sqrt(np.sum(z * z)))
