"""Semantic orderings, projection of profiles into the homophily space,
and exact k-nearest-neighbour queries over the projected rows.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .attrgen import data_dir
from .rng import stream

AGE_MAX = 80.0


class SemanticMapError(ValueError):
    pass


class UnknownLabelError(KeyError):
    def __init__(self, label, node_id, kind):
        super().__init__(f"node {node_id}: {kind} {label!r} is not in the semantic map")
        self.label = label
        self.node_id = node_id

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class SemanticMap:
    labels: tuple

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            dup = sorted({x for x in self.labels if self.labels.count(x) > 1})
            raise SemanticMapError(f"duplicate labels in semantic map: {dup}")
        object.__setattr__(self, "_rank", {lab: i for i, lab in enumerate(self.labels)})

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._rank

    def rank(self, label):
        return self._rank[label]

    def normalized(self, label):
        n = len(self.labels)
        return self._rank[label] / (n - 1) if n > 1 else 0.0

    def as_dict(self):
        return {lab: self.normalized(lab) for lab in self.labels}


def average_linkage_order(dist):
    """Leaf order of average-linkage agglomerative clustering.

    Ties between equally close pairs go to the pair whose clusters hold the
    lowest original indices; within a merge the cluster with the lower
    minimum index is placed first.
    """
    n = len(dist)
    if n == 0:
        return []
    D = np.array(dist, dtype=float)
    # cluster id -> (leaf order, size, min original index)
    clusters = {i: ([i], 1, i) for i in range(n)}
    active = list(range(n))
    while len(active) > 1:
        best = None
        for ai, a in enumerate(active):
            for b in active[ai + 1:]:
                ma, mb = clusters[a][2], clusters[b][2]
                key = (D[a, b], min(ma, mb), max(ma, mb))
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        if clusters[b][2] < clusters[a][2]:
            a, b = b, a
        la, sa, ma = clusters[a]
        lb, sb, _ = clusters[b]
        for c in active:
            if c not in (a, b):
                D[a, c] = D[c, a] = (sa * D[a, c] + sb * D[b, c]) / (sa + sb)
        clusters[a] = (la + lb, sa + sb, ma)
        del clusters[b]
        active.remove(b)
    return clusters[active[0]][0]


def build_semantic_map(labels, similarity):
    """Order ``labels`` so that semantically close labels sit next to each other.

    ``similarity`` is a square, symmetric table of pairwise cosine
    similarities with a unit diagonal.
    """
    S = np.asarray(similarity, dtype=float)
    labels = list(labels)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] != len(labels):
        raise SemanticMapError("similarity table must be square and match the label count")
    if not np.allclose(S, S.T, atol=1e-12):
        raise SemanticMapError("similarity table must be symmetric")
    if not np.allclose(np.diag(S), 1.0, atol=1e-12):
        raise SemanticMapError("similarity table must have a unit diagonal")
    order = average_linkage_order(1.0 - S)
    return SemanticMap(tuple(labels[i] for i in order))


def load_semantic_map(path):
    with open(path, encoding="utf-8") as fh:
        labels = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    return SemanticMap(tuple(labels))


def save_semantic_map(smap, path):
    with open(path, "w", encoding="utf-8") as fh:
        for lab in smap.labels:
            fh.write(lab + "\n")


def default_occupation_map():
    return load_semantic_map(data_dir() / "occupations.txt")


def default_interest_map():
    return load_semantic_map(data_dir() / "interests.txt")


@dataclass(frozen=True)
class ProjectionMatrix:
    values: np.ndarray  # N x (k_int + 3)
    k_int: int
    weights: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    def header(self):
        return ["id", "A", "O"] + [f"I{j + 1}" for j in range(self.k_int)] + ["R"]

    def save_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.header()) + "\n")
            for i, row in enumerate(self.values):
                fh.write(",".join([str(i)] + [repr(float(x)) for x in row]) + "\n")


def project_profiles(profiles, occ_map=None, int_map=None, weights=None, seed=0):
    """Encode each profile as ``[A, O, I_1..I_k, R] * w``.

    Age is min-max scaled over [0, 80]; occupation and interests use their
    normalized semantic rank; interest slots past the profile's own
    interests are zero; R is uniform from the node's projection stream.
    """
    occ_map = occ_map or default_occupation_map()
    int_map = int_map or default_interest_map()
    k_int = max((len(p.interests) for p in profiles), default=0)
    d = k_int + 3
    w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (d,):
        raise ValueError(f"weights must have length {d} (k_int={k_int}), got {w.shape}")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    X = np.zeros((len(profiles), d))
    for row, p in enumerate(profiles):
        X[row, 0] = min(max(p.age, 0), AGE_MAX) / AGE_MAX
        if p.occupation not in occ_map:
            raise UnknownLabelError(p.occupation, p.id, "occupation")
        X[row, 1] = occ_map.normalized(p.occupation)
        for j, lab in enumerate(p.interests):
            if lab not in int_map:
                raise UnknownLabelError(lab, p.id, "interest")
            X[row, 2 + j] = int_map.normalized(lab)
        X[row, d - 1] = stream(seed, "projection", p.id).random()
    X *= w
    X.setflags(write=False)
    return ProjectionMatrix(X, k_int, w)


def _row_dists(P, i, ids):
    diff = P[ids] - P[i]
    return np.sqrt(np.sum(diff * diff, axis=-1))


class SpatialIndex:
    """Exact Euclidean kNN over the rows of a matrix.

    A k-d tree supplies candidates; distances are then recomputed from the
    coordinates and ordered by ``(distance, id)`` so that results (ties
    included) are identical to a brute-force scan.
    """

    MARGIN = 4

    def __init__(self, P):
        self.P = np.ascontiguousarray(P, dtype=float)
        self.tree = cKDTree(self.P)

    @property
    def n(self):
        return self.P.shape[0]

    def query(self, i, k):
        ids, dists = self.query_all(k, rows=np.array([i]))
        return [(int(j), float(x)) for j, x in zip(ids[0], dists[0])]

    def query_all(self, k, rows=None, workers=1):
        """Return ``(ids, dists)`` of shape ``(len(rows), min(k, N-1))``."""
        N = self.n
        rows = np.arange(N) if rows is None else np.asarray(rows)
        kk = min(k, N - 1)
        if kk <= 0:
            return np.zeros((len(rows), 0), dtype=np.int64), np.zeros((len(rows), 0))
        m = min(N, kk + 1 + self.MARGIN)
        _, idx = self.tree.query(self.P[rows], k=list(range(1, m + 1)), workers=workers)
        idx = idx.astype(np.int64)
        diff = self.P[idx] - self.P[rows][:, None, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[idx == rows[:, None]] = np.inf
        order = np.lexsort((idx, dist), axis=-1)
        idx = np.take_along_axis(idx, order, axis=-1)
        dist = np.take_along_axis(dist, order, axis=-1)
        out_ids, out_d = idx[:, :kk].copy(), dist[:, :kk].copy()
        if m < N:
            kth = dist[:, kk - 1]
            finite = np.where(np.isfinite(dist), dist, -np.inf)
            last = finite.max(axis=-1)
            for r in np.nonzero(~(last > kth * (1 + 1e-9)))[0]:
                out_ids[r], out_d[r] = self._ball_fallback(int(rows[r]), kk, kth[r])
        return out_ids, out_d

    def _ball_fallback(self, i, kk, kth):
        cand = np.array(self.tree.query_ball_point(self.P[i], r=kth * (1 + 1e-6) + 1e-12), dtype=np.int64)
        cand = cand[cand != i]
        d = _row_dists(self.P, i, cand)
        order = np.lexsort((cand, d))[:kk]
        return cand[order], d[order]


def knn(index, i, k):
    return index.query(i, k)
