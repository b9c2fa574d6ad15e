"""Directed follower graph container and edge-list I/O."""

import csv
from array import array
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class EdgeListError(ValueError):
    pass


@dataclass(eq=False)
class DirectedGraph:
    """``edges[r] = (i, j)`` means node ``i`` follows node ``j``.

    Nodes are the dense ids ``0..n-1``; ``labels`` optionally maps them back
    to the ids of a source file.
    """

    n: int
    edges: np.ndarray
    labels: list = None
    duplicates_dropped: int = 0
    self_loops_dropped: int = 0
    neighborhoods: list = field(default=None, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    @property
    def e(self):
        return len(self.edges)

    def sorted_edges(self):
        if self.e == 0:
            return self.edges
        order = np.lexsort((self.edges[:, 1], self.edges[:, 0]))
        return self.edges[order]

    @cached_property
    def undirected(self):
        """Symmetric 0/1 CSR adjacency of the undirected projection."""
        src, dst = self.edges[:, 0], self.edges[:, 1]
        A = sp.coo_matrix(
            (np.ones(2 * self.e, dtype=np.int8), (np.concatenate([src, dst]), np.concatenate([dst, src]))),
            shape=(self.n, self.n),
        ).tocsr()
        A.sum_duplicates()
        A.data[:] = 1
        A.setdiag(0)
        A.eliminate_zeros()
        A.sort_indices()
        return A

    @cached_property
    def out_adjacency(self):
        A = sp.csr_matrix(
            (np.ones(self.e, dtype=np.int8), (self.edges[:, 0], self.edges[:, 1])), shape=(self.n, self.n)
        )
        A.sort_indices()
        return A

    def undirected_degrees(self):
        return np.diff(self.undirected.indptr)

    def neighbors(self, u):
        A = self.undirected
        return A.indices[A.indptr[u]:A.indptr[u + 1]]

    def out_neighbors(self, u):
        A = self.out_adjacency
        return A.indices[A.indptr[u]:A.indptr[u + 1]]

    def induced(self, nodes):
        """Induced subgraph on ``nodes``; new ids follow ascending old id."""
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        if self.e:
            keep = (remap[self.edges[:, 0]] >= 0) & (remap[self.edges[:, 1]] >= 0)
            sub = remap[self.edges[keep]]
        else:
            sub = np.zeros((0, 2), dtype=np.int64)
        labels = [self.labels[u] for u in nodes] if self.labels is not None else [int(u) for u in nodes]
        return DirectedGraph(len(nodes), sub, labels=labels)

    def check(self):
        """Raise ``AssertionError`` if any structural invariant is broken."""
        E = self.edges
        assert not (E[:, 0] == E[:, 1]).any(), "self-loop"
        assert len(np.unique(E, axis=0)) == len(E), "duplicate directed edge"
        assert ((E >= 0) & (E < self.n)).all(), "node id out of range"
        if self.neighborhoods is not None:
            closure = [set() for _ in range(self.n)]
            for i, j in E.tolist():
                closure[i].add(j)
                closure[j].add(i)
            assert closure == [set(h) for h in self.neighborhoods], "H is not the undirected closure of F"


def write_edge_list(g, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("src,dst\n")
        for i, j in g.sorted_edges().tolist():
            fh.write(f"{i},{j}\n")


def write_id_map(g, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("orig_id,dense_id\n")
        labels = g.labels if g.labels is not None else range(g.n)
        for dense, orig in enumerate(labels):
            fh.write(f"{orig},{dense}\n")


def load_edge_list(path, num_nodes=None):
    """Stream a ``src,dst`` CSV into a :class:`DirectedGraph`.

    Labels are remapped to dense ids in order of first appearance, unless
    ``num_nodes`` is given, in which case labels must already be integers in
    ``[0, num_nodes)`` and isolated nodes are kept. Duplicate edges and
    self-loops are dropped and counted.
    """
    ids = {}
    src, dst = array("q"), array("q")
    loops = 0
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and [c.strip() for c in row] == ["src", "dst"]:
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise EdgeListError(f"{path}:{lineno}: expected 'src,dst', got {','.join(row)!r}")
            a, b = row[0].strip(), row[1].strip()
            if num_nodes is not None:
                try:
                    u, v = int(a), int(b)
                except ValueError:
                    raise EdgeListError(f"{path}:{lineno}: non-integer node id") from None
                if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                    raise EdgeListError(f"{path}:{lineno}: node id outside [0, {num_nodes})")
            else:
                u = ids.setdefault(a, len(ids))
                v = ids.setdefault(b, len(ids))
            if u == v:
                loops += 1
                continue
            src.append(u)
            dst.append(v)
    if num_nodes is None:
        n = len(ids)
        labels = list(ids)
    else:
        n = num_nodes
        labels = None
    edges = np.column_stack([np.frombuffer(src, dtype=np.int64), np.frombuffer(dst, dtype=np.int64)])
    if len(edges):
        uniq, first = np.unique(edges, axis=0, return_index=True)
        dropped = len(edges) - len(uniq)
        edges = edges[np.sort(first)]
    else:
        dropped = 0
    return DirectedGraph(n, edges, labels=labels, duplicates_dropped=int(dropped), self_loops_dropped=loops)
