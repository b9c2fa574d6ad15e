import tracemalloc

import numpy as np
import pytest

from homonet.graph import DirectedGraph, EdgeListError, load_edge_list, write_edge_list, write_id_map


def write(tmp_path, text, name="e.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_single_edge(tmp_path):
    g = load_edge_list(write(tmp_path, "a,b\n"))
    assert (g.n, g.e) == (2, 1)
    assert g.labels == ["a", "b"]


def test_duplicate_dropped_and_counted(tmp_path):
    g = load_edge_list(write(tmp_path, "src,dst\na,b\na,b\nb,a\n"))
    assert g.e == 2 and g.duplicates_dropped == 1


def test_self_loop_dropped(tmp_path):
    g = load_edge_list(write(tmp_path, "x,x\nx,y\n"))
    assert g.e == 1 and g.self_loops_dropped == 1


@pytest.mark.parametrize("text,line", [("a,b\nc\n", 2), ("a,b\nb,c\nx,y,z\n", 3), ("a,\n", 1)])
def test_malformed_line_number(tmp_path, text, line):
    with pytest.raises(EdgeListError, match=f":{line}:"):
        load_edge_list(write(tmp_path, text))


def test_num_nodes_keeps_isolates(tmp_path):
    g = load_edge_list(write(tmp_path, "src,dst\n0,1\n"), num_nodes=5)
    assert g.n == 5 and g.labels is None
    with pytest.raises(EdgeListError):
        load_edge_list(write(tmp_path, "0,9\n", "bad.csv"), num_nodes=5)


def test_round_trip_sorted(tmp_path):
    g = DirectedGraph(4, [(3, 0), (0, 2), (0, 1), (2, 3)])
    p = tmp_path / "out.csv"
    write_edge_list(g, p)
    assert p.read_text() == "src,dst\n0,1\n0,2\n2,3\n3,0\n"
    h = load_edge_list(p, num_nodes=4)
    assert np.array_equal(h.sorted_edges(), g.sorted_edges())


def test_id_map(tmp_path):
    g = load_edge_list(write(tmp_path, "u9,u3\nu3,u7\n"))
    sub = g.induced([2, 0])
    assert sub.labels == ["u9", "u7"]
    p = tmp_path / "map.csv"
    write_id_map(sub, p)
    assert p.read_text() == "orig_id,dense_id\nu9,0\nu7,1\n"


def test_induced_keeps_only_inner_edges():
    g = DirectedGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    sub = g.induced([4, 0, 1])
    assert sub.n == 3
    assert sorted(map(tuple, sub.edges.tolist())) == [(0, 1), (2, 0)]
    assert sub.labels == [0, 1, 4]


def test_check_catches_violations():
    with pytest.raises(AssertionError):
        DirectedGraph(3, [(0, 1), (0, 1)]).check()
    with pytest.raises(AssertionError):
        DirectedGraph(3, [(1, 1)]).check()
    with pytest.raises(AssertionError):
        DirectedGraph(3, [(0, 1)], neighborhoods=[{1}, set(), set()]).check()


def test_million_lines_single_pass(tmp_path):
    rng = np.random.default_rng(0)
    E = rng.integers(0, 50_000, (10**6, 2))
    p = tmp_path / "big.csv"
    with open(p, "w") as fh:
        fh.write("src,dst\n")
        fh.write("\n".join(f"n{a},n{b}" for a, b in E.tolist()))
        fh.write("\n")
    tracemalloc.start()
    g = load_edge_list(p)
    peak = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    keep = E[E[:, 0] != E[:, 1]]
    assert g.e == len(np.unique(keep, axis=0))
    assert g.e + g.duplicates_dropped + g.self_loops_dropped == 10**6
    # ids and edges only: far below what holding the text or row objects would take
    assert peak < 150 * 2**20
