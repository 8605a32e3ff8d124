import random

import pytest

from gogtt.errors import ValidationError
from gogtt.graphs import DirectedMultigraph, Graph


def single_edge():
    # one edge between two vertices
    return Graph.from_pairs(2, [(0, 1)])


def theta_graph():
    # 2 vertices, 3 parallel edges
    return Graph.from_pairs(2, [(0, 1), (0, 1), (0, 1)])


def rose(k):
    return Graph.from_pairs(1, [(0, 0)] * k)


def thistle4():
    # base vertex 0 and four prickles; tau(e_i) = base
    return Graph.from_pairs(5, [(1, 0), (2, 0), (3, 0), (4, 0)])


def test_star_single_edge():
    g, [e] = single_edge()
    assert g.star(1) == [e]
    assert g.star(0) == [g.bar(e)]


def test_star_thistle_base():
    g, edges = thistle4()
    assert g.star(0) == sorted(edges)
    assert g.valence(0) == 4


def test_star_loop_contributes_both_orientations():
    g, [e] = rose(1)
    assert g.star(0) == sorted([e, g.bar(e)])


def test_star_unknown_vertex():
    g, _ = single_edge()
    with pytest.raises(ValidationError):
        g.star(99)


def test_spanning_tree_of_tree_is_everything():
    g, edges = Graph.from_pairs(4, [(0, 1), (1, 2), (1, 3)])
    tree = g.spanning_tree(0)
    assert tree == frozenset(e for pair in edges for e in (pair, g.bar(pair)))


def test_spanning_tree_of_rose_is_empty():
    g, _ = rose(3)
    assert g.spanning_tree(0) == frozenset()


def test_spanning_tree_theta_picks_smallest_edge():
    g, edges = theta_graph()
    tree = g.spanning_tree(0)
    assert tree == frozenset({edges[0], g.bar(edges[0])})


def test_spanning_tree_disconnected_raises():
    g, _ = Graph.from_pairs(3, [(0, 1)])
    with pytest.raises(ValidationError):
        g.spanning_tree(0)


def test_betti_numbers():
    tree, _ = Graph.from_pairs(4, [(0, 1), (1, 2), (1, 3)])
    assert tree.betti_number() == 0
    g, _ = rose(5)
    assert g.betti_number() == 5
    theta, _ = theta_graph()
    assert theta.betti_number() == 2


def test_subdivide_identity():
    g, [e] = single_edge()
    g2, renaming = g.subdivide(e, 1)
    assert g2 is g and renaming == {e: [e], g.bar(e): [g.bar(e)]}


def test_subdivide_three():
    g, [e] = single_edge()
    g2, renaming = g.subdivide(e, 3)
    assert len(g2.vertices) == 4
    assert len(g2.oriented_edges) == 6
    path = renaming[e]
    assert g2.initial(path[0]) == 0 and g2.terminal(path[-1]) == 1
    for a, b in zip(path, path[1:]):
        assert g2.terminal(a) == g2.initial(b)
    assert renaming[g.bar(e)] == [g2.bar(a) for a in reversed(path)]


def test_subdivide_betti_invariant():
    g, edges = theta_graph()
    g2, _ = g.subdivide(edges[1], 4)
    assert g2.betti_number() == g.betti_number()


def test_collapse_spanning_tree_of_theta_gives_rose():
    g, _ = theta_graph()
    tree = g.spanning_tree(0)
    q, m = g.collapse(tree)
    assert len(q.vertices) == 1
    assert q.betti_number() == 2
    assert m.is_isomorphism() is False


def test_collapse_empty_is_identity():
    g, _ = theta_graph()
    q, m = g.collapse(set())
    assert q == g
    assert m.is_isomorphism()


def test_collapse_everything():
    g, edges = Graph.from_pairs(3, [(0, 1), (1, 2), (2, 0)])
    q, _ = g.collapse(set(edges))
    assert len(q.vertices) == 1 and len(q.oriented_edges) == 0


def test_collapse_betti_drop():
    g, edges = Graph.from_pairs(2, [(0, 1), (0, 1), (0, 0)])
    # collapse the loop: beta drops by the subgraph's beta (=1)
    q, _ = g.collapse({edges[2]})
    assert q.betti_number() == g.betti_number() - 1


def test_subdivide_then_collapse_roundtrip():
    g, edges = theta_graph()
    g2, renaming = g.subdivide(edges[0], 3)
    # collapsing two of the three new edges leaves a graph isomorphic to g
    q, _ = g2.collapse(set(renaming[edges[0]][1:]))
    assert q.betti_number() == g.betti_number()
    assert len(q.vertices) == len(g.vertices)
    assert len(q.oriented_edges) == len(g.oriented_edges)


def test_random_invariants():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 5)
        m = rng.randint(0, 6)
        pairs = [(rng.randrange(n), rng.randrange(n)) for _ in range(m)]
        g, _ = Graph.from_pairs(n, pairs)
        for x in g.elements:
            assert g.bar(g.bar(x)) == x
            assert g.tau(g.tau(x)) == g.tau(x)
        stars = [e for v in g.vertices for e in g.star(v)]
        assert sorted(stars) == list(g.oriented_edges)


def test_strongly_connected_trivial():
    assert DirectedMultigraph(1, {}).is_strongly_connected()
    assert not DirectedMultigraph(2, {(0, 1): 1}).is_strongly_connected()


def test_strongly_connected_example_matrix():
    matrix = [
        [0, 0, 0, 1],
        [1, 0, 0, 2],
        [0, 1, 0, 2],
        [0, 0, 1, 2],
    ]
    assert DirectedMultigraph.from_matrix(matrix).is_strongly_connected()
