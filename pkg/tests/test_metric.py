from fractions import Fraction

import pytest

from fdpsim.metric import (
    GraphError,
    MetricGraph,
    RootedTree,
    ceil_div,
    conditional_cost,
    cost,
    distance,
    mst,
    mst_anchored,
    subtree_mst,
)


def test_path_distance():
    g = MetricGraph(["o", "a", "b"], [("o", "a", 2), ("a", "b", 3)], "o")
    assert distance(g, "o", "b") == 5
    assert g.shortest_path("b", "o") == ["b", "a", "o"]


def test_distance_on_cycle_takes_shorter_side():
    g = MetricGraph([0, 1, 2, 3], [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 5)], 0)
    assert g.distance(0, 3) == 3
    assert not g.is_tree()


def test_bad_graphs_rejected():
    with pytest.raises(GraphError):
        MetricGraph(["o", "a"], [("o", "a", -1)], "o")
    with pytest.raises(GraphError):
        MetricGraph(["o", "a", "b"], [("o", "a", 1)], "o")  # disconnected
    with pytest.raises(GraphError):
        RootedTree([0, 1, 2], [(0, 1, 1), (1, 2, 1), (2, 0, 1)], 0)


def test_unknown_vertex(fork):
    with pytest.raises(GraphError):
        mst(fork, {"zz"})


def test_mst_anchored_examples(fork):
    assert mst_anchored(fork, "o", {"b", "c"}) == 3
    assert mst_anchored(fork, ("a", "c"), {"b"}) == 0
    assert mst_anchored(fork, ("a", "b"), {"b", "c"}) == 2


def test_subtree_mst_examples(fork):
    assert subtree_mst(fork, "a", {"b", "c"}) == 2
    assert subtree_mst(fork, "c", {"b"}) == 0
    assert subtree_mst(fork, "a", {"b"}) == 1


def test_mst_whole_tree(fork):
    assert mst(fork, set()) == 0
    assert mst(fork, {"b", "c"}) == 3


def test_cost_examples(fork):
    assert cost(fork, {"b", "c"}, Fraction(3, 2)) == 12
    t = RootedTree(["o", "v"], [("o", "v", 2)], "o")
    assert cost(t, {"v"}, 10) == 4


def test_cost_rejects_nonpositive(fork):
    with pytest.raises(ValueError):
        cost(fork, {"b"}, 0)


def test_conditional_cost_example(fork):
    assert conditional_cost(fork, {"c"}, {"b"}, Fraction(3, 2)) == 4


def test_conditional_cost_with_empty_context_is_cost(fork):
    for X in ({"b"}, {"b", "c"}, {"a"}):
        assert conditional_cost(fork, X, set(), 1) == cost(fork, X, 1)


def test_ceil_div_exact():
    assert ceil_div(7, 2) == 4
    assert ceil_div(Fraction(3), Fraction(3, 2)) == 2
    assert ceil_div(0, 5) == 0
