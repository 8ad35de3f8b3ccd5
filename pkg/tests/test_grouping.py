import itertools
import random

import pytest

from fdpsim.grouping import binarize, group_mst, make_groups
from fdpsim.instance import Request
from fdpsim.metric import RootedTree, cost, mst

from conftest import random_rooted_tree


def test_binary_tree_unchanged(fork):
    bt = binarize(fork)
    assert bt.gadget == set()
    assert sorted(bt.tree.edges) == sorted(fork.edges)
    assert all(bt.to_original(v) == v for v in fork.vertices)


def test_star_with_four_leaves():
    t = RootedTree(list(range(5)), [(0, v, v) for v in range(1, 5)], 0)
    bt = binarize(t)
    # the hub plus two fresh vertices form a complete binary gadget with three internal nodes
    assert len(bt.gadget) == 2
    internal = [v for v in bt.tree.vertices if bt.tree.children[v] and bt.to_original(v) == 0]
    assert len(internal) == 3
    for g in bt.gadget:
        assert bt.tree.parent_len[g] == 0
        assert bt.to_original(g) == 0
    for leaf in range(1, 5):
        assert bt.tree.parent_len[leaf] == leaf
    assert all(len(bt.tree.children[v]) <= 2 for v in bt.tree.vertices)


@pytest.mark.parametrize("seed", range(25))
def test_binarize_preserves_distances(seed):
    rng = random.Random(seed)
    t = random_rooted_tree(rng, rng.randint(2, 12))
    # add a few high-degree hubs
    bt = binarize(t).tree
    assert all(len(bt.children[v]) <= 2 for v in bt.vertices)
    for u, v in itertools.combinations(t.vertices, 2):
        assert bt.distance(u, v) == t.distance(u, v)


def test_binarize_string_ids():
    t = RootedTree(["o", "a", "b", "c"], [("o", "a", 1), ("o", "b", 2), ("o", "c", 3)], "o")
    bt = binarize(t)
    assert all(isinstance(g, str) and g not in t.vertices for g in bt.gadget)
    assert bt.tree.distance("a", "c") == 4


def test_single_shallow_leaf_is_one_group():
    t = RootedTree([0, 1], [(0, 1, 3)], 0)
    groups = make_groups(binarize(t), [Request(0, 1)], [0], 5)
    assert len(groups) == 1 and groups[0].requests == [0] and groups[0].mst == 3


def test_three_leaf_example():
    t = RootedTree(["o", "a", "b", "c"], [("o", "a", 2), ("o", "b", 2), ("o", "c", 2)], "o")
    reqs = [Request(0, "a"), Request(0, "b"), Request(0, "c")]
    groups = make_groups(binarize(t), reqs, [0, 1, 2], 1)
    assert [g.requests for g in groups] == [[1, 2], [0]]
    assert [g.mst for g in groups] == [4, 2]
    assert 2 * sum(g.mst for g in groups) == 12 == cost(t, {"a", "b", "c"}, 3)


def test_empty_bundle(fork):
    assert make_groups(binarize(fork), [], [], 1) == []


@pytest.mark.parametrize("seed", range(60))
def test_group_guarantees_on_random_trees(seed):
    rng = random.Random(seed)
    t = random_rooted_tree(rng, rng.randint(2, 14), max_len=5)
    bt = binarize(t)
    # the 8F cap presumes every request lies within F of the depot
    F = max(rng.randint(1, 6), min(t.depth[v] for v in t.vertices if v != 0))
    near = [v for v in t.vertices if v != 0 and t.depth[v] <= F]
    reqs = [Request(0, rng.choice(near)) for _ in range(rng.randint(1, 15))]
    bundle = list(range(len(reqs)))
    groups = make_groups(bt, reqs, bundle, F, check=True)
    assert sorted(i for g in groups for i in g.requests) == bundle
    for g in groups:
        assert g.mst == group_mst(t, reqs, g.requests) == mst(bt.tree, {reqs[i].vertex for i in g.requests})
        assert g.mst <= 8 * F
    assert 2 * sum(g.mst for g in groups) <= cost(t, {r.vertex for r in reqs}, 3 * F)


@pytest.mark.parametrize("seed", range(20))
def test_chosen_vertex_is_lowest(seed):
    rng = random.Random(seed)
    t = random_rooted_tree(rng, rng.randint(3, 12))
    bt = binarize(t)
    others = [v for v in t.vertices if v != 0]
    reqs = [Request(0, rng.choice(others)) for _ in range(rng.randint(2, 12))]
    F = rng.randint(1, 3)
    remaining = set(range(len(reqs)))
    for g in make_groups(bt, reqs, sorted(remaining), F):
        tree = bt.tree
        if g.anchor != tree.depot:
            # no strict descendant of the anchor qualified at the time of choice
            verts = {reqs[i].vertex for i in remaining}
            loc = tree.local_mst(verts)
            below = [v for v in tree.vertices if v != g.anchor and g.anchor in tree.ancestors(v)]
            assert all(loc.get(v, 0) < 3 * F for v in below)
        remaining -= set(g.requests)


@pytest.mark.parametrize("seed", range(40))
def test_cost_domination_without_depth_limit(seed):
    rng = random.Random(1000 + seed)
    t = random_rooted_tree(rng, rng.randint(2, 14), max_len=5)
    others = [v for v in t.vertices if v != 0]
    reqs = [Request(0, rng.choice(others)) for _ in range(rng.randint(1, 15))]
    F = rng.randint(1, 6)
    groups = make_groups(binarize(t), reqs, list(range(len(reqs))), F, check=True)
    assert 2 * sum(g.mst for g in groups) <= cost(t, {r.vertex for r in reqs}, 3 * F)
