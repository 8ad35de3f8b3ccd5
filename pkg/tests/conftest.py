import random

import pytest

from fdpsim.metric import RootedTree


@pytest.fixture
def fork():
    """o - a (1), a - b (1), a - c (1)."""
    return RootedTree(["o", "a", "b", "c"], [("o", "a", 1), ("a", "b", 1), ("a", "c", 1)], "o")


def random_rooted_tree(rng: random.Random, n: int, max_len: int = 4) -> RootedTree:
    edges = [(rng.randrange(v), v, rng.randint(1, max_len)) for v in range(1, n)]
    return RootedTree(list(range(n)), edges, 0)


def random_subset(rng: random.Random, t: RootedTree, p: float = 0.3) -> set:
    return {v for v in t.vertices if v != t.depot and rng.random() < p}
