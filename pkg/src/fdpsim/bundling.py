"""Interval buckets and the left/right splitting that merges them into bundles."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

from .metric import RootedTree, ceil_div, conditional_cost, vertex_key


def bucket_index(arrival, F) -> int:
    """Index i with (i-1)F <= arrival < iF."""
    if F <= 0:
        raise ValueError("F must be positive")
    return int(arrival // F) + 1


@dataclass
class IntervalBuckets:
    F: object
    buckets: dict  # i -> sorted list of request indices

    def get(self, i) -> list:
        return self.buckets.get(i, [])

    @property
    def last(self) -> int:
        return max(self.buckets, default=0)


def bucketize(requests, F) -> IntervalBuckets:
    out: dict = {}
    for idx, r in enumerate(requests):
        out.setdefault(bucket_index(r.arrival, F), []).append(idx)
    return IntervalBuckets(F, out)


@dataclass
class Bundle:
    index: int  # odd
    requests: list
    release: object


# -- k = 1: greedy nearest-subtree split -----------------------------------------


def _dist_to_subtree(t: RootedTree, x, hit: set):
    """Distance from x to the union of root paths of a vertex set (hit = its hit set, depot included)."""
    a = x
    while a not in hit:
        a = t.parent[a]
    return t.depth[x] - t.depth[a]


def split_single(t: RootedTree, requests, R_prev, R_cur, R_next):
    """Send each request to the side whose subtree (rooted at the depot) is closer; ties go left."""
    hp = t.hit(requests[i].vertex for i in R_prev) | {t.depot}
    hn = t.hit(requests[i].vertex for i in R_next) | {t.depot}
    left, right = [], []
    for i in R_cur:
        v = requests[i].vertex
        if _dist_to_subtree(t, v, hp) <= _dist_to_subtree(t, v, hn):
            left.append(i)
        else:
            right.append(i)
    return left, right


# -- k > 1: cost-based split by dynamic programming ------------------------------


def rounded_tree(t: RootedTree, F, eps, n_requests: int):
    """Round lengths up to multiples of eps*F/(n*|R|); returns (tree, F) in grid units."""
    grid = Fraction(eps) * Fraction(F) / (len(t.vertices) * max(1, n_requests))
    edges = [(u, v, ceil_div(length, grid)) for u, v, length in t.edges]
    Fg = Fraction(F) / grid
    if Fg.denominator == 1:
        Fg = Fg.numerator
    return RootedTree(t.vertices, edges, t.depot), Fg


def _pareto_insert(table: dict, key, val):
    old = table.get(key)
    if old is None or val < old:
        table[key] = val


def _prune(table: dict) -> dict:
    """Drop states dominated in (left extra, right extra, cost); None sorts below every number."""
    items = sorted(table.items(), key=lambda kv: (_k(kv[0][0]), _k(kv[0][1]), kv[1]))
    kept = []
    for (a, b), c in items:
        dominated = False
        for (a2, b2), c2 in kept:
            if _k(a2) <= _k(a) and _k(b2) <= _k(b) and c2 <= c:
                dominated = True
                break
        if not dominated:
            kept.append(((a, b), c))
    return dict(kept)


def _k(x):
    return -1 if x is None else x


def split_objective_dp(t: RootedTree, vertex_of, prev_vs, cur, next_vs, F, forced_left=(), forced_right=()):
    """Minimum of cost(L | prev) + cost(cur \\ L | next) over splits of ``cur``.

    ``vertex_of`` maps request ids in ``cur`` to vertices; ``prev_vs``/``next_vs`` are
    vertex sets.  The DP state at vertex v is (extra length the left part adds
    inside V_v on top of prev, same for the right part); when prev (resp. next)
    misses V_v the state is the plain subtree length, or None if the side is empty.
    Objective values are returned without the factor 2.
    """
    hp = t.hit(prev_vs)
    hn = t.hit(next_vs)
    fl, fr = set(forced_left), set(forced_right)
    at: dict = {}
    for i in cur:
        at.setdefault(vertex_of[i], []).append(i)
    relevant = t.hit(at) | hp | hn
    tables: dict = {}
    for v in t.postorder:
        if v not in relevant:
            continue
        # options for the requests located at v: (left nonempty, right nonempty)
        here = at.get(v, [])
        must_l = any(i in fl for i in here)
        must_r = any(i in fr for i in here)
        free = [i for i in here if i not in fl and i not in fr]
        opts = set()
        if not here:
            opts.add((False, False))
        else:
            if free:
                opts.add((True, must_r))
                opts.add((must_l, True))
            else:
                opts.add((must_l, must_r))
        acc: dict = {}
        for ln, rn in opts:
            a0 = 0 if (v in hp or ln) else None
            b0 = 0 if (v in hn or rn) else None
            _pareto_insert(acc, (a0, b0), 0)
        for u in t.children[v]:
            if u not in relevant:
                continue
            length = t.parent_len[u]
            child = tables.pop(u)
            nxt: dict = {}
            for (a, b), c in acc.items():
                for (ca, cb), cc in child.items():
                    # edge (v, u) cost contributions and extras pushed up to v
                    if u in hp:
                        el = ca // F
                        ea = ca
                    elif ca is None:
                        el = 0
                        ea = None
                    else:
                        el = ceil_div(t.depth[u] + ca, F)
                        ea = length + ca
                    if u in hn:
                        er = cb // F
                        eb = cb
                    elif cb is None:
                        er = 0
                        eb = None
                    else:
                        er = ceil_div(t.depth[u] + cb, F)
                        eb = length + cb
                    na = a if ea is None else (ea if a is None else a + ea)
                    nb = b if eb is None else (eb if b is None else b + eb)
                    _pareto_insert(nxt, (na, nb), c + cc + (el + er) * length)
            acc = _prune(nxt)
        tables[v] = acc
    root = tables.get(t.depot, {(None, None): 0})
    return min(root.values())


def brute_force_split(t: RootedTree, vertex_of, prev_vs, cur, next_vs, F):
    """Exhaustive minimum of the split objective (factor 2 included) and the lexicographically first minimiser."""
    best = None
    best_left = None
    cur = sorted(cur)
    for r in range(len(cur) + 1):
        for left in combinations(cur, r):
            right = [i for i in cur if i not in left]
            val = conditional_cost(t, [vertex_of[i] for i in left], prev_vs, F) + conditional_cost(
                t, [vertex_of[i] for i in right], next_vs, F
            )
            if best is None or val < best or (val == best and tuple(left) < tuple(best_left)):
                best, best_left = val, left
    return best, list(best_left)


def split_multi(t: RootedTree, requests, R_prev, R_cur, R_next, F, eps_round=None):
    """Split R_cur minimising cost(left | R_prev) + cost(right | R_next).

    With ``eps_round`` set, lengths are first rounded up to the grid
    eps*F/(n|R|).  Among minimisers the left part whose sorted index tuple is
    lexicographically smallest is returned.  Returns (left, right, objective),
    the objective being measured on the (possibly rounded) lengths in grid units.
    """
    cur = sorted(R_cur)
    if not cur:
        return [], [], 0
    if eps_round is not None:
        t, F = rounded_tree(t, F, eps_round, len(R_prev) + len(cur) + len(R_next))
    vertex_of = {i: requests[i].vertex for i in cur}
    pv = {requests[i].vertex for i in R_prev}
    nv = {requests[i].vertex for i in R_next}

    def solve(fl, fr):
        return split_objective_dp(t, vertex_of, pv, cur, nv, F, fl, fr)

    opt = solve((), ())
    # lexicographically smallest sorted tuple among optimal left parts
    prefix: list = []
    pos = 0
    while True:
        rest = cur[pos:]
        if solve(prefix, [i for i in cur if i not in prefix]) == opt:
            break
        skipped = []
        for j, m in enumerate(rest):
            if solve(prefix + [m], skipped + [i for i in cur[:pos] if i not in prefix]) == opt:
                prefix.append(m)
                pos = pos + j + 1
                break
            skipped.append(m)
        else:  # pragma: no cover - opt is always attained
            raise AssertionError("no optimal completion found")
    left = prefix
    right = [i for i in cur if i not in set(left)]
    return left, right, 2 * opt


class Bundler:
    """Incremental bundling state: feed even steps in order, get bundles back."""

    def __init__(self, tree: RootedTree, requests, F, mode: str = "single", eps_round=None):
        if mode not in ("single", "multi"):
            raise ValueError(f"unknown split mode {mode!r}")
        self.tree = tree
        self.requests = requests
        self.F = F
        self.mode = mode
        self.eps_round = eps_round
        self.right_carry: list = []  # R^right_{i-2}
        self.splits: dict = {}  # even i -> (left, right)

    def step(self, i: int, R_prev, R_cur, R_next) -> Bundle:
        """Process even i (at time (i+1)F) and return bundle R'_{i-1}."""
        assert i % 2 == 0
        if self.mode == "single":
            left, right = split_single(self.tree, self.requests, R_prev, R_cur, R_next)
        else:
            left, right, _ = split_multi(self.tree, self.requests, R_prev, R_cur, R_next, self.F, self.eps_round)
        self.splits[i] = (left, right)
        members = sorted(self.right_carry + list(R_prev) + left)
        self.right_carry = right
        return Bundle(i - 1, members, (i + 1) * self.F)


def stream_bundles(tree: RootedTree, requests, buckets: IntervalBuckets, mode: str = "single", eps_round=None):
    """Yield the nonempty bundles R'_1, R'_3, ... in release order."""
    b = Bundler(tree, requests, buckets.F, mode, eps_round)
    last = buckets.last
    i = 2
    while i <= last + 2:
        bundle = b.step(i, buckets.get(i - 1), buckets.get(i), buckets.get(i + 1))
        if bundle.requests:
            yield bundle
        i += 2


def bundles_with_splits(tree, requests, F, mode="single", eps_round=None):
    """All bundles (including empty ones) plus the per-even-index splits, for analysis."""
    buckets = bucketize(requests, F)
    b = Bundler(tree, requests, F, mode, eps_round)
    out = []
    i = 2
    while i <= buckets.last + 2:
        out.append(b.step(i, buckets.get(i - 1), buckets.get(i), buckets.get(i + 1)))
        i += 2
    return out, b.splits, buckets
