"""Weighted graphs, rooted trees and the subtree-length quantities used by the tree algorithms.

Lengths are exact numbers (ints, or ``Fraction`` where a rescaled grid is needed).
Vertex ids are opaque hashables; wherever a deterministic order is required they
are sorted with :func:`vertex_key`, which orders ints before strings.
"""
from __future__ import annotations

import heapq
from collections.abc import Hashable, Iterable
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction]
Vertex = Hashable


class GraphError(ValueError):
    """Raised for malformed graphs or unknown vertices."""


def vertex_key(v):
    if isinstance(v, bool):
        return (2, str(v))
    if isinstance(v, int):
        return (0, v)
    return (1, str(v))


def ceil_div(a: Number, b: Number) -> int:
    return -((-a) // b)


class MetricGraph:
    """Undirected graph with nonnegative edge lengths and a depot."""

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[tuple], depot: Vertex):
        self.vertices = tuple(sorted(set(vertices), key=vertex_key))
        vset = set(self.vertices)
        if depot not in vset:
            raise GraphError(f"depot {depot!r} is not a vertex")
        self.depot = depot
        self.adj: dict = {v: {} for v in self.vertices}
        self.edges: list[tuple] = []
        for u, v, length in edges:
            if u not in vset or v not in vset:
                raise GraphError(f"edge ({u!r}, {v!r}) references an unknown vertex")
            if u == v:
                raise GraphError(f"self-loop at {u!r}")
            if length < 0:
                raise GraphError(f"negative length on edge ({u!r}, {v!r})")
            if v in self.adj[u]:
                raise GraphError(f"duplicate edge ({u!r}, {v!r})")
            self.adj[u][v] = length
            self.adj[v][u] = length
            self.edges.append((u, v, length))
        self._dist: dict = {}
        self._pred: dict = {}
        seen = self._sssp(depot)[0]
        if len(seen) != len(self.vertices):
            raise GraphError("graph is not connected")

    def __contains__(self, v) -> bool:
        return v in self.adj

    def check_vertex(self, v) -> None:
        if v not in self.adj:
            raise GraphError(f"unknown vertex {v!r}")

    def edge_length(self, u, v) -> Number:
        try:
            return self.adj[u][v]
        except KeyError:
            raise GraphError(f"({u!r}, {v!r}) is not an edge") from None

    def _sssp(self, src):
        if src in self._dist:
            return self._dist[src], self._pred[src]
        dist = {src: 0}
        pred = {src: None}
        heap = [(0, vertex_key(src), src)]
        done = set()
        while heap:
            d, _, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for w, length in self.adj[u].items():
                nd = d + length
                if w not in dist or nd < dist[w] or (
                    nd == dist[w] and w not in done and vertex_key(u) < vertex_key(pred[w])
                ):
                    dist[w] = nd
                    pred[w] = u
                    heapq.heappush(heap, (nd, vertex_key(w), w))
        self._dist[src] = dist
        self._pred[src] = pred
        return dist, pred

    def distance(self, u, v) -> Number:
        self.check_vertex(u)
        self.check_vertex(v)
        return self._sssp(u)[0][v]

    def shortest_path(self, u, v) -> list:
        """Vertex sequence of a shortest u-v path (deterministic)."""
        self.check_vertex(u)
        self.check_vertex(v)
        pred = self._sssp(v)[1]
        path = [u]
        while path[-1] != v:
            path.append(pred[path[-1]])
        return path

    def walk_length(self, walk) -> Number:
        return sum((self.edge_length(a, b) for a, b in zip(walk, walk[1:])), 0)

    def is_tree(self) -> bool:
        return len(self.edges) == len(self.vertices) - 1


class RootedTree(MetricGraph):
    """A tree rooted at its depot, with children in ascending id order."""

    def __init__(self, vertices, edges, depot):
        super().__init__(vertices, edges, depot)
        if not self.is_tree():
            raise GraphError(
                f"a tree on {len(self.vertices)} vertices needs {len(self.vertices) - 1} edges, "
                f"got {len(self.edges)}"
            )
        self.parent: dict = {depot: None}
        self.parent_len: dict = {depot: 0}
        self.depth: dict = {depot: 0}
        self.children: dict = {v: [] for v in self.vertices}
        self.preorder: list = []
        stack = [depot]
        while stack:
            u = stack.pop()
            self.preorder.append(u)
            kids = sorted((w for w in self.adj[u] if w != self.parent[u]), key=vertex_key)
            self.children[u] = kids
            for w in kids:
                self.parent[w] = u
                self.parent_len[w] = self.adj[u][w]
                self.depth[w] = self.depth[u] + self.adj[u][w]
            stack.extend(reversed(kids))
        self.postorder = self.preorder[::-1]

    @classmethod
    def from_graph(cls, g: MetricGraph) -> "RootedTree":
        if isinstance(g, RootedTree):
            return g
        return cls(g.vertices, g.edges, g.depot)

    def distance(self, u, v) -> Number:
        self.check_vertex(u)
        self.check_vertex(v)
        a = self.lca(u, v)
        return self.depth[u] + self.depth[v] - 2 * self.depth[a]

    def ancestors(self, v) -> list:
        """v, parent(v), ..., depot."""
        out = []
        while v is not None:
            out.append(v)
            v = self.parent[v]
        return out

    def lca(self, u, v):
        anc = set(self.ancestors(u))
        while v not in anc:
            v = self.parent[v]
        return v

    def shortest_path(self, u, v) -> list:
        a = self.lca(u, v)
        up = []
        while u != a:
            up.append(u)
            u = self.parent[u]
        down = []
        while v != a:
            down.append(v)
            v = self.parent[v]
        return up + [a] + down[::-1]

    def child_end(self, e) -> Vertex:
        """Map a vertex or an edge (u, v) to the vertex whose subtree it governs."""
        if isinstance(e, tuple) and len(e) == 2 and e not in self.adj:
            u, v = e
            if self.parent.get(v) == u:
                return v
            if self.parent.get(u) == v:
                return u
            raise GraphError(f"{e!r} is not an edge of the tree")
        self.check_vertex(e)
        return e

    def tree_edges(self):
        """(child, length) for every edge, in preorder of the child."""
        return [(v, self.parent_len[v]) for v in self.preorder if v != self.depot]

    # -- subtree quantities -------------------------------------------------

    def hit(self, X) -> set:
        """Vertices v with V_v intersecting X."""
        out = set()
        for x in X:
            while x is not None and x not in out:
                out.add(x)
                x = self.parent[x]
        return out

    def local_mst(self, X) -> dict:
        """v -> length of the minimal subtree containing v and V_v ∩ X (no depot required)."""
        X = set(X)
        hit = self.hit(X)
        val = {}
        for v in self.postorder:
            if v not in hit:
                continue
            s = 0
            for u in self.children[v]:
                if u in hit:
                    s += self.parent_len[u] + val[u]
            val[v] = s
        return val

    def edge_msts(self, X) -> dict:
        """child vertex v -> mst_e(X) for e = (parent(v), v), only for v with V_v ∩ X nonempty."""
        loc = self.local_mst(X)
        return {v: self.depth[v] + m for v, m in loc.items() if v != self.depot}


def as_tree(t) -> RootedTree:
    return t if isinstance(t, RootedTree) else RootedTree.from_graph(t)


def distance(g: MetricGraph, u, v) -> Number:
    return g.distance(u, v)


def mst(t: RootedTree, X) -> Number:
    """Length of the minimal subtree containing the depot and X."""
    X = set(X)
    for x in X:
        t.check_vertex(x)
    if not X:
        return 0
    return t.local_mst(X)[t.depot]


def mst_anchored(t: RootedTree, e, X) -> Number:
    """mst(V_e ∩ X) where e is a vertex or an edge (u, v)."""
    v = t.child_end(e)
    X = set(X)
    for x in X:
        t.check_vertex(x)
    loc = t.local_mst(X)
    if v not in loc:
        return 0
    return t.depth[v] + loc[v]


def subtree_mst(t: RootedTree, v, X) -> Number:
    """Length of the minimal subtree containing v and V_v ∩ X; the depot is not required."""
    t.check_vertex(v)
    return t.local_mst(X).get(v, 0)


def _check_positive(F, name="F"):
    if F <= 0:
        raise ValueError(f"{name} must be positive, got {F}")


def edge_counts(t: RootedTree, X, Fp) -> dict:
    """child v -> c_{Fp}(X, e) = ceil(mst_e(X) / Fp), omitting zeros."""
    _check_positive(Fp, "Fp")
    return {v: ceil_div(m, Fp) for v, m in t.edge_msts(X).items() if ceil_div(m, Fp)}


def cost(t: RootedTree, X, Fp) -> Number:
    """2 * sum_e ceil(mst_e(X) / Fp) * len(e)."""
    _check_positive(Fp, "Fp")
    total = 0
    for v, m in t.edge_msts(X).items():
        total += ceil_div(m, Fp) * t.parent_len[v]
    return 2 * total


def conditional_counts(t: RootedTree, X, Xp, F) -> dict:
    """child v -> c(X, e | Xp) for every edge with a nonzero count."""
    _check_positive(F)
    Xp = set(Xp)
    base = t.edge_msts(Xp)
    both = t.edge_msts(set(X) | Xp)
    out = {}
    for v, m in both.items():
        if v in base:
            c = (m - base[v]) // F
        else:
            c = ceil_div(m, F)
        if c:
            out[v] = c
    return out


def conditional_cost(t: RootedTree, X, Xp, F) -> Number:
    """cost(X | Xp): ceilings on edges untouched by Xp, floors of the increment elsewhere."""
    return 2 * sum(c * t.parent_len[v] for v, c in conditional_counts(t, X, Xp, F).items())
