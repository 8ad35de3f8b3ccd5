"""Binary-tree gadgets and the cutting of a bundle into groups of bounded subtree length."""
from __future__ import annotations

from dataclasses import dataclass

from .metric import RootedTree, mst, vertex_key


@dataclass
class BinarizedTree:
    tree: RootedTree
    original: dict  # vertex of the binarized tree -> original vertex (gadget vertices map to their hub)
    gadget: set  # vertices added by the construction

    def to_original(self, v):
        return self.original[v]


def _fresh_ids(t: RootedTree):
    if all(isinstance(v, int) and not isinstance(v, bool) for v in t.vertices):
        nxt = max(t.vertices) + 1
        while True:
            yield nxt
            nxt += 1
    n = 0
    taken = set(t.vertices)
    while True:
        cand = f"~g{n}"
        n += 1
        if cand not in taken:
            yield cand


def binarize(t: RootedTree) -> BinarizedTree:
    """Replace every vertex with three or more children by a binary gadget.

    The gadget is built by recursive halving of the ascending child list (the
    first half gets floor(d/2) children).  Gadget edges have length 0 and the
    edge into an original child keeps its original length.
    """
    fresh = _fresh_ids(t)
    edges = []
    original = {v: v for v in t.vertices}
    gadget = set()

    def attach(hub, root, kids):
        if len(kids) <= 2:
            for u in kids:
                edges.append((root, u, t.parent_len[u]))
            return
        half = len(kids) // 2
        for part in (kids[:half], kids[half:]):
            if len(part) == 1:
                edges.append((root, part[0], t.parent_len[part[0]]))
            else:
                g = next(fresh)
                gadget.add(g)
                original[g] = hub
                edges.append((root, g, 0))
                attach(hub, g, part)

    for v in t.preorder:
        attach(v, v, t.children[v])
    bt = RootedTree(list(t.vertices) + sorted(gadget, key=vertex_key), edges, t.depot)
    return BinarizedTree(bt, original, gadget)


@dataclass
class Group:
    requests: list
    mst: object
    anchor: object  # vertex chosen by the cutting loop


class _GroupState:
    """Remaining-request counts and local subtree lengths with O(depth) removals."""

    def __init__(self, t: RootedTree, verts_of: dict):
        self.t = t
        self.at: dict = {}
        for i, v in verts_of.items():
            self.at.setdefault(v, []).append(i)
        self.count = {v: 0 for v in t.vertices}
        self.local = {v: 0 for v in t.vertices}
        for v, ids in self.at.items():
            self.count[v] += len(ids)
        for v in t.postorder:
            p = t.parent[v]
            if p is not None and self.count[v]:
                self.count[p] += self.count[v]
                self.local[p] += t.parent_len[v] + self.local[v]

    def remove_subtree(self, v) -> list:
        t = self.t
        taken = []
        stack = [v]
        while stack:
            x = stack.pop()
            if not self.count[x]:
                continue
            taken.extend(self.at.pop(x, []))
            stack.extend(t.children[x])
        removed_count = self.count[v]
        lost = self.local[v]  # change in local[v]
        # zero the subtree
        stack = [v]
        while stack:
            x = stack.pop()
            if self.count[x]:
                self.count[x] = 0
                self.local[x] = 0
                stack.extend(t.children[x])
        x = v
        child_emptied = True
        while t.parent[x] is not None:
            p = t.parent[x]
            self.count[p] -= removed_count
            if child_emptied:
                delta = t.parent_len[x] + lost
            else:
                delta = lost
            self.local[p] -= delta
            lost = delta
            child_emptied = self.count[p] == 0
            if child_emptied:
                # p had no requests left below it: its whole local tree must vanish
                assert self.local[p] == 0
            x = p
        return sorted(taken)


def _recompute(t: RootedTree, remaining: dict):
    st = _GroupState(t, remaining)
    return st.count, st.local


def make_groups(bt: BinarizedTree, requests, bundle, F, check: bool = False) -> list:
    """Cut ``bundle`` (request indices) into groups; each pass takes all remaining
    requests below a lowest vertex whose local subtree length is at least 3F
    (or everything, at the depot, when no vertex qualifies)."""
    t = bt.tree
    remaining = {i: requests[i].vertex for i in bundle}
    st = _GroupState(t, remaining)
    groups = []
    threshold = 3 * F
    while remaining:
        qualifying = [v for v in t.vertices if st.count[v] and st.local[v] >= threshold]
        if qualifying:
            qset = set(qualifying)
            lowest = [v for v in qualifying if not any(u in qset for u in t.children[v])]
            v = min(lowest, key=vertex_key)
        else:
            v = t.depot
        local_v = st.local[v]
        taken = st.remove_subtree(v)
        for i in taken:
            del remaining[i]
        groups.append(Group(taken, t.depth[v] + local_v, v))
        if check:
            count, local = _recompute(t, remaining)
            assert count == st.count and local == st.local, "incremental state drifted"
    return groups


def group_mst(tree: RootedTree, requests, group) -> object:
    return mst(tree, {requests[i].vertex for i in group})
