"""Simple reference policies used as comparison points."""
from __future__ import annotations

from collections import deque

from .dispatch import euler_walk
from .instance import Trip, chain_trips, expand_stops
from .metric import RootedTree
from .sim import OnlineAlgorithm
from .tours import mst_preorder


def route_walk(graph, vertices) -> list:
    """Closed depot walk through ``vertices``: Euler walk on trees, MST preorder otherwise."""
    if isinstance(graph, RootedTree) or graph.is_tree():
        return euler_walk(RootedTree.from_graph(graph), set(vertices))
    return expand_stops(graph, mst_preorder(graph, vertices))


class GreedyBatching(OnlineAlgorithm):
    """Whenever a vehicle is idle, load the oldest waiting requests (up to capacity) and go."""

    name = "greedy"

    def start(self, ctx, now):
        self.ctx = ctx
        self.graph = RootedTree.from_graph(ctx.graph) if ctx.graph.is_tree() else ctx.graph
        self.waiting: list = []
        self.requests: dict = {}
        self.chains = [deque() for _ in range(ctx.k)]

    def on_arrival(self, idx, req, now):
        self.requests[idx] = req
        self.waiting.append(idx)

    def act(self, now):
        ctx = self.ctx
        out = []
        for v in range(ctx.k):
            if ctx.busy_until[v] > now:
                continue
            if not self.chains[v] and self.waiting:
                self.waiting.sort(key=lambda i: (self.requests[i].arrival, i))
                cap = ctx.capacity if ctx.capacity != float("inf") else len(self.waiting)
                batch, self.waiting = self.waiting[:int(cap)], self.waiting[int(cap):]
                walk = route_walk(self.graph, {self.requests[i].vertex for i in batch})
                pieces = chain_trips(self.graph, walk, batch, self.requests, 0, ctx.speed)
                self.chains[v].extend((t.walk, t.served) for t in pieces)
            if self.chains[v]:
                walk, served = self.chains[v].popleft()
                out.append((v, Trip(now, walk, served)))
        return out
