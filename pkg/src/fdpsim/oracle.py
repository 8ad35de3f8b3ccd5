"""Exact offline optimum for tiny instances, the induced interval partition, and certified lower bounds."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

from .bundling import bucket_index
from .instance import Instance, Schedule, Trip, validate
from .metric import MetricGraph, RootedTree, edge_counts, vertex_key

DEFAULT_LIMIT = 6


class OracleLimit(ValueError):
    """The instance is too large for exhaustive search."""


class PartitionError(ValueError):
    """A witness trip serves requests that arrived more than F apart."""


class HypothesisError(ValueError):
    """The distance hypothesis of the counting bound fails; ``pair`` is a witness."""

    def __init__(self, msg, pair):
        super().__init__(msg)
        self.pair = pair


@dataclass
class OptResult:
    max_flow: object
    witness: Schedule


def _depot_free_paths(g: MetricGraph):
    """All-pairs shortest paths among non-depot vertices avoiding the depot: (dist, next-hop)."""
    o = g.depot
    dist, pred = {}, {}
    for src in g.vertices:
        if src == o:
            continue
        d = {src: 0}
        p = {src: None}
        heap = [(0, vertex_key(src), src)]
        done = set()
        while heap:
            du, _, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for w, length in g.adj[u].items():
                if w == o:
                    continue
                nd = du + length
                if w not in d or nd < d[w]:
                    d[w] = nd
                    p[w] = u
                    heapq.heappush(heap, (nd, vertex_key(w), w))
        dist[src], pred[src] = d, p
    return dist, pred


class _Routes:
    def __init__(self, g: MetricGraph):
        self.g = g
        self.dist, self.pred = _depot_free_paths(g)

    def path(self, a, b) -> list:
        p = self.pred[a]
        out = [b]
        while out[-1] != a:
            out.append(p[out[-1]])
        return out[::-1]

    def walk(self, order) -> list:
        g = self.g
        o = g.depot
        walk = list(g.shortest_path(o, order[0]))
        for a, b in zip(order, order[1:]):
            walk.extend(self.path(a, b)[1:])
        walk.extend(g.shortest_path(order[-1], o)[1:])
        return walk


def _pareto_routes(routes: _Routes, reqs) -> list:
    """Non-dominated (lateness, length, order) over visiting orders of the distinct vertices.

    lateness = max over the requests of (first-visit offset - arrival).
    """
    g = routes.g
    vs = sorted({r.vertex for r in reqs}, key=vertex_key)
    cands = []
    for order in permutations(vs):
        if any(b not in routes.dist[a] for a, b in zip(order, order[1:])):
            continue  # only reachable through the depot
        # vertices passed on the way count as visited when first reached
        walk = routes.walk(order)
        prof = {}
        pos = 0
        prof[walk[0]] = 0
        for a, b in zip(walk, walk[1:]):
            pos += g.edge_length(a, b)
            prof.setdefault(b, pos)
        late = max(prof[r.vertex] - r.arrival for r in reqs)
        cands.append((late, pos, order))
    cands.sort(key=lambda x: (x[0], x[1]))
    front = []
    for late, length, order in cands:
        if not front or length < front[-1][1]:
            front.append((late, length, order))
    return front


def optimal_max_flow(inst: Instance, limit: int = DEFAULT_LIMIT) -> OptResult:
    """Minimum achievable maximum flow time by exhaustive search.

    Every trip starts at the later of its vehicle's free time and its last
    arrival; vehicles are interchangeable, so the state is (served set, sorted
    free times).  Routes per request subset are reduced to the Pareto front of
    (worst lateness, length).
    """
    n = len(inst.requests)
    if n > limit:
        raise OracleLimit(f"{n} requests exceed the oracle limit {limit}")
    if n == 0:
        return OptResult(0, Schedule.empty(inst.k))
    g = inst.graph
    routes = _Routes(g)
    reqs = inst.requests
    cap = inst.capacity
    subsets = []
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        if len(members) > cap:
            continue
        front = _pareto_routes(routes, [reqs[i] for i in members])
        if front:
            subsets.append((mask, max(reqs[i].arrival for i in members), front))
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def solve(served: int, frees: tuple):
        if served == full:
            return (0, None)
        best = (math.inf, None)
        for mask, ready, front in subsets:
            if mask & served:
                continue
            for vi, f in enumerate(frees):
                if vi and frees[vi - 1] == f:
                    continue
                s = max(f, ready)
                for late, length, order in front:
                    flow = s + late
                    if flow >= best[0]:
                        continue
                    nf = tuple(sorted(frees[:vi] + (s + length,) + frees[vi + 1:]))
                    rest, _ = solve(served | mask, nf)
                    val = max(flow, rest)
                    if val < best[0]:
                        best = (val, (mask, vi, s, order))
        return best

    value, _ = solve(0, tuple([0] * inst.k))
    if value == math.inf:
        raise ValueError("no feasible schedule exists")
    # rebuild the witness
    served, frees = 0, tuple([0] * inst.k)
    slots = [[f, []] for f in frees]  # free time, trips; kept sorted like frees
    while served != full:
        _, (mask, vi, s, order) = solve(served, frees)
        members = tuple(i for i in range(n) if mask >> i & 1)
        walk = routes.walk(list(order))
        trip = Trip(s, tuple(walk), members)
        end = s + g.walk_length(walk)
        slot = next(sl for sl in slots if sl[0] == frees[vi])
        slot[0] = end
        slot[1].append(trip)
        slots.sort(key=lambda sl: sl[0])
        served |= mask
        frees = tuple(sorted(sl[0] for sl in slots))
    witness = Schedule(tuple(tuple(sl[1]) for sl in slots))
    rep = validate(inst, witness)
    assert rep.max_flow == value, (rep.max_flow, value)
    solve.cache_clear()
    return OptResult(value, witness)


# -- analysis partition ----------------------------------------------------------


@dataclass
class OptPartition:
    F: object
    sets: dict  # i -> sorted request ids
    buckets: dict  # i -> sorted request ids


def opt_partition(inst: Instance, witness: Schedule, F) -> OptPartition:
    """Put every witness trip's requests into S_i, i being the earliest interval index among them."""
    buckets: dict = {}
    for idx, r in enumerate(inst.requests):
        buckets.setdefault(bucket_index(r.arrival, F), []).append(idx)
    sets: dict = {}
    for _, trip in witness.trips():
        if not trip.served:
            continue
        idxs = [bucket_index(inst.requests[i].arrival, F) for i in trip.served]
        lo, hi = min(idxs), max(idxs)
        if hi - lo >= 2:
            raise PartitionError(
                f"trip at {trip.start} serves requests from intervals {lo} and {hi}, more than F={F} apart"
            )
        sets.setdefault(lo, []).extend(trip.served)
    return OptPartition(F, {i: sorted(v) for i, v in sets.items()}, buckets)


def trip_count_lower_bound(t: RootedTree, Rp, F) -> dict:
    """Edge (given by its child vertex) -> minimum number of trips that must cross it."""
    return edge_counts(t, Rp, F)


def edge_uses(t: RootedTree, sch: Schedule) -> dict:
    """Child vertex -> number of trips whose walk crosses the edge above it."""
    uses: dict = {}
    for _, trip in sch.trips():
        crossed = set()
        for a, b in zip(trip.walk, trip.walk[1:]):
            crossed.add(b if t.parent.get(b) == a else a)
        for v in crossed:
            uses[v] = uses.get(v, 0) + 1
    return uses


def counting_tsp_lower_bound(g: MetricGraph, Vp, delta=None):
    """delta * |Vp minus depot|, valid when distinct non-depot vertices are delta apart and
    every one is at least delta/2 from the depot.  delta defaults to the largest admissible value."""
    o = g.depot
    W = sorted(set(Vp) - {o}, key=vertex_key)
    for v in W:
        g.check_vertex(v)
    if not W:
        return 0
    pair_min, pair = math.inf, None
    for a_i, a in enumerate(W):
        for b in W[a_i + 1:]:
            d = g.distance(a, b)
            if d < pair_min:
                pair_min, pair = d, (a, b)
    dep_min, dep = min((g.distance(o, v), (o, v)) for v in W)
    if delta is None:
        delta = min(pair_min, 2 * dep_min)
        if delta <= 0:
            bad = pair if pair_min <= 2 * dep_min else dep
            raise HypothesisError(f"vertices {bad} are at distance 0", bad)
    else:
        if pair_min < delta:
            raise HypothesisError(f"{pair} are {pair_min} apart, less than {delta}", pair)
        if 2 * dep_min < delta:
            raise HypothesisError(f"{dep} are {dep_min} apart, less than {delta}/2", dep)
    return delta * len(W)
