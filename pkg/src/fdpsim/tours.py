"""TSP and capacitated routing tours: MST doubling, iterated tour partitioning, and exact DPs."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .instance import Trip, chain_trips, expand_stops, travel_time
from .metric import MetricGraph, vertex_key

EXACT_LIMIT = 12


class TooLarge(ValueError):
    """An exact routine was asked to handle more than it is willing to enumerate."""


@dataclass(frozen=True)
class CvrpTour:
    """Closed tour from the depot given by its stops.

    ``stops`` lists ``(vertex, request ids served there)`` between the leading and
    trailing depot; an interior ``(depot, ())`` stop marks a return to the depot.
    """

    stops: tuple
    length: object

    def segments(self, depot) -> list:
        """Stops between consecutive depot visits."""
        out, cur = [], []
        for v, served in self.stops:
            if v == depot:
                if cur:
                    out.append(cur)
                cur = []
            else:
                cur.append((v, served))
        if cur:
            out.append(cur)
        return out

    def served(self) -> list:
        return sorted(i for _, q in self.stops for i in q)


def stops_length(g: MetricGraph, vertices) -> object:
    """Length of o -> vertices... -> o using shortest paths."""
    o = g.depot
    seq = [o, *vertices, o]
    return sum((g.distance(a, b) for a, b in zip(seq, seq[1:])), 0)


def _tour(g, stops) -> CvrpTour:
    stops = tuple((v, tuple(sorted(q))) for v, q in stops)
    return CvrpTour(stops, stops_length(g, [v for v, _ in stops]))


def _by_vertex(points: dict) -> dict:
    at: dict = {}
    for i in sorted(points):
        at.setdefault(points[i], []).append(i)
    return at


def mst_preorder(g: MetricGraph, vertices) -> list:
    """Prim's MST on the shortest-path closure of vertices ∪ {depot}; preorder of the non-depot vertices."""
    o = g.depot
    vs = sorted(set(vertices) - {o}, key=vertex_key)
    if not vs:
        return []
    children: dict = {o: []}
    best = {v: (g.distance(o, v), vertex_key(o), o) for v in vs}
    heap = [(best[v][0], vertex_key(v), v) for v in vs]
    heapq.heapify(heap)
    done = {o}
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in done or d != best[v][0]:
            continue
        done.add(v)
        children.setdefault(best[v][2], []).append(v)
        children.setdefault(v, [])
        for w in vs:
            if w not in done:
                dw = g.distance(v, w)
                if (dw, vertex_key(v)) < best[w][:2]:
                    best[w] = (dw, vertex_key(v), v)
                    heapq.heappush(heap, (dw, vertex_key(w), w))
    order = []
    stack = [o]
    while stack:
        u = stack.pop()
        if u != o:
            order.append(u)
        stack.extend(sorted(children.get(u, []), key=vertex_key, reverse=True))
    return order


def tsp_approx(g: MetricGraph, points: dict) -> CvrpTour:
    """MST-doubling tour with shortcuts; ``points`` maps request id -> vertex."""
    at = _by_vertex(points)
    order = mst_preorder(g, at)
    stops = [(v, at[v]) for v in order]
    if g.depot in at:
        stops.insert(0, (g.depot, at[g.depot]))
    return _tour(g, stops)


def cvrp_approx(g: MetricGraph, points: dict, c) -> CvrpTour:
    """Iterated tour partitioning over the MST-doubling order.

    Requests are laid out in tour order and cut into chunks of c; every offset of
    the first cut is tried and the shortest result kept (first offset on ties).
    """
    if c == math.inf or c >= len(points):
        return tsp_approx(g, points)
    if c < 1:
        raise ValueError("capacity must be at least 1")
    base = tsp_approx(g, points)
    seq = [(v, i) for v, q in base.stops for i in q]
    best = None
    for off in range(1, c + 1):
        chunks = [seq[:off]] + [seq[j:j + c] for j in range(off, len(seq), c)]
        stops = []
        for n, chunk in enumerate(chunks):
            if not chunk:
                continue
            if stops:
                stops.append((g.depot, ()))
            merged: dict = {}
            for v, i in chunk:
                merged.setdefault(v, []).append(i)
            stops.extend(merged.items())
        tour = _tour(g, stops)
        if best is None or tour.length < best.length:
            best = tour
    return best


# -- exact ---------------------------------------------------------------------


def _subset_tsp(g: MetricGraph, vs: list):
    """dp over subsets of vs: cost[mask] = shortest closed depot tour through exactly mask."""
    o = g.depot
    n = len(vs)
    d0 = [g.distance(o, v) for v in vs]
    d = [[g.distance(a, b) for b in vs] for a in vs]
    full = 1 << n
    INF = math.inf
    path = [[INF] * n for _ in range(full)]
    for j in range(n):
        path[1 << j][j] = d0[j]
    for mask in range(1, full):
        row = path[mask]
        for j in range(n):
            pj = row[j]
            if pj == INF:
                continue
            for m in range(n):
                if mask >> m & 1:
                    continue
                nm = mask | (1 << m)
                val = pj + d[j][m]
                if val < path[nm][m]:
                    path[nm][m] = val
    cost = [0] * full
    for mask in range(1, full):
        cost[mask] = min(path[mask][j] + d0[j] for j in range(n) if mask >> j & 1)
    return path, cost, d0, d


def _order_from(path, d0, d, vs, mask, total):
    """Recover a visiting order achieving ``total`` for ``mask``."""
    n = len(vs)
    last = min((j for j in range(n) if mask >> j & 1 and path[mask][j] + d0[j] == total))
    order = [last]
    while mask != 1 << last:
        prev_mask = mask & ~(1 << last)
        prev = min(j for j in range(n) if prev_mask >> j & 1 and path[prev_mask][j] + d[j][last] == path[mask][last])
        order.append(prev)
        mask, last = prev_mask, prev
    return [vs[j] for j in reversed(order)]


def held_karp(g: MetricGraph, vertices) -> tuple:
    """Exact shortest closed tour from the depot through ``vertices``: (length, order)."""
    vs = sorted(set(vertices) - {g.depot}, key=vertex_key)
    if not vs:
        return 0, []
    if len(vs) > EXACT_LIMIT + 4:
        raise TooLarge(f"{len(vs)} vertices is beyond the exact TSP limit")
    path, cost, d0, d = _subset_tsp(g, vs)
    full = (1 << len(vs)) - 1
    return cost[full], _order_from(path, d0, d, vs, full, cost[full])


def exact_tsp(g: MetricGraph, points: dict) -> CvrpTour:
    at = _by_vertex(points)
    _, order = held_karp(g, at)
    stops = [(v, at[v]) for v in order]
    if g.depot in at:
        stops.insert(0, (g.depot, at[g.depot]))
    return _tour(g, stops)


def exact_cvrp(g: MetricGraph, points: dict, c, limit: int = EXACT_LIMIT) -> CvrpTour:
    """Optimal capacitated tour by a DP over request subsets (each trip of at most c requests)."""
    if len(points) > limit:
        raise TooLarge(f"{len(points)} requests exceed the exact limit of {limit}")
    if c == math.inf or c >= len(points):
        return exact_tsp(g, points)
    ids = sorted(points)
    o = g.depot
    vs = sorted({points[i] for i in ids} - {o}, key=vertex_key)
    vpos = {v: j for j, v in enumerate(vs)}
    path, vcost, d0, d = _subset_tsp(g, vs)
    n = len(ids)
    vmask = [0 if points[i] == o else 1 << vpos[points[i]] for i in ids]
    full = (1 << n) - 1
    trip_vm = [0] * (1 << n)
    size = [0] * (1 << n)
    for m in range(1, 1 << n):
        low = (m & -m).bit_length() - 1
        trip_vm[m] = trip_vm[m & (m - 1)] | vmask[low]
        size[m] = size[m & (m - 1)] + 1
    best = [math.inf] * (1 << n)
    choice = [0] * (1 << n)
    best[0] = 0
    for m in range(1, 1 << n):
        low = m & -m
        rest = m & ~low
        sub = rest
        # enumerate trips containing the lowest request of m
        while True:
            t = sub | low
            if size[t] <= c:
                val = best[m & ~t] + vcost[trip_vm[t]]
                if val < best[m]:
                    best[m] = val
                    choice[m] = t
            if sub == 0:
                break
            sub = (sub - 1) & rest
    stops = []
    m = full
    while m:
        t = choice[m]
        served = [ids[j] for j in range(n) if t >> j & 1]
        vm = trip_vm[t]
        order = _order_from(path, d0, d, vs, vm, vcost[vm]) if vm else []
        if stops:
            stops.append((o, ()))
        at_o = [i for i in served if points[i] == o]
        if at_o:
            stops.append((o, at_o))
        for v in order:
            stops.append((v, [i for i in served if points[i] == v]))
        m &= ~t
    tour = _tour(g, stops)
    assert tour.length == best[full]
    return tour


# -- turning tours into trips ------------------------------------------------------


def split_tour(g: MetricGraph, tour: CvrpTour, cap) -> list:
    """Cut the stop sequence into greedy maximal pieces whose internal length is at most ``cap``.

    Depot stops at either end of a piece are dropped; pieces left with no stops vanish.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    stops = list(tour.stops)
    pieces = []
    j = 0
    while j < len(stops):
        end = j
        run = 0
        while end + 1 < len(stops):
            step = g.distance(stops[end][0], stops[end + 1][0])
            if run + step > cap:
                break
            run += step
            end += 1
        piece = stops[j:end + 1]
        while piece and piece[0][0] == g.depot and not piece[0][1]:
            piece = piece[1:]
        while piece and piece[-1][0] == g.depot and not piece[-1][1]:
            piece = piece[:-1]
        if piece:
            pieces.append(_tour(g, piece))
        j = end + 1
    return pieces


def tour_trips(g: MetricGraph, tour: CvrpTour, start, speed=1, requests=None) -> list:
    """Back-to-back trips realising ``tour``, one chain per depot-delimited segment.

    A segment whose shortest paths pass through the depot is cut there as well;
    ``requests`` (id -> object with ``.vertex``) is then needed to place each request.
    """
    o = g.depot
    trips = []
    t = start
    for seg in tour.segments(o):
        walk = expand_stops(g, [v for v, _ in seg])
        served = [i for _, q in seg for i in q]
        if o in walk[1:-1]:
            if requests is None:
                requests = {i: _At(v) for v, q in seg for i in q}
            pieces = chain_trips(g, walk, served, requests, t, speed)
        else:
            pieces = [Trip(t, tuple(walk), tuple(served))]
        trips.extend(pieces)
        t = pieces[-1].start + travel_time(g.walk_length(pieces[-1].walk), speed)
    return trips


@dataclass(frozen=True)
class _At:
    vertex: object
