"""Lower-bound instance families, their certificates, and the adaptive capacity-2 adversary.

The two-lane gadget uses half-unit depot edges.  To keep every length an
integer the gadget families are built at scale 2 (depot edges 1, path edges 2,
times doubled); ``meta["scale"]`` records this and certificates report values in
the original units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .instance import INF, GenerationError, Instance, Request, Schedule, Trip
from .metric import MetricGraph, RootedTree
from .oracle import counting_tsp_lower_bound
from .tours import held_karp

SCALE = 2
SIDES = ("L", "R")


def _other(s):
    return "R" if s == "L" else "L"


def vname(i: int, s: str, j: int, prefix: str = "") -> str:
    """Gadget vertex name; lane copies at level 0 share every position except the middle one."""
    if i == 0 and j != 4:
        return f"{prefix}v0{j}"
    return f"{prefix}v{i}{s}{j}"


def _gadget_edges(p: int, prefix: str = "", depot="o") -> tuple:
    verts, edges = set(), set()
    for i in range(p + 1):
        for s in SIDES:
            for j in range(1, 8):
                verts.add(vname(i, s, j, prefix))
            for j in (1, 7):
                edges.add((depot, vname(i, s, j, prefix), 1))
            for j in range(1, 7):
                edges.add((vname(i, s, j, prefix), vname(i, s, j + 1, prefix), 2))
            if i >= 1:
                mid = vname(i - 1, s, 4, prefix)
                edges.add((vname(i, s, 3, prefix), mid, 2))
                edges.add((mid, vname(i, s, 5, prefix), 2))
    return verts, edges


def base_graph(p: int) -> MetricGraph:
    if p < 2:
        raise GenerationError("the gadget needs p >= 2")
    verts, edges = _gadget_edges(p)
    return MetricGraph(["o", *verts], sorted(edges, key=str), "o")


def lane_path(i: int, s: str, prefix: str = "") -> list:
    """Straight lane of level i: positions 1..7."""
    return [vname(i, s, j, prefix) for j in range(1, 8)]


def detour_path(i: int, s: str, prefix: str = "") -> list:
    """Lane of level i that borrows the middle vertex of level i-1."""
    return [vname(i, s, 1, prefix), vname(i, s, 2, prefix), vname(i, s, 3, prefix), vname(i - 1, s, 4, prefix),
            vname(i, s, 5, prefix), vname(i, s, 6, prefix), vname(i, s, 7, prefix)]


def segment_start(i: int) -> int:
    """Start of segment i in original units."""
    return 0 if i == 0 else 7 * (2 * i - 1)


def base_requests(p: int, lean: str, offset=0, prefix: str = "") -> list:
    """(arrival, vertex) pairs of the base instance at scale 2, shifted by ``offset`` (scaled units)."""
    if lean not in SIDES:
        raise GenerationError(f"lean must be L or R, got {lean!r}")
    out = []
    for i in range(p + 1):
        t = offset + SCALE * segment_start(i)
        seen = set()
        for s in SIDES:
            for j in range(1, 8):
                if i == p and j == 4 and s != lean:
                    continue
                v = vname(i, s, j, prefix)
                if v not in seen:
                    seen.add(v)
                    out.append((t, v))
    return out


def _instance(graph, reqs, meta, k=1, capacity=INF) -> Instance:
    reqs = sorted(reqs, key=lambda x: x[0])
    return Instance(graph, k, capacity, tuple(Request(t, v) for t, v in reqs), meta)


def base_instance(p: int, lean: str) -> Instance:
    g = base_graph(p)
    meta = {"kind": "base", "p": p, "lean": lean, "scale": SCALE, "horizon": SCALE * 7 * (2 * p + 1)}
    return _instance(g, base_requests(p, lean), meta)


def certify_base_tour(p: int, lean: str = "L") -> tuple:
    """Closed tour over every gadget vertex except the far middle vertex of the other lane.

    Returns (walk, length in original units).  The length equals the counting
    lower bound, which certifies optimality.
    """
    g = base_graph(p)
    other = _other(lean)
    walk = ["o"]
    for i in range(p + 1):
        walk += lane_path(i, lean) + ["o"]
    for i in range(1, p + 1):
        walk += detour_path(i, other) + ["o"]
    target = set(g.vertices) - {vname(p, other, 4)}
    missing = target - set(walk)
    assert not missing, missing
    length = Fraction(g.walk_length(walk), SCALE)
    bound = Fraction(counting_tsp_lower_bound(g, target), SCALE)
    assert length == 7 * (2 * p + 1) == bound, (length, bound)
    return walk, int(length)


def canonical_base_schedule(inst: Instance, offset=0, prefix: str = "", p=None, lean=None) -> list:
    """Trips (one vehicle) of the lane-following solution for a base block starting at ``offset``."""
    p = inst.meta["p"] if p is None else p
    lean = inst.meta["lean"] if lean is None else lean
    other = _other(lean)
    pending = {}
    for idx, r in enumerate(inst.requests):
        pending.setdefault((r.arrival, r.vertex), []).append(idx)

    def take(t, vs):
        out = []
        for v in vs:
            out.extend(pending.pop((t, v), []))
        return out

    trips = []
    t0 = offset
    walk = ["o", *lane_path(0, lean, prefix), "o"]
    trips.append(Trip(t0, tuple(walk), tuple(take(t0, walk[1:-1]))))
    for i in range(1, p + 1):
        bi = offset + SCALE * segment_start(i)
        prev = offset + SCALE * segment_start(i - 1)
        q = detour_path(i, other, prefix)
        served = take(prev, [vname(i - 1, other, 4, prefix)]) + take(bi, [v for v in q if v != vname(i - 1, other, 4, prefix)])
        trips.append(Trip(bi, ("o", *q, "o"), tuple(served)))
        lane = lane_path(i, lean, prefix)
        trips.append(Trip(bi + SCALE * 7, ("o", *lane, "o"), tuple(take(bi, lane))))
    return trips


def canonical_base_solution(inst: Instance) -> Schedule:
    return Schedule((tuple(canonical_base_schedule(inst)),))


# -- repeated families ---------------------------------------------------------------


def _leans(p, lean):
    if lean is None:
        lean = "L"
    if isinstance(lean, str) and len(lean) == 1:
        return [lean] * p
    lean = list(lean)
    if len(lean) != p or any(s not in SIDES for s in lean):
        raise GenerationError(f"lean vector must have {p} entries from L/R")
    return lean


def legs_instance(p: int, lean=None) -> Instance:
    """Gadget plus p half-unit legs; p phases of length L+p, each a base block then one leg request per unit."""
    g0 = base_graph(p)
    leans = _leans(p, lean)
    L = 7 * (2 * p + 1)
    legs = [f"u{j}" for j in range(1, p + 1)]
    g = MetricGraph([*g0.vertices, *legs], [*g0.edges, *[("o", u, 1) for u in legs]], "o")
    reqs = []
    for h, s in enumerate(leans, start=1):
        off = SCALE * (h - 1) * (L + p)
        reqs += base_requests(p, s, off)
        reqs += [(off + SCALE * (L + j - 1), legs[j - 1]) for j in range(1, p + 1)]
    meta = {"kind": "legs", "p": p, "lean": "".join(leans), "scale": SCALE, "phase": SCALE * (L + p)}
    return _instance(g, reqs, meta)


def legs_solution(inst: Instance) -> Schedule:
    p = inst.meta["p"]
    L = 7 * (2 * p + 1)
    trips = []
    by = {(r.arrival, r.vertex): i for i, r in enumerate(inst.requests)}
    for h, s in enumerate(inst.meta["lean"], start=1):
        off = SCALE * (h - 1) * (L + p)
        trips += canonical_base_schedule(inst, off, p=p, lean=s)
        for j in range(1, p + 1):
            t = off + SCALE * (L + j - 1)
            trips.append(Trip(t, ("o", f"u{j}", "o"), (by[(t, f"u{j}")],)))
    return Schedule((tuple(trips),))


def speeding_p(eps) -> int:
    """Number of gadget copies for the speed-(1+eps) family: p with 1 + eps = p / (p - 1/20)."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise GenerationError("eps must lie in (0, 1)")
    p = (1 + eps) / (20 * eps)
    if p.denominator != 1 or p < 2:
        raise GenerationError(f"eps={eps} gives p={p}; need an integer p >= 2")
    return int(p)


def speeding_instance(eps, lean=None) -> Instance:
    """p gadget copies glued at the depot; phase h replays a base block on copy h."""
    p = speeding_p(eps)
    leans = _leans(p, lean)
    L = 7 * (2 * p + 1)
    verts, edges = ["o"], []
    reqs = []
    for h, s in enumerate(leans, start=1):
        pre = f"c{h}."
        vs, es = _gadget_edges(p, pre)
        verts += sorted(vs)
        edges += sorted(es, key=str)
        reqs += base_requests(p, s, SCALE * (h - 1) * L, pre)
    g = MetricGraph(verts, edges, "o")
    meta = {"kind": "speeding", "p": p, "eps": str(Fraction(eps)), "lean": "".join(leans), "scale": SCALE,
            "phase": SCALE * L}
    return _instance(g, reqs, meta)


def speeding_solution(inst: Instance) -> Schedule:
    p = inst.meta["p"]
    L = 7 * (2 * p + 1)
    trips = []
    for h, s in enumerate(inst.meta["lean"], start=1):
        trips += canonical_base_schedule(inst, SCALE * (h - 1) * L, f"c{h}.", p=p, lean=s)
    return Schedule((tuple(trips),))


def speeding_deficit(p: int) -> Fraction:
    """Extra time, beyond the horizon pL, needed at speed 1+eps when every phase costs L+1."""
    L = 7 * (2 * p + 1)
    eps = Fraction(1, 20 * p - 1)  # from 1 + eps = p / (p - 1/20)
    return p * (L + 1) / (1 + eps) - p * L


def _cycle(nbar):
    return list(range(nbar)), [(i, (i + 1) % nbar, 1) for i in range(nbar)]


def hamiltonian_instance(nbar: int, vertices=None, edges=None) -> Instance:
    """n̄² phases of length (2n̄+1)n̄ over a unit-length graph plus n̄ legs of length n̄."""
    if nbar < 3:
        raise GenerationError("need nbar >= 3")
    if vertices is None:
        vertices, edges = _cycle(nbar)
    if len(vertices) != nbar:
        raise GenerationError("vertex count must equal nbar")
    depot = vertices[0]
    legs = [f"u{i}" for i in range(1, nbar + 1)]
    g = MetricGraph([*vertices, *legs], [*edges, *[(depot, u, nbar) for u in legs]], depot)
    phase = (2 * nbar + 1) * nbar
    reqs = []
    for h in range(1, nbar * nbar + 1):
        b = (h - 1) * phase
        reqs += [(b, v) for v in vertices if v != depot]
        reqs += [(b + (2 * i - 1) * nbar, legs[i - 1]) for i in range(1, nbar + 1)]
    meta = {"kind": "hamiltonian", "nbar": nbar, "phase": phase}
    return _instance(g, reqs, meta)


def copies_instance(nbar: int, vertices=None, edges=None, L=None) -> Instance:
    """n̄ copies of a graph glued at its depot; phase h (length L) requests every vertex of copy h."""
    if vertices is None:
        vertices, edges = _cycle(nbar)
    base = MetricGraph(vertices, edges, vertices[0])
    if L is None:
        L, _ = held_karp(base, base.vertices)
    depot = base.depot
    name = lambda h, v: v if v == depot else f"c{h}.{v}"
    verts = [depot]
    es = []
    reqs = []
    for h in range(1, nbar + 1):
        verts += [name(h, v) for v in base.vertices if v != depot]
        es += [(name(h, a), name(h, b), w) for a, b, w in base.edges]
        reqs += [((h - 1) * L, name(h, v)) for v in base.vertices if v != depot]
    g = MetricGraph(verts, es, depot)
    meta = {"kind": "copies", "nbar": nbar, "L": L}
    return _instance(g, reqs, meta)


def gen_lower_bound(kind: str, p=None, lean=None, eps=None, nbar=None) -> Instance:
    if kind == "base":
        return base_instance(p, lean or "L")
    if kind == "legs":
        return legs_instance(p, lean)
    if kind == "speeding":
        return speeding_instance(eps, lean)
    if kind == "hamiltonian":
        return hamiltonian_instance(nbar)
    if kind == "copies":
        return copies_instance(nbar)
    raise GenerationError(f"unknown family {kind!r}")


# -- capacity-2 adaptive adversary ------------------------------------------------------


def capacity_tree() -> RootedTree:
    return RootedTree(["o", "v1", "v2", "v3", "v4"], [("o", "v1", 1), ("v1", "v2", 1), ("v1", "v3", 1), ("o", "v4", 1)], "o")


def _phase_pattern(p: int, h: int) -> list:
    """(time, vertex or None for the adaptive slot) for phase h, in emission order."""
    b = 10 * (h - 1) * p
    out = [(b, "v1"), (b, "v2"), (b, "v3")]
    for j in range(1, p):
        t = b + 8 * j - 4
        out += [(t, "v2"), (t, "v2"), (t, "v3"), (t, "v3")]
    out.append((b + 8 * p - 4, None))
    for j in range(1, p + 1):
        t = b + 8 * p + 2 * (j - 1)
        out += [(t, "v4"), (t, "v4")]
    return out


class AdaptiveAdversary:
    """Pull-based request source that may look at trips already started."""

    def skeleton(self) -> Instance:
        raise NotImplementedError

    def next_arrival_time(self):
        raise NotImplementedError

    def requests_until(self, t) -> list:
        raise NotImplementedError

    def observe_trip(self, vehicle, trip, requests, now) -> None:
        pass


class CapacityAdversary(AdaptiveAdversary):
    """p phases of length 10p on a five-vertex tree (k=1, c=2).

    The slot at b_h + 8p - 4 goes to v2 when the phase's first v1 request was
    carried together with a v2 request on a trip serving it before that time,
    and to v3 otherwise; if v1 is still unserved the slot defaults to v2.
    """

    def __init__(self, p: int):
        if p < 2:
            raise GenerationError("need p >= 2")
        self.p = p
        self.plan = []  # (time, vertex|None, phase)
        for h in range(1, p + 1):
            self.plan += [(t, v, h) for t, v in _phase_pattern(p, h)]
        self.pos = 0
        self.emitted = 0
        self.v1_index = {}  # phase -> request index
        self.v1_paired_v2 = {}  # phase -> bool, set when v1 is carried early enough
        self.choices = {}
        self.clock = 0

    def skeleton(self) -> Instance:
        return Instance(capacity_tree(), 1, 2, (), {"kind": "capacity", "p": self.p})

    def next_arrival_time(self):
        return self.plan[self.pos][0] if self.pos < len(self.plan) else None

    def requests_until(self, t) -> list:
        if t < self.clock:
            raise RuntimeError("adversary polled backwards in time")
        self.clock = t
        out = []
        while self.pos < len(self.plan) and self.plan[self.pos][0] <= t:
            time, v, h = self.plan[self.pos]
            if v is None:
                v = "v2" if self.v1_paired_v2.get(h, True) else "v3"
                self.choices[h] = v
            if v == "v1":
                self.v1_index[h] = self.emitted
            out.append(Request(time, v))
            self.emitted += 1
            self.pos += 1
        return out

    def observe_trip(self, vehicle, trip, requests, now) -> None:
        p = self.p
        for h, idx in self.v1_index.items():
            if idx in trip.served and h not in self.v1_paired_v2:
                deadline = 10 * (h - 1) * p + 8 * p - 4
                if now + 1 < deadline:  # v1 sits one unit from the depot
                    self.v1_paired_v2[h] = any(requests[i].vertex == "v2" for i in trip.served)


def capacity_adversary(p: int):
    adv = CapacityAdversary(p)
    return adv, adv.skeleton()


def capacity_instance(p: int, choices) -> Instance:
    """The request stream the adversary emits for fixed slot choices (dict or list per phase)."""
    if not isinstance(choices, dict):
        choices = {h: v for h, v in enumerate(choices, start=1)}
    reqs = []
    for h in range(1, p + 1):
        for t, v in _phase_pattern(p, h):
            reqs.append(Request(t, v if v is not None else choices[h]))
    return Instance(capacity_tree(), 1, 2, tuple(reqs), {"kind": "capacity", "p": p,
                                                         "choices": [choices[h] for h in range(1, p + 1)]})


def capacity_reference_schedule(inst: Instance) -> Schedule:
    """Offline schedule that pairs v1 with the lane opposite the slot choice (max flow 10)."""
    p = inst.meta["p"]
    choices = inst.meta["choices"]
    at: dict = {}
    for i, r in enumerate(inst.requests):
        at.setdefault((r.arrival, r.vertex), []).append(i)
    trips = []
    out_back = lambda v: ("o", "v1", v, "v1", "o") if v != "v4" else ("o", "v4", "o")
    for h in range(1, p + 1):
        b = 10 * (h - 1) * p
        x = choices[h - 1]
        y = "v3" if x == "v2" else "v2"
        trips.append(Trip(b, out_back(y), (at[(b, "v1")][0], at[(b, y)][0])))
        carry = at[(b, x)][0]
        for j in range(1, p):
            t = b + 8 * j - 4
            xs, ys = at[(t, x)], at[(t, y)]
            trips.append(Trip(t, out_back(x), (carry, xs[0])))
            trips.append(Trip(t + 4, out_back(y), tuple(ys)))
            carry = xs[1]
        t = b + 8 * p - 4
        star = [i for i in at[(t, x)]]
        trips.append(Trip(t, out_back(x), (carry, star[0])))
        for j in range(1, p + 1):
            t = b + 8 * p + 2 * (j - 1)
            trips.append(Trip(t, out_back("v4"), tuple(at[(t, "v4")])))
    return Schedule((tuple(trips),))
