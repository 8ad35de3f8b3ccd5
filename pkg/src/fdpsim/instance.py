"""Requests, instances, trips, schedules, validation and the JSON document format."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .metric import GraphError, MetricGraph, RootedTree, Number, vertex_key

INF = math.inf


class ScheduleError(ValueError):
    """A schedule violates the trip or schedule rules.

    ``kind`` is one of: capacity, overlap, unserved, serve-before-arrival,
    bad-walk, depot-revisit, not-visited, double-served, unknown-request,
    vehicle-count.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class DocumentError(ValueError):
    """Malformed instance or schedule document."""


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class Request:
    arrival: Number
    vertex: object


@dataclass(frozen=True)
class Instance:
    graph: MetricGraph
    k: int
    capacity: Union[int, float]
    requests: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.capacity != INF and (int(self.capacity) != self.capacity or self.capacity < 1):
            raise ValueError("capacity must be a positive integer or inf")
        object.__setattr__(self, "requests", tuple(self.requests))
        for i, r in enumerate(self.requests):
            if r.vertex not in self.graph:
                raise ValueError(f"request {i} at unknown vertex {r.vertex!r}")
            if r.vertex == self.graph.depot:
                raise ValueError(f"request {i} is located at the depot")
            if r.arrival < 0:
                raise ValueError(f"request {i} has negative arrival")

    @property
    def depot(self):
        return self.graph.depot

    @property
    def uncapacitated(self) -> bool:
        return self.capacity == INF

    def tree(self) -> RootedTree:
        return RootedTree.from_graph(self.graph)

    def with_requests(self, requests) -> "Instance":
        return Instance(self.graph, self.k, self.capacity, tuple(requests), dict(self.meta))


@dataclass(frozen=True)
class Trip:
    start: Number
    walk: tuple
    served: tuple

    def __post_init__(self):
        object.__setattr__(self, "walk", tuple(self.walk))
        object.__setattr__(self, "served", tuple(sorted(self.served)))


@dataclass(frozen=True)
class Schedule:
    vehicles: tuple

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(tuple(seq) for seq in self.vehicles))

    @classmethod
    def empty(cls, k: int) -> "Schedule":
        return cls(tuple(() for _ in range(k)))

    def trips(self):
        for v, seq in enumerate(self.vehicles):
            for trip in seq:
                yield v, trip


@dataclass
class FlowReport:
    max_flow: Number
    flows: dict
    serve_times: dict

    def argmax(self):
        return max(self.flows, key=lambda i: (self.flows[i], -i)) if self.flows else None


def travel_time(length: Number, speed) -> Number:
    t = Fraction(length) / Fraction(speed)
    return t.numerator if t.denominator == 1 else t


def trip_profile(graph: MetricGraph, walk: Sequence) -> tuple:
    """(first-visit offset per vertex, total length) of a walk at unit speed."""
    first = {}
    pos = 0
    first.setdefault(walk[0], 0)
    for a, b in zip(walk, walk[1:]):
        pos += graph.edge_length(a, b)
        first.setdefault(b, pos)
    return first, pos


def check_trip_shape(graph: MetricGraph, walk: Sequence) -> None:
    o = graph.depot
    if len(walk) < 3:
        raise ScheduleError("bad-walk", f"walk {walk!r} is too short")
    if walk[0] != o or walk[-1] != o:
        raise ScheduleError("bad-walk", f"walk {walk!r} must start and end at the depot")
    for a, b in zip(walk, walk[1:]):
        if b not in graph.adj.get(a, {}):
            raise ScheduleError("bad-walk", f"({a!r}, {b!r}) is not an edge")
    for u in walk[1:-1]:
        if u == o:
            raise ScheduleError("depot-revisit", f"walk {walk!r} passes the depot")


def validate(inst: Instance, sch: Schedule, speed=1) -> FlowReport:
    """Check every trip and schedule rule and return the flow-time report."""
    g = inst.graph
    n = len(inst.requests)
    if len(sch.vehicles) > inst.k:
        raise ScheduleError("vehicle-count", f"{len(sch.vehicles)} itineraries for k={inst.k}")
    serve = {}
    for vid, seq in enumerate(sch.vehicles):
        free_at = 0
        for trip in seq:
            check_trip_shape(g, trip.walk)
            if trip.start < free_at:
                raise ScheduleError(
                    "overlap", f"vehicle {vid} starts a trip at {trip.start} before {free_at}"
                )
            if len(trip.served) > inst.capacity:
                raise ScheduleError(
                    "capacity", f"vehicle {vid} trip at {trip.start} serves {len(trip.served)} > {inst.capacity}"
                )
            first, total = trip_profile(g, trip.walk)
            for idx in trip.served:
                if not 0 <= idx < n:
                    raise ScheduleError("unknown-request", f"request index {idx}")
                if idx in serve:
                    raise ScheduleError("double-served", f"request {idx} served twice")
                req = inst.requests[idx]
                if req.arrival > trip.start:
                    raise ScheduleError(
                        "serve-before-arrival",
                        f"request {idx} arrives at {req.arrival} after trip start {trip.start}",
                    )
                if req.vertex not in first:
                    raise ScheduleError("not-visited", f"request {idx} at {req.vertex!r} not on walk")
                serve[idx] = trip.start + travel_time(first[req.vertex], speed)
            free_at = trip.start + travel_time(total, speed)
    missing = [i for i in range(n) if i not in serve]
    if missing:
        raise ScheduleError("unserved", f"requests {missing[:10]} never served")
    flows = {i: serve[i] - inst.requests[i].arrival for i in range(n)}
    return FlowReport(max(flows.values(), default=0), flows, serve)


def split_at_depot(walk: Sequence, depot) -> list:
    """Cut a closed depot walk at every interior depot visit."""
    pieces = []
    cur = [walk[0]]
    for u in walk[1:]:
        cur.append(u)
        if u == depot:
            if len(cur) >= 3:
                pieces.append(cur)
            cur = [depot]
    return pieces


def chain_trips(graph: MetricGraph, walk: Sequence, served, requests, start, speed=1) -> list:
    """Realise a closed walk (possibly revisiting the depot) as back-to-back trips.

    Each request in ``served`` is assigned to the first piece visiting its vertex.
    """
    o = graph.depot
    pieces = split_at_depot(list(walk), o)
    pending = sorted(served)
    trips = []
    t = start
    for piece in pieces:
        here = set(piece)
        mine = [i for i in pending if requests[i].vertex in here]
        pending = [i for i in pending if requests[i].vertex not in here]
        trips.append(Trip(t, tuple(piece), tuple(mine)))
        t = t + travel_time(graph.walk_length(piece), speed)
    if pending:
        raise ScheduleError("not-visited", f"requests {pending} not on walk")
    return trips


def expand_stops(graph: MetricGraph, stops: Sequence) -> list:
    """Concatenate shortest paths depot -> stops... -> depot into one vertex walk."""
    o = graph.depot
    seq = [o] + list(stops) + [o]
    walk = [o]
    for a, b in zip(seq, seq[1:]):
        if a == b:
            continue
        walk.extend(graph.shortest_path(a, b)[1:])
    return walk


# -- documents -----------------------------------------------------------------


def _num_out(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        if x == INF:
            return "inf"
        if x.is_integer():
            return int(x)
    return x


def _num_in(x, where):
    if isinstance(x, bool):
        raise DocumentError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        f = Fraction(x)
        return f.numerator if f.denominator == 1 else f
    if isinstance(x, str):
        try:
            f = Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise DocumentError(f"{where}: expected a number, got {x!r}") from None
        return f.numerator if f.denominator == 1 else f
    raise DocumentError(f"{where}: expected a number, got {x!r}")


def _vid_in(x, where):
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return x
    raise DocumentError(f"{where}: vertex ids must be integers or strings, got {x!r}")


def instance_to_dict(inst: Instance) -> dict:
    g = inst.graph
    doc = {
        "vertices": list(g.vertices),
        "edges": [{"u": u, "v": v, "len": _num_out(length)} for u, v, length in g.edges],
        "depot": g.depot,
        "k": inst.k,
        "capacity": "inf" if inst.uncapacitated else int(inst.capacity),
        "requests": [{"t": _num_out(r.arrival), "v": r.vertex} for r in inst.requests],
    }
    if inst.meta:
        doc["meta"] = inst.meta
    return doc


def _field(doc, key, where):
    if not isinstance(doc, dict):
        raise DocumentError(f"{where}: expected an object")
    if key not in doc:
        raise DocumentError(f"{where}: missing field '{key}'")
    return doc[key]


def instance_from_dict(doc: dict) -> Instance:
    verts = _field(doc, "vertices", "instance")
    if not isinstance(verts, list):
        raise DocumentError("instance.vertices: expected a list")
    verts = [_vid_in(v, f"vertices[{i}]") for i, v in enumerate(verts)]
    edges = []
    for i, e in enumerate(_field(doc, "edges", "instance")):
        where = f"edges[{i}]"
        u = _vid_in(_field(e, "u", where), where + ".u")
        v = _vid_in(_field(e, "v", where), where + ".v")
        length = _num_in(_field(e, "len", where), where + ".len")
        if length < 0:
            raise DocumentError(f"{where}.len: negative edge length {length}")
        edges.append((u, v, length))
    depot = _vid_in(_field(doc, "depot", "instance"), "depot")
    k = _field(doc, "k", "instance")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise DocumentError(f"k: expected a positive integer, got {k!r}")
    cap = _field(doc, "capacity", "instance")
    if cap == "inf":
        cap = INF
    elif not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
        raise DocumentError(f"capacity: expected a positive integer or 'inf', got {cap!r}")
    reqs = []
    for i, r in enumerate(_field(doc, "requests", "instance")):
        where = f"requests[{i}]"
        reqs.append(Request(_num_in(_field(r, "t", where), where + ".t"), _vid_in(_field(r, "v", where), where + ".v")))
    try:
        graph = MetricGraph(verts, edges, depot)
        if graph.is_tree():
            graph = RootedTree(verts, edges, depot)
        return Instance(graph, k, cap, tuple(reqs), dict(doc.get("meta", {})))
    except (GraphError, ValueError) as exc:
        if isinstance(exc, DocumentError):
            raise
        raise DocumentError(str(exc)) from None


def schedule_to_dict(sch: Schedule) -> dict:
    return {
        "vehicles": [
            [{"start": _num_out(t.start), "walk": list(t.walk), "served": list(t.served)} for t in seq]
            for seq in sch.vehicles
        ]
    }


def schedule_from_dict(doc: dict) -> Schedule:
    vehicles = _field(doc, "vehicles", "schedule")
    if not isinstance(vehicles, list):
        raise DocumentError("schedule.vehicles: expected a list")
    out = []
    for vi, seq in enumerate(vehicles):
        trips = []
        for ti, t in enumerate(seq):
            where = f"vehicles[{vi}][{ti}]"
            walk = [_vid_in(x, where + ".walk") for x in _field(t, "walk", where)]
            served = _field(t, "served", where)
            if not all(isinstance(s, int) and not isinstance(s, bool) for s in served):
                raise DocumentError(f"{where}.served: expected request indices")
            trips.append(Trip(_num_in(_field(t, "start", where), where + ".start"), tuple(walk), tuple(served)))
        out.append(tuple(trips))
    return Schedule(tuple(out))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def serialize_instance(inst: Instance) -> str:
    return dumps(instance_to_dict(inst))


def parse_instance(text: str) -> Instance:
    return instance_from_dict(loads(text))


def serialize_schedule(sch: Schedule) -> str:
    return dumps(schedule_to_dict(sch))


def parse_schedule(text: str) -> Schedule:
    return schedule_from_dict(loads(text))


def report_to_dict(rep: FlowReport) -> dict:
    return {
        "max_flow": _num_out(rep.max_flow),
        "flows": [_num_out(rep.flows[i]) for i in sorted(rep.flows)],
    }


# -- feasible instance generation ---------------------------------------------


def random_tree(rng: random.Random, n: int, max_depth: int, max_len: int = 5) -> RootedTree:
    """Random tree on 0..n-1 rooted at 0 with every depth at most ``max_depth``."""
    if max_depth < 1:
        raise GenerationError("max depot distance must be at least 1")
    depth = {0: 0}
    edges = []
    for v in range(1, n):
        for _ in range(50):
            p = rng.randrange(v)
            room = max_depth - depth[p]
            if room >= 1:
                break
        else:
            p, room = 0, max_depth
        length = rng.randint(1, min(max_len, room))
        depth[v] = depth[p] + length
        edges.append((p, v, length))
    return RootedTree(range(n), edges, 0)


def random_graph(rng: random.Random, n: int, max_depth: int, extra: int, max_len: int = 5) -> MetricGraph:
    t = random_tree(rng, n, max_depth, max_len)
    edges = list(t.edges)
    have = {frozenset((u, v)) for u, v, _ in edges}
    for _ in range(extra):
        u, v = rng.sample(range(n), 2) if n >= 2 else (0, 0)
        if u == v or frozenset((u, v)) in have:
            continue
        have.add(frozenset((u, v)))
        edges.append((u, v, rng.randint(1, max_len)))
    return MetricGraph(range(n), edges, 0)


def _tour_of(graph: MetricGraph, stops: list) -> list:
    if isinstance(graph, RootedTree):
        from .dispatch import euler_walk

        return euler_walk(graph, stops)
    return expand_stops(graph, stops)


def generate_feasible(
    seed: int,
    n_vertices: int = 12,
    k: int = 1,
    capacity=INF,
    horizon: int = 100,
    F_target: int = 10,
    max_requests: int = 40,
    tree: bool = True,
    extra_edges: int = 0,
    max_len: int = 5,
    max_stops: int = 4,
    max_idle: Optional[int] = None,
):
    """Random instance together with a witness schedule of max flow <= F_target.

    The schedule is drawn first (trips of length <= F_target, idle gaps between
    them) and every request is then given an arrival within F_target of its
    serve time and no later than its trip's start.
    """
    if F_target < 2:
        raise GenerationError(f"F_target={F_target} cannot fit a round trip of length >= 2")
    if n_vertices < 2 or k < 1 or horizon < 0 or max_requests < 1:
        raise GenerationError("parameters must be positive")
    rng = random.Random(seed)
    max_depth = F_target // 2
    if tree:
        graph = random_tree(rng, n_vertices, max_depth, max_len)
    else:
        graph = random_graph(rng, n_vertices, max_depth, extra_edges, max_len)
    if max_idle is None:
        max_idle = F_target
    others = [v for v in graph.vertices if v != graph.depot]
    cap = capacity if capacity != INF else 10**9
    raw = []  # (arrival, vertex, vehicle, trip number)
    plans = []  # per vehicle list of (start, walk, [raw ids])
    for vid in range(k):
        t = rng.randint(0, max_idle)
        plan = []
        while t <= horizon and len(raw) < max_requests:
            stops = []
            for _ in range(rng.randint(1, max_stops)):
                cand = stops + [rng.choice(others)]
                if graph.walk_length(_tour_of(graph, cand)) <= F_target:
                    stops = cand
            if not stops:
                t += rng.randint(1, max_idle + 1)
                continue
            walk = _tour_of(graph, stops)
            first, total = trip_profile(graph, walk)
            budget = min(cap, max_requests - len(raw))
            ids = []
            for v in dict.fromkeys(stops):
                for _ in range(rng.randint(1, 2)):
                    if len(ids) >= budget:
                        break
                    serve = t + first[v]
                    lo = max(0, serve - F_target)
                    ids.append(len(raw))
                    raw.append((rng.randint(lo, t), v))
            if ids:
                plan.append((t, walk, ids))
            t += total + rng.randint(0, max_idle)
        plans.append(plan)
    order = sorted(range(len(raw)), key=lambda i: (raw[i][0], i))
    new_index = {old: new for new, old in enumerate(order)}
    requests = tuple(Request(raw[i][0], raw[i][1]) for i in order)
    vehicles = []
    for plan in plans:
        seq = []
        for start, walk, ids in plan:
            seq.extend(chain_trips(graph, walk, [new_index[i] for i in ids], requests, start))
        vehicles.append(tuple(seq))
    inst = Instance(graph, k, capacity, requests, {"seed": seed, "F_target": F_target})
    return inst, Schedule(tuple(vehicles))
