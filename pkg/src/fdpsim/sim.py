"""Deterministic discrete-event engine for online dispatch, and the guess-and-double wrapper."""
from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .instance import (
    Instance,
    Request,
    Schedule,
    ScheduleError,
    FlowReport,
    Trip,
    _num_out,
    check_trip_shape,
    trip_profile,
    travel_time,
    validate,
)


class EngineError(RuntimeError):
    """The online algorithm broke the engine protocol."""


class SimContext:
    """What an online algorithm may see: the static instance data and vehicle availability."""

    def __init__(self, inst: Instance, speed):
        self.graph = inst.graph
        self.k = inst.k
        self.capacity = inst.capacity
        self.depot = inst.graph.depot
        self.speed = speed
        self.busy_until = [0] * inst.k

    def travel(self, length):
        return travel_time(length, self.speed)

    def is_free(self, vehicle, now) -> bool:
        return self.busy_until[vehicle] <= now


class OnlineAlgorithm:
    """Base class.  The engine calls, at every event time ``now`` and in this order:
    ``on_arrival`` for each newly revealed request, ``on_complete`` for each
    finished trip, then ``act(now)``, which returns ``[(vehicle, Trip), ...]``
    to start at ``now``."""

    name = "online"

    def start(self, ctx: SimContext, now) -> None:
        self.ctx = ctx

    def on_arrival(self, idx: int, req: Request, now) -> None:
        pass

    def on_complete(self, vehicle: int, trip: Trip, now) -> None:
        pass

    def next_wakeup(self):
        return None

    def act(self, now) -> list:
        return []

    def flow_bound(self):
        return None


@dataclass
class SimResult:
    instance: Instance
    schedule: Schedule
    report: FlowReport
    trace: list = field(repr=False)
    algorithm: object = field(repr=False, default=None)

    def trace_lines(self) -> list:
        return [json.dumps(ev, sort_keys=True) for ev in self.trace]

    def trace_hash(self) -> str:
        h = hashlib.sha256()
        for line in self.trace_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


class _Arrivals:
    def __init__(self, inst: Instance, adversary):
        self.adversary = adversary
        if adversary is None:
            order = sorted(range(len(inst.requests)), key=lambda i: (inst.requests[i].arrival, i))
            self.queue = [(i, inst.requests[i]) for i in order]
            self.requests = list(inst.requests)
        else:
            self.queue = []
            self.requests = []
        self.pos = 0

    def next_time(self):
        if self.adversary is not None:
            return self.adversary.next_arrival_time()
        if self.pos < len(self.queue):
            return self.queue[self.pos][1].arrival
        return None

    def pop_until(self, t) -> list:
        out = []
        if self.adversary is not None:
            for req in self.adversary.requests_until(t):
                if req.arrival > t:
                    raise EngineError("adversary emitted a future request")
                self.requests.append(req)
                out.append((len(self.requests) - 1, req))
            return out
        while self.pos < len(self.queue) and self.queue[self.pos][1].arrival <= t:
            out.append(self.queue[self.pos])
            self.pos += 1
        return out


def run_online(inst: Instance, algorithm: OnlineAlgorithm, speed=1, adversary=None, max_events: int = 10**7) -> SimResult:
    """Drive ``algorithm`` over ``inst``; arrivals are revealed only when their time comes.

    With an ``adversary`` the instance's own requests are ignored and the
    adversary is polled for arrivals and shown every trip start.
    """
    speed = Fraction(speed)
    ctx = SimContext(inst, speed)
    arrivals = _Arrivals(inst, adversary)
    completions: list = []
    seq = 0
    itineraries = [[] for _ in range(inst.k)]
    assigned = set()
    revealed = set()
    trace = []
    now = None
    algorithm.start(ctx, 0)
    idle_rounds = 0
    for _ in range(max_events):
        cands = []
        na = arrivals.next_time()
        if na is not None:
            cands.append(na)
        if completions:
            cands.append(completions[0][0])
        w = algorithm.next_wakeup()
        if w is not None:
            if now is not None and w < now:
                raise EngineError(f"{algorithm.name} asked to wake at {w} < now {now}")
            cands.append(w)
        if not cands:
            break
        t = min(cands)
        if now is not None and t < now:
            raise EngineError("event time went backwards")
        if t == now:
            idle_rounds += 1
            if idle_rounds > 10_000:
                raise EngineError(f"{algorithm.name} keeps waking at {now} without progress")
        else:
            idle_rounds = 0
        now = t
        for idx, req in arrivals.pop_until(now):
            revealed.add(idx)
            trace.append({"t": _num_out(now), "event": "arrival", "request": idx, "v": req.vertex})
            algorithm.on_arrival(idx, req, now)
        while completions and completions[0][0] <= now:
            ct, _, vid, trip = heapq.heappop(completions)
            trace.append({"t": _num_out(ct), "event": "complete", "vehicle": vid})
            algorithm.on_complete(vid, trip, now)
        for vid, trip in algorithm.act(now):
            if not 0 <= vid < inst.k:
                raise EngineError(f"unknown vehicle {vid}")
            if trip.start != now:
                raise EngineError(f"trip committed at {now} claims start {trip.start}")
            if ctx.busy_until[vid] > now:
                raise EngineError(f"vehicle {vid} is busy until {ctx.busy_until[vid]}")
            check_trip_shape(inst.graph, trip.walk)
            if len(trip.served) > inst.capacity:
                raise ScheduleError("capacity", f"trip serves {len(trip.served)} requests")
            for i in trip.served:
                if i not in revealed:
                    raise EngineError(f"trip serves request {i} that has not arrived")
                if i in assigned:
                    raise EngineError(f"request {i} assigned twice")
                assigned.add(i)
            _, length = trip_profile(inst.graph, trip.walk)
            done = now + travel_time(length, speed)
            ctx.busy_until[vid] = done
            itineraries[vid].append(trip)
            heapq.heappush(completions, (done, seq, vid, trip))
            seq += 1
            trace.append(
                {"t": _num_out(now), "event": "start", "vehicle": vid, "walk": list(trip.walk), "served": list(trip.served)}
            )
            if adversary is not None:
                adversary.observe_trip(vid, trip, arrivals.requests, now)
    else:
        raise EngineError("event budget exhausted")
    final = inst if adversary is None else inst.with_requests(arrivals.requests)
    schedule = Schedule(tuple(tuple(s) for s in itineraries))
    report = validate(final, schedule, speed)
    return SimResult(final, schedule, report, trace, algorithm)


# -- doubling ----------------------------------------------------------------------


class Doubling(OnlineAlgorithm):
    """Run ``factory(F)`` without knowing F: double F and delay all arrivals when the
    inner algorithm misses its own guarantee ``beta * F``.

    A stage is abandoned when a revealed request is still uncommitted at its
    deadline (delayed arrival + beta*F), or when a trip the inner algorithm wants
    to start is longer than 2*beta*F or would serve a request after its deadline.
    The wrapper then waits for every active trip, sets D += 3*beta*F, F *= 2, and
    starts a fresh inner algorithm.
    """

    name = "doubling"

    def __init__(self, factory: Callable[[object], OnlineAlgorithm], beta, initial_F=None):
        self.factory = factory
        self.beta = beta
        self.initial_F = initial_F

    def start(self, ctx, now):
        self.ctx = ctx
        self.F = None
        self.D = 0
        self.inner = None
        self.waiting = False
        self.known = {}  # idx -> Request (real arrival)
        self.delivered = set()
        self.committed = set()
        self.stages = []  # (start time, F, D)
        self.triggers = []  # (time, reason)

    def on_arrival(self, idx, req, now):
        self.known[idx] = req

    def on_complete(self, vehicle, trip, now):
        if self.inner is not None and not self.waiting:
            self.inner.on_complete(vehicle, trip, now)

    def _delayed(self, idx):
        return self.known[idx].arrival + self.D

    def _begin_stage(self, now):
        self.inner = self.factory(self.F)
        self.inner.start(self.ctx, now)
        self.stages.append((now, self.F, self.D))
        self.waiting = False

    def _trigger(self, now, reason):
        self.triggers.append((now, reason))
        self.D += 3 * self.beta * self.F
        self.F = 2 * self.F
        self.inner = None
        self.waiting = True
        self.delivered = set()

    def _pending(self):
        return [i for i in self.known if i not in self.committed]

    def next_wakeup(self):
        if self.F is None:
            return None
        cands = []
        if not self.waiting and self.inner is not None:
            w = self.inner.next_wakeup()
            if w is not None:
                cands.append(w)
        for i in self._pending():
            if i in self.delivered:
                cands.append(self._delayed(i) + self.beta * self.F)
            else:
                cands.append(self._delayed(i))
        return min(cands) if cands else None

    def act(self, now):
        if self.F is None:
            if not self.known:
                return []
            first = [r for r in self.known.values() if r.arrival == now]
            if self.initial_F is not None:
                self.F = self.initial_F
            else:
                self.F = max(1, min(self.ctx.graph.distance(self.ctx.depot, r.vertex) for r in first))
            self._begin_stage(now)
        if self.waiting:
            if any(b > now for b in self.ctx.busy_until):
                return []
            self._begin_stage(now)
        for i in sorted(self._pending(), key=lambda i: (self._delayed(i), i)):
            if i not in self.delivered and self._delayed(i) <= now:
                self.delivered.add(i)
                self.inner.on_arrival(i, Request(self._delayed(i), self.known[i].vertex), now)
        commits = self.inner.act(now)
        limit = self.beta * self.F
        g = self.ctx.graph
        reason = None
        newly = set()
        for vid, trip in commits:
            first, total = trip_profile(g, trip.walk)
            if self.ctx.travel(total) > 2 * limit:
                reason = "long-trip"
                break
            for i in trip.served:
                serve = now + self.ctx.travel(first[self.known[i].vertex])
                if serve - self._delayed(i) > limit:
                    reason = "late-serve"
                    break
                newly.add(i)
            if reason:
                break
        if reason is None:
            for i in self.delivered:
                if i not in self.committed and i not in newly and now >= self._delayed(i) + limit:
                    reason = "deadline"
                    break
        if reason is not None:
            self._trigger(now, reason)
            if not any(b > now for b in self.ctx.busy_until):
                self._begin_stage(now)
            return []
        self.committed |= newly
        return commits

    def flow_bound(self):
        return None
