"""Windowed batching with speed augmentation on general metrics."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .instance import Instance, Schedule, Trip
from .sim import OnlineAlgorithm, run_online
from .tours import EXACT_LIMIT, CvrpTour, TooLarge, cvrp_approx, exact_cvrp, split_tour, tour_trips, tsp_approx

ALPHA = {"exact": 1, "tsp2": 2, "cvrp": 3}


class NoFreeVehicle(RuntimeError):
    """A window produced more subtours than there were idle vehicles."""


@dataclass(frozen=True)
class SpeedConfig:
    eps: Fraction
    mode: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie strictly between 0 and 1")
        if self.mode not in ALPHA:
            raise ValueError(f"mode must be one of {sorted(ALPHA)}")

    @property
    def alpha(self) -> int:
        return ALPHA[self.mode]

    @property
    def gamma(self) -> Fraction:
        return (2 * self.alpha + 2) / self.eps

    @property
    def speed(self) -> Fraction:
        return self.alpha + self.eps

    def flow_bound(self, F):
        return 2 * self.gamma * F

    def subtour_cap(self, F):
        return self.alpha * (self.gamma + 2) * F


def _as_num(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


class SpeedingAlgorithm(OnlineAlgorithm):
    """Every gamma*F time units, route the window's batch, cut the tour, and launch one piece per idle vehicle."""

    name = "speeding"

    def __init__(self, F, cfg: SpeedConfig):
        if F <= 0:
            raise ValueError("F must be positive")
        self.F = F
        self.cfg = cfg
        self.window = _as_num(cfg.gamma * F)

    def start(self, ctx, now):
        self.ctx = ctx
        if self.cfg.mode == "tsp2" and ctx.capacity != math.inf:
            raise ValueError("tsp2 mode needs unbounded capacity")
        self.batches: dict = {}
        self.requests: dict = {}
        self.next_i = max(1, int(now // self.window) + (0 if now % self.window == 0 else 1))
        self.chains = [deque() for _ in range(ctx.k)]
        self.windows: list = []  # (i, batch size, subtour count, longest subtour length)

    def on_arrival(self, idx, req, now):
        self.requests[idx] = req
        self.batches.setdefault(int(req.arrival // self.window) + 1, []).append(idx)

    def next_wakeup(self):
        if self.batches:
            return self.next_i * self.window
        return None

    def _route(self, batch) -> CvrpTour:
        g = self.ctx.graph
        pts = {i: self.requests[i].vertex for i in batch}
        c = self.ctx.capacity
        if self.cfg.mode == "exact":
            if len(batch) > EXACT_LIMIT:
                raise TooLarge(f"window batch of {len(batch)} requests exceeds the exact limit {EXACT_LIMIT}")
            return exact_cvrp(g, pts, c)
        if self.cfg.mode == "tsp2":
            return tsp_approx(g, pts)
        return cvrp_approx(g, pts, c)

    def act(self, now):
        ctx = self.ctx
        g = ctx.graph
        out = []
        while self.next_i * self.window <= now:
            i = self.next_i
            self.next_i += 1
            batch = sorted(self.batches.pop(i, []))
            if not batch:
                if not self.batches:
                    self.next_i = max(self.next_i, int(now // self.window) + 1)
                continue
            tour = self._route(batch)
            pieces = split_tour(g, tour, self.cfg.subtour_cap(self.F))
            idle = [v for v in range(ctx.k) if ctx.busy_until[v] <= now and not self.chains[v]]
            if len(pieces) > len(idle):
                raise NoFreeVehicle(
                    f"window {i} at time {now}: {len(pieces)} subtours but only {len(idle)} idle vehicles"
                )
            longest = 0
            for v, piece in zip(idle, pieces):
                trips = tour_trips(g, piece, now, ctx.speed, self.requests)
                longest = max(longest, piece.length)
                self.chains[v].extend((t.walk, t.served) for t in trips)
            self.windows.append((i, len(batch), len(pieces), longest))
        for v in range(ctx.k):
            if self.chains[v] and ctx.busy_until[v] <= now:
                walk, served = self.chains[v].popleft()
                out.append((v, Trip(now, walk, served)))
        return out

    def flow_bound(self):
        return self.cfg.flow_bound(self.F)


def run_speeding(inst: Instance, F, cfg: SpeedConfig) -> Schedule:
    return run_online(inst, SpeedingAlgorithm(F, cfg), speed=cfg.speed).schedule


def cvrp_window_bound(inst: Instance, a, b, F):
    """Upper bound k(b - a + 2F) on the best capacitated tour for requests arriving in [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    return inst.k * (b - a + 2 * F)
