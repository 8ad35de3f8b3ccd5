"""FIFO list scheduling of bundles/groups and the online tree algorithm built on it."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .bundling import Bundler, bucket_index
from .grouping import binarize, make_groups
from .instance import Instance, Schedule, Trip, chain_trips
from .metric import RootedTree, mst
from .sim import OnlineAlgorithm, run_online


class UnsupportedMode(ValueError):
    """The algorithm does not handle this kind of instance."""


@dataclass
class Job:
    release: object
    size: object
    payload: object = None
    key: tuple = ()


def fifo_schedule(jobs, k: int) -> list:
    """List scheduling in release order (ties by ``key``, then input order).

    A job goes to the lowest-index machine already idle at its release, or else
    to the machine that frees up first.  Returns ``(machine, start, end)`` per job,
    aligned with the input.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    order = sorted(range(len(jobs)), key=lambda j: (jobs[j].release, jobs[j].key, j))
    free = [0] * k
    out = [None] * len(jobs)
    for j in order:
        job = jobs[j]
        idle = [m for m in range(k) if free[m] <= job.release]
        m = idle[0] if idle else min(range(k), key=lambda m: (free[m], m))
        s = max(job.release, free[m])
        free[m] = s + job.size
        out[j] = (m, s, free[m])
    return out


def euler_walk(t: RootedTree, stops) -> list:
    """Depth-first closed walk from the depot over the minimal subtree spanning ``stops``.

    Children are visited in ascending id order.  The walk has length 2*mst(stops).
    """
    hit = t.hit(stops)
    o = t.depot
    walk = [o]
    stack = [(o, iter(t.children[o]))]
    while stack:
        v, it = stack[-1]
        for u in it:
            if u in hit:
                walk.append(u)
                stack.append((u, iter(t.children[u])))
                break
        else:
            stack.pop()
            if stack:
                walk.append(stack[-1][0])
    return walk


def trip_for_group(t: RootedTree, requests, group, start, speed=1) -> list:
    """Back-to-back trips realising the Euler walk of a request group.

    The walk is cut wherever it passes through the depot, so a group whose
    subtree branches at the depot yields several trips.
    """
    if not group:
        raise ValueError("empty group")
    walk = euler_walk(t, {requests[i].vertex for i in group})
    return chain_trips(t, walk, group, requests, start, speed)


class TreeAlgorithm(OnlineAlgorithm):
    """Online tree algorithm for a known F: bucket, split and merge into bundles,
    (for k > 1) cut bundles into groups, and dispatch FIFO.

    ``mode`` picks the bundle split: ``"single"`` (nearest subtree) or ``"multi"``
    (cost-minimising).  Default is single for k = 1, multi otherwise.
    ``use_groups`` defaults to k > 1.
    """

    name = "tree"

    def __init__(self, F, mode=None, eps_round=None, use_groups=None, check_groups=False):
        if F <= 0:
            raise ValueError("F must be positive")
        self.F = F
        self.mode = mode
        self.eps_round = eps_round
        self.use_groups = use_groups
        self.check_groups = check_groups

    def start(self, ctx, now):
        self.ctx = ctx
        if ctx.capacity != math.inf:
            raise UnsupportedMode("the tree algorithm needs unbounded capacity")
        self.tree = RootedTree.from_graph(ctx.graph)
        k = ctx.k
        mode = self.mode or ("single" if k == 1 else "multi")
        self.groups_on = (k > 1) if self.use_groups is None else self.use_groups
        self.bt = binarize(self.tree) if self.groups_on else None
        self.requests: dict = {}
        self.buckets: dict = {}
        self.bundler = Bundler(self.tree, self.requests, self.F, mode, self.eps_round)
        i = 2
        while (i + 1) * self.F < now:
            i += 2
        self.next_i = i
        self.jobs: deque = deque()
        self.chains = [deque() for _ in range(k)]
        self.bundles: list = []
        self.job_log: list = []  # (release, size, vehicle, start, requests)

    def on_arrival(self, idx, req, now):
        self.requests[idx] = req
        self.buckets.setdefault(bucket_index(req.arrival, self.F), []).append(idx)

    def _pending(self) -> bool:
        return bool(self.buckets) or bool(self.bundler.right_carry)

    def next_wakeup(self):
        if self._pending():
            return (self.next_i + 1) * self.F
        return None

    def _release(self, i):
        R_prev = sorted(self.buckets.pop(i - 1, []))
        R_cur = sorted(self.buckets.pop(i, []))
        R_next = sorted(self.buckets.get(i + 1, []))
        bundle = self.bundler.step(i, R_prev, R_cur, R_next)
        if not bundle.requests:
            return
        self.bundles.append(bundle)
        if self.groups_on:
            for n, g in enumerate(make_groups(self.bt, self.requests, bundle.requests, self.F, self.check_groups)):
                self.jobs.append(Job(bundle.release, 2 * g.mst, g.requests, (bundle.index, n)))
        else:
            size = 2 * mst(self.tree, {self.requests[j].vertex for j in bundle.requests})
            self.jobs.append(Job(bundle.release, size, bundle.requests, (bundle.index, 0)))

    def act(self, now):
        while (self.next_i + 1) * self.F <= now:
            if not self.bundler.right_carry:
                # idle steps leave no state behind; jump to the first step touching a bucket
                if self.buckets:
                    m = min(self.buckets)
                    target = m - 1 if (m - 1) % 2 == 0 else m
                else:
                    target = int(now // self.F)
                    target += target % 2
                if target > self.next_i:
                    self.next_i = target
                    continue
            self._release(self.next_i)
            self.next_i += 2
        out = []
        ctx = self.ctx
        for v in range(ctx.k):
            if ctx.busy_until[v] > now:
                continue
            if not self.chains[v] and self.jobs:
                job = self.jobs.popleft()
                pieces = trip_for_group(self.tree, self.requests, job.payload, 0, ctx.speed)
                self.chains[v].extend((p.walk, p.served) for p in pieces)
                self.job_log.append((job.release, job.size, v, now, list(job.payload)))
            if self.chains[v]:
                walk, served = self.chains[v].popleft()
                out.append((v, Trip(now, walk, served)))
        return out

    def flow_bound(self):
        return None


def run_tree_algorithm(inst: Instance, F, **kw) -> Schedule:
    """Schedule produced by the online tree algorithm with parameter F."""
    return run_online(inst, TreeAlgorithm(F, **kw)).schedule
