"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the PASS/FAIL lines are
printed even when output capture is on).
"""
import random
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from fdpsim import adversary as adv
from fdpsim.baselines import GreedyBatching
from fdpsim.bundling import bundles_with_splits
from fdpsim.dispatch import Job, TreeAlgorithm, fifo_schedule, run_tree_algorithm
from fdpsim.grouping import binarize, make_groups
from fdpsim.instance import INF, generate_feasible, validate
from fdpsim.metric import RootedTree, ceil_div, conditional_counts, cost, edge_counts, mst
from fdpsim.oracle import counting_tsp_lower_bound, optimal_max_flow
from fdpsim.sim import Doubling, run_online
from fdpsim.speeding import NoFreeVehicle, SpeedConfig, SpeedingAlgorithm
from fdpsim.tours import exact_cvrp

F_TARGET = 10
N_INSTANCES = 200


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def _feasible(seed, k):
    rng = random.Random(10_000 * k + seed)
    return generate_feasible(
        seed, n_vertices=rng.randint(5, 40), k=k, horizon=rng.randint(40, 150),
        F_target=F_TARGET, max_requests=60, max_stops=rng.randint(1, 5),
    )[0]


@lru_cache(maxsize=None)
def tree_instances(k):
    return tuple(_feasible(seed, k) for seed in range(N_INSTANCES))


@lru_cache(maxsize=None)
def oracle_instances():
    out = []
    seed = 0
    while len(out) < 100:
        rng = random.Random(seed)
        inst, _ = generate_feasible(
            seed, n_vertices=rng.randint(3, 9), k=1, horizon=rng.randint(5, 40), F_target=rng.randint(4, 12),
            max_requests=rng.randint(1, 6), max_stops=rng.randint(1, 3),
        )
        seed += 1
        if inst.requests:  # ratios need a positive optimum
            out.append((inst, optimal_max_flow(inst).max_flow))
    return tuple(out)


def _check_tree_runs(instances, bound):
    worst, violations = Fraction(0), 0
    elapsed = 0.0
    for inst in instances:
        assert len(inst.graph.vertices) <= 40 and len(inst.requests) <= 60
        t0 = time.perf_counter()
        sch = run_tree_algorithm(inst, F_TARGET)
        rep = validate(inst, sch)
        elapsed += time.perf_counter() - t0
        worst = max(worst, Fraction(rep.max_flow) / F_TARGET)
        violations += rep.max_flow > bound
    return worst, violations, elapsed


def test_c01_tree_single_vehicle(report):
    worst, bad, secs = _check_tree_runs(tree_instances(1), 8 * F_TARGET)
    ok = bad == 0 and secs < 10
    report(1, ok, f"{N_INSTANCES} instances, worst max flow {float(worst):.2f}F (bound 8F), "
                  f"{bad} violations, {secs:.2f}s (limit 10s)")


def test_c02_tree_multi_vehicle(report):
    parts, total_bad = [], 0
    for k in (2, 3, 4):
        worst, bad, secs = _check_tree_runs(tree_instances(k), 24 * F_TARGET)
        total_bad += bad
        parts.append(f"k={k}: worst {float(worst):.2f}F in {secs:.2f}s")
    report(2, total_bad == 0, f"{N_INSTANCES} instances per k, bound 24F, {total_bad} violations; " + "; ".join(parts))


def _odd_windows(values):
    """Yield (a, b, sum over odd i in [a, b]) for a dict odd i -> value."""
    idx = sorted(values)
    for x, a in enumerate(idx):
        s = 0
        for b in idx[x:]:
            s += values[b]
            yield a, b, s


def test_c03_backlog_bounds(report):
    F = F_TARGET
    checked = failures = 0
    for inst in tree_instances(1):
        t = inst.tree()
        bundles, _, _ = bundles_with_splits(t, inst.requests, F, "single")
        twice_mst = {b.index: 2 * mst(t, {inst.requests[i].vertex for i in b.requests}) for b in bundles}
        for a, b, s in _odd_windows(twice_mst):
            checked += 1
            failures += s > (b - a + 4) * F
    for k in (1, 2, 3, 4):
        for inst in tree_instances(k):
            t = inst.tree()
            bundles, splits, buckets = bundles_with_splits(t, inst.requests, F, "multi")
            vs = lambda ids: {inst.requests[i].vertex for i in ids}
            costs = {b.index: cost(t, vs(b.requests), 3 * F) for b in bundles}
            for a, b, s in _odd_windows(costs):
                checked += 1
                failures += s > k * (b - a + 4) * F
            # per-edge step of the chain on every emitted bundle
            for bd in bundles:
                i = bd.index
                R_i = vs(buckets.get(i))
                right_prev = vs(splits[i - 1][1]) if i - 1 in splits else set()
                left_next = vs(splits[i + 1][0]) if i + 1 in splits else set()
                lhs = _sum_counts(edge_counts(t, R_i, F), conditional_counts(t, right_prev, R_i, F),
                                  conditional_counts(t, left_next, R_i, F))
                for v, c in edge_counts(t, vs(bd.requests), 3 * F).items():
                    checked += 1
                    failures += lhs.get(v, 0) < c
    report(3, failures == 0, f"{checked} window/edge comparisons on the criterion-1/2 instances, {failures} failures")


def _sum_counts(*dicts):
    out = {}
    for d in dicts:
        for v, c in d.items():
            out[v] = out.get(v, 0) + c
    return out


def test_c04_grouping(report):
    F = F_TARGET
    groups_seen = failures = 0
    for k in (2, 3, 4):
        for inst in tree_instances(k):
            t = inst.tree()
            bt = binarize(t)
            bundles, _, _ = bundles_with_splits(t, inst.requests, F, "multi")
            for b in bundles:
                if not b.requests:
                    continue
                groups = make_groups(bt, inst.requests, b.requests, F, check=True)
                groups_seen += len(groups)
                members = sorted(i for g in groups for i in g.requests)
                failures += members != sorted(b.requests)
                for g in groups:
                    failures += g.mst > 8 * F
                    failures += g.mst != mst(t, {inst.requests[i].vertex for i in g.requests})
                total = 2 * sum(g.mst for g in groups)
                failures += total > cost(t, {inst.requests[i].vertex for i in b.requests}, 3 * F)
    report(4, failures == 0, f"{groups_seen} groups checked (partition, 8F cap, cost domination), {failures} failures")


def _stream(rng):
    k = rng.randint(1, 5)
    P = rng.randint(1, 12)
    n = rng.randint(1, 40)
    horizon = rng.randint(0, 60)
    jobs = sorted((rng.randint(0, horizon), rng.randint(1, P)) for _ in range(n))
    P = max(size for _, size in jobs)
    releases = sorted({r for r, _ in jobs})
    D = 0
    for x, a in enumerate(releases):
        for b in releases[x:]:
            total = sum(size for r, size in jobs if a <= r <= b)
            D = max(D, total - k * (b - a))
    return k, P, D, [Job(r, size) for r, size in jobs]


def test_c05_fifo(report):
    rng = random.Random(5)
    failures, tightest = 0, Fraction(0)
    for _ in range(1000):
        k, P, D, jobs = _stream(rng)
        out = fifo_schedule(jobs, k)
        worst = max(end - j.release for j, (_, _, end) in zip(jobs, out))
        bound = Fraction(D, k) + Fraction(2 * (k - 1) * P, k)
        failures += worst > bound
        tightest = max(tightest, Fraction(worst) / bound)
    report(5, failures == 0, f"1000 streams, {failures} over D/k + 2(k-1)P/k, largest flow/bound {float(tightest):.3f}")


def test_c06_oracle_ratio(report):
    t0 = time.perf_counter()
    insts = oracle_instances()
    worst, failures = Fraction(0), 0
    for inst, opt in insts:
        rep = validate(inst, run_tree_algorithm(inst, opt))
        worst = max(worst, Fraction(rep.max_flow) / opt)
        failures += rep.max_flow > 8 * opt
    secs = time.perf_counter() - t0
    report(6, failures == 0 and secs < 60,
           f"{len(insts)} instances, worst tree/OPT {float(worst):.2f} (bound 8), {failures} failures, {secs:.1f}s")


def test_c07_speeding(report):
    F = F_TARGET
    runs = failures = 0
    details = []
    for eps in (Fraction(1, 2), Fraction(1, 4)):
        cfg = SpeedConfig(eps, "exact")
        worst = Fraction(0)
        for seed in range(40):
            rng = random.Random(seed)
            k = rng.randint(1, 3)
            c = rng.choice([1, 2, 3, INF])
            inst, _ = generate_feasible(seed, n_vertices=rng.randint(4, 12), k=k, capacity=c, horizon=120,
                                        F_target=F, max_requests=12, tree=False, extra_edges=rng.randint(0, 4))
            algo = SpeedingAlgorithm(F, cfg)
            runs += 1
            try:
                res = run_online(inst, algo, speed=cfg.speed)
            except NoFreeVehicle:
                failures += 1
                continue
            worst = max(worst, Fraction(res.report.max_flow) / F)
            failures += res.report.max_flow > cfg.flow_bound(F)
            failures += any(pieces > k for _, _, pieces, _ in algo.windows)
        details.append(f"eps={eps}: worst {float(worst):.2f}F vs {cfg.flow_bound(1)}F")
    report(7, failures == 0, f"{runs} runs, {failures} failures; " + "; ".join(details))


def test_c08_window_cvrp_bound(report):
    checked = failures = 0
    for seed in range(60):
        rng = random.Random(seed)
        k = rng.randint(1, 3)
        c = rng.choice([1, 2, INF])
        inst, _ = generate_feasible(seed, n_vertices=rng.randint(4, 9), k=k, capacity=c, horizon=30,
                                    F_target=rng.randint(4, 10), max_requests=6, tree=bool(seed % 2), extra_edges=2)
        F = optimal_max_flow(inst).max_flow
        times = sorted({r.arrival for r in inst.requests})
        for x, a in enumerate(times):
            for b in times[x:]:
                pts = {i: r.vertex for i, r in enumerate(inst.requests) if a <= r.arrival <= b}
                length = exact_cvrp(inst.graph, pts, c).length
                checked += 1
                failures += length > k * (b - a + 2 * F)
    report(8, failures == 0, f"{checked} windows on 60 oracle-sized instances (F = OPT), {failures} over k(b-a+2F)")


def test_c09_base_certificates(report):
    failures, rows = 0, []
    for p in range(2, 7):
        walk, length = adv.certify_base_tour(p)
        inst = adv.base_instance(p, "L")
        bound = Fraction(counting_tsp_lower_bound(inst.graph, {r.vertex for r in inst.requests}), adv.SCALE)
        failures += not (length == bound == 7 * (2 * p + 1))
        rows.append(f"p={p}:{length}")
    report(9, failures == 0, "tour length = counting bound = 7(2p+1): " + ", ".join(rows))


def test_c10_capacity_adversary(report):
    ref_worst, failures, rows = 0, 0, []
    for p in range(2, 9):
        for choices in (["v2"] * p, ["v3"] * p, [("v2", "v3")[h % 2] for h in range(p)]):
            inst = adv.capacity_instance(p, choices)
            ref_worst = max(ref_worst, validate(inst, adv.capacity_reference_schedule(inst)).max_flow)
    failures += ref_worst > 16
    for p in range(4, 9):
        a, skel = adv.capacity_adversary(p)
        flow = run_online(skel, GreedyBatching(), adversary=a).report.max_flow
        failures += flow < p
        rows.append(f"p={p}:{flow}")
    report(10, failures == 0, f"reference max flow {ref_worst} (bound 16); greedy c=2 max flow " + ", ".join(rows))


def test_c11_doubling(report):
    beta = 8
    worst_ratio, worst_F, failures = Fraction(0), Fraction(0), 0
    for inst, opt in oracle_instances():
        res = run_online(inst, Doubling(TreeAlgorithm, beta))
        ratio = Fraction(res.report.max_flow) / opt
        Fr = Fraction(res.algorithm.F) / opt
        worst_ratio, worst_F = max(worst_ratio, ratio), max(worst_F, Fr)
        failures += res.report.max_flow > 8 * beta * opt or res.algorithm.F > 2 * opt
    report(11, failures == 0, f"{len(oracle_instances())} instances, beta={beta}: worst max flow "
                              f"{float(worst_ratio):.2f}F* (bound 64F*), worst final F {float(worst_F):.2f}F* (bound 2F*)")


# -- criterion 12: inequality suites ---------------------------------------------------

SAMPLES = 10_000


def _random_case(rng):
    n = rng.randint(2, 12)
    edges = [(rng.randrange(v), v, rng.randint(1, 6)) for v in range(1, n)]
    t = RootedTree(list(range(n)), edges, 0)
    sets = [{v for v in range(1, n) if rng.random() < rng.choice((0.15, 0.35, 0.6))} for _ in range(4)]
    F = Fraction(rng.randint(1, 12), rng.choice((1, 1, 2, 3)))
    return t, sets, F


def _em(t, X):
    """mst_e(X) for every edge (by child vertex) plus the depot; zero where V_e misses X."""
    m = t.edge_msts(X)
    m[t.depot] = mst(t, X)
    return m


def _c(t, X, F):
    return {v: ceil_div(m, F) for v, m in t.edge_msts(X).items()}


def _cc(t, X, Xp, F):
    return conditional_counts(t, X, Xp, F)


def _property_checks(t, s, F):
    X1, X2, X3, X4 = s
    U = lambda *xs: set().union(*xs)
    verts = [v for v in t.vertices]
    e = {}
    for key, X in {"1": X1, "2": X2, "12": U(X1, X2), "23": U(X2, X3), "34": U(X3, X4),
                   "123": U(X1, X2, X3), "234": U(X2, X3, X4)}.items():
        e[key] = _em(t, X)
    g = lambda key, v: e[key].get(v, 0)
    out = {}
    out["mst_subadditive"] = all(g("12", v) <= g("1", v) + g("2", v) for v in verts)
    out["mst_submodular"] = all(g("2", v) + g("123", v) <= g("12", v) + g("23", v) for v in verts)
    out["mst_chain_of_four"] = all(g("123", v) + g("234", v) <= g("12", v) + g("23", v) + g("34", v) for v in verts)
    out["cost_conditional_split"] = cost_cond(t, U(X1, X2), X3, F) <= cost(t, X1, F) + cost_cond(t, X2, X3, F)
    out["cost_exchange"] = (cost(t, U(X2, X3), F) + cost_cond(t, X1, U(X2, X3), F) + cost_cond(t, X4, U(X2, X3), F)
                  <= cost(t, U(X1, X2), F) + cost(t, U(X3, X4), F))
    c1, c12, c23, c34 = _c(t, X1, F), _c(t, U(X1, X2), F), _c(t, U(X2, X3), F), _c(t, U(X3, X4), F)
    l7 = _cc(t, U(X1, X2), X3, F)
    r7 = _cc(t, X2, X3, F)
    a8, b8 = _cc(t, X1, U(X2, X3), F), _cc(t, X4, U(X2, X3), F)
    edges = [v for v in verts if v != t.depot]
    z = lambda d, v: d.get(v, 0)
    out["count_conditional_split"] = all(z(l7, v) <= z(c1, v) + z(r7, v) for v in edges)
    out["count_exchange"] = all(z(c23, v) + z(a8, v) + z(b8, v) <= z(c12, v) + z(c34, v) for v in edges)
    # bundle step: X1 = right part of the previous interval, X2 = current, X3 = left part of the next
    c2 = _c(t, X2, F)
    l10, r10 = _cc(t, X1, X2, F), _cc(t, X3, X2, F)
    big = {v: ceil_div(m, 3 * F) for v, m in t.edge_msts(U(X1, X2, X3)).items()}
    out["bundle_count_cover"] = all(z(c2, v) + z(l10, v) + z(r10, v) >= z(big, v) for v in edges)
    return out


def cost_cond(t, X, Xp, F):
    return 2 * sum(c * t.parent_len[v] for v, c in conditional_counts(t, X, Xp, F).items())


def test_c12_inequality_suites(report):
    rng = random.Random(12)
    fails = {}
    for _ in range(SAMPLES):
        t, sets, F = _random_case(rng)
        for name, ok in _property_checks(t, sets, F).items():
            fails[name] = fails.get(name, 0) + (not ok)
    total = sum(fails.values())
    detail = ", ".join(f"{k}:{v}" for k, v in sorted(fails.items()))
    report(12, total == 0, f"{SAMPLES} samples per inequality, failures {detail}")
