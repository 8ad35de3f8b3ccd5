"""Command-line front end: generate, run, batch, oracle, verify, report, bundle."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import adversary as adv
from .bundling import bundles_with_splits
from .dispatch import TreeAlgorithm, UnsupportedMode
from .grouping import binarize, make_groups
from .instance import (
    INF,
    DocumentError,
    GenerationError,
    ScheduleError,
    _num_out,
    dumps,
    generate_feasible,
    loads,
    parse_instance,
    parse_schedule,
    report_to_dict,
    schedule_to_dict,
    serialize_instance,
    serialize_schedule,
    validate,
)
from .metric import GraphError, RootedTree
from .oracle import OracleLimit, optimal_max_flow
from .sim import Doubling, run_online
from .speeding import SpeedConfig, SpeedingAlgorithm
from .baselines import GreedyBatching

ALGOS = ("tree", "speeding", "greedy", "doubling-tree")
CSV_COLUMNS = ["instance", "algo", "k", "c", "F", "max_flow", "bound", "pass"]


class UsageError(Exception):
    pass


def _frac(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _num(x):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else x


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# -- algorithms -------------------------------------------------------------------


def make_algorithm(config: dict, k: int):
    """(algorithm, speed, flow bound or None) from a plain config dict."""
    algo = config["algo"]
    F = config.get("F")
    if algo == "tree":
        if F is None:
            raise UsageError("--F is required for the tree algorithm")
        return TreeAlgorithm(F), 1, (8 if k == 1 else 24) * F
    if algo == "speeding":
        if F is None:
            raise UsageError("--F is required for the speeding algorithm")
        cfg = SpeedConfig(Fraction(config.get("eps", "1/2")), config.get("mode", "exact"))
        return SpeedingAlgorithm(F, cfg), cfg.speed, cfg.flow_bound(F)
    if algo == "greedy":
        return GreedyBatching(), 1, None
    if algo == "doubling-tree":
        beta = config.get("beta") or (8 if k == 1 else 24)
        bound = 8 * beta * F if F is not None else None
        return Doubling(lambda f: TreeAlgorithm(f), beta), 1, bound
    raise UsageError(f"unknown algorithm {algo!r}")


def _load_source(path):
    """Instance, or (adversary, skeleton) for an adversary descriptor."""
    doc = loads(_read(path))
    if isinstance(doc, dict) and "adversary" in doc:
        if doc["adversary"] != "capacity":
            raise DocumentError(f"unknown adversary {doc['adversary']!r}")
        a, skel = adv.capacity_adversary(int(doc["p"]))
        return skel, a
    return parse_instance(json.dumps(doc)), None


def execute(path: str, config: dict) -> dict:
    """Run one configuration on one instance file and summarise it (used by run and batch)."""
    inst, source = _load_source(path)
    algo, speed, bound = make_algorithm(config, inst.k)
    res = run_online(inst, algo, speed=speed, adversary=source)
    row = {
        "instance": path,
        "algo": config["algo"],
        "k": inst.k,
        "c": _num_out(inst.capacity),
        "F": _num_out(config.get("F")),
        "max_flow": _num_out(res.report.max_flow),
        "bound": _num_out(bound),
        "pass": bound is None or res.report.max_flow <= bound,
        "trace_hash": res.trace_hash(),
    }
    return {"row": row, "result": res}


def _batch_job(args):
    path, config, out_dir = args
    try:
        out = execute(path, config)
    except (UsageError, DocumentError, GraphError, UnsupportedMode, ValueError, RuntimeError) as exc:
        return {"instance": path, "algo": config["algo"], "F": _num_out(config.get("F")), "pass": False,
                "error": f"{type(exc).__name__}: {exc}"}
    res = out["result"]
    stem = os.path.splitext(os.path.basename(path))[0]
    sched_path = os.path.join(out_dir, f"{stem}.{config['algo']}.schedule.json")
    with open(sched_path, "w") as fh:
        fh.write(serialize_schedule(res.schedule) + "\n")
    row = dict(out["row"], schedule=sched_path)
    return row


# -- subcommands ------------------------------------------------------------------


def cmd_gen(a) -> int:
    kind = a.kind
    if kind == "feasible":
        inst, witness = generate_feasible(
            a.seed, n_vertices=a.n, k=a.k, capacity=a.c, horizon=a.horizon, F_target=a.F_target,
            max_requests=a.requests, tree=not a.general, extra_edges=a.extra_edges,
        )
        if a.witness:
            _write(a.witness, serialize_schedule(witness))
        _write(a.output, serialize_instance(inst))
        return 0
    if kind == "capacity":
        if a.p is None:
            raise UsageError("--p is required")
        adv.capacity_adversary(a.p)  # validates p
        _write(a.output, dumps({"adversary": "capacity", "p": a.p}))
        return 0
    needs_p = kind in ("base", "legs")
    if needs_p and a.p is None:
        raise UsageError("--p is required")
    if kind == "speeding" and a.eps is None:
        raise UsageError("--eps is required")
    if kind in ("hamiltonian", "copies") and a.nbar is None:
        raise UsageError("--nbar is required")
    inst = adv.gen_lower_bound(kind, p=a.p, lean=a.lean, eps=a.eps, nbar=a.nbar)
    _write(a.output, serialize_instance(inst))
    return 0


def _config_from(a) -> dict:
    config = {"algo": a.algo}
    if a.F is not None:
        config["F"] = _num(a.F)
    if a.algo == "speeding":
        config["eps"] = str(a.eps)
        config["mode"] = a.mode
    if a.beta is not None:
        config["beta"] = _num(a.beta)
    return config


def cmd_run(a) -> int:
    config = _config_from(a)
    out = execute(a.instance, config)
    res = out["result"]
    if a.output:
        _write(a.output, serialize_schedule(res.schedule))
    if a.trace:
        _write(a.trace, "\n".join(res.trace_lines()))
    if a.final_instance:
        _write(a.final_instance, serialize_instance(res.instance))
    summary = dict(out["row"], report=report_to_dict(res.report))
    _write(None, dumps(summary))
    return 0


def cmd_batch(a) -> int:
    config = _config_from(a)
    os.makedirs(a.out_dir, exist_ok=True)
    jobs = [(p, config, a.out_dir) for p in a.instances]
    if a.workers > 1:
        with ProcessPoolExecutor(max_workers=a.workers) as ex:
            rows = list(ex.map(_batch_job, jobs))
    else:
        rows = [_batch_job(j) for j in jobs]
    manifest = {"command": "batch", "seed": a.seed, "config": config, "runs": rows}
    with open(os.path.join(a.out_dir, "manifest.json"), "w") as fh:
        fh.write(dumps(manifest) + "\n")
    with open(os.path.join(a.out_dir, "report.csv"), "w", newline="") as fh:
        _csv(rows, fh)
    for r in rows:
        if "error" in r:
            print(f"{r['instance']}: {r['error']}", file=sys.stderr)
    failed = [r for r in rows if not r["pass"]]
    print(f"{len(rows)} runs, {len(failed)} over their bound; manifest in {a.out_dir}")
    return 1 if failed else 0


def _csv(rows, fh):
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in CSV_COLUMNS})


def cmd_oracle(a) -> int:
    inst = parse_instance(_read(a.instance))
    res = optimal_max_flow(inst, a.limit)
    _write(a.output, dumps({"max_flow": _num_out(res.max_flow), "witness": schedule_to_dict(res.witness)}))
    return 0


def cmd_verify(a) -> int:
    inst = parse_instance(_read(a.instance))
    sch = parse_schedule(_read(a.schedule))
    speed = a.speed if a.speed is not None else 1
    try:
        rep = validate(inst, sch, speed)
    except ScheduleError as exc:
        print(f"INVALID [{exc.kind}]: {exc}")
        return 1
    bound = _num(a.bound) if a.bound is not None else None
    ok = bound is None or rep.max_flow <= bound
    print(dumps({"max_flow": _num_out(rep.max_flow), "bound": _num_out(bound), "pass": ok}))
    return 0 if ok else 1


def cmd_report(a) -> int:
    rows = []
    for path in a.manifests:
        doc = loads(_read(path))
        rows.extend(doc.get("runs", []))
    if a.csv:
        buf = io.StringIO()
        _csv(rows, buf)
        sys.stdout.write(buf.getvalue())
        return 0
    header = ["instance", "algo", "k", "c", "F", "max_flow", "bound", "ratio", "pass"]
    table = []
    for r in rows:
        ratio = ""
        if r.get("F") not in (None, "", 0) and r.get("max_flow") is not None:
            ratio = f"{float(Fraction(str(r['max_flow'])) / Fraction(str(r['F']))):.3f}"
        cell = lambda h: ratio if h == "ratio" else ("" if r.get(h) is None else str(r[h]))
        table.append([cell(h) for h in header])
    widths = [max(len(h), *(len(row[i]) for row in table)) if table else len(h) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in table:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return 0


def cmd_bundle(a) -> int:
    inst = parse_instance(_read(a.instance))
    tree = RootedTree.from_graph(inst.graph)
    F = _num(a.F)
    mode = a.mode or ("single" if inst.k == 1 else "multi")
    bundles, splits, _ = bundles_with_splits(tree, inst.requests, F, mode)
    bt = binarize(tree) if a.groups else None
    out = []
    for b in bundles:
        if not b.requests:
            continue
        entry = {"index": b.index, "release": _num_out(b.release), "requests": b.requests}
        if bt is not None:
            entry["groups"] = [
                {"requests": g.requests, "mst": _num_out(g.mst), "anchor": bt.to_original(g.anchor)}
                for g in make_groups(bt, inst.requests, b.requests, F)
            ]
        out.append(entry)
    doc = {"F": _num_out(F), "mode": mode, "bundles": out,
           "splits": {str(i): {"left": l, "right": r} for i, (l, r) in sorted(splits.items())}}
    _write(a.output, dumps(doc))
    return 0


# -- parser -----------------------------------------------------------------------


def _capacity(text):
    if text in ("inf", "INF", "infinity"):
        return INF
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"capacity must be a positive integer or inf, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("capacity must be at least 1")
    return v


def _algo_flags(p):
    p.add_argument("--algo", choices=ALGOS, default="tree")
    p.add_argument("--F", type=_frac, help="upper bound on the optimal max flow")
    p.add_argument("--eps", type=_frac, default=Fraction(1, 2))
    p.add_argument("--mode", choices=("exact", "tsp2", "cvrp"), default="exact")
    p.add_argument("--beta", type=_frac, help="per-F ratio for the doubling wrapper")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdpsim", description="Online delivery dispatch with max flow time objective")
    ap.add_argument("--seed", type=int, default=0, help="the single source of randomness")
    # --seed is accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance")
    g.add_argument("--kind", required=True,
                   choices=("feasible", "base", "legs", "speeding", "hamiltonian", "copies", "capacity"))
    g.add_argument("--p", type=int)
    g.add_argument("--lean", help="L, R, or a per-phase string such as LRRL")
    g.add_argument("--eps", type=_frac)
    g.add_argument("--nbar", type=int)
    g.add_argument("--n", type=int, default=12, help="vertices (feasible)")
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--c", type=_capacity, default=INF)
    g.add_argument("--horizon", type=int, default=100)
    g.add_argument("--F-target", dest="F_target", type=int, default=10)
    g.add_argument("--requests", type=int, default=40)
    g.add_argument("--general", action="store_true", help="general graph instead of a tree")
    g.add_argument("--extra-edges", dest="extra_edges", type=int, default=3)
    g.add_argument("--witness", help="also write the witness schedule here")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", parents=[common], help="simulate an online algorithm")
    r.add_argument("instance", help="instance document or adversary descriptor")
    _algo_flags(r)
    r.add_argument("-o", "--output", help="schedule document path")
    r.add_argument("--trace", help="line-delimited event trace path")
    r.add_argument("--final-instance", dest="final_instance", help="write the realised instance (adaptive runs)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", parents=[common], help="run one configuration on many instances")
    b.add_argument("instances", nargs="+")
    _algo_flags(b)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out-dir", dest="out_dir", required=True)
    b.set_defaults(func=cmd_batch)

    o = sub.add_parser("oracle", parents=[common], help="exact optimum for a tiny instance")
    o.add_argument("instance")
    o.add_argument("--limit", type=int, default=6)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", parents=[common], help="validate a schedule and check a flow bound")
    v.add_argument("instance")
    v.add_argument("schedule")
    v.add_argument("--bound", type=_frac)
    v.add_argument("--speed", type=_frac)
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", parents=[common], help="tabulate batch manifests")
    rp.add_argument("manifests", nargs="+")
    rp.add_argument("--csv", action="store_true")
    rp.set_defaults(func=cmd_report)

    bd = sub.add_parser("bundle", parents=[common], help="show bundles (and groups) for an instance")
    bd.add_argument("instance")
    bd.add_argument("--F", type=_frac, required=True)
    bd.add_argument("--mode", choices=("single", "multi"))
    bd.add_argument("--groups", action="store_true")
    bd.add_argument("--dump", action="store_true", help="write the bundle document (default action)")
    bd.add_argument("-o", "--output")
    bd.set_defaults(func=cmd_bundle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return a.func(a)
    except (UsageError, DocumentError, GenerationError, OracleLimit, GraphError, UnsupportedMode) as exc:
        print(f"fdpsim {a.cmd}: {exc}", file=sys.stderr)
        return 2
    except ScheduleError as exc:
        print(f"fdpsim {a.cmd}: invalid schedule [{exc.kind}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
