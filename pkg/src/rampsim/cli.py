"""Command-line driver: rampsim <command> [options]."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import asdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import (SYSTEM_SCHEMA, ConfigError, Schema, data_text, float_list, int_range, load_config,
                     load_node_spec, parse_config, parse_int, parse_size, resolve_path, size_list, str_list,
                     topology_from_section)
from .engine import CollectiveOp, PlanError, plan_collective
from .estimator import CSV_FIELDS, EstimatorOptions, breakdown_csv, estimate
from .params import InvalidParams, RampParams, SubnetKind, derived_quantities
from .topologies import TopologyError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_INFEASIBLE = 0, 2, 3, 4


class InvariantViolation(RuntimeError):
    pass


class Infeasible(RuntimeError):
    pass


# ---------------------------------------------------------------- helpers

def _emit(text: str, a) -> None:
    """Write to ``a.output`` (stdout by default); with ``a.golden`` also compare byte for byte."""
    out = getattr(a, "output", None)
    golden = getattr(a, "golden", None)
    if golden:
        try:
            want = Path(golden).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read golden file: {exc.strerror}", golden) from None
        if want != text:
            a_lines, b_lines = want.splitlines(), text.splitlines()
            first = next((i for i, (u, v) in enumerate(zip(a_lines, b_lines)) if u != v),
                         min(len(a_lines), len(b_lines)))
            raise InvariantViolation(f"output differs from {golden} at line {first + 1}")
    if out and out != "-":
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


def _rows_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _kv_text(rows: list[tuple[str, str]]) -> str:
    return "".join(f"{k}\t{v}\n" for k, v in rows)


def _params(a) -> RampParams:
    return RampParams(a.x, a.J, a.lam, a.b, a.B, SubnetKind.parse(a.subnet))


def _add_params(p: argparse.ArgumentParser, x=3, J=3, lam=6) -> None:
    g = p.add_argument_group("architecture")
    g.add_argument("--x", type=int, default=x, help="communication groups")
    g.add_argument("--J", type=int, default=J, help="racks per group")
    g.add_argument("--lambda", dest="lam", type=int, default=lam, help="wavelengths (nodes per rack)")
    g.add_argument("--b", type=int, default=1, help="transceivers per group")
    g.add_argument("--B", type=parse_int, default=400_000_000_000, help="line rate, bit/s")
    g.add_argument("--subnet", default="bs", help="bs, rb or rs")


def _add_out(p: argparse.ArgumentParser, formats=("csv", "json")) -> None:
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("-o", "--output", help="write here instead of stdout")


# ---------------------------------------------------------------- plan / schedule

def cmd_plan(a) -> int:
    p = _params(a)
    plan = plan_collective(a.op, a.msg, p, variant=a.variant, elem_bytes=a.elem_bytes)
    if a.detail:
        _emit(plan.to_text(), a)
        return EXIT_OK
    rows = plan.to_csv_rows()
    if a.format == "json":
        _emit(_json({"op": plan.op.value, "params": asdict(derived_quantities(p)), "msg_bytes": plan.msg_bytes,
                     "variant": plan.variant, "steps": rows}), a)
    else:
        _emit(_rows_csv(rows, list(rows[0]) if rows else ["pos"]), a)
    return EXIT_OK


def cmd_schedule(a) -> int:
    from .transcoder import build_schedule, verify_contention

    p = _params(a)
    plan = plan_collective(a.op, a.msg, p, variant=a.variant, elem_bytes=a.elem_bytes)
    s = build_schedule(plan, p, slot_ns=a.slot_ns, reconfig_ns=a.reconfig_ns)
    _emit(s.to_csv(), a)
    rep = verify_contention(s)
    if not rep.ok:
        raise InvariantViolation(f"{len(rep.violations)} contention violations, first: {rep.violations[0]}")
    return EXIT_OK


# ---------------------------------------------------------------- verify

def _verify_one(args) -> tuple[str, bool, str]:
    from .funcsim import check
    from .transcoder import build_schedule, verify_contention

    op, x, J, lam, variant = args
    label = f"{op.value} x={x} J={J} lambda={lam} variant={variant}"
    for n, kind in enumerate(SubnetKind):
        p = RampParams(x, J, lam, subnet_kind=kind)
        plan = plan_collective(op, p.nodes * 2 * 3, p, variant=variant)
        s = build_schedule(plan, p)
        if n == 0:  # the data movement does not depend on the subnet layout
            r = check(s)
            if not r.ok:
                return label, False, r.report.splitlines()[0] if r.report else "oracle mismatch"
        rep = verify_contention(s, kind)
        if not rep.ok:
            return label, False, f"contention on {kind.value}: {rep.violations[0]}"
    return label, True, ""


def _verify_baseline(args) -> tuple[str, bool, str]:
    from .baselines import hierarchical_plan, ring_plan, torus_plan
    from .funcsim import check

    op, kind, dims = args
    N = 1
    for d in dims:
        N *= d
    m = N * N * 2
    if kind == "ring":
        sp = ring_plan(op, N, m)
    elif kind == "hier":
        sp = hierarchical_plan(op, list(dims), m)
    else:
        sp = torus_plan(op, dims[1], dims[0], m)
    r = check(sp)
    return f"{op.value} {kind} dims={list(dims)}", r.ok, (r.report.splitlines()[0] if not r.ok and r.report else "")


def verify_cases(max_x: int, ops: list[CollectiveOp], single: RampParams | None = None) -> list[tuple]:
    if single is not None:
        return [(op, single.x, single.J, single.lam, v) for op in ops for v in (1, 2)]
    out = []
    for x in range(2, max_x + 1):
        for J in range(2, x + 1):
            for lam in (x, 2 * x, 4 * x):
                for v in (1, 2):
                    out += [(op, x, J, lam, v) for op in ops]
    return out


def cmd_verify(a) -> int:
    ops = [CollectiveOp.parse(o) for o in a.op] if a.op else list(CollectiveOp)
    single = None if a.all else _params(a)
    cases = verify_cases(a.max_x, ops, single)
    jobs = [(_verify_one, c) for c in cases]
    if a.baselines:
        for op in ops:
            for kind, dims in (("ring", (6,)), ("hier", (2, 3, 2)), ("torus", (3, 2))):
                jobs.append((_verify_baseline, (op, kind, dims)))
    results = _run_pool([j for j in jobs], a.jobs)
    bad = 0
    lines = []
    for label, ok, why in results:
        lines.append(f"{'PASS' if ok else 'FAIL'}\t{label}" + (f"\t{why}" if why else ""))
        bad += not ok
    lines.append(f"# {len(results) - bad}/{len(results)} passed")
    _emit("\n".join(lines) + "\n", a)
    if bad:
        raise InvariantViolation(f"{bad} verification cases failed")
    return EXIT_OK


def _call(job):
    fn, arg = job
    return fn(arg)


def _run_pool(jobs: list, workers: int) -> list:
    """Map in order; results are merged in submission order."""
    if workers <= 1 or len(jobs) < 2:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_call, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# ---------------------------------------------------------------- systems / estimate / sweep

def _system_sections(extra: str | None) -> tuple[dict, str]:
    text, source = data_text("systems.ini")
    sections = parse_config(text, SYSTEM_SCHEMA, source).sections
    if extra:
        path = resolve_path(extra)
        cfg = load_config(path, SYSTEM_SCHEMA)
        sections = {**sections, **cfg.sections}
        source = str(path)
    return sections, source


def with_node_bandwidth(sect: dict, bw: int) -> dict:
    """Same system at node bandwidth ``bw`` bit/s with no oversubscription."""
    s = dict(sect)
    kind = s["kind"].strip().lower()
    if kind == "ramp":
        s["line_rate"] = bw // (s.get("x", 32) * s.get("b", 1))
    elif kind in ("fat-tree", "fattree", "fat_tree"):
        s["intra_rate"] = s["inter_rate"] = bw
        s.pop("oversub", None)
    elif kind.startswith("torus"):
        s["node_rate"] = bw
    else:
        s["link_rate"] = bw
    return s


DEFAULT_SYSTEM = {"ramp": "ramp", "ring": "fat-tree", "hier": "fat-tree", "torus": "torus"}


def _parse_strategy(token: str) -> tuple[str, str]:
    name, _, system = token.partition("@")
    name = name.strip().lower()
    if name not in DEFAULT_SYSTEM and name != "best":
        raise ConfigError(f"unknown strategy {name!r}")
    return name, (system.strip() or DEFAULT_SYSTEM.get(name, "fat-tree"))


def _estimate_point(args) -> dict:
    (scen, system, sect, strategy, op, n, m, rec, bw, spec_name, sources) = args
    spec = load_node_spec(spec_name)
    s = with_node_bandwidth(sect, bw) if bw else sect
    t = topology_from_section(s, sources, system)
    r = estimate(op, m, t, n, spec, strategy, EstimatorOptions(),
                 reconfig_ns=rec if rec is not None else None)
    row = r.row(scen)
    row.update({"system": f"{system}/{strategy if strategy != 'best' else r.system.split('/')[-1]}",
                "reconfig_ns": "" if rec is None else f"{rec:g}", "bandwidth": "" if not bw else str(bw)})
    return row


SWEEP_FIELDS = CSV_FIELDS[:2] + ["bandwidth", "reconfig_ns"] + CSV_FIELDS[2:]

SCENARIO_SCHEMA: Schema = {
    "scenario": {"name": str, "op": str_list, "msg": size_list, "strategies": str_list, "n": int_range,
                 "reconfig_ns": float_list, "bandwidth": size_list, "spec": str, "output": str,
                 "seed": parse_int, "jobs": parse_int, "format": str},
    "system.*": SYSTEM_SCHEMA["*"],
}


def _load_scenario(path: str | None) -> tuple[dict, dict, str]:
    if not path:
        return {}, {}, ""
    cfg = load_config(resolve_path(path), SCENARIO_SCHEMA)
    systems = {k.split(".", 1)[1]: v for k, v in cfg.sections.items() if k.startswith("system.")}
    return cfg.get("scenario"), systems, cfg.source


def cmd_sweep(a) -> int:
    scen, scen_systems, scen_src = _load_scenario(a.scenario)
    sections, sources = _system_sections(a.systems)
    sections.update(scen_systems)
    ops = [CollectiveOp.parse(o) for o in (a.op or scen.get("op") or ["all-reduce"])]
    msgs = a.msg or scen.get("msg") or [10**9]
    strategies = [_parse_strategy(s) for s in (a.strategies or scen.get("strategies") or ["ramp", "hier"])]
    ns = a.n or scen.get("n") or [65536]
    recs = a.reconfig_ns or scen.get("reconfig_ns") or [None]
    bws = a.bandwidth or scen.get("bandwidth") or [0]
    spec = a.spec or scen.get("spec", "a100")
    name = scen.get("name", "sweep")
    jobs = []
    for op, (strat, system), n, m, rec, bw in itertools.product(ops, strategies, ns, msgs, recs, bws):
        if system not in sections:
            raise ConfigError(f"unknown system {system!r}", scen_src or sources)
        jobs.append((_estimate_point, (name, system, sections[system], strat, op, n, m, rec, bw, spec,
                                       scen_src or sources)))
    rows = []
    for job, res in zip(jobs, _run_pool_safe(jobs, a.jobs or scen.get("jobs", 1))):
        if isinstance(res, Exception):
            if not a.skip_unsupported:
                raise res
            continue
        rows.append(res)
    text = _json(rows) if (a.format or scen.get("format")) == "json" else _rows_csv(rows, SWEEP_FIELDS)
    a.output = a.output or scen.get("output")
    _emit(text, a)
    return EXIT_OK


def _safe(job):
    try:
        return _call(job)
    except (PlanError, InvalidParams, TopologyError, ValueError) as exc:
        return exc


def _run_pool_safe(jobs, workers):
    wrapped = [(_safe_call, j) for j in jobs]
    return _run_pool(wrapped, workers)


def _safe_call(job):
    return _safe(job)


def cmd_estimate(a) -> int:
    sections, sources = _system_sections(a.systems)
    if a.system not in sections:
        raise ConfigError(f"unknown system {a.system!r}; known: {', '.join(sorted(sections))}", sources)
    sect = sections[a.system]
    spec = load_node_spec(a.spec)
    s = with_node_bandwidth(sect, a.bandwidth) if a.bandwidth else sect
    t = topology_from_section(s, sources, a.system)
    workers = a.workers or t.nodes
    r = estimate(a.op, a.msg, t, workers, spec, a.strategy, EstimatorOptions(
        h2h=not a.no_h2h, compute=not a.no_compute, reconfig=True, slot_rounding=not a.no_slot_rounding),
        reconfig_ns=a.reconfig_ns)
    if a.steps:
        rows = [{"step": i, "label": st.label, "repeat": st.repeat, "h2h": f"{st.h2h:.9e}",
                 "h2t": f"{st.h2t:.9e}", "compute": f"{st.compute:.9e}", "reconfig": f"{st.reconfig:.9e}",
                 "eff_bw": f"{st.eff_bw:.6e}"} for i, st in enumerate(r.steps)]
        text = _json(rows) if a.format == "json" else _rows_csv(rows, list(rows[0]) if rows else ["step"])
    else:
        row = r.row(a.system)
        text = _json(row) if a.format == "json" else breakdown_csv([row])
    _emit(text, a)
    return EXIT_OK


# ---------------------------------------------------------------- physical models

def cmd_cost(a) -> int:
    from .physmodel import cost_report

    r = cost_report(a.system, a.sigma, ramp=_params(a) if a.system == "ramp" else None)
    _emit_kv(r.rows(), a)
    return EXIT_OK


def cmd_power(a) -> int:
    from .physmodel import power_report

    r = power_report(a.system, a.sigma, ramp=_params(a) if a.system == "ramp" else None, line_rate=a.line_rate)
    _emit_kv(r.rows(), a)
    return EXIT_OK


def _emit_kv(rows, a) -> None:
    if a.format == "json":
        _emit(_json(dict(rows)), a)
    elif a.format == "csv":
        _emit(_rows_csv([{"key": k, "value": v} for k, v in rows], ["key", "value"]), a)
    else:
        _emit(_kv_text(rows), a)


CHAIN_SCHEMA: Schema = {
    "chain": {"launch_dbm": float, "rx_threshold_dbm": float, "path_min_dbm": float, "description": str},
    "stage.*": {"name": str, "kind": str, "gain_db": float, "ports": parse_int, "excess_db": float},
}


def load_chain(path: str):
    from .physmodel import ComponentChain, Element, ElementKind, PhysModelError, coupler, splitter

    cfg = load_config(resolve_path(path), CHAIN_SCHEMA, required={"chain": ("launch_dbm",)})
    head = cfg.section("chain")
    els = []
    for name in cfg.names("stage."):
        s = cfg.sections[name]
        try:
            kind = ElementKind(s.get("kind", "").strip().lower())
            label = s.get("name", name.split(".", 1)[1])
            if "ports" in s and kind in (ElementKind.SPLITTER, ElementKind.COUPLER):
                mk = splitter if kind is ElementKind.SPLITTER else coupler
                els.append(mk(s["ports"], s.get("excess_db", 0.5), name=label))
            else:
                if "gain_db" not in s:
                    raise PhysModelError("needs gain_db (negative for a loss) or ports")
                els.append(Element(label, kind, s["gain_db"]))
        except (ValueError, PhysModelError) as exc:
            raise ConfigError(f"[{name}]: {exc}", cfg.source) from None
    return ComponentChain(head["launch_dbm"], tuple(els), head.get("rx_threshold_dbm", -15.0),
                          head.get("path_min_dbm", -20.0))


def cmd_budget(a) -> int:
    from .physmodel import OpticsDefaults, ramp_chain, walk_budget

    if a.chain:
        chain = load_chain(a.chain)
    else:
        o = OpticsDefaults(launch_dbm=a.launch_dbm, excess_db=a.excess_db, soa_gain_db=a.soa_gain_db,
                           awgr_loss_db=a.awgr_loss_db)
        chain = ramp_chain(_params(a), o)
    for idx in sorted(a.drop or [], reverse=True):
        if not 0 <= idx < len(chain.elements):
            raise ConfigError(f"--drop {idx} is outside the chain (0..{len(chain.elements) - 1})")
        chain = chain.without(idx)
    tr = walk_budget(chain)
    if a.format == "csv":
        text = tr.to_csv()
    elif a.format == "json":
        text = _json({"stages": [{"element": n, "dbm": round(v, 6)} for n, v in tr.stages],
                      "feasible": tr.feasible, "margin_db": round(tr.margin_db, 6)})
    else:
        text = tr.to_text()
    _emit(text, a)
    if not tr.feasible:
        raise Infeasible(f"power budget infeasible (margin {tr.margin_db:.3f} dB)")
    return EXIT_OK


def cmd_workload(a) -> int:
    from .workloads import SystemModel, iteration_time, parse_workloads, results_csv, shipped_workloads

    if a.file:
        path = resolve_path(a.file)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read: {exc.strerror}", str(path)) from None
        ws = parse_workloads(text, str(path))
    else:
        ws = shipped_workloads(a.family)
    if a.only:
        keep = set(a.only)
        ws = [w for w in ws if w.name in keep]
    sections, sources = _system_sections(a.systems)
    names = a.system or ["ramp", "fat-tree", "topoopt"]
    spec = load_node_spec(a.spec)
    rows = []
    for sysname in names:
        if sysname not in sections:
            raise ConfigError(f"unknown system {sysname!r}", sources)
        sm = SystemModel(sysname, topology_from_section(sections[sysname], sources, sysname), spec)
        for w in ws:
            rows.append((w, iteration_time(w, sm, a.overlap)))
    if a.format == "json":
        _emit(_json([{"workload": w.name, "system": r.system, "compute_s": r.compute, "comm_s": r.comm,
                      "total_s": r.total, "comm_fraction": r.comm_fraction, "training_s": r.training_time}
                     for w, r in rows]), a)
    else:
        _emit(results_csv(rows), a)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _op_list(text: str) -> list[str]:
    return [CollectiveOp.parse(t).value for t in str_list(text)]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rampsim", description="RAMP optical collective planner and estimator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--golden", help="compare the output with this file; exit 3 on any difference")

    p = sub.add_parser("plan", parents=[common], help="per-step collective plan")
    p.add_argument("--op", required=True)
    p.add_argument("--msg", type=parse_size, required=True, help="message size (e.g. 54, 1GB)")
    p.add_argument("--variant", type=int, choices=(1, 2), default=2)
    p.add_argument("--elem-bytes", type=int, default=2)
    p.add_argument("--detail", action="store_true", help="one record per node per step")
    _add_params(p)
    _add_out(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("schedule", parents=[common], help="timeslot/wavelength/subnet table; fails on contention")
    p.add_argument("--op", required=True)
    p.add_argument("--msg", type=parse_size, required=True)
    p.add_argument("--variant", type=int, choices=(1, 2), default=2)
    p.add_argument("--elem-bytes", type=int, default=2)
    p.add_argument("--slot-ns", type=float, default=20)
    p.add_argument("--reconfig-ns", type=float, default=0)
    _add_params(p)
    _add_out(p, ("csv",))
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("verify", parents=[common], help="functional simulation against the oracle, plus contention checks")
    p.add_argument("--all", action="store_true", help="every x,J in 2..max-x, lambda in {x,2x,4x}")
    p.add_argument("--max-x", type=int, default=4)
    p.add_argument("--op", action="append", help="restrict to these ops (repeatable)")
    p.add_argument("--baselines", action="store_true", help="also check ring/hierarchical/torus strategies")
    p.add_argument("--jobs", type=int, default=1)
    _add_params(p)
    _add_out(p, ("text",))
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("estimate", parents=[common], help="completion time of one collective on one system")
    p.add_argument("--system", default="ramp", help="section name in the systems file")
    p.add_argument("--systems", help="extra systems file (overrides shipped sections)")
    p.add_argument("--op", required=True)
    p.add_argument("--msg", type=parse_size, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--strategy", default="best", choices=("best", "ramp", "ring", "hier", "torus"))
    p.add_argument("--reconfig-ns", type=float)
    p.add_argument("--bandwidth", type=parse_size, help="node bandwidth override, bit/s (1:1)")
    p.add_argument("--spec", default="a100")
    p.add_argument("--steps", action="store_true", help="per-step breakdown")
    p.add_argument("--no-h2h", action="store_true")
    p.add_argument("--no-compute", action="store_true")
    p.add_argument("--no-slot-rounding", action="store_true")
    _add_out(p)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("sweep", parents=[common], help="grid of estimates, CSV in scenario order")
    p.add_argument("--scenario", help="scenario file; flags override its values")
    p.add_argument("--systems", help="extra systems file")
    p.add_argument("--op", type=_op_list)
    p.add_argument("--strategies", type=str_list, help="e.g. ring,hier,torus,ramp or ring@topoopt")
    p.add_argument("--msg", type=size_list)
    p.add_argument("--n", type=int_range, help="worker counts, e.g. 16..65536")
    p.add_argument("--reconfig-ns", type=float_list)
    p.add_argument("--bandwidth", type=size_list, help="node bandwidths in bit/s, matched 1:1")
    p.add_argument("--spec")
    p.add_argument("--jobs", type=int)
    p.add_argument("--skip-unsupported", action="store_true", help="drop points a strategy cannot run")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_sweep)

    for name, fn, helptext in (("cost", cmd_cost, "network cost report"),
                               ("power", cmd_power, "network power report")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--system", default="ramp", choices=("ramp", "hpc", "dcn"))
        p.add_argument("--sigma", type=float, default=1.0, help="oversubscription of the EPS fabric")
        if name == "power":
            p.add_argument("--line-rate", type=parse_int, help="transceiver rate at unchanged power")
        _add_params(p, 32, 32, 64)
        _add_out(p, ("text", "csv", "json"))
        p.set_defaults(fn=fn)

    p = sub.add_parser("budget", parents=[common], help="optical power budget along one path; exit 4 if infeasible")
    p.add_argument("--chain", help="chain file with [chain] and [stage.*] sections")
    p.add_argument("--launch-dbm", type=float, default=10.0)
    p.add_argument("--excess-db", type=float, default=0.5)
    p.add_argument("--soa-gain-db", type=float, default=21.0)
    p.add_argument("--awgr-loss-db", type=float, default=5.0)
    p.add_argument("--drop", type=int, action="append", help="remove the element at this index")
    _add_params(p, 32, 32, 64)
    _add_out(p, ("text", "csv", "json"))
    p.set_defaults(fn=cmd_budget)

    p = sub.add_parser("workload", parents=[common], help="iteration time and communication share of training workloads")
    p.add_argument("--family", default="megatron", choices=("megatron", "dlrm"))
    p.add_argument("--file", help="workload file instead of a shipped family")
    p.add_argument("--only", action="append", help="workload section names to keep")
    p.add_argument("--system", action="append", help="systems to compare (repeatable)")
    p.add_argument("--systems", help="extra systems file")
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--spec", default="a100")
    _add_out(p)
    p.set_defaults(fn=cmd_workload)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.fn(a)
    except ConfigError as exc:
        print(f"rampsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PlanError, InvalidParams, TopologyError, ValueError) as exc:
        print(f"rampsim: unsupported: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"rampsim: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except Infeasible as exc:
        print(f"rampsim: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
