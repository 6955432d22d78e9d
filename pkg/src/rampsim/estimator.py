"""Analytic completion-time model.

Every algorithmic step costs

    h2h + h2t + compute + max(0, reconfig - hidden)

h2h is the head-to-head latency (propagation, switching and node I/O), h2t is
the payload time on the worst path of the step, compute is the roofline time
of the step's local operation, and ``hidden`` is the part of the circuit
reconfiguration that overlaps the node I/O latency and the previous step's
compute. Steps are serialised.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import StrategyPlan, StrategyStep
from .engine import CollectiveOp, CollectivePlan, LocalOp, Phase, PlanStep, plan_collective
from .params import RampParams, SubnetKind
from .topologies import Placement, Topology, TopologyKind, ramp_sub_box, restrict, select_nodes
from .transcoder import (DEFAULT_OVERHEAD, DEFAULT_SLOT_NS, Schedule, additional_trx, slot_count,
                         transceiver_group)


@dataclass(frozen=True)
class NodeSpec:
    beta_mem: float  # bytes/s
    pi: float  # flop/s
    clk: float  # s
    mem_to_trx_ns: float = 0.0
    io_latency_ns: float = 100.0

    def __post_init__(self):
        for name in ("beta_mem", "pi", "clk"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.io_latency_ns < 0 or self.mem_to_trx_ns < 0:
            raise ValueError("latencies must be nonnegative")


@dataclass(frozen=True)
class EstimatorOptions:
    """Switches for individual overhead terms; turning one off gives a lower bound."""

    h2h: bool = True
    compute: bool = True
    reconfig: bool = True
    slot_rounding: bool = True


@dataclass(frozen=True)
class StepTime:
    label: str
    h2h: float  # seconds
    h2t: float
    compute: float
    reconfig: float
    eff_bw: float = 0.0  # bits/s per flow on the worst path
    repeat: int = 1

    @property
    def total(self) -> float:
        return (self.h2h + self.h2t + self.compute + self.reconfig) * self.repeat


@dataclass
class CompletionBreakdown:
    op: CollectiveOp
    system: str
    N: int
    msg_bytes: int
    steps: list[StepTime] = field(default_factory=list)

    @property
    def h2h(self) -> float:
        return sum(s.h2h * s.repeat for s in self.steps)

    @property
    def h2t(self) -> float:
        return sum(s.h2t * s.repeat for s in self.steps)

    @property
    def compute(self) -> float:
        return sum(s.compute * s.repeat for s in self.steps)

    @property
    def reconfig(self) -> float:
        return sum(s.reconfig * s.repeat for s in self.steps)

    @property
    def total(self) -> float:
        return sum(s.total for s in self.steps)

    @property
    def step_count(self) -> int:
        return sum(s.repeat for s in self.steps)

    def row(self, scenario: str = "") -> dict:
        return {"scenario": scenario, "system": self.system, "op": self.op.value, "N": self.N,
                "m": self.msg_bytes, "steps": self.step_count, "h2h": fmt(self.h2h), "h2t": fmt(self.h2t),
                "compute": fmt(self.compute), "reconfig": fmt(self.reconfig), "total": fmt(self.total)}


CSV_FIELDS = ["scenario", "system", "op", "N", "m", "steps", "h2h", "h2t", "compute", "reconfig", "total"]


def fmt(v: float) -> str:
    return f"{v:.9e}"


def breakdown_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# roofline


def roofline_compute(local_op: LocalOp | str, sources: int, nbytes: float, spec: NodeSpec,
                     elem_bytes: int = 2) -> float:
    """Time of a node-local operation.

    A k-to-1 reduce reads k buffers of ``nbytes`` and writes one, doing k-1
    additions per element. Reshape, copy, identity and the barrier AND are
    treated as free (pointer or layout work).
    """
    if isinstance(local_op, str):
        local_op = LocalOp(local_op)
    if sources < 1:
        raise ValueError("sources must be >= 1")
    if local_op is not LocalOp.REDUCE or sources == 1 or nbytes <= 0:
        return 0.0
    moved = (sources + 1) * nbytes
    flops = (sources - 1) * (nbytes / elem_bytes)
    return max(moved / spec.beta_mem, flops / spec.pi)


def reduction_speedup(k: int, total_bytes: float, spec: NodeSpec, elem_bytes: int = 2) -> float:
    """k-to-1 against a chain of k-1 two-to-one reductions on buffers of ``total_bytes``."""
    if k < 2:
        return 1.0
    pairwise = (k - 1) * roofline_compute(LocalOp.REDUCE, 2, total_bytes, spec, elem_bytes)
    return pairwise / roofline_compute(LocalOp.REDUCE, k, total_bytes, spec, elem_bytes)


# --------------------------------------------------------------------------
# critical path on baseline topologies


@dataclass(frozen=True)
class CriticalPath:
    eff_bw: float  # bits/s
    eff_latency_ns: float


def _fat_tree_path(t: Topology, src: np.ndarray, dst: np.ndarray) -> CriticalPath:
    spans = t.spans()
    L = len(spans)
    lca = np.full(src.shape, L, dtype=np.int64)
    for lvl in range(L, 0, -1):
        same = (src // spans[lvl - 1]) == (dst // spans[lvl - 1])
        lca[same] = lvl
    flow_bw = np.where(lca == 1, float(t.tiers[0].rate), float(t.tiers[1].rate) if L > 1 else t.tiers[0].rate)
    # node ports shared by several flows of the same node
    out_cnt = np.bincount(src, minlength=t.nodes)[src]
    in_cnt = np.bincount(dst, minlength=t.nodes)[dst]
    flow_bw = flow_bw / np.maximum(out_cnt, in_cnt)
    for lvl in range(1, L):
        crossing = lca > lvl
        if not crossing.any():
            continue
        cap = float(t.uplink_capacity(lvl))
        s_sub, d_sub = src // spans[lvl - 1], dst // spans[lvl - 1]
        n_sub = -(-t.nodes // spans[lvl - 1])
        up = np.bincount(s_sub[crossing], minlength=n_sub)
        down = np.bincount(d_sub[crossing], minlength=n_sub)
        share = cap / np.maximum(up[s_sub], down[d_sub])
        flow_bw = np.where(crossing, np.minimum(flow_bw, share), flow_bw)
    worst = int(lca.max()) if lca.size else 0
    return CriticalPath(float(flow_bw.min()), t.level_latency_ns(worst))


def _max_overlap(starts: np.ndarray, ends: np.ndarray) -> int:
    """Largest number of half-open intervals covering one point."""
    if starts.size == 0:
        return 0
    pos = np.concatenate([starts, ends])
    delta = np.concatenate([np.ones(starts.size, np.int64), -np.ones(ends.size, np.int64)])
    # ends sort before starts at the same position
    order = np.lexsort((delta, pos))
    return int(np.cumsum(delta[order]).max())


def ring_link_load(a: np.ndarray, b: np.ndarray, n: int, line: np.ndarray | None = None) -> int:
    """Worst directed-link load for shortest-path flows a -> b on rings of n nodes.

    ``line`` tags flows with the ring they travel on (torus rows or columns).
    Ties in direction go the positive way.
    """
    a, b = np.asarray(a, np.int64) % n, np.asarray(b, np.int64) % n
    line = np.zeros_like(a) if line is None else np.asarray(line, np.int64)
    fwd = (b - a) % n
    keep = fwd != 0
    a, b, fwd, line = a[keep], b[keep], fwd[keep], line[keep]
    pos_dir = fwd <= n - fwd
    worst = 0
    for mask, lo, hi in ((pos_dir, a, b), (~pos_dir, b, a)):
        # link i joins node i and i+1; the flow covers links [lo, hi) cyclically
        lo, hi, ln = lo[mask], hi[mask], line[mask]
        wrap = hi <= lo
        base = ln * n
        s = np.concatenate([base[~wrap] + lo[~wrap], base[wrap] + lo[wrap], base[wrap]])
        e = np.concatenate([base[~wrap] + hi[~wrap], base[wrap] + n, base[wrap] + hi[wrap]])
        worst = max(worst, _max_overlap(s, e))
    return worst


def _hop_path(t: Topology, src: np.ndarray, dst: np.ndarray) -> CriticalPath:
    io_ns = 2 * t.io.io_latency_ns
    if t.kind is TopologyKind.TORUS_2D:
        R, C = t.dims
        ra, ca = np.divmod(src, C)
        rb, cb = np.divmod(dst, C)
        dr, dc = np.abs(ra - rb), np.abs(ca - cb)
        hr, hc = np.minimum(dr, R - dr), np.minimum(dc, C - dc)
        # dimension-ordered: along the source row first, then along the destination column
        load = max(ring_link_load(ca, cb, C, ra), ring_link_load(ra, rb, R, cb), 1)
        lat = float((hr * t.hop_ns[0] + hc * t.hop_ns[1]).max()) + io_ns
        return CriticalPath(t.link_rate / load, lat)
    d = np.abs(src - dst)
    h = np.minimum(d, t.nodes - d)
    load = max(ring_link_load(src, dst, t.nodes), 1)
    return CriticalPath(t.link_rate / load, io_ns + float(h.max()) * t.hop_ns[0])


def critical_path(transfers, topology: Topology, placement: Placement | None = None) -> CriticalPath:
    """Worst per-flow rate and worst path latency of one synchronized step.

    ``transfers`` is an iterable of (src, dst[, bytes]) in job positions, or a
    pair of numpy arrays. Positions map to topology nodes through
    ``placement`` when given.
    """
    if isinstance(transfers, tuple) and len(transfers) == 2 and isinstance(transfers[0], np.ndarray):
        src, dst = transfers
    else:
        rows = list(transfers)
        if not rows:
            return CriticalPath(float("inf"), 0.0)
        src = np.asarray([r[0] for r in rows], dtype=np.int64)
        dst = np.asarray([r[1] for r in rows], dtype=np.int64)
    if placement is not None:
        nodes = placement.node_array
        if src.size and (src.max() >= nodes.size or dst.max() >= nodes.size):
            raise ValueError("transfer endpoint outside the placement")
        src, dst = nodes[src], nodes[dst]
    if src.size == 0:
        return CriticalPath(float("inf"), 0.0)
    t = topology
    if t.kind is TopologyKind.FAT_TREE:
        return _fat_tree_path(t, src, dst)
    if t.kind is TopologyKind.RAMP:
        return CriticalPath(float(t.io.rate * t.ramp.b), 2 * t.io.io_latency_ns + t.prop_ns)
    return _hop_path(t, src, dst)


def _ring_shift_path(t: Topology, N: int, u: int) -> CriticalPath | None:
    """Closed form for a global shift by ``u`` over contiguous job ranks."""
    if u % N == 0:
        return CriticalPath(float("inf"), 0.0)
    v = min(u % N, N - u % N)
    io_ns = 2 * t.io.io_latency_ns
    if t.kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS) and t.nodes == N:
        return CriticalPath(t.link_rate / v, io_ns + v * t.hop_ns[0])
    if t.kind is TopologyKind.FAT_TREE and t.nodes == N:
        spans = t.spans()
        bw = float(t.tiers[0].rate)
        top = 1
        for lvl in range(1, len(spans)):
            S = spans[lvl - 1]
            if S >= N:
                break
            count = min(S, u % N, N - u % N)
            if count > 0:
                top = lvl + 1
                bw = min(bw, float(t.tiers[1].rate), t.uplink_capacity(lvl) / count)
        return CriticalPath(bw, t.level_latency_ns(top))
    if t.kind is TopologyKind.TORUS_2D and t.nodes == N:
        # row-major ranks: every row shifts by s, then every column by q or q + 1
        R, C = t.dims
        q, s = divmod(u % N, C)
        ring = lambda d, n: min(d % n, n - d % n)
        rows = {q % R} | ({(q + 1) % R} if s else set())
        hc = ring(s, C)
        load = max([hc] + [ring(d, R) for d in rows] + [1])
        lat = max(ring(d, R) * t.hop_ns[0] for d in rows) + hc * t.hop_ns[1]
        return CriticalPath(t.link_rate / load, io_ns + lat)
    return None


class _PathCache:
    def __init__(self, plan: StrategyPlan, t: Topology, placement: Placement):
        self.plan, self.t, self.placement = plan, t, placement
        self.memo: dict = {}
        self.contiguous = placement.contiguous

    def path(self, st: StrategyStep) -> CriticalPath:
        key = (st.phase, st.dim, st.shift, st.rooted)
        if key in self.memo:
            return self.memo[key]
        cp = None
        if len(self.plan.dims) == 1 and not st.rooted and self.contiguous:
            cp = _ring_shift_path(self.t, self.plan.N, st.shift)
        if cp is None:
            src, dst = self.plan.pairs(st)
            cp = critical_path((src, dst), self.t, self.placement)
        self.memo[key] = cp
        return cp


# --------------------------------------------------------------------------
# RAMP


def _step_rounds(plan: CollectivePlan, st: PlanStep) -> int:
    """Base-transceiver conflict rounds inside one representative subgroup."""
    if st.pairwise:
        return st.rounds
    if st.phase is Phase.PIPELINE:
        return 1
    p = plan.params
    coords = plan.coords
    worst = 1
    for rep in sorted({0, plan.N - 1, plan.N // 2}):
        members = plan.members(rep, st.table_step)
        tx, rx = {}, {}
        for a in members:
            for b in members:
                if a == b:
                    continue
                t = transceiver_group(coords[a], coords[b], p)
                tx[(a, t)] = tx.get((a, t), 0) + 1
                rx[(b, t)] = rx.get((b, t), 0) + 1
        worst = max(worst, max(tx.values(), default=1), max(rx.values(), default=1))
    return worst


def _broadcast_lanes(p: RampParams, root_lam_count: int) -> tuple[int, int]:
    relays = max(1, root_lam_count)
    q = -(-(p.lam - 1) // relays) if p.lam > 1 else 1
    if q <= p.x:
        return p.x // q, 1
    return 1, -(-q // p.x)


def _channel_demand(plan: CollectivePlan, pos: int) -> int:
    """Most flows of one step that compete for the same x-way channel set.

    Every source group / destination group pair has x subnets (one per
    transceiver group), so a flow can only be striped over x // demand of
    them when ``demand`` flows need the same wavelength or port there.
    """
    flows = plan.step_flows(pos)
    if not flows:
        return 1
    p = plan.params
    src = np.fromiter((f.src for f in flows for _ in f.dsts), np.int64)
    dst = np.fromiter((d for f in flows for d in f.dsts), np.int64)
    rnd = np.fromiter((f.round_hint for f in flows for _ in f.dsts), np.int64)
    ranks = np.arange(p.nodes)
    lam_all, rest = ranks % p.lam, ranks // p.lam
    j_all, g_all = rest % p.J, rest // p.J
    gs, gd = g_all[src], g_all[dst]
    ls, ld, js, jd = lam_all[src], lam_all[dst], j_all[src], j_all[dst]
    pair = gs * p.x + gd
    kind = p.subnet_kind
    if kind is SubnetKind.BROADCAST_SELECT:
        families = [pair * p.lam + ld]
    elif kind is SubnetKind.ROUTE_BROADCAST:
        families = [(pair * p.lam + ld) * p.lam + (ls + ld) % p.lam]
    else:
        families = [(pair * p.J + js) * p.lam + ld, (pair * p.lam + ld) * p.J + jd]
    worst = 1
    for keys in families:
        # flows of different rounds never share a slot
        keys = keys * (int(rnd.max()) + 1) + rnd
        worst = max(worst, int(np.unique(keys, return_counts=True)[1].max()))
    return worst


def ramp_completion(plan: CollectivePlan, spec: NodeSpec, reconfig_ns: float = 0.0,
                    prop_ns: float = 1300.0, slot_ns=DEFAULT_SLOT_NS, overhead=DEFAULT_OVERHEAD,
                    opts: EstimatorOptions = EstimatorOptions(), host: RampParams | None = None
                    ) -> CompletionBreakdown:
    """Analytic estimate straight from the plan (no slot table needed).

    ``host`` is the full system when the plan runs on a sub-box: the
    transceiver-group map is taken modulo the host's x, so every node can
    still stripe a flow over the host's transceivers.
    """
    p = plan.params
    px = host.x if host is not None else p.x
    out = CompletionBreakdown(plan.op, "ramp", plan.N, plan.msg_bytes)
    io_ns = spec.io_latency_ns
    prev_compute = 0.0
    slot = float(slot_ns) * 1e-9
    for pos, st in enumerate(plan.steps):
        if st.phase is Phase.PIPELINE:
            lanes, rounds = _broadcast_lanes(p, p.x * p.J - 1)
            lanes = min(lanes, p.x)
        else:
            rounds = _step_rounds(plan, st)
            if st.pairwise:
                # one peer per round, every transceiver group is a candidate
                lanes = max(1, px // _channel_demand(plan, pos))
            else:
                lanes = 1 + min(additional_trx(st.nodes, px), px - 1)
                if lanes > 1:
                    lanes = max(1, min(lanes, px // _channel_demand(plan, pos)))
        per_trx = -(-st.segment_bytes // (lanes * p.b)) if st.segment_bytes else 0
        if opts.slot_rounding:
            h2t = slot_count(per_trx, p.B, slot_ns, overhead) * slot * rounds if st.segment_bytes else (
                slot * rounds)
        else:
            h2t = per_trx * 8 / p.B * rounds
        h2h = (prop_ns + 2 * io_ns + spec.mem_to_trx_ns) * 1e-9 if opts.h2h else 0.0
        comp = 0.0
        if opts.compute and st.local_op is LocalOp.REDUCE:
            comp = roofline_compute(LocalOp.REDUCE, st.nodes, st.segment_bytes, spec, plan.elem_bytes)
        rec = 0.0
        if opts.reconfig and reconfig_ns > 0:
            hidden = 2 * io_ns * 1e-9 + prev_compute
            rec = max(0.0, reconfig_ns * 1e-9 - hidden)
        bw = lanes * p.b * p.B
        out.steps.append(StepTime(f"step{st.table_step}", h2h, h2t, comp, rec, bw))
        prev_compute = comp
    return out


def schedule_completion(s: Schedule, spec: NodeSpec, opts: EstimatorOptions = EstimatorOptions(),
                        reconfig_ns: float | None = None) -> CompletionBreakdown:
    """Estimate from a built slot table: h2t is the step's slot span."""
    plan = s.plan
    out = CompletionBreakdown(plan.op, "ramp", plan.N, plan.msg_bytes)
    prev_compute = 0.0
    r_ns = s.reconfig_ns if reconfig_ns is None else reconfig_ns
    for st in s.steps:
        ps = st.plan_step
        h2t = st.slots * float(s.slot_ns) * 1e-9
        h2h = (st.h2h_ns + spec.mem_to_trx_ns) * 1e-9 if opts.h2h else 0.0
        comp = 0.0
        if opts.compute and ps.local_op is LocalOp.REDUCE:
            comp = roofline_compute(LocalOp.REDUCE, ps.nodes, ps.segment_bytes, spec, plan.elem_bytes)
        rec = 0.0
        if opts.reconfig and r_ns > 0:
            rec = max(0.0, r_ns * 1e-9 - (2 * s.io_latency_ns * 1e-9 + prev_compute))
        out.steps.append(StepTime(f"step{ps.table_step}", h2h, h2t, comp, rec))
        prev_compute = comp
    return out


# --------------------------------------------------------------------------
# baselines


def strategy_completion(sp: StrategyPlan, t: Topology, placement: Placement | None, spec: NodeSpec,
                        opts: EstimatorOptions = EstimatorOptions(), reconfig_ns: float = 0.0,
                        system: str | None = None) -> CompletionBreakdown:
    if placement is None:
        placement = select_nodes(t, sp.N)
    if placement.size != sp.N:
        raise ValueError(f"placement has {placement.size} nodes, plan needs {sp.N}")
    if t.kind is TopologyKind.DEGREE_LIMITED_OCS and len(sp.dims) > 1:
        raise ValueError("degree-limited OCS runs single-ring strategies only")
    cache = _PathCache(sp, t, placement)
    out = CompletionBreakdown(sp.op, system or f"{t.kind.value}/{sp.strategy}", sp.N, sp.msg_bytes)
    prev_compute = 0.0
    for st in sp.steps:
        cp = cache.path(st)
        h2h = (cp.eff_latency_ns + spec.mem_to_trx_ns) * 1e-9 if opts.h2h else 0.0
        h2t = st.bytes * 8 / cp.eff_bw if st.bytes and math.isfinite(cp.eff_bw) else 0.0
        comp = 0.0
        if opts.compute and st.local_op is LocalOp.REDUCE:
            comp = roofline_compute(LocalOp.REDUCE, 2, st.bytes, spec, sp.elem_bytes)
        rec = 0.0
        if opts.reconfig and reconfig_ns > 0:
            rec = max(0.0, reconfig_ns * 1e-9 - (2 * spec.io_latency_ns * 1e-9 + prev_compute))
        out.steps.append(StepTime(f"{st.phase}{st.dim}", h2h, h2t, comp, rec, cp.eff_bw, st.repeat))
        prev_compute = comp
    return out


def completion_time(obj, topology: Topology | None = None, placement: Placement | None = None,
                    spec: NodeSpec | None = None, **kw) -> CompletionBreakdown:
    """Dispatch on a CollectivePlan, a Schedule or a StrategyPlan."""
    if spec is None:
        raise ValueError("a NodeSpec is required")
    if isinstance(obj, Schedule):
        return schedule_completion(obj, spec, **kw)
    if isinstance(obj, CollectivePlan):
        if topology is not None and topology.kind is TopologyKind.RAMP:
            kw.setdefault("prop_ns", topology.prop_ns)
            kw.setdefault("reconfig_ns", topology.reconfig_ns)
        return ramp_completion(obj, spec, **kw)
    if isinstance(obj, StrategyPlan):
        if topology is None:
            raise ValueError("baseline strategies need a topology")
        return strategy_completion(obj, topology, placement, spec, **kw)
    raise TypeError(f"cannot estimate {type(obj).__name__}")


# --------------------------------------------------------------------------
# one-call front end


STRATEGIES = ("ramp", "ring", "hier", "torus")


def applicable_strategies(t: Topology) -> tuple[str, ...]:
    if t.kind is TopologyKind.RAMP:
        return ("ramp",)
    if t.kind is TopologyKind.FAT_TREE:
        return ("ring", "hier")
    if t.kind is TopologyKind.TORUS_2D:
        return ("ring", "torus")
    return ("ring",)


def _torus_block(placement: Placement) -> tuple[int, int]:
    R, C = placement.topology.dims
    cols = sum(1 for n in placement.nodes if n < C)
    rows = placement.size // cols
    if rows * cols != placement.size:
        raise ValueError(f"{placement.size} workers do not fill a torus block")
    return rows, cols


def strategy_for(strategy: str, op, t: Topology, placement: Placement, msg_bytes: int,
                 elem_bytes: int = 2, root: int = 0) -> StrategyPlan:
    """Baseline plan of ``strategy`` for the workers of ``placement``."""
    from .baselines import factor_dims, hierarchical_plan, ring_plan, torus_plan

    n = placement.size
    if strategy == "ring":
        return ring_plan(op, n, msg_bytes, elem_bytes, root)
    if strategy == "hier":
        if t.kind is not TopologyKind.FAT_TREE:
            raise ValueError("hierarchical strategy needs a fat-tree")
        return hierarchical_plan(op, factor_dims(n, [tr.radix for tr in t.tiers]), msg_bytes, elem_bytes, root)
    if strategy == "torus":
        if t.kind is not TopologyKind.TORUS_2D:
            raise ValueError("torus strategy needs a 2D torus")
        rows, cols = _torus_block(placement)
        return torus_plan(op, rows, cols, msg_bytes, elem_bytes, root)
    raise ValueError(f"unknown strategy {strategy!r}")


def estimate(op, msg_bytes: int, topology: Topology, workers: int, spec: NodeSpec,
             strategy: str = "best", opts: EstimatorOptions = EstimatorOptions(),
             reconfig_ns: float | None = None, variant: int = 2) -> CompletionBreakdown:
    """Completion time of one collective for ``workers`` jobs placed on ``topology``.

    ``best`` takes the fastest strategy the topology supports; strategies that
    do not fit the worker count are skipped. On RAMP the job runs on the
    smallest plannable sub-box, spare nodes carrying empty buffers.
    """
    t = topology
    if t.kind is TopologyKind.RAMP:
        if strategy not in ("best", "ramp"):
            raise ValueError(f"RAMP runs the ramp strategy, not {strategy!r}")
        box = ramp_sub_box(t.ramp, workers)
        plan = plan_collective(op, msg_bytes, box, variant=variant)
        rec = t.reconfig_ns if reconfig_ns is None else reconfig_ns
        return ramp_completion(plan, spec, reconfig_ns=rec, prop_ns=t.prop_ns, opts=opts, host=t.ramp)
    if t.kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS) and workers < t.nodes:
        # the circuit switch closes the ring around the job
        t = restrict(t, workers)
    placement = select_nodes(t, workers)
    names = applicable_strategies(t) if strategy == "best" else (strategy,)
    best, errors = None, []
    for name in names:
        try:
            sp = strategy_for(name, op, t, placement, msg_bytes)
        except ValueError as exc:
            errors.append(f"{name}: {exc}")
            continue
        r = strategy_completion(sp, t, placement, spec, opts, reconfig_ns or 0.0,
                                system=f"{t.kind.value}/{name}")
        if best is None or r.total < best.total:
            best = r
    if best is None:
        raise ValueError("no strategy applies: " + "; ".join(errors))
    return best
