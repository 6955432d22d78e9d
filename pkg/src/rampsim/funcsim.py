"""Untimed functional simulation of schedules on symbolic payloads.

A symbolic element is a label (its index in the op's global numbering) plus
the set of origin ranks that contributed to it, stored as a bitset. Reduction
requires equal labels and disjoint origins, so a duplicated or misrouted
contribution is caught exactly. A float mode is provided for spot checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import CollectiveOp, CollectivePlan, Phase
from .transcoder import Schedule


class SimulationError(RuntimeError):
    """Shape mismatch, double delivery or an impossible transfer."""


# --------------------------------------------------------------------------
# payloads


class SymbolicPayload:
    __slots__ = ("labels", "origins")

    def __init__(self, labels: np.ndarray, origins: np.ndarray):
        self.labels = labels
        self.origins = origins

    @classmethod
    def make(cls, labels, origin: int, words: int) -> "SymbolicPayload":
        labels = np.asarray(labels, dtype=np.int64)
        org = np.zeros((labels.size, words), dtype=np.uint64)
        org[:, origin // 64] = np.uint64(1) << np.uint64(origin % 64)
        return cls(labels, org)

    def __len__(self) -> int:
        return int(self.labels.size)

    def slice(self, a: int, b: int) -> "SymbolicPayload":
        return SymbolicPayload(self.labels[a:b], self.origins[a:b])

    def take(self, idx: np.ndarray) -> "SymbolicPayload":
        return SymbolicPayload(self.labels[idx], self.origins[idx])

    @staticmethod
    def concat(parts: list["SymbolicPayload"]) -> "SymbolicPayload":
        return SymbolicPayload(np.concatenate([q.labels for q in parts]),
                               np.concatenate([q.origins for q in parts]))

    @staticmethod
    def reduce(parts: list["SymbolicPayload"]) -> "SymbolicPayload":
        first = parts[0]
        org = first.origins.copy()
        for q in parts[1:]:
            if q.labels.shape != first.labels.shape or not np.array_equal(q.labels, first.labels):
                raise SimulationError("reduce over misaligned segments")
            if np.any(org & q.origins):
                raise SimulationError("duplicate contribution in reduce")
            org |= q.origins
        return SymbolicPayload(first.labels.copy(), org)

    @staticmethod
    def merge_flags(parts: list["SymbolicPayload"]) -> "SymbolicPayload":
        org = parts[0].origins.copy()
        for q in parts[1:]:
            org |= q.origins
        return SymbolicPayload(parts[0].labels.copy(), org)

    def token_count(self) -> int:
        return int(sum(bin(int(w)).count("1") for w in self.origins.ravel()))

    def origin_sets(self) -> list[set[int]]:
        out = []
        for row in self.origins:
            s = set()
            for wi, w in enumerate(row):
                w = int(w)
                while w:
                    low = w & -w
                    s.add(wi * 64 + low.bit_length() - 1)
                    w ^= low
            out.append(s)
        return out

    def equals(self, other: "SymbolicPayload") -> bool:
        return (self.labels.shape == other.labels.shape and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.origins, other.origins))


class NumericPayload:
    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        self.values = values

    def __len__(self) -> int:
        return int(self.values.size)

    def slice(self, a, b):
        return NumericPayload(self.values[a:b])

    def take(self, idx):
        return NumericPayload(self.values[idx])

    @staticmethod
    def concat(parts):
        return NumericPayload(np.concatenate([q.values for q in parts]))

    @staticmethod
    def reduce(parts):
        out = parts[0].values.astype(np.float64).copy()
        for q in parts[1:]:
            if q.values.shape != out.shape:
                raise SimulationError("reduce over misaligned segments")
            out += q.values
        return NumericPayload(out)

    @staticmethod
    def merge_flags(parts):
        out = parts[0].values.copy()
        for q in parts[1:]:
            out = np.minimum(out, q.values)
        return NumericPayload(out)

    def equals(self, other, tol: float = 1e-9) -> bool:
        return self.values.shape == other.values.shape and np.allclose(self.values, other.values, atol=tol)


# --------------------------------------------------------------------------
# op semantics: initial buffers and the brute-force oracle


def _words(N: int) -> int:
    return max(1, (N + 63) // 64)


def initial_payloads(op: CollectiveOp, N: int, m_elems: int, crank: list[int], root: int = 0):
    """Send buffers per physical rank. ``crank`` maps physical -> collective rank.

    For all-gather/gather ``m_elems`` is the per-node contribution; otherwise
    the full per-node buffer (a multiple of N where the op splits it).
    """
    W = _words(N)
    out: list = [None] * N
    M = m_elems
    for n in range(N):
        r = crank[n]
        if op in (CollectiveOp.REDUCE_SCATTER, CollectiveOp.ALL_REDUCE, CollectiveOp.REDUCE):
            out[n] = SymbolicPayload.make(np.arange(M), n, W)
        elif op in (CollectiveOp.ALL_GATHER, CollectiveOp.GATHER):
            out[n] = SymbolicPayload.make(r * M + np.arange(M), n, W)
        elif op is CollectiveOp.ALL_TO_ALL:
            c = M // N
            # block q is addressed to collective rank q
            lab = (np.arange(N)[:, None] * c + np.arange(c)[None, :]).ravel()
            out[n] = SymbolicPayload.make(lab, n, W)
        elif op in (CollectiveOp.SCATTER, CollectiveOp.BROADCAST):
            out[n] = SymbolicPayload.make(np.arange(M), n, W) if n == root else None
        elif op is CollectiveOp.BARRIER:
            out[n] = SymbolicPayload.make(np.zeros(1), n, W)
    return out


def oracle(op: CollectiveOp | str, N: int, m_elems: int, crank: list[int] | None = None, root: int = 0):
    """Expected final buffers per physical rank; None marks an unspecified buffer."""
    if isinstance(op, str):
        op = CollectiveOp.parse(op)
    crank = list(range(N)) if crank is None else list(crank)
    inv = [0] * N
    for phys, r in enumerate(crank):
        inv[r] = phys
    W = _words(N)
    M = m_elems
    init = initial_payloads(op, N, M, crank, root)
    exp: list = [None] * N

    def union_of(nodes_payloads, lo, hi):
        labels = nodes_payloads[0].labels[lo:hi].copy()
        org = np.zeros((hi - lo, W), dtype=np.uint64)
        for q in nodes_payloads:
            if not np.array_equal(q.labels[lo:hi], labels):
                raise SimulationError("oracle: inconsistent labels")
            org |= q.origins[lo:hi]
        return SymbolicPayload(labels, org)

    if N == 1:
        return [init[0]]
    if op is CollectiveOp.REDUCE_SCATTER:
        c = M // N
        for n in range(N):
            r = crank[n]
            exp[n] = union_of(init, r * c, (r + 1) * c)
    elif op is CollectiveOp.ALL_REDUCE:
        full = union_of(init, 0, M)
        exp = [full] * N
    elif op is CollectiveOp.REDUCE:
        exp[root] = union_of(init, 0, M)
    elif op in (CollectiveOp.ALL_GATHER, CollectiveOp.GATHER):
        gathered = SymbolicPayload.concat([init[inv[r]] for r in range(N)])
        if op is CollectiveOp.ALL_GATHER:
            exp = [gathered] * N
        else:
            exp[root] = gathered
    elif op is CollectiveOp.ALL_TO_ALL:
        c = M // N
        for n in range(N):
            r = crank[n]
            exp[n] = SymbolicPayload.concat([init[inv[s]].slice(r * c, (r + 1) * c) for s in range(N)])
    elif op is CollectiveOp.SCATTER:
        c = M // N
        for n in range(N):
            r = crank[n]
            exp[n] = init[root].slice(r * c, (r + 1) * c)
    elif op is CollectiveOp.BROADCAST:
        exp = [init[root]] * N
    elif op is CollectiveOp.BARRIER:
        allflags = SymbolicPayload.merge_flags(init)
        exp = [allflags] * N
    return exp


@dataclass
class Comparison:
    ok: bool
    report: str = ""
    checked: int = 0


def compare(actual: list, expected: list) -> Comparison:
    checked = 0
    for n, (a, e) in enumerate(zip(actual, expected)):
        if e is None:
            continue
        checked += 1
        if a is None or not a.equals(e):
            lines = [f"first divergence at rank {n}"]
            lines.append(f"  expected labels {e.labels.tolist()[:32]}")
            lines.append(f"  expected origins {e.origin_sets()[:8]}")
            if a is None:
                lines.append("  actual: no buffer")
            else:
                lines.append(f"  actual labels   {a.labels.tolist()[:32]}")
                lines.append(f"  actual origins   {a.origin_sets()[:8]}")
            return Comparison(False, "\n".join(lines), checked)
    return Comparison(True, "", checked)


# --------------------------------------------------------------------------
# RAMP schedule execution (Alg. 1 semantics)


def _collect(schedule: Schedule, step) -> dict:
    """Reassemble flows from lane rows; returns dst -> list of (src, tag)."""
    by_flow: dict = {}
    for t in step.transfers:
        by_flow.setdefault((t.flow, t.dst), []).append(t)
    incoming: dict[int, list] = {}
    for (fid, dst), rows in by_flow.items():
        rows.sort(key=lambda r: r.elem_offset)
        lanes = sorted(r.lane for r in rows)
        if lanes != list(range(rows[0].lanes)):
            raise SimulationError(f"flow {fid} to {dst}: lanes {lanes} do not tile 0..{rows[0].lanes - 1}")
        pos = 0
        for r in rows:
            if r.elem_offset != pos:
                raise SimulationError(f"flow {fid} to {dst}: gap or overlap at element {pos}")
            pos += r.elem_count
        if pos != step.plan_step.segment_elems:
            raise SimulationError(f"flow {fid} to {dst}: carries {pos} elements, "
                                  f"step needs {step.plan_step.segment_elems}")
        srcs = {r.src for r in rows}
        if len(srcs) != 1:
            raise SimulationError(f"flow {fid} has several sources")
        incoming.setdefault(dst, []).append((rows[0].src, rows[0].tag))
    return incoming


def execute_schedule(schedule: Schedule, state: list | None = None):
    plan: CollectivePlan = schedule.plan
    N = plan.N
    if state is None:
        state = initial_payloads(plan.op, N, plan.m_elems, plan.crank, plan.root)
    bcast = plan.op is CollectiveOp.BROADCAST
    if bcast:
        chunks = [dict() for _ in range(N)]
        k = plan.stages
        c = plan.m_elems // k
        chunks[plan.root] = {i: state[plan.root].slice(i * c, (i + 1) * c) for i in range(k)}
    n_prev = 1
    for step in schedule.steps:
        st = step.plan_step
        incoming = _collect(schedule, step)
        ph = st.phase
        d = st.nodes
        if ph is Phase.PIPELINE:
            sends = []
            for dst, items in incoming.items():
                for src, tag in items:
                    if tag not in chunks[src]:
                        raise SimulationError(f"rank {src} forwards chunk {tag} it does not hold")
                    sends.append((dst, tag, chunks[src][tag]))
            for dst, tag, pl in sends:
                chunks[dst][tag] = pl
            continue
        s = st.table_step
        por = [plan.portion(n, s) for n in range(N)]
        new = list(state)
        if ph in (Phase.SPLIT_REDUCE, Phase.EXCHANGE, Phase.SPLIT_ROOT):
            for n in range(N):
                items = incoming.get(n, [])
                if ph is Phase.SPLIT_ROOT and state[n] is None and not items:
                    continue
                if ph is Phase.SPLIT_ROOT and state[n] is not None and items:
                    raise SimulationError(f"rank {n} already holds data in scatter step {s}")
                if ph is Phase.SPLIT_ROOT and state[n] is None:
                    (src, _), = items
                    buf = state[src]
                    if buf is None:
                        raise SimulationError(f"rank {src} sends without data")
                    seg = len(buf) // d
                    new[n] = buf.slice(por[n] * seg, (por[n] + 1) * seg)
                    continue
                buf = state[n]
                if len(buf) % d:
                    raise SimulationError(f"rank {n}: buffer of {len(buf)} not divisible by {d}")
                seg = len(buf) // d
                parts = {por[n]: buf.slice(por[n] * seg, (por[n] + 1) * seg)}
                for src, _ in items:
                    sb = state[src]
                    if sb is None or len(sb) != len(buf):
                        raise SimulationError(f"rank {src} -> {n}: buffer shape mismatch")
                    if por[src] in parts:
                        raise SimulationError(f"rank {n}: two segments for portion {por[src]}")
                    parts[por[src]] = sb.slice(por[n] * seg, (por[n] + 1) * seg)
                if ph is Phase.SPLIT_REDUCE:
                    new[n] = type(buf).reduce([parts[q] for q in sorted(parts)])
                elif ph is Phase.SPLIT_ROOT:
                    new[n] = parts[por[n]]
                else:
                    if len(parts) != d:
                        raise SimulationError(f"rank {n}: all-to-all step {s} got {len(parts)} of {d} segments")
                    stacked = type(buf).concat([parts[q] for q in range(d)])
                    total = len(stacked)
                    idx = np.arange(total)
                    n_rank = total // (d * n_prev * (total // N))
                    blk = total // N
                    idx = idx.reshape(d, n_rank, n_prev, blk).transpose(1, 2, 0, 3).ravel()
                    new[n] = stacked.take(idx)
            if ph is Phase.EXCHANGE:
                n_prev *= d
        elif ph in (Phase.GATHER_ALL, Phase.GATHER_ROOT):
            senders = set()
            for n, items in incoming.items():
                for src, _ in items:
                    senders.add(src)
            for n in range(N):
                items = incoming.get(n, [])
                if ph is Phase.GATHER_ROOT and not items:
                    continue
                buf = state[n]
                if buf is None:
                    raise SimulationError(f"rank {n} collects without own data")
                slots = {por[n]: buf}
                for src, _ in items:
                    if state[src] is None or len(state[src]) != len(buf):
                        raise SimulationError(f"rank {src} -> {n}: gather shape mismatch")
                    if por[src] in slots:
                        raise SimulationError(f"rank {n}: duplicate slot {por[src]}")
                    slots[por[src]] = state[src]
                if sorted(slots) != list(range(d)):
                    raise SimulationError(f"rank {n}: gather step {s} missing slots")
                new[n] = type(buf).concat([slots[q] for q in range(d)])
            if ph is Phase.GATHER_ROOT:
                for src in senders:
                    if src not in incoming:
                        new[src] = None
        elif ph is Phase.SIGNAL:
            for n in range(N):
                parts = [state[n]] + [state[src] for src, _ in incoming.get(n, [])]
                new[n] = type(state[n]).merge_flags(parts)
        state = new
    if plan.op is CollectiveOp.ALL_TO_ALL and N > 1:
        blk = plan.m_elems // N
        for n in range(N):
            order = np.argsort(np.asarray(plan.exchange_sources(n)), kind="stable")
            idx = (order[:, None] * blk + np.arange(blk)[None, :]).ravel()
            state[n] = state[n].take(idx)
    if bcast:
        out = []
        for n in range(N):
            if sorted(chunks[n]) != list(range(plan.stages)):
                out.append(None)
            else:
                out.append(type(chunks[n][0]).concat([chunks[n][i] for i in range(plan.stages)]))
        return out
    return state


def to_numeric(pl, N: int):
    """Collapse a symbolic payload to floats: each token (origin o, label l) is l + (o+1)/(N+1)."""
    if pl is None:
        return None
    cnt = np.zeros(len(pl))
    osum = np.zeros(len(pl))
    for wi in range(pl.origins.shape[1]):
        words = pl.origins[:, wi]
        for bit in range(64):
            o = wi * 64 + bit
            if o >= N:
                break
            hit = ((words >> np.uint64(bit)) & np.uint64(1)).astype(bool)
            cnt += hit
            osum += hit * (o + 1)
    return NumericPayload(pl.labels * cnt + osum / (N + 1))


def execute_numeric(schedule: Schedule):
    """Run the same schedule on float64 buffers (sums instead of token unions)."""
    plan = schedule.plan
    if plan.op is CollectiveOp.BARRIER:
        # flags: 1.0 = signalled, combined with logical AND (min)
        return execute_schedule(schedule, [NumericPayload(np.ones(1)) for _ in range(plan.N)])
    init = initial_payloads(plan.op, plan.N, plan.m_elems, plan.crank, plan.root)
    return execute_schedule(schedule, [to_numeric(q, plan.N) for q in init])


def check_numeric(schedule: Schedule, tol: float = 1e-6) -> Comparison:
    N = schedule.plan.N
    actual = execute_numeric(schedule)
    if schedule.plan.op is CollectiveOp.BARRIER:
        expected = [NumericPayload(np.ones(1)) for _ in range(N)]
    else:
        expected = [to_numeric(e, N) for e in expected_for(schedule)]
    for n, (a, e) in enumerate(zip(actual, expected)):
        if e is not None and (a is None or not a.equals(e, tol)):
            return Comparison(False, f"numeric divergence at rank {n}", n)
    return Comparison(True, "", N)


def execute(obj, N: int | None = None, m_elems: int | None = None):
    """Execute a RAMP Schedule or a baseline StrategyPlan and return final buffers."""
    if isinstance(obj, Schedule):
        return execute_schedule(obj)
    from .baselines import StrategyPlan
    if isinstance(obj, StrategyPlan):
        return execute_strategy(obj)
    raise TypeError(f"cannot execute {type(obj).__name__}")


def expected_for(obj):
    if isinstance(obj, Schedule):
        plan = obj.plan
        return oracle(plan.op, plan.N, plan.m_elems, plan.crank, plan.root)
    return oracle(obj.op, obj.N, obj.m_elems, None, obj.root)


def check(obj) -> Comparison:
    """execute + oracle + compare in one call."""
    try:
        actual = execute(obj)
    except SimulationError as exc:
        return Comparison(False, f"simulation error: {exc}")
    return compare(actual, expected_for(obj))


# --------------------------------------------------------------------------
# baseline strategies: chunk-level execution


def execute_strategy(sp):
    """Run a StrategyPlan's expanded moves over chunk dictionaries."""
    N, M, op = sp.N, sp.m_elems, sp.op
    init = initial_payloads(op, N, M, list(range(N)), sp.root)
    nch = sp.chunk_count
    csize = sp.chunk_elems
    held: list[dict] = [dict() for _ in range(N)]
    for n in range(N):
        buf = init[n]
        if buf is None:
            continue
        if op is CollectiveOp.BARRIER:
            held[n][0] = buf
        elif op in (CollectiveOp.ALL_GATHER, CollectiveOp.GATHER):
            held[n][n] = buf
        elif op is CollectiveOp.ALL_TO_ALL:
            for q in range(N):
                held[n][n * N + q] = buf.slice(q * csize, (q + 1) * csize)
        else:
            for q in range(nch):
                held[n][q] = buf.slice(q * csize, (q + 1) * csize)
    for moves in sp.expand():
        deliveries = []
        for mv in moves:
            src_h = held[mv.src]
            for ch in mv.chunks:
                if ch not in src_h:
                    raise SimulationError(f"rank {mv.src} sends chunk {ch} it does not hold")
                deliveries.append((mv, ch, src_h[ch]))
        for mv, ch, pl in deliveries:
            if mv.mode in ("move", "reduce"):
                held[mv.src].pop(ch, None)
        for mv, ch, pl in deliveries:
            dst_h = held[mv.dst]
            if mv.mode == "reduce":
                if ch not in dst_h:
                    raise SimulationError(f"rank {mv.dst} reduces into missing chunk {ch}")
                dst_h[ch] = SymbolicPayload.reduce([dst_h[ch], pl])
            elif mv.mode == "signal":
                dst_h[ch] = SymbolicPayload.merge_flags([dst_h[ch], pl]) if ch in dst_h else pl
            else:
                if ch in dst_h and mv.mode != "store":
                    raise SimulationError(f"rank {mv.dst} receives chunk {ch} twice")
                dst_h[ch] = pl
    return sp.assemble(held)
