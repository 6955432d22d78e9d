"""RAMP-x collective planner.

Each collective runs in up to four algorithmic steps. Step ``s`` groups the
nodes into subgroups of size (x, x, J, Lambda/x)[s-1]; a node exchanges with
the members of its subgroup and uses its information portion (one digit of
its collective rank) to pick and place message segments.

Two step-4 variants exist. Variant 2 (default) exchanges with all device
groups at once. Variant 1 keys the step-4 subgroup on (g - d*j) and performs
the exchange as Lambda/x - 1 one-to-one rounds using every transceiver group.
See docs/mapping_notes.md for the corrections applied to the subgroup formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property

from .params import InvalidParams, NodeCoord, RampParams


class PlanError(ValueError):
    """Unsupported op/parameter combination or inactive step."""


class CollectiveOp(Enum):
    REDUCE_SCATTER = "reduce-scatter"
    ALL_GATHER = "all-gather"
    ALL_REDUCE = "all-reduce"
    REDUCE = "reduce"
    BARRIER = "barrier"
    ALL_TO_ALL = "all-to-all"
    SCATTER = "scatter"
    GATHER = "gather"
    BROADCAST = "broadcast"

    @classmethod
    def parse(cls, text: str) -> "CollectiveOp":
        key = text.strip().lower().replace("_", "-").replace(" ", "-")
        aliases = {"rs": "reduce-scatter", "ag": "all-gather", "ar": "all-reduce",
                   "a2a": "all-to-all", "alltoall": "all-to-all", "allreduce": "all-reduce",
                   "allgather": "all-gather", "reducescatter": "reduce-scatter", "bcast": "broadcast"}
        key = aliases.get(key, key)
        for op in cls:
            if op.value == key:
                return op
        raise PlanError(f"unknown collective {text!r}")

    @property
    def rooted(self) -> bool:
        return self in (CollectiveOp.REDUCE, CollectiveOp.SCATTER, CollectiveOp.GATHER, CollectiveOp.BROADCAST)


class BufferOp(Enum):
    RESHAPE = "reshape"
    COPY = "copy"
    IDENTITY = "identity"


class LocalOp(Enum):
    REDUCE = "reduce"
    RESHAPE = "reshape"
    LOGICAL_AND = "and"
    IDENTITY = "identity"


class Phase(Enum):
    """How data moves inside a step."""

    SPLIT_REDUCE = "split-reduce"  # reduce-scatter half
    GATHER_ALL = "gather-all"  # all-gather half
    EXCHANGE = "exchange"  # all-to-all
    SPLIT_ROOT = "split-root"  # scatter from holders
    GATHER_ROOT = "gather-root"  # gather into collectors
    SIGNAL = "signal"  # barrier
    PIPELINE = "pipeline"  # broadcast stage


STEP_SIZES_DOC = ("x", "x", "J", "Lambda/x")


def step_size(p: RampParams, step: int) -> int:
    if step not in (1, 2, 3, 4):
        raise PlanError(f"step must be 1..4, got {step}")
    return (p.x, p.x, p.J, p.lam // p.x)[step - 1]


def check_plannable(p: RampParams) -> None:
    if p.lam < p.x or p.lam % p.x:
        raise PlanError(f"planner needs Lambda to be a multiple of x (Lambda={p.lam}, x={p.x})")


def active_steps(p: RampParams) -> list[int]:
    """Steps with more than one node per subgroup."""
    check_plannable(p)
    return [s for s in (1, 2, 3, 4) if step_size(p, s) > 1]


def _require_active(p: RampParams, step: int) -> None:
    check_plannable(p)
    if step_size(p, step) <= 1:
        raise PlanError(f"step {step} is inactive for {p}")


def _split(n: NodeCoord, p: RampParams):
    d, e = divmod(n.lam, p.x)
    return n.g, n.j, n.lam, d, e


def info_portion(n: NodeCoord, step: int, p: RampParams, variant: int = 2) -> int:
    """Digit of the collective rank owned at ``step`` (the segment a node keeps)."""
    _require_active(p, step)
    g, j, lam, d, e = _split(n, p)
    x = p.x
    if step == 3:
        return j
    if step == 4:
        return d
    k = d if variant == 2 else d * j
    if step == 1:
        return (g - e - j - k) % x
    return (g - j - k) % x


def subgroup_id(n: NodeCoord, step: int, p: RampParams, variant: int = 2) -> int:
    _require_active(p, step)
    g, j, lam, d, e = _split(n, p)
    x, L = p.x, p.lam
    if step == 1:
        return lam + L * j
    if step == 2:
        return (lam - g) % x + L * j + d * x
    if step == 3:
        if variant == 2:
            return lam + L * ((j - g) % x)
        return lam + L * ((g - j * (1 + d)) % x)
    if variant == 2:
        return x * x * j + x * ((g - d) % x) + e
    return e + x * x * j + x * ((g - j * d) % x)


def subgroup_members(n: NodeCoord, step: int, p: RampParams, variant: int = 2) -> list[NodeCoord]:
    """Members of ``n``'s subgroup, ordered by their information portion."""
    _require_active(p, step)
    g, j, lam, d, e = _split(n, p)
    x, J, D = p.x, p.J, p.lam // p.x
    out = []
    if step == 1:
        out = [p.node((g + c) % x, j, lam) for c in range(x)]
    elif step == 2:
        out = [p.node((g + c) % x, j, (e + c) % x + x * d) for c in range(x)]
    elif step == 3:
        for jj in range(J):
            shift = (jj - j) if variant == 2 else (jj - j) * (1 + d)
            out.append(p.node((g + shift) % x, jj, lam))
    else:
        for dd in range(D):
            shift = (dd - d) if variant == 2 else (dd - d) * j
            out.append(p.node((g + shift) % x, j, e + x * dd))
    out.sort(key=lambda m: info_portion(m, step, p, variant))
    return out


def collective_rank(n: NodeCoord, p: RampParams, variant: int = 2) -> int:
    """Mixed-radix value of the portions (p1 most significant)."""
    check_plannable(p)
    r = 0
    for s in (1, 2, 3, 4):
        size = step_size(p, s)
        digit = info_portion(n, s, p, variant) if size > 1 else 0
        r = r * size + digit
    return r


def rank_table(p: RampParams, variant: int = 2) -> list[int]:
    """Physical rank -> collective rank."""
    return [collective_rank(c, p, variant) for c in p.all_coords()]


# --------------------------------------------------------------------------
# broadcast pipeline


@dataclass(frozen=True)
class BroadcastPlan:
    k: int
    steps: int
    per_stage: float  # bytes


def pipelined_time(m_bytes: float, s: int, alpha: float, beta: float, k: int) -> float:
    """Completion time of a k-stage pipelined tree of diameter s (beta in s/bit)."""
    return (k + s - 2) * (alpha + m_bytes * 8 * beta / k)


def broadcast_plan(m_bytes: float, s: int, alpha: float, beta: float) -> BroadcastPlan:
    if s < 3:
        raise PlanError("tree diameter must be >= 3")
    if alpha <= 0 or beta <= 0:
        raise PlanError("alpha and beta must be positive")
    if m_bytes <= 0:
        k = 1
    else:
        k = max(1, round(math.sqrt(m_bytes * 8 * (s - 2) * beta / alpha)))
    return BroadcastPlan(k=k, steps=k + s - 2, per_stage=m_bytes / k if m_bytes > 0 else 0.0)


# --------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class Flow:
    """One logical transmission inside a step (possibly multicast)."""

    src: int
    dsts: tuple[int, ...]
    elems: int
    bytes: int
    round_hint: int = 0
    trx: tuple[int, ...] | None = None  # explicit candidate transceiver groups, base first
    tag: int = -1  # broadcast chunk index


@dataclass(frozen=True)
class PlanStep:
    table_step: int  # 1..4, or 0 for a broadcast stage
    phase: Phase
    nodes: int
    msg_fraction: Fraction  # step size relative to m
    msg_bytes: int  # step message size
    segment_elems: int  # elements sent to each peer
    segment_bytes: int
    buffer_op: BufferOp
    local_op: LocalOp
    rounds: int = 1
    pairwise: bool = False  # variant-1 one-to-one exchange


@dataclass
class CollectivePlan:
    op: CollectiveOp
    params: RampParams
    variant: int
    msg_bytes: int
    elem_bytes: int
    m_elems: int  # per-node message in elements after padding
    steps: list[PlanStep]
    root: int = 0
    pad_elems: int = 0
    stages: int = 1  # broadcast pipeline depth k

    @property
    def N(self) -> int:
        return self.params.nodes

    @cached_property
    def coords(self) -> list[NodeCoord]:
        return self.params.all_coords()

    @cached_property
    def crank(self) -> list[int]:
        return rank_table(self.params, self.variant)

    @cached_property
    def _members(self) -> dict:
        """(rank, step) -> member ranks, built once per step by subgroup."""
        out = {}
        p, v = self.params, self.variant
        for s in active_steps(p):
            for c in self.coords:
                if (c.rank, s) in out:
                    continue
                ms = [m.rank for m in subgroup_members(c, s, p, v)]
                for r in ms:
                    out[(r, s)] = ms
        return out

    def members(self, rank: int, step: int) -> list[int]:
        return self._members[(rank, step)]

    def portion(self, rank: int, step: int) -> int:
        return info_portion(self.coords[rank], step, self.params, self.variant)

    @cached_property
    def holders(self) -> dict[int, list[int]]:
        """For scatter-like trees: ranks holding data before each table step."""
        have = [self.root]
        out = {}
        for s in active_steps(self.params):
            out[s] = sorted(have)
            nxt = set()
            for h in have:
                nxt.update(self.members(h, s))
            have = sorted(nxt)
        out[5] = have
        return out

    def step_flows(self, idx: int) -> list[Flow]:
        """Logical flows of plan step ``idx`` (position in ``steps``)."""
        st = self.steps[idx]
        if st.phase is Phase.PIPELINE:
            return self._broadcast_flows(idx)
        s = st.table_step
        flows: list[Flow] = []
        elems, nbytes = st.segment_elems, st.segment_bytes
        if st.phase in (Phase.SPLIT_REDUCE, Phase.GATHER_ALL, Phase.EXCHANGE, Phase.SIGNAL):
            senders = range(self.N)
        elif st.phase is Phase.SPLIT_ROOT:
            senders = self.holders[s]
        else:
            senders = None
        if st.phase is Phase.GATHER_ROOT:
            collectors = set(self.holders[s])
            for c in sorted(collectors):
                for r in self.members(c, s):
                    if r != c:
                        flows.append(Flow(r, (c,), elems, nbytes))
            return flows
        D = self.params.lam // self.params.x
        for r in senders:
            ms = self.members(r, s)
            if st.pairwise:
                me = self.coords[r]
                d = me.lam // self.params.x
                by_d = {self.coords[m].lam // self.params.x: m for m in ms}
                allx = tuple(range(self.params.x))
                for rr in range(1, D):
                    dst = by_d[(d + rr) % D]
                    flows.append(Flow(r, (dst,), elems, nbytes, round_hint=rr - 1, trx=allx))
                continue
            for m in ms:
                if m != r:
                    flows.append(Flow(r, (m,), elems, nbytes))
        return flows

    def exchange_sources(self, rank: int) -> list[int]:
        """All-to-all: collective rank of the source behind each final block slot.

        After the exchange steps a block's slot is the mixed-radix value of the
        relay portions (first step most significant). Tracing the relay chain
        backwards through the subgroups recovers the originating node, which
        gives the final local reshape into source order.
        """
        act = active_steps(self.params)
        out = []
        for slot in range(self.N):
            digits = []
            rest = slot
            for s in reversed(act):
                rest, dig = divmod(rest, step_size(self.params, s))
                digits.append((s, dig))
            node = rank
            for s, dig in digits:  # last step first
                node = self.members(node, s)[dig]
            out.append(self.crank[node])
        return out

    def _broadcast_flows(self, idx: int) -> list[Flow]:
        p = self.params
        st = self.steps[idx]
        root = self.coords[self.root]
        lam0 = root.lam
        tier1 = [c.rank for c in self.coords if c.lam == lam0 and c.rank != self.root]
        flows = []
        chunk_root = idx
        chunk_relay = idx - 1
        allx = tuple(range(p.x))
        if chunk_root < self.stages and tier1:
            flows.append(Flow(self.root, tuple(tier1), st.segment_elems, st.segment_bytes,
                              trx=allx, tag=chunk_root))
        if chunk_relay >= 0:
            # relay every other wavelength plane from the first tier
            others = [w for w in range(p.lam) if w != lam0]
            relays = tier1 if tier1 else [self.root]
            per_relay: dict[int, list[int]] = {}
            for i, w in enumerate(others):
                per_relay.setdefault(relays[i % len(relays)], []).append(w)
            for r, ws in per_relay.items():
                q = len(ws)
                for i, w in enumerate(ws):
                    dsts = tuple(c.rank for c in self.coords if c.lam == w)
                    if q <= p.x:
                        cand = tuple(t for t in range(p.x) if t % q == i)
                    else:
                        cand = (i % p.x,)
                    flows.append(Flow(r, dsts, st.segment_elems, st.segment_bytes,
                                      trx=cand, tag=chunk_relay))
        return flows

    def to_text(self) -> str:
        """Line-oriented dump: one record per node per step."""
        lines = [f"# op={self.op.value} x={self.params.x} J={self.params.J} lam={self.params.lam} "
                 f"variant={self.variant} msg_bytes={self.msg_bytes} elem_bytes={self.elem_bytes}",
                 "pos,step,rank,subgroup,portion,msg_bytes,buffer_op,local_op"]
        for pos, st in enumerate(self.steps):
            for c in self.coords:
                if st.phase is Phase.PIPELINE:
                    sg, por = 0, 0
                else:
                    sg = subgroup_id(c, st.table_step, self.params, self.variant)
                    por = self.portion(c.rank, st.table_step)
                lines.append(f"{pos},{st.table_step},{c.rank},{sg},{por},{st.msg_bytes},"
                             f"{st.buffer_op.value},{st.local_op.value}")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[dict]:
        rows = []
        for pos, st in enumerate(self.steps):
            rows.append({"pos": pos, "step": st.table_step, "phase": st.phase.value, "nodes": st.nodes,
                         "fraction": str(st.msg_fraction), "msg_bytes": st.msg_bytes,
                         "segment_bytes": st.segment_bytes, "buffer_op": st.buffer_op.value,
                         "local_op": st.local_op.value, "rounds": st.rounds})
        return rows


# per-op steps: (phase, buffer op, local op)
_RS = (Phase.SPLIT_REDUCE, BufferOp.RESHAPE, LocalOp.REDUCE)
_AG = (Phase.GATHER_ALL, BufferOp.COPY, LocalOp.IDENTITY)
_A2A = (Phase.EXCHANGE, BufferOp.RESHAPE, LocalOp.RESHAPE)
_SC = (Phase.SPLIT_ROOT, BufferOp.RESHAPE, LocalOp.IDENTITY)
_GA = (Phase.GATHER_ROOT, BufferOp.COPY, LocalOp.IDENTITY)
_BA = (Phase.SIGNAL, BufferOp.IDENTITY, LocalOp.LOGICAL_AND)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def plan_collective(op: CollectiveOp | str, msg_bytes: int, p: RampParams, variant: int = 2,
                    elem_bytes: int = 2, root: int = 0, stages: int | None = None,
                    alpha: float = 1.5e-6) -> CollectivePlan:
    """Build the per-step plan.

    ``msg_bytes`` is the per-node send buffer m (for all-gather and gather the
    per-node contribution). Buffers are padded to a multiple of N elements
    where the op splits data N ways.
    """
    if isinstance(op, str):
        op = CollectiveOp.parse(op)
    if variant not in (1, 2):
        raise PlanError("variant must be 1 or 2")
    if msg_bytes < 0:
        raise PlanError("message size must be nonnegative")
    try:
        check_plannable(p)
    except InvalidParams as exc:  # pragma: no cover - defensive
        raise PlanError(str(exc)) from exc
    N = p.nodes
    if not 0 <= root < N:
        raise PlanError(f"root {root} out of range")
    act = active_steps(p)
    sizes = {s: step_size(p, s) for s in act}
    elems = _ceil_div(msg_bytes, elem_bytes)
    steps: list[PlanStep] = []

    def split_steps(kind, total_elems):
        # forward order, buffer shrinks by d each step
        L = total_elems
        frac = Fraction(1)
        for s in act:
            d = sizes[s]
            frac /= d
            seg = L // d
            steps.append(PlanStep(s, kind[0], d, frac, Fraction(msg_bytes) * frac,
                                  seg, seg * elem_bytes, kind[1], kind[2]))
            L = seg

    def grow_steps(kind, contrib):
        L = contrib
        frac = Fraction(1)
        for s in reversed(act):
            d = sizes[s]
            frac *= d
            steps.append(PlanStep(s, kind[0], d, frac, msg_bytes_base * frac, L, L * elem_bytes,
                                  kind[1], kind[2]))
            L *= d

    pad = 0
    if op in (CollectiveOp.REDUCE_SCATTER, CollectiveOp.ALL_REDUCE, CollectiveOp.REDUCE,
              CollectiveOp.SCATTER, CollectiveOp.ALL_TO_ALL):
        M = _ceil_div(max(elems, 1), N) * N
        pad = M - elems
    else:
        M = max(elems, 1)

    msg_bytes_base = msg_bytes
    if op is CollectiveOp.REDUCE_SCATTER:
        split_steps(_RS, M)
    elif op is CollectiveOp.SCATTER:
        split_steps(_SC, M)
    elif op is CollectiveOp.ALL_GATHER:
        grow_steps(_AG, M)
    elif op is CollectiveOp.GATHER:
        grow_steps(_GA, M)
    elif op in (CollectiveOp.ALL_REDUCE, CollectiveOp.REDUCE):
        split_steps(_RS, M)
        msg_bytes_base = Fraction(msg_bytes, N)
        grow_steps(_AG if op is CollectiveOp.ALL_REDUCE else _GA, M // N)
    elif op is CollectiveOp.ALL_TO_ALL:
        for s in act:
            d = sizes[s]
            seg = M // d
            steps.append(PlanStep(s, Phase.EXCHANGE, d, Fraction(1, d), Fraction(msg_bytes, d),
                                  seg, seg * elem_bytes,
                                  BufferOp.RESHAPE, LocalOp.RESHAPE))
    elif op is CollectiveOp.BARRIER:
        for s in act:
            steps.append(PlanStep(s, Phase.SIGNAL, sizes[s], Fraction(0), 0, 1, 0,
                                  BufferOp.IDENTITY, LocalOp.LOGICAL_AND))
    elif op is CollectiveOp.BROADCAST:
        if stages is None:
            cap = p.b * p.x * p.B
            stages = broadcast_plan(msg_bytes, 3, alpha, 1.0 / cap).k if msg_bytes > 0 else 1
        stages = max(1, min(int(stages), M))
        M = _ceil_div(M, stages) * stages
        pad = M - elems if elems else M
        chunk = M // stages
        for k in range(stages + 1):
            steps.append(PlanStep(0, Phase.PIPELINE, p.x * p.J, Fraction(1, stages),
                                  Fraction(msg_bytes, stages), chunk, chunk * elem_bytes,
                                  BufferOp.IDENTITY, LocalOp.IDENTITY))
    # normalise Fraction byte counts to ints where exact
    fixed = []
    for st in steps:
        mb = st.msg_bytes
        if isinstance(mb, Fraction) and mb.denominator == 1:
            mb = int(mb)
        rounds = st.rounds
        pairwise = False
        if variant == 1 and st.table_step == 4 and st.phase is not Phase.PIPELINE:
            rounds = st.nodes - 1
            pairwise = st.phase in (Phase.SPLIT_REDUCE, Phase.GATHER_ALL, Phase.EXCHANGE, Phase.SIGNAL)
            rounds = rounds if pairwise else 1
        fixed.append(PlanStep(st.table_step, st.phase, st.nodes, st.msg_fraction, mb, st.segment_elems,
                              st.segment_bytes, st.buffer_op, st.local_op, rounds, pairwise))
    return CollectivePlan(op=op, params=p, variant=variant, msg_bytes=msg_bytes, elem_bytes=elem_bytes,
                          m_elems=M, steps=fixed, root=root, pad_elems=pad,
                          stages=stages if op is CollectiveOp.BROADCAST else 1)


def ramp_step_count(p: RampParams, op: CollectiveOp = CollectiveOp.REDUCE_SCATTER) -> int:
    n = len(active_steps(p))
    if op in (CollectiveOp.ALL_REDUCE, CollectiveOp.REDUCE):
        return 2 * n
    return n
