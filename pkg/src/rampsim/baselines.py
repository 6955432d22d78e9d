"""Ring, hierarchical-ring and 2D-torus collective strategies.

All three share one per-dimension algorithm. Nodes are numbered mixed radix
over ``dims`` (first dimension least significant); a dimension ring links
the nodes that differ only in that digit. A plain ring is dims=[N], a torus
is dims=[cols, rows].

Per operation:

* reduce-scatter: ring reduce-scatter per dimension, innermost first; the
  node ends with the chunk numbered by its own rank.
* all-gather: ring all-gather per dimension, outermost first.
* all-reduce: reduce-scatter then all-gather; reduce: reduce-scatter then gather.
* all-to-all: per dimension, n-1 pairwise shifts; each shift forwards every
  block whose destination digit matches the peer (store and forward).
* scatter: tree from the root, innermost dimension first, one peer per shift.
* gather: the reverse tree, outermost dimension first.
* broadcast: scatter followed by all-gather.
* barrier: flag accumulation around every dimension ring (zero-byte steps).

A StrategyPlan keeps compressed steps (enough for timing at any N) and can
expand to chunk moves for functional simulation at small N.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .engine import CollectiveOp, LocalOp, PlanError


@dataclass(frozen=True)
class StrategyStep:
    phase: str  # rs, ag, a2a, scatter, gather, barrier
    dim: int
    shift: int  # peer offset along the dimension ring
    elems: int  # per flow
    bytes: int
    local_op: LocalOp
    repeat: int = 1  # identical consecutive steps
    rooted: bool = False  # only the current holders / collectors take part


@dataclass(frozen=True)
class Move:
    src: int
    dst: int
    chunks: tuple[int, ...]
    mode: str  # reduce, store, move, signal


@dataclass
class StrategyPlan:
    strategy: str  # ring, hierarchical, torus
    op: CollectiveOp
    dims: tuple[int, ...]
    msg_bytes: int
    elem_bytes: int
    m_elems: int
    steps: list[StrategyStep]
    root: int = 0

    @property
    def N(self) -> int:
        return math.prod(self.dims)

    @property
    def step_count(self) -> int:
        return sum(s.repeat for s in self.steps)

    @property
    def chunk_count(self) -> int:
        if self.op is CollectiveOp.BARRIER:
            return 1
        if self.op is CollectiveOp.ALL_TO_ALL:
            return self.N * self.N
        return self.N

    @property
    def chunk_elems(self) -> int:
        if self.op is CollectiveOp.BARRIER:
            return 1
        if self.op in (CollectiveOp.ALL_GATHER, CollectiveOp.GATHER):
            return self.m_elems
        return self.m_elems // self.N

    # ---- addressing

    def digits(self, n: int) -> list[int]:
        out = []
        for d in self.dims:
            n, r = divmod(n, d)
            out.append(r)
        return out

    def stride(self, k: int) -> int:
        return math.prod(self.dims[:k])

    def peer(self, n: int, k: int, shift: int) -> int:
        d = self.dims[k]
        s = self.stride(k)
        c = (n // s) % d
        return n + (((c + shift) % d) - c) * s

    def pairs(self, step: StrategyStep) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) arrays for one instance of ``step`` (vectorised, any N)."""
        n = np.arange(self.N, dtype=np.int64)
        if step.rooted:
            n = np.asarray(self._rooted_senders(step), dtype=np.int64)
        d = self.dims[step.dim]
        s = self.stride(step.dim)
        c = (n // s) % d
        if step.phase == "gather":
            # members send to the collector at offset -shift
            dst = n + (((c - step.shift) % d) - c) * s
        else:
            dst = n + (((c + step.shift) % d) - c) * s
        return n, dst

    def _anchor(self, k: int) -> np.ndarray:
        """Nodes whose digits >= k equal the root's (prod(dims[:k]) of them)."""
        cache = self.__dict__.setdefault("_anchor_cache", {})
        if k not in cache:
            S = self.stride(k)
            cache[k] = (self.root // S) * S + np.arange(S, dtype=np.int64)
        return cache[k]

    def _rooted_senders(self, step: StrategyStep) -> list[int]:
        """Scatter: the holders before dimension k (the anchor). Gather: the
        anchor moved by ``shift`` along dimension k, i.e. the members feeding
        the collectors."""
        k = step.dim
        anc = self._anchor(k)
        if step.phase == "scatter":
            return anc.tolist()
        d, s = self.dims[k], self.stride(k)
        c = (anc // s) % d
        return (anc + (((c + step.shift) % d) - c) * s).tolist()

    # ---- functional expansion

    def expand(self):
        """Yield one list of Moves per communication step."""
        for st in self.steps:
            for rep in range(st.repeat):
                yield self._moves(st, rep)

    def _chunk_digit(self, ch: int, k: int) -> int:
        return (ch // self.stride(k)) % self.dims[k]

    def _moves(self, st: StrategyStep, rep: int) -> list[Move]:
        k, d = st.dim, self.dims[st.dim]
        out = []
        if st.phase in ("rs", "ag"):
            t = rep
            for n in range(self.N):
                dig = self.digits(n)
                i = dig[k]
                grp = (i - t - 1) % d if st.phase == "rs" else (i - t) % d
                chunks = self._groups(n, k, grp, st.phase)
                out.append(Move(n, self.peer(n, k, 1), chunks, "reduce" if st.phase == "rs" else "store"))
        elif st.phase == "a2a":
            for n in range(self.N):
                dst = self.peer(n, k, st.shift)
                want = self.digits(dst)[k]
                chunks = tuple(o * self.N + q for o, q in self._a2a_held(n, k)
                               if self._chunk_digit(q, k) == want)
                out.append(Move(n, dst, chunks, "move"))
        elif st.phase == "scatter":
            for n in self._rooted_senders(st):
                dst = self.peer(n, k, st.shift)
                dd = self.digits(dst)
                nd = self.digits(n)
                # the destination's share: digit k = dst's, digits below k the holder's own
                chunks = tuple(q for q in range(self.N) if self._chunk_digit(q, k) == dd[k]
                               and all(self._chunk_digit(q, m) == nd[m] for m in range(k)))
                out.append(Move(n, dst, chunks, "move"))
        elif st.phase == "gather":
            for n in self._rooted_senders(st):
                dst = self.peer(n, k, -st.shift)
                nd = self.digits(n)
                # collected so far: digits above k free, digits up to k the sender's own
                chunks = tuple(q for q in range(self.N)
                               if all(self._chunk_digit(q, m) == nd[m] for m in range(k + 1)))
                out.append(Move(n, dst, chunks, "move"))
        elif st.phase == "barrier":
            for n in range(self.N):
                out.append(Move(n, self.peer(n, k, 1), (0,), "signal"))
        return out

    def _groups(self, n: int, k: int, grp: int, phase: str) -> tuple[int, ...]:
        """Chunks a node handles in dimension k for group ``grp``.

        reduce-scatter (innermost first): digits < k already fixed to the node's.
        all-gather (outermost first): digits > k are free, digits < k fixed.
        """
        nd = self.digits(n)
        K = len(self.dims)
        out = []
        for q in range(self.N):
            if self._chunk_digit(q, k) != grp:
                continue
            ok = True
            for m in range(K):
                if m == k:
                    continue
                if m < k and self._chunk_digit(q, m) != nd[m]:
                    ok = False
                    break
                # all-gather: digits above k were gathered in earlier (outer) steps
            if ok:
                out.append(q)
        return tuple(out)

    def _a2a_held(self, n: int, k: int):
        """(origin, destination) blocks at node n before dimension k.

        After dimensions < k a block sits at the node whose digits < k equal
        the destination's and whose digits >= k equal the origin's.
        """
        nd = self.digits(n)
        K = len(self.dims)
        # enumerate origin digits < k and destination digits >= k freely
        for o in range(self.N):
            od = self.digits(o)
            if any(od[m] != nd[m] for m in range(k, K)):
                continue
            for q in range(self.N):
                qd = self.digits(q)
                if any(qd[m] != nd[m] for m in range(k)):
                    continue
                yield o, q

    def assemble(self, held: list[dict]):
        from .funcsim import SymbolicPayload
        N, op = self.N, self.op
        out = [None] * N
        for n in range(N):
            h = held[n]
            try:
                if op is CollectiveOp.BARRIER:
                    out[n] = h[0]
                elif op is CollectiveOp.REDUCE_SCATTER:
                    out[n] = h[n]
                elif op is CollectiveOp.SCATTER:
                    out[n] = h[n]
                elif op is CollectiveOp.ALL_TO_ALL:
                    out[n] = SymbolicPayload.concat([h[o * N + n] for o in range(N)])
                elif op in (CollectiveOp.REDUCE, CollectiveOp.GATHER):
                    if n == self.root:
                        out[n] = SymbolicPayload.concat([h[q] for q in range(N)])
                else:
                    out[n] = SymbolicPayload.concat([h[q] for q in range(N)])
            except KeyError:
                out[n] = None
        return out

    # ---- reporting

    def flows(self, idx: int) -> list[tuple[int, int, int]]:
        st = self.steps[idx]
        src, dst = self.pairs(st)
        return [(int(a), int(b), st.bytes) for a, b in zip(src, dst)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "src", "dst", "bytes"])
        pos = 0
        for i, st in enumerate(self.steps):
            rows = self.flows(i)
            for _ in range(st.repeat):
                for a, b, nb in rows:
                    w.writerow([pos, a, b, nb])
                pos += 1
        return buf.getvalue()

    def total_bytes(self) -> int:
        tot = 0
        for st in self.steps:
            senders = len(self._rooted_senders(st)) if st.rooted else self.N
            tot += senders * st.bytes * st.repeat
        return tot


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _build(strategy: str, op, dims, msg_bytes: int, elem_bytes: int = 2, root: int = 0) -> StrategyPlan:
    if isinstance(op, str):
        op = CollectiveOp.parse(op)
    dims = tuple(int(d) for d in dims if int(d) > 1) or (1,)
    N = math.prod(dims)
    if N < 1:
        raise PlanError("need at least one node")
    if not 0 <= root < N:
        raise PlanError(f"root {root} out of range")
    elems = _ceil_div(msg_bytes, elem_bytes)
    splits = op not in (CollectiveOp.ALL_GATHER, CollectiveOp.GATHER, CollectiveOp.BARRIER)
    M = _ceil_div(max(elems, 1), N) * N if splits else max(elems, 1)
    if op is CollectiveOp.BARRIER:
        M = 1
    K = len(dims)
    steps: list[StrategyStep] = []
    eb = elem_bytes
    if N == 1:
        return StrategyPlan(strategy, op, dims, msg_bytes, elem_bytes, M, [], root)

    def rs(total):
        L = total
        for k in range(K):
            d = dims[k]
            seg = L // d
            steps.append(StrategyStep("rs", k, 1, seg, seg * eb, LocalOp.REDUCE, repeat=d - 1))
            L = seg
        return L

    def ag(contrib):
        L = contrib
        for k in reversed(range(K)):
            d = dims[k]
            steps.append(StrategyStep("ag", k, 1, L, L * eb, LocalOp.IDENTITY, repeat=d - 1))
            L *= d
        return L

    def scatter(total):
        L = total
        for k in range(K):
            d = dims[k]
            seg = L // d
            for t in range(1, d):
                steps.append(StrategyStep("scatter", k, t, seg, seg * eb, LocalOp.IDENTITY, rooted=True))
            L = seg

    def gather(contrib):
        L = contrib
        for k in reversed(range(K)):
            d = dims[k]
            for t in range(1, d):
                steps.append(StrategyStep("gather", k, t, L, L * eb, LocalOp.IDENTITY, rooted=True))
            L *= d

    if op is CollectiveOp.REDUCE_SCATTER:
        rs(M)
    elif op is CollectiveOp.ALL_GATHER:
        ag(M)
    elif op is CollectiveOp.ALL_REDUCE:
        ag(rs(M))
    elif op is CollectiveOp.REDUCE:
        if root != 0:
            raise PlanError("baseline reduce is planned for root 0")
        gather(rs(M))
    elif op is CollectiveOp.GATHER:
        if root != 0:
            raise PlanError("baseline gather is planned for root 0")
        gather(M)
    elif op is CollectiveOp.SCATTER:
        scatter(M)
    elif op is CollectiveOp.BROADCAST:
        scatter(M)
        ag(M // N)
    elif op is CollectiveOp.ALL_TO_ALL:
        for k in range(K):
            d = dims[k]
            seg = M // d
            for t in range(1, d):
                steps.append(StrategyStep("a2a", k, t, seg, seg * eb, LocalOp.RESHAPE))
    elif op is CollectiveOp.BARRIER:
        for k in range(K):
            steps.append(StrategyStep("barrier", k, 1, 1, 0, LocalOp.LOGICAL_AND, repeat=dims[k] - 1))
    return StrategyPlan(strategy, op, dims, msg_bytes, elem_bytes, M, steps, root)


def ring_plan(op, N: int, m: int, elem_bytes: int = 2, root: int = 0) -> StrategyPlan:
    if N < 1:
        raise PlanError("ring needs N >= 1")
    return _build("ring", op, (N,), m, elem_bytes, root)


def hierarchical_plan(op, dims, m: int, elem_bytes: int = 2, root: int = 0) -> StrategyPlan:
    dims = list(dims)
    if not dims or any(int(d) < 1 for d in dims):
        raise PlanError("dimensions must be positive")
    return _build("hierarchical", op, dims, m, elem_bytes, root)


def torus_plan(op, rows: int, cols: int, m: int, elem_bytes: int = 2, root: int = 0) -> StrategyPlan:
    if rows < 1 or cols < 1:
        raise PlanError("torus dimensions must be positive")
    return _build("torus", op, (cols, rows), m, elem_bytes, root)


def factor_dims(N: int, tiers: list[int]) -> list[int]:
    """Split N along placement tiers (innermost first); raises if N does not factor."""
    out, rest = [], N
    for t in tiers:
        if rest == 1:
            break
        d = math.gcd(rest, t) if rest % t else t
        if d > 1:
            out.append(d)
            rest //= d
    if rest != 1:
        raise PlanError(f"{N} does not factor over tiers {tiers}")
    return out
