"""Translate a CollectivePlan into a slotted physical schedule.

Every logical flow gets a wavelength, one or more transceiver groups (lanes)
and a timeslot range. Lanes follow the base transceiver map
(g_src + g_dst + j_src) mod x plus the additional groups allowed for the
subgroup size. Flows whose base resources collide are deferred to a later
round of the same step; additional lanes are only taken where free.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .engine import CollectivePlan, Flow, PlanError, PlanStep
from .params import NodeCoord, RampParams, SubnetKind, _exact

DEFAULT_SLOT_NS = 20
DEFAULT_OVERHEAD = Fraction(5, 100)


def transceiver_group(src: NodeCoord, dst: NodeCoord, p: RampParams) -> int:
    return (src.g + dst.g + src.j) % p.x


def additional_trx(d: int, x: int) -> int:
    if d < 2:
        raise PlanError("subgroup size must be >= 2")
    return (x - (x // d) * (d - 1)) // (d - 1)


def transceiver_set(src: NodeCoord, dst: NodeCoord, d: int, p: RampParams) -> list[int]:
    """Base group followed by the additional groups, all mod x."""
    base = transceiver_group(src, dst, p)
    extra = min(additional_trx(d, p.x), p.x - 1)
    return [(base + k) % p.x for k in range(extra + 1)]


def effective_bandwidth(p: RampParams, d: int) -> int:
    """Unidirectional node I/O rate while exchanging with d-1 peers (bits/s)."""
    return p.B * p.b * (1 + additional_trx(d, p.x)) * (d - 1)


def wavelength_for(src: NodeCoord, dst: NodeCoord, kind: SubnetKind, p: RampParams | None = None,
                   lam: int | None = None) -> int:
    if kind is SubnetKind.BROADCAST_SELECT:
        return dst.lam
    L = lam if lam is not None else p.lam
    return (src.lam + dst.lam) % L


def slot_count(nbytes: int, rate_bps, slot_ns=DEFAULT_SLOT_NS, overhead=DEFAULT_OVERHEAD) -> int:
    """Slots needed to stream ``nbytes`` through one transceiver.

    A circuit pays the reconfiguration guard (overhead * slot) once, at its
    first slot, so a lone slot carries the 950 B minimum message at the
    default rate and longer circuits stream at the full line rate. Zero bytes
    still takes one signalling slot.
    """
    if nbytes <= 0:
        return 1
    slot = _exact(slot_ns)
    busy = Fraction(nbytes * 8 * 1_000_000_000) / _exact(rate_bps) + _exact(overhead) * slot
    return max(1, math.ceil(busy / slot))


@dataclass(frozen=True)
class Transfer:
    step: int
    round: int
    src: int
    dst: int
    trx_group: int
    trx_in_group: int
    subnet_id: tuple[int, int, int]  # (g_src, g_dst, transceiver index)
    wavelength: int
    slot_start: int
    slot_count: int
    bytes: int
    flow: int
    lane: int
    lanes: int
    elem_offset: int
    elem_count: int
    tag: int = -1


@dataclass
class ScheduleStep:
    pos: int
    plan_step: PlanStep
    transfers: list[Transfer]
    round_slots: list[int]
    h2h_ns: float
    reconfig_ns: float

    @property
    def slots(self) -> int:
        return sum(self.round_slots)

    @property
    def rounds(self) -> int:
        return len(self.round_slots)


@dataclass
class Schedule:
    plan: CollectivePlan
    params: RampParams
    steps: list[ScheduleStep]
    slot_ns: float
    overhead: Fraction
    reconfig_ns: float
    io_latency_ns: float
    padded: int = 0  # transfers below one slot payload, padded to a full slot

    @property
    def transfers(self) -> list[Transfer]:
        return [t for st in self.steps for t in st.transfers]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "src", "dst", "trx", "subnet_gsrc", "subnet_gdst", "subnet_trx",
                    "wavelength", "slot_start", "slot_count", "bytes"])
        for t in self.transfers:
            w.writerow([t.step, t.src, t.dst, t.subnet_id[2], t.subnet_id[0], t.subnet_id[1],
                        t.subnet_id[2], t.wavelength, t.slot_start, t.slot_count, t.bytes])
        return buf.getvalue()


def _lane_keys(p: RampParams, src: NodeCoord, dsts: list[NodeCoord], t: int) -> set:
    kind = p.subnet_kind
    keys = {("tx", src.rank, t)}
    for dc in dsts:
        w = wavelength_for(src, dc, kind, p)
        keys.add(("rx", dc.rank, t))
        if kind is SubnetKind.BROADCAST_SELECT:
            keys.add(("sw", src.g, dc.g, t, w))
        elif kind is SubnetKind.ROUTE_BROADCAST:
            keys.add(("cpl", src.g, dc.g, t, dc.lam, w))
        else:
            keys.add(("xin", src.g, dc.g, t, src.j, dc.lam))
            keys.add(("xout", src.g, dc.g, t, dc.lam, dc.j))
    return keys


def _keys_free(book: dict, keys: set, fid: int) -> bool:
    return all(book.get(k, fid) == fid for k in keys)


def _assign_rounds(p: RampParams, coords: list[NodeCoord], flows: list[Flow], d: int):
    """Greedy deterministic allocation. Returns per-flow (round, lanes)."""
    rounds: list[dict] = []
    cand_lists = []
    for f in flows:
        if f.trx is not None:
            cand_lists.append(list(f.trx))
        else:
            cand_lists.append(transceiver_set(coords[f.src], coords[f.dsts[0]], d, p))
    chosen: list[tuple[int, list[int]]] = []
    # pass 1: every flow gets one lane in the earliest round with a free candidate
    for fid, f in enumerate(flows):
        src = coords[f.src]
        dsts = [coords[r] for r in f.dsts]
        r = f.round_hint
        while True:
            while len(rounds) <= r:
                rounds.append({})
            book = rounds[r]
            hit = None
            for t in cand_lists[fid]:
                keys = _lane_keys(p, src, dsts, t)
                if _keys_free(book, keys, fid):
                    hit = (t, keys)
                    break
            if hit:
                for k in hit[1]:
                    book[k] = fid
                chosen.append((r, [hit[0]]))
                break
            r += 1
    # pass 2: opportunistic additional lanes inside the chosen round
    for fid, f in enumerate(flows):
        r, lanes = chosen[fid]
        book = rounds[r]
        src = coords[f.src]
        dsts = [coords[x] for x in f.dsts]
        for t in cand_lists[fid]:
            if t in lanes:
                continue
            keys = _lane_keys(p, src, dsts, t)
            if _keys_free(book, keys, fid):
                for k in keys:
                    book[k] = fid
                lanes.append(t)
    return chosen, len(rounds)


def build_schedule(plan: CollectivePlan, p: RampParams | None = None, slot_ns=DEFAULT_SLOT_NS,
                   reconfig_ns: float = 0, io_latency_ns: float = 100,
                   overhead=DEFAULT_OVERHEAD, propagation_ns: float = 1300) -> Schedule:
    p = p or plan.params
    if p.nodes != plan.N:
        raise PlanError("plan and params disagree on node count")
    coords = p.all_coords()
    steps_out = []
    padded = 0
    flow_base = 0
    for pos, st in enumerate(plan.steps):
        flows = sorted(plan.step_flows(pos), key=lambda f: (f.round_hint, f.src, f.dsts))
        chosen, n_rounds = _assign_rounds(p, coords, flows, st.nodes)
        rows_by_round: dict[int, list] = defaultdict(list)
        for fid, f in enumerate(flows):
            r, lanes = chosen[fid]
            lanes = sorted(lanes, key=lambda t: (list(f.trx).index(t) if f.trx else
                                                 (t - lanes[0]) % p.x))
            n_sub = len(lanes) * p.b
            base_e, rem = divmod(f.elems, n_sub)
            off = 0
            for li, t in enumerate(lanes):
                for plane in range(p.b):
                    k = li * p.b + plane
                    cnt = base_e + (1 if k < rem else 0)
                    nbytes = 0 if f.bytes == 0 else cnt * plan.elem_bytes
                    for dr in f.dsts:
                        rows_by_round[r].append((fid, f, t, plane, k, n_sub, off, cnt, nbytes, dr))
                    off += cnt
        round_slots = []
        transfers = []
        start = 0
        for r in range(n_rounds):
            rows = rows_by_round.get(r, [])
            dur = 0
            built = []
            for fid, f, t, plane, k, n_sub, off, cnt, nbytes, dr in rows:
                sc = slot_count(nbytes, p.B, slot_ns, overhead)
                if 0 < nbytes and sc == 1 and nbytes * 8 * 1e9 / p.B < slot_ns * (1 - float(overhead)):
                    padded += 1
                dur = max(dur, sc)
                sc_src, sc_dst = coords[f.src], coords[dr]
                built.append(Transfer(step=pos, round=r, src=f.src, dst=dr, trx_group=t, trx_in_group=plane,
                                      subnet_id=(sc_src.g, sc_dst.g, t * p.b + plane),
                                      wavelength=wavelength_for(sc_src, sc_dst, p.subnet_kind, p),
                                      slot_start=start, slot_count=sc, bytes=nbytes,
                                      flow=flow_base + fid, lane=k, lanes=n_sub, elem_offset=off,
                                      elem_count=cnt, tag=f.tag))
            if rows:
                round_slots.append(dur)
                transfers.extend(built)
                start += dur
        flow_base += len(flows)
        h2h = propagation_ns + 2 * io_latency_ns
        steps_out.append(ScheduleStep(pos, st, transfers, round_slots, h2h, reconfig_ns))
    return Schedule(plan, p, steps_out, slot_ns, _exact(overhead), reconfig_ns, io_latency_ns, padded)


# --------------------------------------------------------------------------
# verification


@dataclass
class ContentionReport:
    violations: list[str] = field(default_factory=list)
    transfers_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:  # truthy when there are findings
        return bool(self.violations)


def _overlaps(entries: list[tuple[int, int, int]]) -> list[tuple]:
    """entries: (start, end, flow). Pairs of distinct flows with overlapping intervals."""
    entries = sorted(entries)
    bad = []
    active: list[tuple[int, int]] = []  # (end, flow)
    for s, e, f in entries:
        active = [(ae, af) for ae, af in active if ae > s]
        for ae, af in active:
            if af != f:
                bad.append((s, af, f))
        active.append((e, f))
    return bad


def verify_contention(s: Schedule | list, subnet_kind: SubnetKind | None = None,
                      p: RampParams | None = None) -> ContentionReport:
    """Check a schedule for physical-layer conflicts.

    Accepts a Schedule, or a bare list of Transfers with ``p`` given.
    """
    if isinstance(s, Schedule):
        p = p or s.params
        rows = s.transfers
    else:
        rows = list(s)
        if p is None:
            raise ValueError("params required when verifying a bare transfer list")
    kind = subnet_kind or p.subnet_kind
    rep = ContentionReport(transfers_checked=len(rows))
    nb = p.b
    res: dict = defaultdict(list)
    subnet_use: dict = defaultdict(list)
    for t in rows:
        src, dst = p.coord(t.src), p.coord(t.dst)
        tix = t.trx_group * nb + t.trx_in_group
        if not (0 <= t.trx_group < p.x and 0 <= t.trx_in_group < nb):
            rep.violations.append(f"step {t.step}: transceiver index out of range in {t}")
        if t.subnet_id != (src.g, dst.g, tix):
            rep.violations.append(f"step {t.step}: subnet {t.subnet_id} does not match "
                                  f"({src.g}, {dst.g}, {tix}) for {t.src}->{t.dst}")
        w_exp = wavelength_for(src, dst, kind, p)
        if t.wavelength != w_exp:
            rep.violations.append(f"step {t.step}: wavelength {t.wavelength} != {w_exp} for {t.src}->{t.dst}")
        if t.slot_count < 1:
            rep.violations.append(f"step {t.step}: empty slot range for {t.src}->{t.dst}")
        iv = (t.slot_start, t.slot_start + t.slot_count, t.flow)
        sub = (src.g, dst.g, tix)
        res[(t.step, "tx", t.src, tix)].append(iv)
        res[(t.step, "rx", t.dst, tix)].append(iv)
        if kind is SubnetKind.BROADCAST_SELECT:
            res[(t.step, "wave", sub, t.wavelength)].append(iv)
        elif kind is SubnetKind.ROUTE_BROADCAST:
            # output coupler of AWGR port dst.lam, shared by all destination racks
            res[(t.step, "coupler", sub, dst.lam, t.wavelength)].append(iv)
        else:
            res[(t.step, "xbar-in", sub, src.j, dst.lam)].append(iv)
            res[(t.step, "xbar-out", sub, dst.lam, dst.j)].append(iv)
        subnet_use[(t.step, sub)].append(iv)
    for key, entries in res.items():
        for slot, f1, f2 in _overlaps(entries):
            rep.violations.append(f"step {key[0]}: {key[1]} conflict on {key[2:]} at slot {slot} "
                                  f"between flows {f1} and {f2}")
    if kind is SubnetKind.BROADCAST_SELECT:
        for (step, sub), entries in subnet_use.items():
            points = sorted({e[0] for e in entries})
            for pt in points:
                live = {f for s0, e0, f in entries if s0 <= pt < e0}
                if len(live) > p.lam:
                    rep.violations.append(f"step {step}: subnet {sub} carries {len(live)} > {p.lam} "
                                          f"transfers at slot {pt}")
    return rep
