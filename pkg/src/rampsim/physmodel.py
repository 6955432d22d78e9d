"""Optical power budget walker and network cost / energy calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .params import RampParams, SubnetKind


class PhysModelError(ValueError):
    pass


# ---------------------------------------------------------------- budget

class ElementKind(Enum):
    MODULATOR = "modulator"
    SPLITTER = "splitter"
    COUPLER = "coupler"
    SOA = "soa"
    AWGR = "awgr"
    FILTER = "filter"
    FIBER = "fiber"

    @property
    def active(self) -> bool:
        return self is ElementKind.SOA


@dataclass(frozen=True)
class Element:
    name: str
    kind: ElementKind
    gain_db: float  # negative for losses

    def __post_init__(self):
        if not self.kind.active and self.gain_db >= 0:
            raise PhysModelError(f"passive element {self.name!r} must have a loss (got {self.gain_db} dB)")
        if self.kind.active and self.gain_db < 0:
            raise PhysModelError(f"amplifier {self.name!r} has negative gain")


@dataclass(frozen=True)
class OpticsDefaults:
    """Component figures used when building a chain from architecture parameters."""

    launch_dbm: float = 10.0
    excess_db: float = 0.5
    soa_gain_db: float = 21.0
    awgr_loss_db: float = 5.0
    modulator_loss_db: float = 0.5
    filter_loss_db: float = 0.5
    rx_threshold_dbm: float = -15.0
    path_min_dbm: float = -20.0


def splitter(ports: int, excess_db: float = 0.5, name: str | None = None) -> Element:
    if ports < 1:
        raise PhysModelError("splitter needs at least one port")
    return Element(name or f"splitter 1:{ports}", ElementKind.SPLITTER, -(10 * math.log10(ports) + excess_db))


def combiner(ports: int, excess_db: float = 0.5, name: str | None = None) -> Element:
    return replace(splitter(ports, excess_db), name=name or f"combiner {ports}:1")


def coupler(ports: int, excess_db: float = 0.5, name: str | None = None) -> Element:
    if ports < 1:
        raise PhysModelError("coupler needs at least one port")
    return Element(name or f"coupler {ports}:{ports}", ElementKind.COUPLER, -(10 * math.log10(ports) + excess_db))


def soa(gain_db: float = 21.0, name: str = "soa") -> Element:
    return Element(name, ElementKind.SOA, gain_db)


@dataclass(frozen=True)
class ComponentChain:
    launch_dbm: float
    elements: tuple[Element, ...] = ()
    rx_threshold_dbm: float = -15.0
    path_min_dbm: float = -20.0

    def without(self, index: int) -> "ComponentChain":
        els = list(self.elements)
        del els[index]
        return replace(self, elements=tuple(els))

    def soa_indices(self) -> list[int]:
        return [i for i, e in enumerate(self.elements) if e.kind.active]


@dataclass
class BudgetTrace:
    stages: list[tuple[str, float]]
    feasible: bool
    min_dbm: float
    rx_dbm: float
    rx_threshold_dbm: float
    path_min_dbm: float

    @property
    def margin_db(self) -> float:
        return min(self.rx_dbm - self.rx_threshold_dbm, self.min_dbm - self.path_min_dbm)

    def to_text(self) -> str:
        lines = [f"{name}\t{dbm:.3f}" for name, dbm in self.stages]
        lines.append(f"feasible\t{'yes' if self.feasible else 'no'}")
        lines.append(f"margin_db\t{self.margin_db:.3f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["stage,element,dbm"]
        rows += [f"{i},{name},{dbm:.6f}" for i, (name, dbm) in enumerate(self.stages)]
        return "\n".join(rows) + "\n"


def walk_budget(chain: ComponentChain) -> BudgetTrace:
    """Cumulative power after each element, starting at the launch power."""
    level = float(chain.launch_dbm)
    stages = [("launch", level)]
    for e in chain.elements:
        level += e.gain_db
        stages.append((e.name, level))
    lo = min(v for _, v in stages)
    rx = stages[-1][1]
    ok = lo >= chain.path_min_dbm and rx >= chain.rx_threshold_dbm
    return BudgetTrace(stages, ok, lo, rx, chain.rx_threshold_dbm, chain.path_min_dbm)


def ramp_chain(p: RampParams, optics: OpticsDefaults = OpticsDefaults()) -> ComponentChain:
    """Transmitter-to-detector chain through one subnet of the given parameter set."""
    o = optics
    tx = [
        Element("modulator", ElementKind.MODULATOR, -o.modulator_loss_db),
        splitter(p.x, o.excess_db, name=f"tx splitter 1:{p.x}"),
        soa(o.soa_gain_db, name="tx soa gate"),
    ]
    if p.subnet_kind is SubnetKind.BROADCAST_SELECT:
        core = [coupler(p.J * p.lam, o.excess_db, name=f"star coupler {p.J * p.lam}:{p.J * p.lam}")]
    elif p.subnet_kind is SubnetKind.ROUTE_BROADCAST:
        core = [Element(f"awgr {p.lam}x{p.lam}", ElementKind.AWGR, -o.awgr_loss_db),
                coupler(p.J, o.excess_db, name=f"rack coupler {p.J}:{p.J}")]
    else:
        core = [Element(f"awgr {p.lam}x{p.lam}", ElementKind.AWGR, -o.awgr_loss_db),
                splitter(p.J, o.excess_db, name=f"crossbar splitter 1:{p.J}"),
                soa(o.soa_gain_db, name="crossbar soa gate"),
                combiner(p.J, o.excess_db, name=f"crossbar combiner {p.J}:1")]
    rx = [
        Element("rx filter", ElementKind.FILTER, -o.filter_loss_db),
        soa(o.soa_gain_db, name="rx soa gate"),
        combiner(p.x, o.excess_db, name=f"rx combiner {p.x}:1"),
    ]
    return ComponentChain(o.launch_dbm, tuple(tx + core + rx), o.rx_threshold_dbm, o.path_min_dbm)


# ---------------------------------------------------------------- intervals

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise PhysModelError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def of(cls, v) -> "Interval":
        if isinstance(v, Interval):
            return v
        if isinstance(v, tuple):
            return cls(float(v[0]), float(v[1]))
        return cls(float(v), float(v))

    def __add__(self, other):
        o = Interval.of(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __mul__(self, k):
        # only nonnegative quantities are carried, so endpoints stay ordered
        o = Interval.of(k)
        return Interval(self.lo * o.lo, self.hi * o.hi)

    __rmul__ = __mul__

    def __truediv__(self, k):
        o = Interval.of(k)
        return Interval(self.lo / o.hi, self.hi / o.lo)

    def contains(self, v: float, rel: float = 0.0) -> bool:
        return self.lo * (1 - rel) <= v <= self.hi * (1 + rel)

    @property
    def point(self) -> bool:
        return self.lo == self.hi

    def fmt(self, digits: int = 4) -> str:
        if self.point:
            return f"{self.lo:.{digits}g}"
        return f"{self.lo:.{digits}g}-{self.hi:.{digits}g}"


def ratio_split(a: Interval, b: Interval) -> tuple[Interval, Interval]:
    """Share of a in a+b (and of b), taken at both ends of the ranges."""
    lo_a, hi_a = a.lo / (a.lo + b.lo), a.hi / (a.hi + b.hi)
    sa = Interval(min(lo_a, hi_a), max(lo_a, hi_a))
    return sa, Interval(1 - sa.hi, 1 - sa.lo)


# ---------------------------------------------------------------- cost / power

class SystemKind(Enum):
    HPC_FATTREE = "hpc"
    DCN_FATTREE = "dcn"
    RAMP = "ramp"

    @classmethod
    def parse(cls, text: str) -> "SystemKind":
        key = text.strip().lower().replace("_", "-")
        aliases = {"hpc": cls.HPC_FATTREE, "hpc-fattree": cls.HPC_FATTREE, "superpod": cls.HPC_FATTREE,
                   "dcn": cls.DCN_FATTREE, "dcn-fattree": cls.DCN_FATTREE,
                   "ramp": cls.RAMP}
        if key not in aliases:
            raise PhysModelError(f"unsupported system kind {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class EpsSystem:
    """Electronic fat-tree replicated into parallel copies to reach the node bandwidth."""

    switch_ports: int
    port_rate: float
    tiers: int = 3
    switch_cost: float = 23_700.0
    switch_power: float = 404.0
    trx_power: Interval = Interval(4.35, 4.35)
    # modules per node per network copy; inter-switch links carry two
    trx_per_node: int = 5
    trx_per_path: int = 6

    @property
    def switches_per_path(self) -> int:
        return 2 * self.tiers - 1


HPC_SUPERPOD = EpsSystem(switch_ports=40, port_rate=200e9, switch_cost=23_700.0, switch_power=404.0,
                         trx_power=Interval(4.35, 4.35), trx_per_node=5)
DCN_FATTREE = EpsSystem(switch_ports=64, port_rate=100e9, switch_cost=44_000.0, switch_power=320.0,
                        trx_power=Interval(0.5, 3.5), trx_per_node=6)


@dataclass(frozen=True)
class CostModel:
    eps_cost_per_gbps: float = 1.0
    ocs_trx_cost: Interval = Interval(600.0, 1200.0)
    # alternative basis: a multiple of the EPS transceiver price
    ocs_trx_eps_ratio: Interval = Interval(1.5, 3.0)
    eps_trx_cost: float = 200.0
    coupler_cost: float = 3000.0
    ramp_trx_power: Interval = Interval(3.4, 3.8)
    soa_power: float = 0.88
    ramp_active_per_path: int = 2
    node_bandwidth: float = 12.8e12
    nodes: int = 65536
    hpc: EpsSystem = HPC_SUPERPOD
    dcn: EpsSystem = DCN_FATTREE

    def ocs_trx_cost_from_ratio(self) -> Interval:
        return self.ocs_trx_eps_ratio * self.eps_trx_cost


@dataclass
class CostReport:
    kind: SystemKind
    sigma: float
    items: dict
    trx_cost: Interval
    switch_cost: Interval
    total: Interval
    capacity_gbps: float
    per_gbps: Interval
    trx_share: Interval
    switch_share: Interval

    def rows(self) -> list[tuple[str, str]]:
        out = [("system", self.kind.value), ("sigma", f"{self.sigma:g}")]
        out += [(k, str(v)) for k, v in self.items.items()]
        out += [
            ("transceiver_cost_usd", self.trx_cost.fmt(6)),
            ("switch_cost_usd", self.switch_cost.fmt(6)),
            ("total_cost_usd", self.total.fmt(6)),
            ("capacity_gbps", f"{self.capacity_gbps:.6g}"),
            ("cost_per_gbps", self.per_gbps.fmt(4)),
            ("trx_switch_ratio", f"{self.trx_share.fmt(3)}:{self.switch_share.fmt(3)}"),
        ]
        return out


@dataclass
class PowerReport:
    kind: SystemKind
    sigma: float
    components_per_path: int
    pj_per_bit_path: Interval
    mw_per_gbps: Interval
    total_mw: Interval

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("system", self.kind.value),
            ("sigma", f"{self.sigma:g}"),
            ("components_per_path", str(self.components_per_path)),
            ("pj_per_bit_path", self.pj_per_bit_path.fmt(4)),
            ("mw_per_gbps", self.mw_per_gbps.fmt(4)),
            ("total_mw", self.total_mw.fmt(4)),
        ]


def parallel_networks(node_bandwidth: float, sigma: float, port_rate: float) -> int:
    """Copies of the network needed for node_bandwidth/sigma, rounded down, at least one."""
    share = Fraction(node_bandwidth).limit_denominator(10**6) / Fraction(sigma).limit_denominator(10**6)
    return max(1, math.floor(share / Fraction(port_rate).limit_denominator(10**6)))


def eps_counts(sys_: EpsSystem, nodes: int, sigma: float, node_bandwidth: float) -> dict:
    if sigma <= 0:
        raise PhysModelError("oversubscription must be positive")
    copies = parallel_networks(node_bandwidth, sigma, sys_.port_rate)
    per_net = math.ceil(sys_.switches_per_path * nodes / sys_.switch_ports)
    return {
        "parallel_networks": copies,
        "switches": per_net * copies,
        "transceivers": sys_.trx_per_node * nodes * copies,
    }


def _eps_system(kind: SystemKind, model: CostModel) -> EpsSystem:
    return model.hpc if kind is SystemKind.HPC_FATTREE else model.dcn


def ramp_counts(p: RampParams) -> dict:
    return {"transceivers": p.b * p.x * p.x * p.J * p.lam, "couplers": p.b * p.x ** 3}


def _ramp_capacity_gbps(p: RampParams) -> float:
    return p.nodes * p.x * p.b * p.B / 1e9


def cost_report(kind: SystemKind | str, sigma: float = 1.0, model: CostModel = CostModel(),
                ramp: RampParams | None = None) -> CostReport:
    kind = SystemKind.parse(kind) if isinstance(kind, str) else kind
    if kind is SystemKind.RAMP:
        p = ramp or RampParams(32, 32, 64)
        items = ramp_counts(p)
        trx = model.ocs_trx_cost * items["transceivers"]
        sw = Interval.of(model.coupler_cost * items["couplers"])
        cap = _ramp_capacity_gbps(p)
        sigma = 1.0
    else:
        s = _eps_system(kind, model)
        items = eps_counts(s, model.nodes, sigma, model.node_bandwidth)
        trx = Interval.of(model.eps_cost_per_gbps * s.port_rate / 1e9 * items["transceivers"])
        sw = Interval.of(s.switch_cost * items["switches"])
        cap = model.nodes * items["parallel_networks"] * s.port_rate / 1e9
    total = trx + sw
    ts, ss = ratio_split(trx, sw)
    return CostReport(kind, sigma, items, trx, sw, total, cap, total / cap, ts, ss)


def power_report(kind: SystemKind | str, sigma: float = 1.0, model: CostModel = CostModel(),
                 ramp: RampParams | None = None, line_rate: float | None = None) -> PowerReport:
    """Energy per bit along one active path and total network power.

    ``line_rate`` overrides the per-transceiver rate at unchanged component power.
    """
    kind = SystemKind.parse(kind) if isinstance(kind, str) else kind
    if kind is SystemKind.RAMP:
        p = ramp or RampParams(32, 32, 64)
        rate = line_rate or p.B
        # the integrated transceiver includes the two SOA gates of its path
        per_path_w = model.ramp_trx_power
        total_w = model.ramp_trx_power * ramp_counts(p)["transceivers"]
        cap = p.nodes * p.x * p.b * rate / 1e9
        comps = model.ramp_active_per_path
        sigma = 1.0
    else:
        s = _eps_system(kind, model)
        rate = line_rate or s.port_rate
        counts = eps_counts(s, model.nodes, sigma, model.node_bandwidth)
        switch_w_per_port = s.switch_power / s.switch_ports
        per_path_w = s.trx_power * s.trx_per_path + switch_w_per_port * s.switches_per_path
        total_w = s.trx_power * counts["transceivers"] + s.switch_power * counts["switches"]
        cap = model.nodes * counts["parallel_networks"] * rate / 1e9
        comps = s.trx_per_path + s.switches_per_path
    pj = per_path_w / rate * 1e12
    return PowerReport(kind, sigma, comps, pj, total_w / cap * 1e3, total_w / 1e6)
