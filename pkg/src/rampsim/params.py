"""RAMP parameter set, node addressing and closed-form scalability formulas."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction


class InvalidParams(ValueError):
    """Raised when a parameter tuple violates the architecture rules."""


class SubnetKind(Enum):
    BROADCAST_SELECT = "bs"
    ROUTE_BROADCAST = "rb"
    ROUTE_SWITCH = "rs"

    @classmethod
    def parse(cls, text: str) -> "SubnetKind":
        key = text.strip().lower().replace("&", "").replace("-", "_")
        aliases = {
            "bs": cls.BROADCAST_SELECT,
            "broadcast_select": cls.BROADCAST_SELECT,
            "broadcastselect": cls.BROADCAST_SELECT,
            "rb": cls.ROUTE_BROADCAST,
            "route_broadcast": cls.ROUTE_BROADCAST,
            "routebroadcast": cls.ROUTE_BROADCAST,
            "rs": cls.ROUTE_SWITCH,
            "route_switch": cls.ROUTE_SWITCH,
            "routeswitch": cls.ROUTE_SWITCH,
        }
        if key not in aliases:
            raise InvalidParams(f"unknown subnet kind {text!r}")
        return aliases[key]


@dataclass(frozen=True, order=True)
class NodeCoord:
    """Worker address: communication group g, rack j, device number lam."""

    rank: int
    g: int = field(compare=False)
    j: int = field(compare=False)
    lam: int = field(compare=False)

    def __repr__(self) -> str:
        return f"NodeCoord(g={self.g}, j={self.j}, lam={self.lam}, rank={self.rank})"


@dataclass(frozen=True)
class RampParams:
    """Architecture tuple (x, J, Lambda, b, B).

    ``B`` is the effective line rate of one transceiver in bits/second.
    """

    x: int
    J: int
    lam: int
    b: int = 1
    B: int = 400_000_000_000
    subnet_kind: SubnetKind = SubnetKind.BROADCAST_SELECT

    def __post_init__(self):
        for name in ("x", "J", "lam", "b"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise InvalidParams(f"{name} must be an integer")
        if self.x < 2:
            raise InvalidParams("x must be >= 2")
        if self.J < 1:
            raise InvalidParams("J must be >= 1")
        if self.J > self.x:
            raise InvalidParams("J must not exceed x (re-arrangeable non-blocking condition)")
        if self.lam < 1:
            raise InvalidParams("lam must be >= 1")
        if self.b < 1:
            raise InvalidParams("b must be >= 1")
        if not self.B > 0:
            raise InvalidParams("B must be positive")
        if not isinstance(self.subnet_kind, SubnetKind):
            raise InvalidParams("subnet_kind must be a SubnetKind")

    @property
    def nodes(self) -> int:
        return self.lam * self.J * self.x

    @property
    def device_groups(self) -> int:
        """Lambda / x, the number of device groups per rack (planner needs exact division)."""
        return self.lam // self.x

    def rank_of(self, g: int, j: int, lam: int) -> int:
        if not (0 <= g < self.x and 0 <= j < self.J and 0 <= lam < self.lam):
            raise InvalidParams(f"coordinate ({g}, {j}, {lam}) out of range")
        return g * self.J * self.lam + j * self.lam + lam

    def coord(self, rank: int) -> NodeCoord:
        if not 0 <= rank < self.nodes:
            raise InvalidParams(f"rank {rank} out of range [0, {self.nodes})")
        g, rest = divmod(rank, self.J * self.lam)
        j, lam = divmod(rest, self.lam)
        return NodeCoord(rank, g, j, lam)

    def node(self, g: int, j: int, lam: int) -> NodeCoord:
        return NodeCoord(self.rank_of(g, j, lam), g, j, lam)

    def all_coords(self) -> list[NodeCoord]:
        return [self.coord(r) for r in range(self.nodes)]

    def with_kind(self, kind: SubnetKind) -> "RampParams":
        return RampParams(self.x, self.J, self.lam, self.b, self.B, kind)


@dataclass(frozen=True)
class ScaleReport:
    nodes: int
    node_capacity: int  # bits/s
    total_capacity: int  # bits/s
    bisection_bw: int  # lam*J*x^3/2, in per-transceiver channel units
    subnet_count: int
    fibre_count: int
    link_count: int
    transceiver_count: int

    def as_dict(self) -> dict:
        return asdict(self)


def derived_quantities(p: RampParams) -> ScaleReport:
    node_cap = p.b * p.x * p.B
    return ScaleReport(
        nodes=p.nodes,
        node_capacity=node_cap,
        total_capacity=p.nodes * node_cap,
        # kept as the closed form; it counts channels, not bits/s
        bisection_bw=Fraction(p.lam * p.J * p.x**3, 2),
        subnet_count=p.b * p.x**3,
        fibre_count=2 * p.b * p.J * p.x**3,
        link_count=2 * p.J * p.x**2,
        transceiver_count=p.b * p.x * p.nodes,
    )


def _exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # decimal literal semantics: 0.05 means 5/100, not its binary neighbour
        return Fraction(repr(value))
    return Fraction(value)


def min_message_per_slot(p: RampParams | int, slot_ns, overhead_fraction=0) -> int:
    """Bytes one transceiver carries in one slot after the guard overhead.

    ``p`` may be a RampParams or a bare line rate in bits/s.
    """
    rate = p.B if isinstance(p, RampParams) else p
    slot = _exact(slot_ns)
    ovh = _exact(overhead_fraction)
    if slot < 0:
        raise InvalidParams("slot duration must be nonnegative")
    if not 0 <= ovh < 1:
        raise InvalidParams("overhead fraction must lie in [0, 1)")
    bits = _exact(rate) * slot * (1 - ovh) / 1_000_000_000
    return math.floor(bits / 8)
