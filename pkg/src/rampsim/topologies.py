"""Physical topologies, hierarchy tables and greedy job placement.

Node ids are flat integers. Fat-Tree nodes are addressed mixed radix with the
first tier (the server) as the least significant digit, so a server's GPUs
are contiguous, and so is every higher subtree.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from enum import Enum
from fractions import Fraction

from .params import RampParams, SubnetKind, _exact


class TopologyError(ValueError):
    """Unsupported size for the topology kind, or too few nodes for a job."""


class TopologyKind(Enum):
    RAMP = "ramp"
    FAT_TREE = "fat-tree"
    TORUS_2D = "torus2d"
    RING = "ring"
    DEGREE_LIMITED_OCS = "degree-limited-ocs"

    @classmethod
    def parse(cls, text: str) -> "TopologyKind":
        key = text.strip().lower().replace("_", "-")
        aliases = {"fattree": "fat-tree", "torus": "torus2d", "torus-2d": "torus2d",
                   "topoopt": "degree-limited-ocs", "ocs": "degree-limited-ocs"}
        key = aliases.get(key, key)
        for k in cls:
            if k.value == key:
                return k
        raise TopologyError(f"unknown topology kind {text!r}")


@dataclass(frozen=True)
class Tier:
    """One hierarchy level. ``radix`` children form one subtree of this level."""

    name: str
    radix: int
    rate: int  # bits/s per node port on links of this tier
    oversub: Fraction = Fraction(1)
    switch_ns: float = 0.0
    prop_ns: float = 0.0


@dataclass(frozen=True)
class NodeIO:
    transceivers: int
    rate: int  # bits/s per transceiver
    mem_to_trx_ns: float = 0.0
    io_latency_ns: float = 100.0

    @property
    def capacity(self) -> int:
        return self.transceivers * self.rate


# defaults for the Fat-Tree (DGX-style SuperPod scaled to four tiers)
FAT_TREE_RADIX = (8, 16, 16, 32)
FAT_TREE_PROP_NS = (20.0, 10.0, 50.0, 1250.0)
NVSWITCH_NS = 100.0
IB_SWITCH_NS = 350.0
INTRA_RATE = 2_400_000_000_000
INTER_RATE = 200_000_000_000
RAMP_PROP_NS = 1300.0
TORUS_HOP_NS = {128: 156.0, 512: 520.0}
OCS_RATE = 1_600_000_000_000
OCS_HOP_NS = 260.0
OCS_RECONFIG_NS = 10_000_000.0


@dataclass(frozen=True)
class Topology:
    kind: TopologyKind
    nodes: int
    io: NodeIO
    tiers: tuple[Tier, ...] = ()
    dims: tuple[int, ...] = ()  # torus shape (rows, cols)
    hop_ns: tuple[float, ...] = ()  # per-dimension hop latency (torus) or ring hop latency
    link_rate: int = 0  # per-link rate for torus / ring / OCS kinds
    degree: int = 0
    reconfig_ns: float = 0.0
    ramp: RampParams | None = None
    prop_ns: float = 0.0  # RAMP node-to-node propagation

    # ---- structure

    @property
    def node_capacity(self) -> int:
        return self.io.capacity

    def spans(self) -> list[int]:
        """Nodes per subtree at each tier (fat-tree)."""
        out, s = [], 1
        for t in self.tiers:
            s *= t.radix
            out.append(s)
        return out

    def lca_level(self, a: int, b: int) -> int:
        """1-based tier of the lowest common subtree; 0 when a == b."""
        if a == b:
            return 0
        for lvl, s in enumerate(self.spans(), start=1):
            if a // s == b // s:
                return lvl
        raise TopologyError("nodes outside the hierarchy")

    def torus_coord(self, n: int) -> tuple[int, int]:
        return divmod(n, self.dims[1])

    def neighbors(self, n: int) -> list[int]:
        if self.kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS):
            if self.nodes == 1:
                return []
            return sorted({(n - 1) % self.nodes, (n + 1) % self.nodes} - {n})
        if self.kind is TopologyKind.TORUS_2D:
            r, c = self.torus_coord(n)
            R, C = self.dims
            out = {((r + dr) % R) * C + (c + dc) % C for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))}
            out.discard(n)
            return sorted(out)
        return [m for m in range(self.nodes) if m != n]

    def uplink_capacity(self, level: int) -> float:
        """Aggregate bits/s leaving one subtree of ``level`` (1-based)."""
        spans = self.spans()
        above = self.tiers[level]  # tier carrying traffic out of this subtree
        return spans[level - 1] * above.rate / above.oversub

    # ---- pairwise figures (no sharing)

    def hops(self, a: int, b: int) -> int:
        if self.kind is TopologyKind.TORUS_2D:
            (ra, ca), (rb, cb) = self.torus_coord(a), self.torus_coord(b)
            R, C = self.dims
            dr, dc = abs(ra - rb), abs(ca - cb)
            return min(dr, R - dr) + min(dc, C - dc)
        if self.kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS):
            d = abs(a - b)
            return min(d, self.nodes - d)
        return 1 if a != b else 0

    def path_latency_ns(self, a: int, b: int) -> float:
        io_ns = 2 * self.io.io_latency_ns
        if a == b:
            return 0.0
        if self.kind is TopologyKind.RAMP:
            return io_ns + self.prop_ns
        if self.kind is TopologyKind.FAT_TREE:
            return self.level_latency_ns(self.lca_level(a, b))
        if self.kind is TopologyKind.TORUS_2D:
            (ra, ca), (rb, cb) = self.torus_coord(a), self.torus_coord(b)
            R, C = self.dims
            dr, dc = abs(ra - rb), abs(ca - cb)
            return io_ns + min(dr, R - dr) * self.hop_ns[0] + min(dc, C - dc) * self.hop_ns[1]
        return io_ns + self.hops(a, b) * self.hop_ns[0]

    def level_latency_ns(self, level: int) -> float:
        """Fat-tree path latency for a pair whose lowest common subtree is ``level``.

        Intra-server paths cross one NVSwitch; a path topping out at tier L >= 2
        crosses 2L-3 packet switches. Each tier's propagation is paid up and down.
        """
        io_ns = 2 * self.io.io_latency_ns
        if level == 0:
            return 0.0
        if level == 1:
            t = self.tiers[0]
            return io_ns + t.switch_ns + 2 * t.prop_ns
        sw = self.tiers[1].switch_ns
        prop = sum(self.tiers[i].prop_ns for i in range(1, level))
        return io_ns + (2 * level - 3) * sw + 2 * prop

    def pair_bandwidth(self, a: int, b: int) -> float:
        """Unshared rate between two nodes (bits/s)."""
        if a == b:
            return float(self.node_capacity)
        if self.kind is TopologyKind.RAMP:
            return float(self.io.rate * self.ramp.b)
        if self.kind is TopologyKind.FAT_TREE:
            lvl = self.lca_level(a, b)
            rates = [self.tiers[0].rate] if lvl == 1 else [t.rate for t in self.tiers[1:lvl]]
            return float(min(rates))
        return float(self.link_rate)

    def hierarchy_rows(self) -> list[dict]:
        rows = []
        if self.kind is TopologyKind.FAT_TREE:
            for i, (t, s) in enumerate(zip(self.tiers, self.spans()), start=1):
                rows.append({"level": i, "name": t.name, "radix": t.radix, "span": s, "rate_bps": t.rate,
                             "oversub": str(t.oversub), "switch_ns": t.switch_ns, "prop_ns": t.prop_ns,
                             "path_latency_ns": self.level_latency_ns(i)})
        elif self.kind is TopologyKind.TORUS_2D:
            for i, (n, h) in enumerate(zip(self.dims, self.hop_ns), start=1):
                rows.append({"level": i, "name": f"dim{i}", "radix": n, "span": n, "rate_bps": self.link_rate,
                             "oversub": "1", "switch_ns": 0.0, "prop_ns": h,
                             "path_latency_ns": 2 * self.io.io_latency_ns + (n // 2) * h})
        else:
            rows.append({"level": 1, "name": self.kind.value, "radix": self.nodes, "span": self.nodes,
                         "rate_bps": self.link_rate or self.io.rate, "oversub": "1", "switch_ns": 0.0,
                         "prop_ns": self.prop_ns or (self.hop_ns[0] if self.hop_ns else 0.0),
                         "path_latency_ns": (2 * self.io.io_latency_ns + self.prop_ns) if self.kind is
                         TopologyKind.RAMP else self.path_latency_ns(0, self.nodes // 2)})
        return rows

    def hierarchy_csv(self) -> str:
        rows = self.hierarchy_rows()
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()


# --------------------------------------------------------------------------
# construction


def _fat_tree_radices(N: int, radix: tuple[int, ...]) -> tuple[int, ...]:
    cap = math.prod(radix)
    if N > cap:
        raise TopologyError(f"fat-tree tiers {list(radix)} hold {cap} nodes, {N} requested")
    out, span = [], 1
    for r in radix:
        if span >= N:
            break
        need = min(r, -(-N // span))
        out.append(need)
        span *= need
    if not out:
        out = [1]
    return tuple(out)


def build_topology(kind: TopologyKind | str, size: dict | None = None, tech: dict | None = None) -> Topology:
    """Build a topology; ``size`` and ``tech`` are plain dicts (config sections).

    Fat-tree size keys: nodes, radix (list per tier), oversub (list per tier or
    scalar for tiers above the server). Tech keys: intra_rate, inter_rate,
    switch_ns, nvswitch_ns, prop_ns (list), io_latency_ns, mem_to_trx_ns.
    """
    if isinstance(kind, str):
        kind = TopologyKind.parse(kind)
    size = dict(size or {})
    tech = dict(tech or {})
    io_ns = float(tech.get("io_latency_ns", 100.0))
    m2t = float(tech.get("mem_to_trx_ns", 0.0))
    if kind is TopologyKind.RAMP:
        p = size.get("params")
        if p is None:
            p = RampParams(int(size.get("x", 32)), int(size.get("J", 32)), int(size.get("lam", 64)),
                           int(size.get("b", 1)), int(tech.get("line_rate", 400_000_000_000)),
                           SubnetKind.parse(str(size.get("subnet_kind", "bs"))))
        return Topology(kind, p.nodes, NodeIO(p.x * p.b, p.B, m2t, io_ns), ramp=p,
                        prop_ns=float(tech.get("prop_ns", RAMP_PROP_NS)), degree=p.nodes - 1,
                        reconfig_ns=float(tech.get("reconfig_ns", 0.0)))
    if kind is TopologyKind.FAT_TREE:
        N = int(size.get("nodes", math.prod(FAT_TREE_RADIX)))
        base = tuple(int(r) for r in size.get("radix", FAT_TREE_RADIX))
        radices = _fat_tree_radices(N, base)  # the last subtree may be partly filled
        intra = int(tech.get("intra_rate", INTRA_RATE))
        inter = int(tech.get("inter_rate", INTER_RATE))
        props = list(tech.get("prop_ns", FAT_TREE_PROP_NS))
        ov = size.get("oversub", 1)
        if not isinstance(ov, (list, tuple)):
            ov = [1] + [ov] * (len(base) - 1)
        ov = [_exact(v) for v in ov]
        if any(v < 1 for v in ov):
            raise TopologyError("oversubscription must be >= 1:1")
        names = ("server", "leaf", "spine", "core", "tier5", "tier6")
        tiers = []
        for i, r in enumerate(radices):
            tiers.append(Tier(names[i], r, intra if i == 0 else inter,
                              ov[i] if i < len(ov) else Fraction(1),
                              float(tech.get("nvswitch_ns", NVSWITCH_NS)) if i == 0 else
                              float(tech.get("switch_ns", IB_SWITCH_NS)),
                              float(props[i]) if i < len(props) else float(props[-1])))
        nio = NodeIO(int(tech.get("transceivers", 1)), inter if len(tiers) > 1 else intra, m2t, io_ns)
        return Topology(kind, N, nio, tiers=tuple(tiers), degree=1)
    if kind is TopologyKind.TORUS_2D:
        dims = size.get("dims")
        if dims is None:
            N = int(size.get("nodes", 65536))
            if N & (N - 1) == 0:
                # powers of two split 2^floor((k-1)/2) x rest, e.g. 65536 -> 128 x 512
                r = 1 << ((N.bit_length() - 2) // 2)
            else:
                r = math.isqrt(N)
                while N % r:
                    r -= 1
            dims = (r, N // r)
        dims = tuple(int(d) for d in dims)
        if len(dims) != 2 or min(dims) < 1:
            raise TopologyError("torus needs two positive dimensions")
        node_rate = int(tech.get("node_rate", INTRA_RATE))
        link = node_rate // 4
        hop = tuple(float(tech.get("hop_ns", TORUS_HOP_NS[128] if d <= 128 else TORUS_HOP_NS[512]))
                    for d in dims)
        return Topology(kind, dims[0] * dims[1], NodeIO(4, link, m2t, io_ns), dims=dims, hop_ns=hop,
                        link_rate=link, degree=4)
    if kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS):
        N = int(size.get("nodes", 65536))
        if N < 1:
            raise TopologyError("ring needs at least one node")
        ocs = kind is TopologyKind.DEGREE_LIMITED_OCS
        rate = int(tech.get("link_rate", OCS_RATE if ocs else INTRA_RATE))
        hop = float(tech.get("hop_ns", OCS_HOP_NS if ocs else 100.0))
        return Topology(kind, N, NodeIO(1, rate, m2t, io_ns), hop_ns=(hop,), link_rate=rate, degree=2,
                        reconfig_ns=float(tech.get("reconfig_ns", OCS_RECONFIG_NS if ocs else 0.0)))
    raise TopologyError(f"unsupported kind {kind}")


# --------------------------------------------------------------------------
# placement


@dataclass(frozen=True)
class Placement:
    topology: Topology
    nodes: tuple[int, ...]
    diameter: float  # worst pairwise latency in ns
    level: int = 0  # fat-tree: highest tier spanned
    ramp: RampParams | None = None  # RAMP: the sub-box the job runs on

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def node_array(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=np.int64)

    @cached_property
    def contiguous(self) -> bool:
        return self.nodes == tuple(range(len(self.nodes)))

    def bandwidth(self, i: int, k: int) -> float:
        return self.topology.pair_bandwidth(self.nodes[i], self.nodes[k])

    def latency(self, i: int, k: int) -> float:
        return self.topology.path_latency_ns(self.nodes[i], self.nodes[k])

    def table(self, limit: int = 4096) -> list[tuple[int, int, float, float]]:
        """Pairwise (i, k, bandwidth, latency) rows; only for small jobs."""
        if self.size > limit:
            raise TopologyError(f"pair table limited to {limit} nodes")
        return [(i, k, self.bandwidth(i, k), self.latency(i, k))
                for i in range(self.size) for k in range(self.size) if i != k]


def ramp_sub_box(p: RampParams, workers: int) -> RampParams:
    """Smallest-step sub-box (x', J', lam') of ``p`` holding ``workers`` nodes.

    Candidates must be plannable (lam' a multiple of x'). Preference: an exact
    fit (the plan must cover the job), then fewest active steps, then fewest
    spare nodes, then larger x' (more transceivers per node), then lower lam'.
    """
    best = None
    for x in range(2, p.x + 1):
        for J in range(1, min(x, p.J) + 1):
            for lam in range(x, p.lam + 1, x):
                n = x * J * lam
                if n < workers:
                    continue
                steps = 2 + (J > 1) + (lam // x > 1)
                key = (n != workers, steps, n - workers, -x, lam, J)
                if best is None or key < best[0]:
                    best = (key, (x, J, lam))
                break  # larger lam only adds spare nodes at equal (x, J)
    if best is None:
        raise TopologyError(f"{workers} workers do not fit in {p}")
    x, J, lam = best[1]
    return RampParams(x, J, lam, p.b, p.B, p.subnet_kind)


def select_nodes(t: Topology, workers: int) -> Placement:
    """Greedy placement: highest bandwidth first, then lowest latency, lowest rank on ties."""
    if workers < 1:
        raise TopologyError("need at least one worker")
    if workers > t.nodes:
        raise TopologyError(f"{workers} workers requested, topology has {t.nodes} nodes")
    if t.kind is TopologyKind.RAMP:
        box = ramp_sub_box(t.ramp, workers)
        nodes = []
        for g in range(box.x):
            for j in range(box.J):
                for lam in range(box.lam):
                    nodes.append(t.ramp.rank_of(g, j, lam))
        nodes = tuple(sorted(nodes)[:workers]) if len(nodes) > workers else tuple(sorted(nodes))
        diam = t.path_latency_ns(nodes[0], nodes[-1]) if len(nodes) > 1 else 0.0
        return Placement(t, nodes, diam, ramp=box)
    if t.kind is TopologyKind.FAT_TREE:
        # the smallest subtree containing the job keeps every pair at the best tier
        level = 0
        for lvl, s in enumerate(t.spans(), start=1):
            level = lvl
            if s >= workers:
                break
        if workers == 1:
            level = 0
        nodes = tuple(range(workers))
        return Placement(t, nodes, t.level_latency_ns(level), level=level)
    if t.kind is TopologyKind.TORUS_2D:
        R, C = t.dims
        # fill a near-square block so the logical diameter stays small
        # prefer an exact rows x cols block, widest side no larger than needed
        fits = [c for c in range(1, min(C, workers) + 1) if workers % c == 0 and workers // c <= R]
        if fits:
            cols = min(fits, key=lambda c: (abs(c - math.sqrt(workers)), -c))
        else:
            cols = min(C, max(1, math.isqrt(workers - 1) + 1))
        rows = -(-workers // cols)
        if rows > R:
            cols, rows = C, -(-workers // C)
        nodes = []
        for r in range(rows):
            for c in range(cols):
                if len(nodes) < workers:
                    nodes.append(r * C + c)
        nodes = tuple(nodes)
        diam = max(t.path_latency_ns(nodes[0], n) for n in nodes) if workers > 1 else 0.0
        return Placement(t, nodes, diam)
    nodes = tuple(range(workers))
    diam = t.path_latency_ns(0, workers // 2) if workers > 1 else 0.0
    return Placement(t, nodes, diam)


def restrict(t: Topology, workers: int) -> Topology:
    """Topology rebuilt at a job's size (used by sweeps over N)."""
    if t.kind is TopologyKind.FAT_TREE:
        radices = _fat_tree_radices(workers, tuple(x.radix for x in t.tiers))
        tiers = tuple(replace(x, radix=r) for x, r in zip(t.tiers, radices))
        return replace(t, nodes=workers, tiers=tiers)
    if t.kind in (TopologyKind.RING, TopologyKind.DEGREE_LIMITED_OCS):
        return replace(t, nodes=workers)
    raise TopologyError(f"restrict not supported for {t.kind.value}")
