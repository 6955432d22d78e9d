"""Training-iteration model: measured compute plus collective completion times."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

from .config import ConfigError, Schema, data_text, parse_config, parse_int, parse_size, _locate
from .engine import CollectiveOp
from .estimator import EstimatorOptions, NodeSpec, estimate
from .topologies import Topology


class WorkloadError(ValueError):
    pass


class Group(Enum):
    DP = "dp"
    MP = "mp"
    ALL = "all"


@dataclass(frozen=True)
class CollectiveCall:
    op: CollectiveOp
    group: Group
    msg_bytes: int
    count: int = 1

    def __post_init__(self):
        if self.msg_bytes <= 0:
            raise WorkloadError("collective message size must be positive")
        if self.count < 1:
            raise WorkloadError("collective count must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "CollectiveCall":
        """``<op> <group> <bytes> [count]``, e.g. ``all-reduce dp 2.55GB 1``."""
        parts = text.split()
        if len(parts) not in (3, 4):
            raise ValueError(f"collective {text!r} needs: op group bytes [count]")
        try:
            op, group = CollectiveOp.parse(parts[0]), Group(parts[1].lower())
        except (KeyError, ValueError) as exc:
            raise ValueError(f"collective {text!r}: {exc}") from None
        count = parse_int(parts[3]) if len(parts) == 4 else 1
        return cls(op, group, parse_size(parts[2]), count)


@dataclass(frozen=True)
class WorkloadConfig:
    name: str
    dp: int
    mp: int
    compute_s: float  # per iteration, per worker
    steps: int = 1
    collectives: tuple[CollectiveCall, ...] = ()
    family: str = ""
    compute_source: str = ""

    def __post_init__(self):
        if self.dp < 1 or self.mp < 1:
            raise WorkloadError("parallelism levels must be >= 1")
        if self.compute_s < 0:
            raise WorkloadError("compute time must be nonnegative")
        if self.steps < 1:
            raise WorkloadError("step count must be >= 1")

    @property
    def workers(self) -> int:
        return self.dp * self.mp

    def group_size(self, g: Group) -> int:
        return {Group.DP: self.dp, Group.MP: self.mp, Group.ALL: self.workers}[g]


class SystemModel:
    """A topology plus node model; collective times are memoised."""

    def __init__(self, name: str, topology: Topology, spec: NodeSpec, strategy: str = "best",
                 opts: EstimatorOptions = EstimatorOptions()):
        self.name, self.topology, self.spec, self.strategy, self.opts = name, topology, spec, strategy, opts
        self._memo: dict = {}

    def collective_time(self, op: CollectiveOp, workers: int, msg_bytes: int) -> float:
        if workers < 2:
            return 0.0
        key = (op, workers, msg_bytes)
        if key not in self._memo:
            self._memo[key] = estimate(op, msg_bytes, self.topology, workers, self.spec,
                                       self.strategy, self.opts).total
        return self._memo[key]


@dataclass
class IterationResult:
    workload: str
    system: str
    compute: float
    comm: float
    exposed_comm: float
    total: float
    steps: int
    calls: list = field(default_factory=list)

    @property
    def comm_fraction(self) -> float:
        return self.exposed_comm / self.total if self.total > 0 else 0.0

    @property
    def training_time(self) -> float:
        return self.total * self.steps

    def with_compute_speedup(self, factor: float) -> "IterationResult":
        """Same communication, compute divided by ``factor``."""
        if factor <= 0:
            raise WorkloadError("speedup factor must be positive")
        comp = self.compute / factor
        hidden = self.comm - self.exposed_comm
        # keep the overlap share of the smaller term
        ratio = hidden / min(self.comm, self.compute) if min(self.comm, self.compute) > 0 else 0.0
        exposed = self.comm - ratio * min(self.comm, comp)
        return IterationResult(self.workload, self.system, comp, self.comm, exposed, comp + exposed,
                               self.steps, list(self.calls))


def iteration_time(w: WorkloadConfig, system: SystemModel, overlap: float = 0.0) -> IterationResult:
    """compute + communication; ``overlap`` in [0, 1] hides that share of the smaller term."""
    if not 0.0 <= overlap <= 1.0:
        raise WorkloadError("overlap must lie in [0, 1]")
    if w.workers > system.topology.nodes:
        raise WorkloadError(f"{w.name}: {w.workers} workers exceed {system.name} ({system.topology.nodes} nodes)")
    calls, comm = [], 0.0
    for c in w.collectives:
        n = w.group_size(c.group)
        t = system.collective_time(c.op, n, c.msg_bytes)
        calls.append((c, t))
        comm += t * c.count
    exposed = comm - overlap * min(comm, w.compute_s)
    return IterationResult(w.name, system.name, w.compute_s, comm, exposed, w.compute_s + exposed, w.steps, calls)


def training_time(w: WorkloadConfig, system: SystemModel, overlap: float = 0.0) -> float:
    return iteration_time(w, system, overlap).training_time


# ---------------------------------------------------------------- configs

def _collectives(text: str) -> tuple[CollectiveCall, ...]:
    return tuple(CollectiveCall.parse(t.strip()) for t in text.split(";") if t.strip())


WORKLOAD_SCHEMA: Schema = {"*": {"family": str, "dp": parse_int, "mp": parse_int, "compute_s": float,
                                 "steps": parse_int, "collectives": _collectives,
                                 "compute_source": str, "description": str}}


def parse_workloads(text: str, source: str = "<text>") -> list[WorkloadConfig]:
    cfg = parse_config(text, WORKLOAD_SCHEMA, source, required={"*": ("dp", "mp", "compute_s")})
    out = []
    for name, s in cfg.sections.items():
        try:
            out.append(WorkloadConfig(name, s["dp"], s["mp"], s["compute_s"], s.get("steps", 1),
                                      s.get("collectives", ()), s.get("family", ""),
                                      s.get("compute_source", "")))
        except WorkloadError as exc:
            line, col = _locate(text, name, None)
            raise ConfigError(str(exc), source, line, col) from None
    return out


def shipped_workloads(family: str) -> list[WorkloadConfig]:
    text, source = data_text(f"{family}.ini")
    return parse_workloads(text, source)


RESULT_FIELDS = ["workload", "system", "workers", "compute_s", "comm_s", "exposed_comm_s", "total_s",
                 "comm_fraction", "steps", "training_s"]


def results_csv(rows: list[tuple[WorkloadConfig, IterationResult]]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(RESULT_FIELDS)
    for w, r in rows:
        wr.writerow([w.name, r.system, w.workers, f"{r.compute:.9e}", f"{r.comm:.9e}", f"{r.exposed_comm:.9e}",
                     f"{r.total:.9e}", f"{r.comm_fraction:.6f}", r.steps, f"{r.training_time:.9e}"])
    return buf.getvalue()
