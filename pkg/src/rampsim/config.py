"""INI-style configuration with schema checks.

Files are read with :mod:`configparser`; on top of it every section is
checked against a schema so that unknown or malformed keys fail early with
the line and column of the offending entry.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

ENV_CONFIG_DIR = "RAMPSIM_CONFIG_DIR"


class ConfigError(ValueError):
    def __init__(self, msg: str, source: str = "<text>", line: int | None = None, col: int | None = None):
        self.msg, self.source, self.line, self.col = msg, source, line, col
        where = source
        if line is not None:
            where += f":{line}"
            if col is not None:
                where += f":{col}"
        super().__init__(f"{where}: {msg}")


# ---------------------------------------------------------------- value types

_SIZE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([kKmMgGtT]?i?)[bB]?\s*$")
_UNITS = {"": 1, "k": 10**3, "m": 10**6, "g": 10**9, "t": 10**12,
          "ki": 2**10, "mi": 2**20, "gi": 2**30, "ti": 2**40}


def parse_size(text: str) -> int:
    """Byte count with optional decimal (kB, MB, GB, TB) or binary (KiB...) suffix."""
    m = _SIZE.match(str(text))
    if not m:
        raise ValueError(f"bad size {text!r}")
    num, unit = m.groups()
    return int(round(float(num) * _UNITS[unit.lower()]))


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"bad boolean {text!r}")


def parse_int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def int_list(text: str) -> list[int]:
    return [parse_int(t) for t in re.split(r"[,\s]+", str(text).strip()) if t]


def float_list(text: str) -> list[float]:
    return [float(t) for t in re.split(r"[,\s]+", str(text).strip()) if t]


def str_list(text: str) -> list[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def size_list(text: str) -> list[int]:
    return [parse_size(t) for t in str_list(text)]


def int_range(text: str) -> list[int]:
    """``16..65536`` (powers of two between the ends) or a comma list."""
    t = str(text).strip()
    if ".." in t:
        lo, hi = (parse_int(v) for v in t.split("..", 1))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        out, v = [], lo
        while v <= hi:
            out.append(v)
            v *= 2
        return out
    return int_list(t)


# ---------------------------------------------------------------- loading

Schema = dict[str, dict[str, Callable]]


@dataclass
class Config:
    source: str
    sections: dict[str, dict]
    text: str = ""

    def section(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"missing section [{name}]", self.source)
        return self.sections[name]

    def get(self, name: str, default=None) -> dict:
        return self.sections.get(name, default if default is not None else {})

    def names(self, prefix: str = "") -> list[str]:
        return [s for s in self.sections if s.startswith(prefix)]


def _locate(text: str, section: str, key: str | None) -> tuple[int | None, int | None]:
    cur = None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return no, line.index("[") + 1
            continue
        if cur == section and key is not None:
            m = re.match(r"\s*([^=:]+?)\s*[=:]", line)
            if m and m.group(1).strip().lower() == key.lower():
                return no, line.index(m.group(1)) + 1
    return None, None


def _schema_for(schema: Schema, section: str) -> dict | None:
    if section in schema:
        return schema[section]
    for pattern, keys in schema.items():
        if pattern.endswith("*") and section.startswith(pattern[:-1]):
            return keys
    return None


def parse_config(text: str, schema: Schema, source: str = "<text>",
                 required: dict[str, tuple[str, ...]] | None = None) -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   strict=True, empty_lines_in_values=False)
    cp.optionxform = str  # keys are case sensitive (J vs j)
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", source, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", source, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("entry before any [section]", source, exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparsable line", source, line, 1) from None
    out: dict[str, dict] = {}
    for sect in cp.sections():
        keys = _schema_for(schema, sect)
        if keys is None:
            line, col = _locate(text, sect, None)
            raise ConfigError(f"unknown section [{sect}]", source, line, col)
        vals = {}
        for k, raw in cp.items(sect):
            if k not in keys:
                line, col = _locate(text, sect, k)
                raise ConfigError(f"unknown key {k!r} in [{sect}]", source, line, col)
            try:
                vals[k] = keys[k](raw)
            except (ValueError, TypeError) as exc:
                line, col = _locate(text, sect, k)
                raise ConfigError(f"bad value for {k!r}: {exc}", source, line, col) from None
        for need in (required or {}).get(sect, ()) + (required or {}).get("*", ()):
            if need not in vals:
                line, col = _locate(text, sect, None)
                raise ConfigError(f"[{sect}] is missing required key {need!r}", source, line, col)
        out[sect] = vals
    return Config(source, out, text)


def load_config(path: str | os.PathLike, schema: Schema, required=None) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read: {exc.strerror}", str(p)) from None
    return parse_config(text, schema, str(p), required)


def data_text(name: str) -> tuple[str, str]:
    """Text of a shipped data file, or of an override in $RAMPSIM_CONFIG_DIR."""
    override = os.environ.get(ENV_CONFIG_DIR)
    if override:
        p = Path(override) / name
        if p.is_file():
            return p.read_text(), str(p)
    res = resources.files("rampsim") / "data" / name
    return res.read_text(), f"rampsim/data/{name}"


def resolve_path(name: str) -> Path:
    """A config path as given, else relative to $RAMPSIM_CONFIG_DIR."""
    p = Path(name)
    if p.is_file() or p.is_absolute():
        return p
    base = os.environ.get(ENV_CONFIG_DIR)
    if base and (Path(base) / name).is_file():
        return Path(base) / name
    return p


# ---------------------------------------------------------------- node specs

NODE_SCHEMA: Schema = {"*": {"beta_mem": float, "pi": float, "clk_hz": float,
                             "io_latency_ns": float, "mem_to_trx_ns": float, "description": str}}


def load_node_spec(name: str = "a100", text: str | None = None, source: str = "<text>"):
    from .estimator import NodeSpec

    if text is None:
        text, source = data_text("nodes.ini")
    cfg = parse_config(text, NODE_SCHEMA, source, required={"*": ("beta_mem", "pi", "clk_hz")})
    if name not in cfg.sections:
        raise ConfigError(f"no node spec named {name!r}", source)
    s = cfg.sections[name]
    try:
        return NodeSpec(s["beta_mem"], s["pi"], 1.0 / s["clk_hz"], s.get("mem_to_trx_ns", 0.0),
                        s.get("io_latency_ns", 100.0))
    except ValueError as exc:
        line, col = _locate(text, name, None)
        raise ConfigError(str(exc), source, line, col) from None


# ---------------------------------------------------------------- systems

_SIZE_KEYS = {"nodes": parse_int, "x": parse_int, "J": parse_int, "lam": parse_int, "b": parse_int,
              "subnet_kind": str, "radix": int_list, "oversub": float, "dims": int_list}
_TECH_KEYS = {"line_rate": parse_int, "intra_rate": parse_int, "inter_rate": parse_int,
              "link_rate": parse_int, "node_rate": parse_int, "switch_ns": float, "nvswitch_ns": float,
              "prop_ns": float_list, "hop_ns": float, "io_latency_ns": float, "mem_to_trx_ns": float,
              "reconfig_ns": float, "transceivers": parse_int}
SYSTEM_SCHEMA: Schema = {"*": {"kind": str, "description": str, **_SIZE_KEYS, **_TECH_KEYS}}


def topology_from_section(sect: dict, source: str = "<text>", name: str = ""):
    """Build a topology from one parsed system section."""
    from .params import InvalidParams
    from .topologies import TopologyError, TopologyKind, build_topology

    if "kind" not in sect:
        raise ConfigError(f"system [{name}] needs a kind", source)
    size = {k: v for k, v in sect.items() if k in _SIZE_KEYS}
    tech = {k: v for k, v in sect.items() if k in _TECH_KEYS}
    try:
        kind = TopologyKind.parse(sect["kind"])
        if kind is TopologyKind.RAMP and "prop_ns" in tech:
            tech["prop_ns"] = tech["prop_ns"][0]
        if "oversub" in size and kind is not TopologyKind.FAT_TREE:
            raise TopologyError("oversub applies to fat-trees only")
        return build_topology(kind, size, tech)
    except (TopologyError, InvalidParams) as exc:
        raise ConfigError(f"system [{name}]: {exc}", source) from None


def load_systems(text: str | None = None, source: str = "<text>") -> dict:
    """Named topologies from a systems file (the shipped one by default)."""
    if text is None:
        text, source = data_text("systems.ini")
    cfg = parse_config(text, SYSTEM_SCHEMA, source, required={"*": ("kind",)})
    out = {}
    for name, sect in cfg.sections.items():
        try:
            out[name] = topology_from_section(sect, source, name)
        except ConfigError as exc:
            line, col = _locate(text, name, None)
            raise ConfigError(exc.msg, source, line, col) from None
    return out
