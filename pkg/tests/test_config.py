import pytest

from rampsim.config import (SYSTEM_SCHEMA, ConfigError, data_text, int_range, load_node_spec, load_systems,
                            parse_bool, parse_config, parse_size, resolve_path)
from rampsim.topologies import TopologyKind


@pytest.mark.parametrize("text,val", [("54", 54), ("100MB", 10**8), ("1GB", 10**9), ("2.5 kB", 2500),
                                      ("1GiB", 2**30), ("1e3", 1000), ("10gb", 10**10)])
def test_sizes(text, val):
    assert parse_size(text) == val


@pytest.mark.parametrize("bad", ["", "ten", "1XB", "-5"])
def test_bad_sizes(bad):
    with pytest.raises(ValueError):
        parse_size(bad)


def test_ranges():
    assert int_range("16..256") == [16, 32, 64, 128, 256]
    assert int_range("3, 5") == [3, 5]
    with pytest.raises(ValueError):
        int_range("8..4")


def test_bool():
    assert parse_bool("yes") and not parse_bool("off")
    with pytest.raises(ValueError):
        parse_bool("maybe")


SCHEMA = {"a": {"n": int, "s": str}, "sys.*": {"k": float}}


def test_unknown_key_position():
    text = "[a]\nn = 1\ns = x\nbogus = 2\n"
    with pytest.raises(ConfigError) as ei:
        parse_config(text, SCHEMA, "f.ini")
    assert (ei.value.line, ei.value.col) == (4, 1)
    assert str(ei.value).startswith("f.ini:4:1: unknown key")


def test_unknown_section():
    with pytest.raises(ConfigError) as ei:
        parse_config("[a]\nn=1\n\n[b]\nx=1\n", SCHEMA, "f.ini")
    assert ei.value.line == 4


def test_bad_value_position():
    with pytest.raises(ConfigError) as ei:
        parse_config("[sys.one]\nk = fast\n", SCHEMA)
    assert ei.value.line == 2 and "bad value" in ei.value.msg


def test_duplicates_and_orphans():
    with pytest.raises(ConfigError):
        parse_config("[a]\nn=1\nn=2\n", SCHEMA)
    with pytest.raises(ConfigError):
        parse_config("n=1\n", SCHEMA)


def test_required():
    with pytest.raises(ConfigError) as ei:
        parse_config("[a]\ns = x\n", SCHEMA, required={"a": ("n",)})
    assert "missing required key 'n'" in ei.value.msg


def test_inline_comments_and_case():
    cfg = parse_config("[sys.x]\nk = 2.5  # note\n", SCHEMA)
    assert cfg.sections["sys.x"]["k"] == 2.5


def test_shipped_systems():
    systems = load_systems()
    assert set(systems) == {"ramp", "fat-tree", "torus", "topoopt"}
    assert systems["ramp"].nodes == systems["fat-tree"].nodes == 65536
    assert systems["topoopt"].kind is TopologyKind.DEGREE_LIMITED_OCS


def test_system_errors_locate_section():
    text = "[good]\nkind = ring\nnodes = 8\n\n[bad]\nkind = ring\nnodes = 8\noversub = 2\n"
    with pytest.raises(ConfigError) as ei:
        load_systems(text, "s.ini")
    assert ei.value.line == 5 and "fat-trees only" in ei.value.msg
    with pytest.raises(ConfigError):
        load_systems("[x]\nnodes = 8\n")


def test_node_spec():
    s = load_node_spec()
    assert (s.beta_mem, s.pi) == (1555e9, 312e12)
    with pytest.raises(ConfigError):
        load_node_spec("h100")


def test_env_override(tmp_path, monkeypatch):
    (tmp_path / "nodes.ini").write_text("[a100]\nbeta_mem = 1e12\npi = 1e14\nclk_hz = 1e9\n")
    (tmp_path / "mine.ini").write_text("[x]\nkind = ring\nnodes = 4\n")
    monkeypatch.setenv("RAMPSIM_CONFIG_DIR", str(tmp_path))
    assert load_node_spec().beta_mem == 1e12
    assert data_text("nodes.ini")[1] == str(tmp_path / "nodes.ini")
    assert resolve_path("mine.ini") == tmp_path / "mine.ini"


def test_schema_keys_are_case_sensitive():
    with pytest.raises(ConfigError):
        parse_config("[r]\nkind = ramp\nj = 3\n", SYSTEM_SCHEMA)
