import pytest

from rampsim.params import RampParams
from rampsim.topologies import (TopologyError, TopologyKind, build_topology, ramp_sub_box, restrict,
                                select_nodes)


@pytest.fixture(scope="module")
def ft():
    return build_topology("fat-tree", {"nodes": 65536})


def test_fat_tree_levels(ft):
    assert ft.spans() == [8, 128, 2048, 65536]
    assert [ft.level_latency_ns(lv) for lv in range(1, 5)] == [340.0, 570.0, 1370.0, 4570.0]
    assert ft.lca_level(0, 7) == 1 and ft.lca_level(0, 8) == 2 and ft.lca_level(0, 65535) == 4
    # 1:1 above the server: each uplink tier carries span * 200 Gb/s
    assert float(ft.uplink_capacity(1)) == 8 * 200e9


def test_oversubscription_halves_uplinks():
    t = build_topology("fat-tree", {"nodes": 65536, "oversub": 2.0})
    assert float(t.uplink_capacity(1)) == 4 * 200e9


def test_torus_latency():
    t = build_topology("torus2d", {"nodes": 65536})
    assert t.dims == (128, 512)
    assert t.path_latency_ns(0, 512) == 156 + 200  # one hop along the 128-long dimension, plus I/O
    assert t.path_latency_ns(0, 1) == 520 + 200
    assert t.hops(0, 65535) == 2  # wrap-around both ways


def test_torus_block_is_rectangular():
    t = build_topology("torus2d", {"nodes": 65536})
    for n in (16, 32, 96, 4096):
        pl = select_nodes(t, n)
        cols = len({v % 512 for v in pl.nodes})
        rows = len({v // 512 for v in pl.nodes})
        assert rows * cols == n


def test_fat_tree_placement(ft):
    assert select_nodes(ft, 8).level == 1
    assert select_nodes(ft, 100).level == 2
    assert select_nodes(ft, 65536).level == 4


def test_ocs_restrict():
    t = build_topology("topoopt", {"nodes": 65536})
    assert t.kind is TopologyKind.DEGREE_LIMITED_OCS
    assert restrict(t, 16).nodes == 16
    assert t.reconfig_ns == 1e7


def test_ramp_sub_box():
    box = ramp_sub_box(RampParams(32, 32, 64), 1024)
    assert box.nodes >= 1024
    with pytest.raises(TopologyError):
        select_nodes(build_topology("ramp", {"x": 3, "J": 3, "lam": 6}), 55)


def test_unknown_kind():
    with pytest.raises(TopologyError):
        build_topology("hypercube", {})
