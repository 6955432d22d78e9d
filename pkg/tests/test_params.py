from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rampsim.params import InvalidParams, RampParams, SubnetKind, derived_quantities, min_message_per_slot


def test_max_scale_counts(max_scale):
    d = derived_quantities(max_scale)
    assert d.nodes == 65536
    assert d.node_capacity == 12_800_000_000_000
    assert d.total_capacity == 65536 * 12_800_000_000_000
    assert d.transceiver_count == 32 * 65536
    # x^3 subnets per transceiver index
    assert d.subnet_count == 32**3


def test_min_slot_message():
    assert min_message_per_slot(RampParams(32, 32, 64), 20, 0.05) == 950
    assert min_message_per_slot(400_000_000_000, 20) == 1000
    assert min_message_per_slot(400_000_000_000, Fraction(20), Fraction(1, 10)) == 900


@pytest.mark.parametrize("bad", [dict(x=1, J=1, lam=1), dict(x=2, J=3, lam=2), dict(x=4, J=2, lam=0),
                                 dict(x=2, J=2, lam=2, b=0), dict(x=2, J=2, lam=2, B=0)])
def test_invalid(bad):
    with pytest.raises(InvalidParams):
        RampParams(**bad)


def test_negative_slot():
    with pytest.raises(InvalidParams):
        min_message_per_slot(400_000_000_000, -1)


def test_subnet_parse():
    assert SubnetKind.parse("B&S") is SubnetKind.BROADCAST_SELECT
    assert SubnetKind.parse("rb") is SubnetKind.ROUTE_BROADCAST
    with pytest.raises(ValueError):
        SubnetKind.parse("nope")


@given(st.integers(2, 6).flatmap(lambda x: st.tuples(st.just(x), st.integers(1, x), st.integers(1, 4))))
def test_coord_roundtrip(t):
    x, J, k = t
    p = RampParams(x, J, x * k)
    for r in range(p.nodes):
        c = p.coord(r)
        assert p.rank_of(c.g, c.j, c.lam) == r


@given(st.integers(2, 8), st.integers(1, 8), st.integers(1, 4), st.integers(1, 4))
def test_capacity_identities(x, J, k, b):
    if J > x:
        J = x
    p = RampParams(x, J, x * k, b)
    d = derived_quantities(p)
    assert d.nodes == x * J * x * k
    assert d.total_capacity == d.nodes * d.node_capacity
    assert d.node_capacity == b * x * p.B
