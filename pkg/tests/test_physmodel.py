import math

import pytest
from hypothesis import given, strategies as st

from rampsim.params import RampParams, SubnetKind
from rampsim.physmodel import (ComponentChain, CostModel, Element, ElementKind, Interval, OpticsDefaults,
                               PhysModelError, SystemKind, coupler, cost_report, eps_counts,
                               parallel_networks, power_report, ramp_chain, ramp_counts, soa, splitter,
                               walk_budget)


# ------------------------------------------------------------ budget walker

def test_splitter_loss():
    assert splitter(32, 0.5).gain_db == pytest.approx(-(10 * math.log10(32) + 0.5))
    assert coupler(2048, 0.5).gain_db == pytest.approx(-(10 * math.log10(2048) + 0.5))


def test_default_chain_feasible(max_scale):
    tr = walk_budget(ramp_chain(max_scale))
    assert tr.feasible
    assert tr.rx_dbm == pytest.approx(-13.716, abs=1e-3)
    assert tr.min_dbm == pytest.approx(-19.165, abs=1e-3)
    assert tr.margin_db == pytest.approx(0.835, abs=1e-3)


@pytest.mark.parametrize("kind", list(SubnetKind))
def test_chain_variants_walk(kind):
    tr = walk_budget(ramp_chain(RampParams(32, 32, 64, subnet_kind=kind)))
    assert len(tr.stages) >= 8


def test_removing_an_soa_flips(max_scale):
    chain = ramp_chain(max_scale)
    assert walk_budget(chain).feasible
    for i in chain.soa_indices():
        assert not walk_budget(chain.without(i)).feasible


def _elements():
    passive = st.builds(lambda k, g: Element("p", k, -g),
                        st.sampled_from([k for k in ElementKind if not k.active]), st.floats(0.01, 40))
    active = st.builds(lambda g: soa(g), st.floats(0, 30))
    return st.lists(st.one_of(passive, active), max_size=12)


@given(st.floats(-10, 20), _elements())
def test_trace_monotone_per_stage(launch, els):
    tr = walk_budget(ComponentChain(launch, tuple(els)))
    for e, (_, before), (_, after) in zip(els, tr.stages, tr.stages[1:]):
        if e.kind.active:
            assert after >= before
        else:
            assert after < before
    assert tr.feasible == (tr.min_dbm >= -20 and tr.rx_dbm >= -15)
    assert tr.feasible == (tr.margin_db >= 0)


def test_element_validation():
    with pytest.raises(PhysModelError):
        Element("bad", ElementKind.SPLITTER, 1.0)
    with pytest.raises(PhysModelError):
        Element("bad", ElementKind.SOA, -1.0)


def test_lower_launch_power_breaks_budget(max_scale):
    assert not walk_budget(ramp_chain(max_scale, OpticsDefaults(launch_dbm=9.0))).feasible


# ------------------------------------------------------------ intervals

def test_interval_arithmetic():
    a = Interval(1, 2)
    assert (a + 1) == Interval(2, 3)
    assert (a * 3) == Interval(3, 6)
    assert (a / Interval(1, 2)) == Interval(0.5, 2)
    assert a.contains(2.1, rel=0.06) and not a.contains(2.1)
    with pytest.raises(PhysModelError):
        Interval(2, 1)


# ------------------------------------------------------------ counts

def test_ramp_counts(max_scale):
    c = ramp_counts(max_scale)
    assert c == {"transceivers": 2_097_152, "couplers": 32_768}


@pytest.mark.parametrize("sigma,copies", [(1, 64), (10, 6), (64, 1), (1000, 1)])
def test_parallel_networks(sigma, copies):
    assert parallel_networks(12.8e12, sigma, 200e9) == copies


def test_hpc_switch_count_scales_with_copies():
    m = CostModel()
    one = eps_counts(m.hpc, m.nodes, 1, m.node_bandwidth)
    last = eps_counts(m.hpc, m.nodes, 64, m.node_bandwidth)
    assert one["switches"] == 64 * last["switches"]
    assert last["switches"] == 5 * 65536 // 40


def test_bad_sigma():
    with pytest.raises(PhysModelError):
        eps_counts(CostModel().hpc, 10, 0, 1e12)


# ------------------------------------------------------------ reports

def test_ramp_cost():
    r = cost_report("ramp")
    assert r.per_gbps.lo == pytest.approx(1.617, abs=1e-3)
    assert r.per_gbps.hi == pytest.approx(3.117, abs=1e-3)
    assert r.trx_share.lo == pytest.approx(0.928, abs=1e-3)


def test_hpc_cost_and_share():
    r = cost_report(SystemKind.HPC_FATTREE)
    assert r.per_gbps.lo == pytest.approx(19.81, abs=0.01)
    assert r.trx_share.lo == pytest.approx(0.25, abs=0.01)


def test_power_reports():
    rp = power_report("ramp")
    assert (rp.pj_per_bit_path.lo, rp.pj_per_bit_path.hi) == pytest.approx((8.5, 9.5))
    hp = power_report("hpc")
    assert hp.pj_per_bit_path.lo == pytest.approx(383, rel=0.005)
    assert hp.total_mw.lo == pytest.approx(303, rel=0.005)


def test_power_falls_with_oversubscription():
    vals = [power_report("hpc", s).total_mw.lo for s in (1, 10, 64)]
    assert vals[0] > vals[1] > vals[2]


def test_faster_transceivers_lower_energy_per_bit():
    assert power_report("ramp", line_rate=800e9).pj_per_bit_path.hi < power_report("ramp").pj_per_bit_path.lo


def test_rows_deterministic():
    assert cost_report("dcn").rows() == cost_report("dcn").rows()
    with pytest.raises(PhysModelError):
        cost_report("mesh")


def test_ocs_transceiver_ratio_basis():
    from rampsim.physmodel import CostModel

    alt = CostModel().ocs_trx_cost_from_ratio()
    assert (alt.lo, alt.hi) == (300.0, 600.0)
    # the listed interval stays the one used by reports
    assert CostModel().ocs_trx_cost.lo == 600.0
