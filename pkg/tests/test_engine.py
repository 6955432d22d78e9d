import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rampsim.engine import (CollectiveOp, Phase, PlanError, active_steps, broadcast_plan, pipelined_time,
                            plan_collective, ramp_step_count, rank_table, subgroup_members)
from rampsim.params import RampParams


def small_params():
    return st.integers(2, 4).flatmap(
        lambda x: st.tuples(st.just(x), st.integers(1, x), st.sampled_from([x, 2 * x, 4 * x])))


def test_54_node_reduce_scatter(p54):
    plan = plan_collective("reduce-scatter", 54, p54)
    assert [s.table_step for s in plan.steps] == [1, 2, 3, 4]
    assert [s.msg_fraction for s in plan.steps[:3]] == [Fraction(1, 3), Fraction(1, 9), Fraction(1, 27)]
    assert plan.steps[3].nodes == 2  # pairwise exchange
    assert [s.phase for s in plan.steps] == [Phase.SPLIT_REDUCE] * 4


def test_all_reduce_mirrors_reduce_scatter(p54):
    plan = plan_collective("ar", 54 * 4, p54)
    steps = [s.table_step for s in plan.steps]
    assert steps == [1, 2, 3, 4, 4, 3, 2, 1]


def test_step_count_max_scale(max_scale):
    assert ramp_step_count(max_scale) == 4 == math.ceil(math.log(max_scale.nodes, 32))
    assert ramp_step_count(max_scale, CollectiveOp.ALL_REDUCE) == 8


@given(small_params())
def test_step_count_at_least_log(t):
    x, J, L = t
    p = RampParams(x, J, L)
    n = len(active_steps(p))
    # every active step divides the data by its subgroup size
    assert math.prod({1: x, 2: x, 3: J, 4: L // x}[s] for s in active_steps(p)) == p.nodes
    assert n == 2 + (J > 1) + (L // x > 1)


@given(small_params(), st.sampled_from([1, 2]))
def test_collective_rank_is_permutation(t, variant):
    p = RampParams(*t)
    assert sorted(rank_table(p, variant)) == list(range(p.nodes))


@given(small_params(), st.sampled_from([1, 2]))
def test_subgroups_partition(t, variant):
    p = RampParams(*t)
    for s in active_steps(p):
        seen = {}
        for c in p.all_coords():
            ms = tuple(sorted(m.rank for m in subgroup_members(c, s, p, variant)))
            assert c.rank in ms
            for r in ms:
                assert seen.setdefault(r, ms) == ms
            assert len(ms) == {1: p.x, 2: p.x, 3: p.J, 4: p.lam // p.x}[s]


def test_parse_aliases():
    assert CollectiveOp.parse("rs") is CollectiveOp.REDUCE_SCATTER
    assert CollectiveOp.parse("AllReduce") is CollectiveOp.ALL_REDUCE
    assert CollectiveOp.parse("a2a") is CollectiveOp.ALL_TO_ALL
    with pytest.raises(PlanError):
        CollectiveOp.parse("allsum")


def test_lambda_not_multiple():
    with pytest.raises(PlanError):
        plan_collective("rs", 100, RampParams(3, 2, 4))


def test_csv_rows(p54):
    rows = plan_collective("rs", 54, p54).to_csv_rows()
    assert [r["fraction"] for r in rows] == ["1/3", "1/9", "1/27", "1/54"]
    assert rows[0]["nodes"] == 3


def _brute_k(m, s, a, b):
    return min(range(1, 20001), key=lambda k: pipelined_time(m, s, a, b, k))


@given(st.floats(1e3, 1e10), st.integers(3, 12), st.floats(1e-7, 1e-4), st.floats(1e-13, 1e-10))
def test_broadcast_k_near_optimum(m, s, a, b):
    k = broadcast_plan(m, s, a, b).k
    kb = _brute_k(m, s, a, b)
    if kb < 20000:
        assert abs(k - kb) <= 1


def test_broadcast_rejects_small_tree():
    with pytest.raises(PlanError):
        broadcast_plan(1e6, 2, 1e-6, 1e-11)
