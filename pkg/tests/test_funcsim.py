import copy

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rampsim.engine import CollectiveOp, plan_collective
from rampsim.funcsim import SimulationError, check, check_numeric, execute, oracle, to_numeric, initial_payloads
from rampsim.params import RampParams
from rampsim.transcoder import build_schedule


def _numeric_reference(op, N, M, root=0):
    """Plain numpy answer, written independently of the symbolic oracle."""
    tok = lambda n: np.arange(M) + (n + 1) / (N + 1)  # noqa: E731
    c = M // N
    total = sum(tok(n) for n in range(N))
    if op is CollectiveOp.REDUCE_SCATTER:
        return [total[r * c:(r + 1) * c] for r in range(N)]
    if op is CollectiveOp.ALL_REDUCE:
        return [total] * N
    if op is CollectiveOp.ALL_GATHER:
        return [np.concatenate([r * M + np.arange(M) + (r + 1) / (N + 1) for r in range(N)])] * N
    if op is CollectiveOp.ALL_TO_ALL:
        return [np.concatenate([tok(s)[r * c:(r + 1) * c] for s in range(N)]) for r in range(N)]
    if op is CollectiveOp.SCATTER:
        return [tok(root)[r * c:(r + 1) * c] for r in range(N)]
    raise AssertionError(op)


@pytest.mark.parametrize("op", [CollectiveOp.REDUCE_SCATTER, CollectiveOp.ALL_REDUCE, CollectiveOp.ALL_GATHER,
                                CollectiveOp.ALL_TO_ALL, CollectiveOp.SCATTER])
@pytest.mark.parametrize("N", [2, 5, 8])
def test_oracle_against_numpy(op, N):
    M = N * 3
    got = [to_numeric(e, N).values for e in oracle(op, N, M)]
    want = _numeric_reference(op, N, M)
    for g, w in zip(got, want):
        np.testing.assert_allclose(g, w)


def test_initial_payload_labels():
    init = initial_payloads(CollectiveOp.ALL_GATHER, 4, 2, [0, 1, 2, 3])
    assert init[2].labels.tolist() == [4, 5]


@given(st.integers(2, 4).flatmap(lambda x: st.tuples(st.just(x), st.integers(1, x),
                                                     st.sampled_from([x, 2 * x, 4 * x]))),
       st.sampled_from(list(CollectiveOp)), st.sampled_from([1, 2]), st.integers(1, 4))
def test_schedule_matches_oracle(t, op, variant, scale):
    p = RampParams(*t)
    s = build_schedule(plan_collective(op, p.nodes * 2 * scale, p, variant=variant))
    r = check(s)
    assert r.ok, r.report


@pytest.mark.parametrize("op", list(CollectiveOp))
def test_numeric_route(op, p54):
    s = build_schedule(plan_collective(op, 54 * 6, p54))
    assert check_numeric(s).ok


def _dropped(s, step=0):
    bad = copy.copy(s)
    bad.steps = list(s.steps)
    st0 = copy.copy(bad.steps[step])
    st0.transfers = st0.transfers[1:]
    bad.steps[step] = st0
    return bad


@pytest.mark.parametrize("op", ["rs", "ag", "a2a", "ar"])
def test_missing_transfer_is_caught(op, p54):
    s = build_schedule(plan_collective(op, 54 * 6, p54))
    try:
        ok = check(_dropped(s)).ok
    except SimulationError:
        ok = False
    assert not ok


def test_broken_reduction_is_caught(p54):
    s = build_schedule(plan_collective("rs", 54 * 6, p54))
    bad = copy.copy(s)
    bad.steps = s.steps[:-1]  # stop before the last exchange
    assert not check(bad).ok


def test_execute_rejects_other_types():
    with pytest.raises(TypeError):
        execute(object())
