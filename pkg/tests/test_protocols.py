import pytest
from hypothesis import given, strategies as st

from dyngather.protocols import (IllegalPC, ProtocolVariant, Unsolvable, agent_transition,
                                 candidate_rule, dispatch, variant_range)
from dyngather.ring_core import AgentState, Whiteboard


def board(count, **fields):
    """A board holding agents 1..count."""
    return Whiteboard(nAgents=count, registry=list(range(1, count + 1)), **fields)


def at_boundary(variant, aid, phase="gathering", **kw):
    """An agent whose 3n-round leg just expired."""
    return AgentState(id=aid, phase=phase, step="loop", rounds=3 * variant.n + 1, leg=2, **kw)


@pytest.mark.parametrize("n,k,g,tag", [(20, 7, 3, "B1"), (30, 21, 3, "B3"), (30, 20, 3, "B2"),
                                       (30, 8, 3, "B2"), (10, 3, 1, "B2"), (10, 5, 1, "B3")])
def test_dispatch(n, k, g, tag):
    assert dispatch(n, k, g).tag == tag


@pytest.mark.parametrize("n,k,g", [(10, 6, 3), (10, 4, 2), (10, 2, 1), (10, 1, 1)])
def test_dispatch_unsolvable(n, k, g):
    with pytest.raises(Unsolvable):
        dispatch(n, k, g)


def test_dispatch_rejects_more_agents_than_nodes():
    with pytest.raises(ValueError):
        dispatch(8, 9, 1)


def test_b1_range_is_empty_for_g2():
    lo, hi = variant_range("B1", 2)
    assert lo > hi


@given(st.integers(1, 6), st.integers(3, 60))
def test_dispatch_agrees_with_ranges(g, k):
    if k <= 2 * g:
        return
    tag = dispatch(100, k, g).tag
    lo, hi = variant_range(tag, g)
    assert lo <= k and (hi is None or k <= hi)


def test_first_action_writes_own_id():
    v = dispatch(8, 7, 3)
    out = agent_transition(v, AgentState(id=5), Whiteboard(nAgents=1, registry=[5]))
    assert out.origin_writes == {"id": 5}
    assert out.next.nIDs == 1 and out.next.ids == [5]
    assert out.next.phase == "selection"
    # the first round is spent writing; the walk starts next round
    assert out.intent == 0


def test_terminated_agent_is_absorbing():
    v = dispatch(8, 7, 3)
    state = AgentState(id=1, phase="gathering", step="final", terminated=True, rounds=9)
    out = agent_transition(v, state, board(3))
    assert out.intent == 0 and not out.origin_writes
    assert out.next.terminated and out.next.rounds == 9 and out.next.phase == "gathering"


def test_gathering_stays_on_minimum_node():
    v = dispatch(8, 8, 2)
    s = AgentState(id=3, phase="gathering", step="loop", rounds=1, min_id=0)
    assert agent_transition(v, s, board(1, id=0)).intent == 0
    assert agent_transition(v, s, board(1, id=4)).intent == 1


def test_selection_collects_ids_on_arrival():
    v = dispatch(8, 7, 3)
    s = AgentState(id=3, phase="selection", step="loop", rounds=2, nIDs=1, ids=[3], moved=True)
    out = agent_transition(v, s, board(1, id=6))
    assert out.next.ids == [3, 6] and out.intent == 1


def test_selection_detects_everyone_together():
    # after 3n rounds without ever leaving the node the agent terminates
    v = dispatch(8, 7, 3)
    s = at_boundary(v, 1, phase="selection", nIDs=1, ids=[1], nVisited=3)
    out = agent_transition(v, s, board(7))
    assert out.next.terminated


@pytest.mark.parametrize("count,k,expected", [
    (7, 9, {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: -1, 7: -1}),
    (5, 7, {1: 0, 2: 0, 3: 0, 4: 1, 5: -1}),
])
def test_more_split_ranks(count, k, expected):
    v = ProtocolVariant("B1", 20, k, 3)
    for rank, d in expected.items():
        out = agent_transition(v, at_boundary(v, rank), board(count))
        assert out.next.dir == d
        assert out.next.step == "more_moving"
        assert out.intent == d
        assert out.origin_writes.get("waiting") is False


def test_less_waits_and_raises_flag():
    v = ProtocolVariant("B1", 20, 7, 3)
    out = agent_transition(v, at_boundary(v, 1), board(2))
    assert out.next.step == "less_wait" and out.intent == 0
    assert out.origin_writes == {"waiting": True}


@pytest.mark.parametrize("count", [3, 4, 7])
def test_b1_settled_counts_terminate(count):
    # k=7, g=3: 3 and 4 leave >= g elsewhere; 7 means everyone is here
    v = ProtocolVariant("B1", 20, 7, 3)
    assert agent_transition(v, at_boundary(v, 1), board(count)).next.terminated


def _after_more_moving(v, aid, b):
    s = AgentState(id=aid, phase="splitting", step="more_moving", rounds=v.n + 1, dir=0, leg=3)
    return agent_transition(v, s, b)


def test_stayers_go_forward_when_no_one_waits():
    v = ProtocolVariant("B1", 20, 7, 3)
    out = _after_more_moving(v, 1, board(3))
    assert out.next.dir == 1 and out.next.step == "latter1"


def test_forward_group_joins_waiting_node():
    v = ProtocolVariant("B1", 20, 7, 3)
    out = _after_more_moving(v, 1, board(4, waiting=True))
    assert out.next.dir == -1 and out.origin_writes["waiting"] is False


def test_small_forward_group_waits():
    v = ProtocolVariant("B1", 20, 7, 3)
    out = _after_more_moving(v, 1, board(2))
    assert out.next.dir == 0 and out.origin_writes["waiting"] is True


def test_moving_halts_on_waiting_node():
    v = ProtocolVariant("B1", 20, 7, 3)
    s = AgentState(id=1, phase="splitting", step="latter1", rounds=3, dir=1, leg=4)
    assert agent_transition(v, s, board(2, waiting=True)).intent == 0
    assert agent_transition(v, s, board(2)).intent == 1


@pytest.mark.parametrize("count,expected", [
    (8, {1: 1, 2: 1, 3: -1, 4: -1, 5: None, 6: None, 7: None, 8: None}),
    (5, {1: 1, 2: 1, 3: -1, 4: -1, 5: -1}),
    (4, {1: 1, 2: 1, 3: -1, 4: -1}),
])
def test_more2_ranks(count, expected):
    v = ProtocolVariant("B2", 20, 8, 2)
    for rank, d in expected.items():
        out = agent_transition(v, at_boundary(v, rank), board(count))
        if d is None:
            assert out.next.terminated
        else:
            assert out.next.dir == d and out.intent == d
            mark = "fMarked" if d == 1 else "bMarked"
            assert out.origin_writes == {mark: True}
            assert out.arrival_writes == {mark: True, "dir": d}


@pytest.mark.parametrize("count", [2, 3])
def test_sweep_branch_terminates_between_g_and_2g(count):
    v = ProtocolVariant("B2", 20, 8, 2)
    assert agent_transition(v, at_boundary(v, 1), board(count)).next.terminated


def _waiting(v, aid):
    return AgentState(id=aid, phase="sweep", step="sweep_wait", rounds=4, leg=3)


def test_less2_joins_passing_group():
    v = ProtocolVariant("B2", 20, 9, 3)
    out = agent_transition(v, _waiting(v, 1), board(5, bMarked=True, dir=-1, waiting=True))
    assert out.next.dir == -1 and out.intent == -1 and not out.next.terminated


def test_less2_sheds_surplus_when_merged_group_is_large():
    v = ProtocolVariant("B2", 20, 9, 3)
    b = board(7, fMarked=True, dir=1, waiting=True)
    for rank in range(1, 8):
        out = agent_transition(v, _waiting(v, rank), b)
        assert out.next.terminated == (rank >= 4)


def test_less2_stops_when_both_marks_seen():
    v = ProtocolVariant("B2", 20, 9, 3)
    out = agent_transition(v, _waiting(v, 1), board(1, fMarked=True, bMarked=True))
    assert out.next.terminated and out.intent == 0


def test_moving2_stops_on_opposite_mark():
    v = ProtocolVariant("B2", 20, 8, 2)
    s = AgentState(id=1, phase="sweep", step="sweep_move", rounds=5, dir=1, leg=3, moved=True)
    assert agent_transition(v, s, board(2, bMarked=True)).next.terminated
    assert not agent_transition(v, s, board(2, fMarked=True)).next.terminated


def test_moving2_ends_at_budget():
    v = ProtocolVariant("B2", 20, 8, 2)
    s = AgentState(id=1, phase="sweep", step="sweep_move", rounds=v.n + 1, dir=1, leg=3)
    assert agent_transition(v, s, board(2)).next.terminated


@pytest.mark.parametrize("ids,expected", [
    ([5, 4, 1, 3, 7], True),
    ([5, 1, 2, 3, 7], False),
    ([5, 4, 1, 3], False),           # window of 8g-3 = 5 not filled
    ([5, 4, 1, 3, 7, 0, 0], True),   # only the first 5 entries count
])
def test_candidate_rule_g1(ids, expected):
    assert candidate_rule(ids, 1) is expected


def test_candidate_rule_g2_self_index():
    ids = list(range(20, 33))
    ids[6] = 0
    assert candidate_rule(ids, 2)
    ids[12] = -1
    assert not candidate_rule(ids, 2)


def test_semi_selection_stops_at_crowded_node():
    v = dispatch(16, 16, 2)
    s = AgentState(id=1, phase="semi_selection", step="loop", rounds=3, nIDs=2, ids=[1, 5], leg=1)
    assert agent_transition(v, s, board(4)).intent == 0
    assert agent_transition(v, s, board(3)).intent == 1


def test_semi_selection_boundary_marks_crowded_node():
    v = dispatch(16, 16, 2)
    s = at_boundary(v, 1, phase="semi_selection", nIDs=3, ids=[1, 5, 6])
    out = agent_transition(v, s, board(4))
    assert out.origin_writes == {"candi": True} and out.next.step == "mark"


def test_semi_gathering_never_leaves_candidate():
    v = dispatch(16, 16, 2)
    s = AgentState(id=1, phase="semi_gathering", step="loop", rounds=2, nIDs=1, leg=3)
    assert agent_transition(v, s, board(1, candi=True)).intent == 0
    assert agent_transition(v, s, board(1)).intent == 1


def test_unknown_step_is_illegal():
    v = dispatch(8, 8, 2)
    with pytest.raises(IllegalPC):
        agent_transition(v, AgentState(id=1, phase="sweep", step="dance"), board(1))
