import pytest

from dyngather.adversary import NoneMissing, RandomUniform
from dyngather.engine import run
from dyngather.protocols import ProtocolVariant, dispatch
from dyngather.ring_core import AgentState, init_configuration
from dyngather.verify import (check_bounds, check_partial_gathering, clustered_placement,
                              link_pass_caps, lower_bound_demo, move_cap, round_cap)


def stacked(n, groups, terminated=True):
    """Configuration with len(group) agents on each listed node."""
    placements, ids, extra = [], [], []
    aid = 0
    for node, size in groups:
        placements.append(node)
        ids.append(aid)
        extra += [(node, aid + j) for j in range(1, size)]
        aid += size
    config = init_configuration(n, placements, ids)
    for node, a in extra:
        config.boards[node].add(a)
        config.positions[a] = node
        config.agents.append(AgentState(id=a))
    for a in config.agents:
        a.terminated = terminated
    return config


def test_partial_gathering_holds():
    assert check_partial_gathering(stacked(10, [(0, 5), (4, 3)]), 3)


def test_partial_gathering_small_group():
    assert not check_partial_gathering(stacked(10, [(0, 5), (4, 2)]), 3)


def test_partial_gathering_needs_termination():
    config = stacked(10, [(0, 4), (4, 4)])
    config.agents[0].terminated = False
    assert not check_partial_gathering(config, 3)


def test_caps():
    b1 = ProtocolVariant("B1", 16, 7, 3)
    assert round_cap(b1) == 6 * 16 + 3 * 16 * 2 + 5
    assert move_cap(b1) == 7 * 6 * 16 + 2 * 3 * 3 * 16 * 3
    b2 = ProtocolVariant("B2", 16, 5, 2)
    assert round_cap(b2) == 117
    assert link_pass_caps(b2) == {"sweep": 8}
    b3 = ProtocolVariant("B3", 16, 16, 2)
    assert link_pass_caps(b3) == {"semi_selection": 17, "semi_gathering": 7, "achievement": 8}
    assert move_cap(b3) == (17 + 7 + 8) * 16


def test_bounds_b3_none_missing():
    v = dispatch(16, 16, 2)
    rep = check_bounds(run(init_configuration(16, range(16), range(16)), v, NoneMissing), v)
    assert rep.rounds_elapsed <= 117 and rep.pass_
    assert rep.per_phase_link_pass_max["semi_selection"][0] <= 17


def test_bounds_b2_sweep():
    v = dispatch(16, 5, 2)
    result = run(init_configuration(16, [0, 3, 7, 8, 12], range(5)), v, RandomUniform(2))
    rep = check_bounds(result, v)
    assert rep.per_phase_link_pass_max["sweep"][0] <= 8 and rep.pass_
    assert rep.as_dict()["pass"] is True


def test_clustered_layout():
    assert clustered_placement(10, 4) == [0, 7, 8, 9]


@pytest.mark.parametrize("n,k,g,floor", [(32, 13, 2, 19), (16, 7, 3, 9)])
def test_lower_bound_demo(n, k, g, floor):
    result = lower_bound_demo(n, k, g)
    assert result.rounds_elapsed >= floor
    assert check_partial_gathering(result.final, g)


def test_lower_bound_demo_needs_free_node():
    with pytest.raises(ValueError):
        lower_bound_demo(8, 8, 2)
