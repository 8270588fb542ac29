"""Randomised instances: gathering, caps and oracle agreement."""
from hypothesis import HealthCheck, given, settings, strategies as st

from dyngather.adversary import POLICIES, AdaptiveBlocker, FixedLink, RandomUniform, Scripted
from dyngather.engine import ALL_TERMINATED, OrderPolicy, run
from dyngather.protocols import dispatch
from dyngather.reference import reference_run
from dyngather.ring_core import init_configuration
from dyngather.verify import check_bounds, check_partial_gathering

SLOW = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def instances(draw):
    n = draw(st.integers(5, 14))
    g = draw(st.integers(1, 3))
    k = draw(st.integers(2 * g + 1, max(2 * g + 1, n)))
    if k > n:
        g, k = 1, draw(st.integers(3, n))
    nodes = draw(st.permutations(range(n)))[:k]
    ids = draw(st.lists(st.integers(0, 999), min_size=k, max_size=k, unique=True))
    adversary = draw(st.one_of(
        st.builds(FixedLink, st.integers(0, n - 1)),
        st.builds(RandomUniform, st.integers(0, 10_000), st.sampled_from([0.0, 0.2, 0.6])),
        st.builds(Scripted, st.lists(st.one_of(st.none(), st.integers(0, n - 1)), max_size=8 * n)),
        st.builds(AdaptiveBlocker, st.sampled_from(POLICIES)),
    ))
    return dispatch(n, k, g), init_configuration(n, nodes, ids), adversary


@SLOW
@given(instances())
def test_gathering_within_caps(case):
    variant, initial, adversary = case
    result = run(initial, variant, adversary)
    assert result.outcome == ALL_TERMINATED
    assert check_partial_gathering(result.final, variant.g)
    assert check_bounds(result, variant).pass_


@SLOW
@given(instances(), st.integers(0, 50))
def test_engine_matches_oracle(case, order_seed):
    variant, initial, adversary = case
    a = run(initial, variant, adversary, order=OrderPolicy("random", order_seed))
    b = reference_run(initial, variant, adversary)
    assert a.trace == b.trace
    assert a.total_moves == b.total_moves


@SLOW
@given(instances())
def test_agents_conserved_every_round(case):
    variant, initial, adversary = case
    totals = []
    run(initial, variant, adversary,
        observer=lambda c: totals.append((sum(b.nAgents for b in c.boards), len(c.positions))))
    assert set(totals) == {(variant.k, variant.k)}
