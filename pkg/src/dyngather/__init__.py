"""g-partial gathering of mobile agents on 1-interval connected dynamic rings."""
from .adversary import (AdaptiveBlocker, AdversarySpec, FixedLink, NoneMissing, RandomUniform,
                        Scripted, choose_missing)
from .engine import ALL_TERMINATED, ROUND_LIMIT_EXCEEDED, ExecutionResult, OrderPolicy, run, step
from .protocols import ProtocolVariant, Unsolvable, agent_transition, dispatch
from .reference import reference_run
from .ring_core import Configuration, RingTopology, init_configuration
from .verify import check_bounds, check_partial_gathering, lower_bound_demo

__all__ = [
    "AdaptiveBlocker", "AdversarySpec", "FixedLink", "NoneMissing", "RandomUniform", "Scripted",
    "choose_missing", "ALL_TERMINATED", "ROUND_LIMIT_EXCEEDED", "ExecutionResult", "OrderPolicy",
    "run", "step", "ProtocolVariant", "Unsolvable", "agent_transition", "dispatch",
    "reference_run", "Configuration", "RingTopology", "init_configuration", "check_bounds",
    "check_partial_gathering", "lower_bound_demo",
]
