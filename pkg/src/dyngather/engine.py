"""Synchronous round execution with blocking on the missing link."""
from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional

from .adversary import AdversarySpec, choose_missing
from .protocols import ProtocolVariant, agent_transition
from .ring_core import Configuration, link_between, neighbor

ALL_TERMINATED = "AllTerminated"
ROUND_LIMIT_EXCEEDED = "RoundLimitExceeded"


class InconsistentState(RuntimeError):
    pass


@dataclass(frozen=True)
class OrderPolicy:
    """Activation order within a round: ascending IDs, or a seeded shuffle per round."""
    kind: str = "ascending"
    seed: int = 0

    def order(self, ids: list, round_index: int) -> list:
        if self.kind == "ascending":
            return ids
        if self.kind == "random":
            shuffled = list(ids)
            random.Random(f"order:{self.seed}:{round_index}").shuffle(shuffled)
            return shuffled
        raise ValueError(f"unknown order policy {self.kind!r}")


ASCENDING = OrderPolicy()


@dataclass
class ExecutionResult:
    final: Configuration
    rounds_elapsed: int
    total_moves: int
    link_passes: dict          # phase -> list of per-link counts
    trace: list
    outcome: str
    variant: Optional[ProtocolVariant] = None


def default_round_limit(n: int, g: int) -> int:
    return 20 * n + 3 * n * (math.ceil(math.log2(g)) if g > 1 else 0)


def check_consistency(config: Configuration) -> None:
    occupants = [[] for _ in range(config.n)]
    for aid, pos in config.positions.items():
        if not 0 <= pos < config.n:
            raise InconsistentState(f"agent {aid} at invalid node {pos}")
        occupants[pos].append(aid)
    for v, board in enumerate(config.boards):
        if board.nAgents != len(occupants[v]) or board.registry != sorted(occupants[v]):
            raise InconsistentState(
                f"node {v}: nAgents={board.nAgents}, registry={board.registry}, "
                f"occupants={sorted(occupants[v])}")


def _board_delta(before, after) -> dict:
    delta = {}
    for v, (b, a) in enumerate(zip(before, after)):
        fb, fa = b.fields(), a.fields()
        changed = {key: fa[key] for key in fa if fa[key] != fb[key]}
        if changed:
            delta[str(v)] = changed
    return delta


def step(config: Configuration, missing: Optional[int], variant: ProtocolVariant,
         order: OrderPolicy = ASCENDING, record: Optional[dict] = None,
         passes: Optional[dict] = None) -> Configuration:
    """Advance ``config`` by one round in place and return it."""
    check_consistency(config)
    if missing is not None and not 0 <= missing < config.n:
        raise InconsistentState(f"missing link {missing} outside the ring")
    topo = config.topology
    snapshot = [b.copy() for b in config.boards]
    by_id = {a.id: idx for idx, a in enumerate(config.agents)}
    actions = {}
    writes = []      # (agent id, node, fields), applied once everyone has acted
    config.missing = missing
    for aid in order.order([a.id for a in config.agents], config.round):
        idx = by_id[aid]
        state = config.agents[idx]
        if state.terminated:
            continue
        pos = config.positions[aid]
        out = agent_transition(variant, state, snapshot[pos])
        nxt = out.next
        writes.append((aid, pos, out.origin_writes))
        blocked = False
        if out.intent != 0:
            link = link_between(topo, pos, out.intent)
            if link == missing:
                blocked = True
            else:
                dest = neighbor(topo, pos, out.intent)
                config.boards[pos].remove(aid)
                config.boards[dest].add(aid)
                writes.append((aid, dest, out.arrival_writes))
                config.positions[aid] = dest
                nxt.nVisited += 1
                nxt.moved = True
                if passes is not None:
                    passes[nxt.phase][link] += 1
        config.agents[idx] = nxt
        actions[aid] = (nxt.phase, out.intent, blocked)
    # nobody reads the live board mid-round, so only concurrent writes to one
    # field need an order; ascending IDs keep it independent of activation order
    writes.sort(key=lambda w: w[0])
    for _, node, fields in writes:
        board = config.boards[node]
        for key, value in fields.items():
            setattr(board, key, value)
    config.round += 1
    if record is not None:
        record["round"] = config.round - 1
        record["missing"] = missing
        record["agents"] = [
            {"id": a.id, "pos": config.positions[a.id], "phase": actions[a.id][0],
             "intent": actions[a.id][1], "blocked": actions[a.id][2],
             "terminated": a.terminated}
            for a in config.agents if a.id in actions
        ]
        record["boards"] = _board_delta(snapshot, config.boards)
    return config


def run(initial: Configuration, variant: ProtocolVariant, adversary: AdversarySpec,
        round_limit: Optional[int] = None, order: OrderPolicy = ASCENDING,
        observer: Optional[Callable[[Configuration], None]] = None) -> ExecutionResult:
    if round_limit is None:
        round_limit = default_round_limit(variant.n, variant.g)
    if round_limit < 1:
        raise ValueError("round_limit must be at least 1")
    adversary.validate(initial.n)
    config = initial.copy()
    passes = defaultdict(lambda: [0] * config.n)
    trace = []
    if observer is not None:
        observer(config)
    outcome = ALL_TERMINATED
    while not all(a.terminated for a in config.agents):
        if config.round >= round_limit:
            outcome = ROUND_LIMIT_EXCEEDED
            break
        missing = choose_missing(adversary, config)
        record = {}
        step(config, missing, variant, order, record, passes)
        trace.append(record)
        if observer is not None:
            observer(config)
    total = sum(sum(v) for v in passes.values())
    return ExecutionResult(config, config.round, total, dict(passes), trace, outcome, variant)
