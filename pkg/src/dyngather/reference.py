"""Independent reference simulator.

Each agent is a generator written as a line-by-line transcription of the
pseudocode loops. A ``yield`` is a round-consuming statement (a move attempt
or a stay); everything after it runs at the start of the agent's next atomic
action, reading the board of its node as it stood when that round began. It
shares no code with :mod:`dyngather.protocols` or :mod:`dyngather.engine`,
only the plain data types and the adversary.
"""
from __future__ import annotations

import math
from collections import defaultdict

from .adversary import choose_missing
from .engine import ALL_TERMINATED, ROUND_LIMIT_EXCEEDED, ExecutionResult, OrderPolicy

_FIELDS = ("id", "nAgents", "dir", "waiting", "fMarked", "bMarked", "candi")


class _Move:
    __slots__ = ("dir", "arrive")

    def __init__(self, dir, arrive=None):
        self.dir = dir
        self.arrive = arrive or {}


STAY = _Move(0)


class _Agent:
    def __init__(self, sim, aid):
        self.sim = sim
        self.id = aid
        self.rounds = 1
        self.nIDs = 0
        self.nVisited = 0
        self.rank = 0
        self.dir = 0
        self.ids = []
        self.phase = "init"
        self.done = False
        self.splits = 0
        self.own = {}

    # whiteboard of the current node: round-start contents plus own writes
    def rd(self, name):
        if name in self.own:
            return self.own[name]
        return self.sim.view[self.sim.pos[self.id]][name]

    def wr(self, name, value):
        self.own[name] = value
        self.sim.writes.append((self.id, self.sim.pos[self.id], {name: value}))

    def calc_rank(self):
        reg = self.sim.view_reg[self.sim.pos[self.id]]
        return sorted(reg).index(self.id) + 1


def _selection(a, n, k):
    a.wr("id", a.id)
    a.ids.append(a.id)
    a.nIDs += 1
    a.phase = "selection"
    yield STAY
    while a.rounds <= 3 * n:
        reached = yield _Move(1)
        if reached:
            if a.rd("id") is not None and a.nIDs < k:
                a.ids.append(a.rd("id"))
                a.nIDs += 1
        a.rounds += 1
    if a.nVisited < n:
        return None
    if a.rd("nAgents") == a.nIDs:
        return None
    return min(a.ids)


def _gather_walk(a, n, gather_id):
    a.phase = "gathering"
    a.rounds = 1
    while a.rounds <= 3 * n:
        if a.rd("id") != gather_id:
            yield _Move(1)
        else:
            yield STAY
        a.rounds += 1


def _moving_b1(a, n):
    a.rounds = 1
    while a.rounds <= n:
        if a.dir == 0:
            yield STAY
        elif a.rd("waiting") is False:
            yield _Move(a.dir)
        else:
            yield STAY
        a.rounds += 1


def _program_b1(a, n, k, g):
    gather_id = yield from _selection(a, n, k)
    if gather_id is None:
        return
    yield from _gather_walk(a, n, gather_id)
    while True:
        cnt = a.rd("nAgents")
        if cnt >= g and (k - cnt >= g or cnt == k):
            return
        a.splits += 1
        a.phase = "splitting"
        if cnt >= g + 2:
            # More()
            a.rank = a.calc_rank()
            c = cnt - g
            if 1 <= a.rank <= g:
                a.dir = 0
            elif g + 1 <= a.rank <= g + c // 2:
                a.dir = 1
            else:
                a.dir = -1
            a.wr("waiting", False)
            yield from _moving_b1(a, n)
            if a.rd("waiting") is True:
                a.dir = -1
                a.wr("waiting", False)
            elif a.rd("nAgents") < g:
                a.dir = 0
                a.wr("waiting", True)
            else:
                a.dir = 1
        else:
            # Less()
            a.rounds = 1
            a.wr("waiting", True)
            while a.rounds <= n:
                yield STAY
                a.rounds += 1
            a.dir = -1
            a.wr("waiting", False)
        # LatterMove()
        yield from _moving_b1(a, n)
        a.dir = a.dir * -1
        yield from _moving_b1(a, n)


def _moving2(a, n, g):
    while a.rounds <= n:
        a.rounds += 1
        if a.dir == 1:
            a.wr("fMarked", True)
        if a.dir == -1:
            a.wr("bMarked", True)
        mark = "fMarked" if a.dir == 1 else "bMarked"
        reached = yield _Move(a.dir, {mark: True, "dir": a.dir})
        if reached:
            if (a.dir == 1 and a.rd("bMarked")) or (a.dir == -1 and a.rd("fMarked")):
                return
            if a.rd("fMarked") and a.rd("bMarked"):
                return
            if a.rd("waiting") is True:
                a.rank = a.calc_rank()
                if a.rd("nAgents") >= 2 * g and a.rank >= g + 1:
                    return


def _sweeps(a, n, g, phase):
    cnt = a.rd("nAgents")
    if g <= cnt <= 2 * g - 1:
        return
    if cnt >= 2 * g:
        # More2()
        a.rounds = 1
        a.rank = a.calc_rank()
        if 1 <= a.rank <= g:
            a.dir = 1
        elif cnt < 3 * g or g + 1 <= a.rank <= 2 * g:
            a.dir = -1
        else:
            return
        a.phase = phase
        yield from _moving2(a, n, g)
        return
    # Less2(); the joining agent keeps the sweep clock of the group
    a.phase = phase
    a.rounds = 1
    a.wr("waiting", True)
    while True:
        if a.rd("fMarked") and a.rd("bMarked"):
            return
        if a.rd("fMarked") or a.rd("bMarked"):
            a.rank = a.calc_rank()
            if a.rd("nAgents") >= 2 * g and a.rank >= g + 1:
                return
            a.dir = a.rd("dir")
            yield from _moving2(a, n, g)
            return
        yield STAY
        a.rounds += 1


def _program_b2(a, n, k, g):
    gather_id = yield from _selection(a, n, k)
    if gather_id is None:
        return
    yield from _gather_walk(a, n, gather_id)
    yield from _sweeps(a, n, g, "sweep")


def _program_b3(a, n, k, g):
    # semi-selection
    a.wr("id", a.id)
    a.ids.append(a.id)
    a.nIDs += 1
    a.phase = "semi_selection"
    yield STAY
    while a.rounds <= 3 * n:
        if a.nIDs < 10 * g - 4 and a.rd("nAgents") < 2 * g:
            reached = yield _Move(1)
            if reached and a.rd("id") is not None:
                a.ids.append(a.rd("id"))
                a.nIDs += 1
        else:
            yield STAY
        a.rounds += 1
    me = 4 * g - 2
    window = 8 * g - 3
    if a.rd("nAgents") >= 2 * g or (
            a.nIDs >= window and all(a.ids[me] < a.ids[h] for h in range(window) if h != me)):
        a.wr("candi", True)
    yield STAY
    # semi-gathering
    a.phase = "semi_gathering"
    a.rounds = 1
    a.nIDs = 1
    while a.rounds <= 3 * n:
        if a.nIDs != 4 * g - 1 and a.rd("candi") is False:
            reached = yield _Move(1)
            if reached:
                if a.rd("id") is not None:
                    a.nIDs += 1
                if a.rd("nAgents") >= 2 * g:
                    a.wr("candi", True)
        else:
            yield STAY
        a.rounds += 1
    yield from _sweeps(a, n, g, "achievement")


_PROGRAMS = {"B1": _program_b1, "B2": _program_b2, "B3": _program_b3}


class _Sim:
    def __init__(self, initial):
        self.n = initial.n
        self.boards = [{f: getattr(b, f) for f in _FIELDS} for b in initial.boards]
        self.reg = [set(b.registry) for b in initial.boards]
        self.pos = dict(initial.positions)
        self.round = 0
        self.view = None
        self.view_reg = None
        self.writes = []


def reference_run(initial, variant, adversary, round_limit=None, order: OrderPolicy = OrderPolicy()):
    """Same contract as :func:`dyngather.engine.run`."""
    n, k, g = variant.n, variant.k, variant.g
    if round_limit is None:
        round_limit = 20 * n + 3 * n * (math.ceil(math.log2(g)) if g > 1 else 0)
    if round_limit < 1:
        raise ValueError("round_limit must be at least 1")
    adversary.validate(n)
    sim = _Sim(initial)
    ids = sorted(a.id for a in initial.agents)
    agents = {aid: _Agent(sim, aid) for aid in ids}
    programs = {aid: _PROGRAMS[variant.tag](agents[aid], n, k, g) for aid in ids}
    pending = {aid: None for aid in ids}     # value sent into the generator next round
    started = set()
    passes = defaultdict(lambda: [0] * n)
    trace = []
    config = initial.copy()
    outcome = ALL_TERMINATED

    while not all(a.done for a in agents.values()):
        if sim.round >= round_limit:
            outcome = ROUND_LIMIT_EXCEEDED
            break
        _sync(config, sim, agents)
        missing = choose_missing(adversary, config)
        sim.view = [dict(b) for b in sim.boards]
        sim.view_reg = [set(r) for r in sim.reg]
        acted = {}
        for aid in order.order(ids, sim.round):
            a = agents[aid]
            if a.done:
                continue
            a.own = {}
            try:
                if aid in started:
                    mv = programs[aid].send(pending[aid])
                else:
                    started.add(aid)
                    mv = next(programs[aid])
            except StopIteration:
                a.done = True
                acted[aid] = (a.phase, 0, False)
                continue
            phase = a.phase
            blocked = False
            pending[aid] = None
            if mv.dir != 0:
                here = sim.pos[aid]
                link = here if mv.dir == 1 else (here - 1) % n
                if link == missing:
                    blocked = True
                    pending[aid] = False
                else:
                    there = (here + mv.dir) % n
                    sim.reg[here].discard(aid)
                    sim.boards[here]["nAgents"] -= 1
                    sim.reg[there].add(aid)
                    sim.boards[there]["nAgents"] += 1
                    sim.writes.append((aid, there, mv.arrive))
                    sim.pos[aid] = there
                    a.nVisited += 1
                    pending[aid] = True
                    passes[phase][link] += 1
            acted[aid] = (phase, mv.dir, blocked)
        # writes land after the whole round, lower IDs first
        for _, v, fields in sorted(sim.writes, key=lambda w: w[0]):
            sim.boards[v].update(fields)
        sim.writes = []
        trace.append({
            "round": sim.round,
            "missing": missing,
            "agents": [{"id": aid, "pos": sim.pos[aid], "phase": acted[aid][0],
                        "intent": acted[aid][1], "blocked": acted[aid][2],
                        "terminated": agents[aid].done}
                       for aid in ids if aid in acted],
            "boards": {str(v): {f: after[f] for f in _FIELDS if after[f] != before[f]}
                       for v, (before, after) in enumerate(zip(sim.view, sim.boards))
                       if any(after[f] != before[f] for f in _FIELDS)},
        })
        sim.round += 1
    _sync(config, sim, agents)
    total = sum(sum(c) for c in passes.values())
    return ExecutionResult(config, sim.round, total, dict(passes), trace, outcome, variant)


def _sync(config, sim, agents):
    """Mirror the simulator into a Configuration (adversaries and checks read it)."""
    config.round = sim.round
    config.positions = dict(sim.pos)
    for v, b in enumerate(sim.boards):
        board = config.boards[v]
        for f in _FIELDS:
            setattr(board, f, b[f])
        board.registry = sorted(sim.reg[v])
    for st in config.agents:
        a = agents[st.id]
        st.terminated = a.done
        st.nVisited = a.nVisited
        st.nIDs = a.nIDs
        st.ids = list(a.ids)
        st.rank = a.rank
        st.dir = a.dir
        st.splits = a.splits
        st.phase = a.phase
