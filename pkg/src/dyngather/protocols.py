"""Agent programs for g-partial gathering as per-round transition functions.

Every call to :func:`agent_transition` is one atomic action of one agent.
It reads the agent's state and the board of its current node as the board
stood at the start of the round, and returns the next state, the board
writes and a move intent. Effects of a successful move that depend on the
destination board (recording an ID, mark checks, rank checks) are handled at
the start of the agent's next action, when the destination is its current
node; writes that must land on the destination travel as ``arrival_writes``.

Each procedure leg lasts a fixed number of rounds on a shared clock, so all
non-terminated agents of a run cross leg boundaries in the same round. The
decision that closes a leg runs in the same action as the first round of the
next leg.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ring_core import AgentState, Whiteboard


class Unsolvable(ValueError):
    """No algorithm exists for k <= 2g on 1-interval connected rings."""


class IllegalPC(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolVariant:
    tag: str      # B1 | B2 | B3
    n: int
    k: int
    g: int

    @property
    def log_g(self) -> int:
        return math.ceil(math.log2(self.g)) if self.g > 1 else 0


@dataclass
class TransitionOutput:
    next: AgentState
    origin_writes: dict = field(default_factory=dict)
    arrival_writes: dict = field(default_factory=dict)
    intent: int = 0


def variant_range(tag: str, g: int) -> tuple:
    """Inclusive k range of a variant; the upper end is None when unbounded."""
    if tag == "B1":
        return 2 * g + 1, 3 * g - 2
    if tag == "B2":
        return max(3 * g - 1, 2 * g + 1), 8 * g - 4
    if tag == "B3":
        return 8 * g - 3, None
    raise ValueError(f"unknown variant {tag!r}")


def dispatch(n: int, k: int, g: int) -> ProtocolVariant:
    if not (1 <= k <= n) or g < 1:
        raise ValueError(f"need 1 <= k <= n and g >= 1, got n={n} k={k} g={g}")
    if k <= 2 * g:
        raise Unsolvable(f"g-partial gathering is unsolvable for k={k} <= 2g={2 * g}")
    if k <= 3 * g - 2:
        tag = "B1"
    elif k <= 8 * g - 4:
        tag = "B2"
    else:
        tag = "B3"
    return ProtocolVariant(tag, n, k, g)


class _View:
    """Round-start board contents overlaid with this action's own writes."""

    __slots__ = ("board", "writes")

    def __init__(self, board: Whiteboard):
        self.board = board
        self.writes = {}

    def __getattr__(self, name):
        writes = object.__getattribute__(self, "writes")
        if name in writes:
            return writes[name]
        return getattr(object.__getattribute__(self, "board"), name)

    def write(self, **fields):
        self.writes.update(fields)

    def rank_of(self, agent_id: int) -> int:
        return self.board.rank_of(agent_id)


def agent_transition(variant: ProtocolVariant, state: AgentState, board: Whiteboard) -> TransitionOutput:
    s = state.copy()
    out = TransitionOutput(next=s)
    if s.terminated:
        s.moved = False
        return out
    view = _View(board)
    arrived, s.moved = s.moved, False
    handler = _HANDLERS.get(variant.tag)
    if handler is None:
        raise IllegalPC(f"unknown variant {variant.tag!r}")
    handler(variant, s, view, out, arrived)
    out.origin_writes = view.writes
    return out


# -- helpers ----------------------------------------------------------------

def _terminate(s: AgentState, out: TransitionOutput) -> None:
    s.terminated = True
    s.step = "final"
    out.intent = 0


def _enter(s: AgentState, phase: str, step: str) -> None:
    s.phase, s.step = phase, step
    s.rounds = 1
    s.leg += 1


def _illegal(s: AgentState, tag: str):
    return IllegalPC(f"{tag}: no step {s.phase}/{s.step}")


# -- selection (shared by B1 and B2) -----------------------------------------

def _write_own_id(s: AgentState, view: _View) -> None:
    view.write(id=s.id)
    s.ids = [s.id]
    s.nIDs = 1


def _selection(v: ProtocolVariant, s, view, out, arrived) -> bool:
    """Returns True while the agent remains in the selection phase."""
    n, k = v.n, v.k
    if s.step == "start":
        _write_own_id(s, view)
        _enter(s, "selection", "loop")
        return True
    if arrived and view.id is not None and s.nIDs < k:
        s.ids.append(view.id)
        s.nIDs += 1
    if s.rounds <= 3 * n:
        s.rounds += 1
        out.intent = 1
        return True
    if s.nVisited < n:
        _terminate(s, out)          # every agent sits on this node
        return True
    if view.nAgents == s.nIDs:
        _terminate(s, out)
        return True
    s.min_id = min(s.ids)
    _enter(s, "gathering", "loop")
    return False


def _gather_leg(v: ProtocolVariant, s, view, out) -> bool:
    """Forward walk towards the node holding the minimum ID; True while running."""
    if s.rounds <= 3 * v.n:
        s.rounds += 1
        out.intent = 0 if view.id == s.min_id else 1
        return True
    return False


# -- B1 ------------------------------------------------------------------------

def _b1_settled(v: ProtocolVariant, count: int) -> bool:
    g, k = v.g, v.k
    return count >= g and (k - count >= g or count == k)


def _b1_branch(v: ProtocolVariant, s, view, out) -> None:
    count = view.nAgents
    if _b1_settled(v, count):
        _terminate(s, out)
    elif count >= v.g + 2:
        _more(v, s, view, out)
    else:
        _less(v, s, view, out)


def _more(v: ProtocolVariant, s, view, out) -> None:
    g = v.g
    s.splits += 1
    s.rank = view.rank_of(s.id)
    c = view.nAgents - g
    if s.rank <= g:
        s.dir = 0
    elif s.rank <= g + c // 2:
        s.dir = 1
    else:
        s.dir = -1
    # a stale flag left by an earlier isolated group would pin the movers here
    view.write(waiting=False)
    _enter(s, "splitting", "more_moving")
    _moving(v, s, view, out)


def _less(v: ProtocolVariant, s, view, out) -> None:
    s.splits += 1
    view.write(waiting=True)
    _enter(s, "splitting", "less_wait")
    s.rounds += 1
    out.intent = 0


def _moving(v: ProtocolVariant, s, view, out) -> bool:
    """One round of Moving(dir); False once its n rounds are used up."""
    if s.rounds > v.n:
        return False
    s.rounds += 1
    if s.dir != 0 and not view.waiting:
        out.intent = s.dir
    return True


def _b1(v: ProtocolVariant, s, view, out, arrived) -> None:
    if s.phase in ("init", "selection"):
        if _selection(v, s, view, out, arrived):
            return
    if s.phase == "gathering":
        if _gather_leg(v, s, view, out):
            return
        _b1_branch(v, s, view, out)
        return
    if s.phase != "splitting":
        raise _illegal(s, "B1")
    g = v.g
    if s.step == "less_wait":
        if s.rounds <= v.n:
            s.rounds += 1
            return
        s.dir = -1
        view.write(waiting=False)
        _enter(s, "splitting", "latter1")
        _moving(v, s, view, out)
        return
    if s.step == "more_moving":
        if _moving(v, s, view, out):
            return
        # a forward group standing on the waiting node joins it whatever the count
        if view.waiting:
            s.dir = -1
            view.write(waiting=False)
        elif view.nAgents < g:
            s.dir = 0
            view.write(waiting=True)
        else:
            s.dir = 1
        _enter(s, "splitting", "latter1")
        _moving(v, s, view, out)
        return
    if s.step == "latter1":
        if _moving(v, s, view, out):
            return
        s.dir = -s.dir
        _enter(s, "splitting", "latter2")
        _moving(v, s, view, out)
        return
    if s.step == "latter2":
        if _moving(v, s, view, out):
            return
        _b1_branch(v, s, view, out)
        return
    raise _illegal(s, "B1")


# -- sweeps (B2 gathering tail, B3 achievement) --------------------------------

def _sweep_branch(v: ProtocolVariant, s, view, out, phase: str) -> None:
    g = v.g
    count = view.nAgents
    if g <= count <= 2 * g - 1:
        _terminate(s, out)
    elif count >= 2 * g:
        _more2(v, s, view, out, phase)
    else:
        _less2(v, s, view, out, phase)


def _more2(v: ProtocolVariant, s, view, out, phase: str) -> None:
    g = v.g
    s.rank = view.rank_of(s.id)
    if s.rank <= g:
        s.dir = 1
    elif view.nAgents < 3 * g or s.rank <= 2 * g:
        s.dir = -1
    else:
        _terminate(s, out)      # at least g others remain here
        return
    _enter(s, phase, "sweep_move")
    _moving2(v, s, view, out, False)


def _less2(v: ProtocolVariant, s, view, out, phase: str) -> None:
    view.write(waiting=True)
    _enter(s, phase, "sweep_wait")
    _less2_round(v, s, view, out)


def _less2_round(v: ProtocolVariant, s, view, out) -> None:
    g = v.g
    if view.fMarked and view.bMarked:
        _terminate(s, out)      # both sweeps met here
        return
    if view.fMarked or view.bMarked:
        s.rank = view.rank_of(s.id)
        if view.nAgents >= 2 * g and s.rank >= g + 1:
            _terminate(s, out)
            return
        s.dir = view.dir
        s.step = "sweep_move"
        _moving2(v, s, view, out, False)
        return
    s.rounds += 1


def _moving2(v: ProtocolVariant, s, view, out, arrived: bool) -> None:
    g = v.g
    if arrived:
        if (s.dir == 1 and view.bMarked) or (s.dir == -1 and view.fMarked):
            _terminate(s, out)
            return
        if view.fMarked and view.bMarked:
            _terminate(s, out)
            return
        if view.waiting:
            s.rank = view.rank_of(s.id)
            if view.nAgents >= 2 * g and s.rank >= g + 1:
                _terminate(s, out)
                return
    if s.rounds > v.n:
        _terminate(s, out)
        return
    s.rounds += 1
    mark = "fMarked" if s.dir == 1 else "bMarked"
    view.write(**{mark: True})
    out.intent = s.dir
    out.arrival_writes = {mark: True, "dir": s.dir}


def _sweep(v: ProtocolVariant, s, view, out, arrived) -> None:
    if s.step == "sweep_move":
        _moving2(v, s, view, out, arrived)
    elif s.step == "sweep_wait":
        _less2_round(v, s, view, out)
    else:
        raise _illegal(s, v.tag)


def _b2(v: ProtocolVariant, s, view, out, arrived) -> None:
    if s.phase in ("init", "selection"):
        if _selection(v, s, view, out, arrived):
            return
    if s.phase == "gathering":
        if _gather_leg(v, s, view, out):
            return
        _sweep_branch(v, s, view, out, "sweep")
        return
    if s.phase == "sweep":
        _sweep(v, s, view, out, arrived)
        return
    raise _illegal(s, "B2")


# -- B3 --------------------------------------------------------------------------

def candidate_rule(ids: list, g: int) -> bool:
    """True when the (4g-1)-st observed ID is the strict minimum of the first 8g-3."""
    window = 8 * g - 3
    if len(ids) < window:
        return False
    me = ids[4 * g - 2]
    return all(me < ids[h] for h in range(window) if h != 4 * g - 2)


def _b3(v: ProtocolVariant, s, view, out, arrived) -> None:
    n, g = v.n, v.g
    if s.phase == "init":
        _write_own_id(s, view)
        _enter(s, "semi_selection", "loop")
        return
    if s.phase == "semi_selection":
        if s.step == "loop":
            if arrived and view.id is not None:
                s.ids.append(view.id)
                s.nIDs += 1
            if s.rounds <= 3 * n:
                s.rounds += 1
                if s.nIDs < 10 * g - 4 and view.nAgents < 2 * g:
                    out.intent = 1
                return
            if view.nAgents >= 2 * g or (s.nIDs >= 8 * g - 3 and candidate_rule(s.ids, g)):
                view.write(candi=True)
            # the flag becomes visible to co-located agents next round
            _enter(s, "semi_selection", "mark")
            return
        if s.step == "mark":
            s.nIDs = 1
            _enter(s, "semi_gathering", "loop")
        else:
            raise _illegal(s, "B3")
    if s.phase == "semi_gathering":
        if arrived:
            if view.id is not None:
                s.nIDs += 1
            if view.nAgents >= 2 * g:
                view.write(candi=True)
        if s.rounds <= 3 * n:
            s.rounds += 1
            if s.nIDs != 4 * g - 1 and not view.candi:
                out.intent = 1
            return
        _sweep_branch(v, s, view, out, "achievement")
        return
    if s.phase == "achievement":
        _sweep(v, s, view, out, arrived)
        return
    raise _illegal(s, "B3")


_HANDLERS = {"B1": _b1, "B2": _b2, "B3": _b3}
