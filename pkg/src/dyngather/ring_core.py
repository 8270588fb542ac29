"""Ring topology and the mutable whiteboard / agent records."""
from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from typing import Optional, Sequence


class ConfigError(ValueError):
    """Invalid initial configuration."""


class DuplicatePlacement(ConfigError):
    pass


class DuplicateId(ConfigError):
    pass


class TooManyAgents(ConfigError):
    pass


@dataclass(frozen=True)
class RingTopology:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"ring needs at least one node, got n={self.n}")


def neighbor(topology: RingTopology, node: int, dir: int) -> int:
    return (node + dir) % topology.n


def link_between(topology: RingTopology, node: int, dir: int) -> int:
    """Index of the link a move from ``node`` in direction ``dir`` traverses."""
    return node if dir == 1 else (node - 1) % topology.n


def distance(topology: RingTopology, i: int, j: int) -> int:
    n = topology.n
    return min((j - i) % n, (i - j) % n)


# Board fields an agent program may write. The registry and nAgents are
# maintained by the engine on arrival/departure.
WRITABLE = ("id", "dir", "waiting", "fMarked", "bMarked", "candi")


@dataclass
class Whiteboard:
    id: Optional[int] = None
    nAgents: int = 0
    dir: int = 0
    waiting: bool = False
    fMarked: bool = False
    bMarked: bool = False
    candi: bool = False
    registry: list = field(default_factory=list)

    def add(self, agent_id: int) -> None:
        insort(self.registry, agent_id)
        self.nAgents += 1

    def remove(self, agent_id: int) -> None:
        self.registry.remove(agent_id)
        self.nAgents -= 1

    def rank_of(self, agent_id: int) -> int:
        return self.registry.index(agent_id) + 1

    def fields(self) -> dict:
        return {
            "id": self.id,
            "nAgents": self.nAgents,
            "dir": self.dir,
            "waiting": self.waiting,
            "fMarked": self.fMarked,
            "bMarked": self.bMarked,
            "candi": self.candi,
        }

    def copy(self) -> "Whiteboard":
        return Whiteboard(self.id, self.nAgents, self.dir, self.waiting,
                          self.fMarked, self.bMarked, self.candi, list(self.registry))


@dataclass
class AgentState:
    id: int
    rounds: int = 1
    nIDs: int = 0
    nVisited: int = 0
    rank: int = 0
    dir: int = 0
    ids: list = field(default_factory=list)
    # program counter: phase name, procedure step, leg index on the shared clock
    phase: str = "init"
    step: str = "start"
    leg: int = 0
    splits: int = 0
    min_id: Optional[int] = None
    moved: bool = False
    terminated: bool = False

    def copy(self) -> "AgentState":
        dup = object.__new__(AgentState)
        dup.__dict__.update(self.__dict__)
        dup.ids = list(self.ids)
        return dup


@dataclass
class Configuration:
    topology: RingTopology
    boards: list
    agents: list          # AgentState, ascending by id
    positions: dict       # agent id -> node index
    round: int = 0
    missing: Optional[int] = None

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def k(self) -> int:
        return len(self.agents)

    def counts(self) -> dict:
        out: dict = {}
        for pos in self.positions.values():
            out[pos] = out.get(pos, 0) + 1
        return out

    def copy(self) -> "Configuration":
        return Configuration(self.topology, [b.copy() for b in self.boards],
                             [a.copy() for a in self.agents], dict(self.positions),
                             self.round, self.missing)


def init_configuration(n: int, placements: Sequence[int], ids: Sequence[int]) -> Configuration:
    topology = RingTopology(n)
    placements = list(placements)
    ids = list(ids)
    if len(placements) != len(ids):
        raise ConfigError(f"{len(placements)} placements for {len(ids)} ids")
    if len(ids) > n:
        raise TooManyAgents(f"k={len(ids)} agents do not fit on n={n} nodes")
    if len(ids) == 0:
        raise ConfigError("at least one agent is required")
    if len(set(placements)) != len(placements):
        raise DuplicatePlacement("agents must start at mutually distinct nodes")
    if len(set(ids)) != len(ids):
        raise DuplicateId("agent identifiers must be distinct")
    for p in placements:
        if not 0 <= p < n:
            raise ConfigError(f"placement {p} outside 0..{n - 1}")
    for i in ids:
        if not isinstance(i, int) or isinstance(i, bool) or i < 0:
            raise ConfigError(f"identifier {i!r} is not an unsigned integer")

    boards = [Whiteboard() for _ in range(n)]
    positions = {}
    for p, i in zip(placements, ids):
        boards[p].add(i)
        positions[i] = p
    agents = [AgentState(id=i) for i in sorted(ids)]
    return Configuration(topology, boards, agents, positions)
