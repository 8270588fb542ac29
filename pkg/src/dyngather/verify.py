"""Final-configuration checks and explicit-constant complexity caps."""
from __future__ import annotations

from dataclasses import dataclass, field

from .adversary import FixedLink
from .engine import ALL_TERMINATED, ExecutionResult, run
from .protocols import ProtocolVariant, dispatch
from .ring_core import Configuration, init_configuration


@dataclass
class BoundReport:
    rounds_elapsed: int
    round_cap: int
    per_phase_link_pass_max: dict = field(default_factory=dict)   # phase -> (observed, cap)
    total_moves: int = 0
    move_cap: int = 0
    terminated: bool = True

    @property
    def pass_(self) -> bool:
        if not self.terminated or self.rounds_elapsed > self.round_cap:
            return False
        if self.total_moves > self.move_cap:
            return False
        return all(obs <= cap for obs, cap in self.per_phase_link_pass_max.values())

    def as_dict(self) -> dict:
        return {
            "rounds_elapsed": self.rounds_elapsed,
            "round_cap": self.round_cap,
            "total_moves": self.total_moves,
            "move_cap": self.move_cap,
            "link_pass_max": {p: list(v) for p, v in sorted(self.per_phase_link_pass_max.items())},
            "pass": self.pass_,
        }


def check_partial_gathering(config: Configuration, g: int) -> bool:
    if not all(a.terminated for a in config.agents):
        return False
    return all(count >= g for count in config.counts().values())


def round_cap(v: ProtocolVariant) -> int:
    if v.tag == "B1":
        return 6 * v.n + 3 * v.n * v.log_g + 5
    return 7 * v.n + 5


def move_cap(v: ProtocolVariant) -> int:
    n, k, g = v.n, v.k, v.g
    if v.tag == "B1":
        return k * 6 * n + 2 * g * 3 * n * (v.log_g + 1)
    if v.tag == "B2":
        return k * 6 * n + 4 * g * n
    return (10 * g - 3 + 4 * g - 1 + 4 * g) * n


def link_pass_caps(v: ProtocolVariant) -> dict:
    g = v.g
    if v.tag == "B3":
        return {"semi_selection": 10 * g - 3, "semi_gathering": 4 * g - 1, "achievement": 4 * g}
    if v.tag == "B2":
        return {"sweep": 4 * g}
    return {}


def check_bounds(result: ExecutionResult, variant: ProtocolVariant) -> BoundReport:
    caps = link_pass_caps(variant)
    per_phase = {}
    for phase, cap in caps.items():
        counts = result.link_passes.get(phase)
        per_phase[phase] = (max(counts) if counts else 0, cap)
    return BoundReport(
        rounds_elapsed=result.rounds_elapsed,
        round_cap=round_cap(variant),
        per_phase_link_pass_max=per_phase,
        total_moves=result.total_moves,
        move_cap=move_cap(variant),
        terminated=result.outcome == ALL_TERMINATED,
    )


def clustered_placement(n: int, k: int) -> list:
    """a_0 at v_0, the others packed on v_{n-k+1} .. v_{n-1}."""
    return [0] + list(range(n - k + 1, n))


def lower_bound_demo(n: int, k: int, g: int = 2, ids=None) -> ExecutionResult:
    """Clustered start with link e_{n-1} cut for the whole run."""
    if not k < n:
        raise ValueError("the demonstration needs k < n")
    ids = list(range(k)) if ids is None else list(ids)
    variant = dispatch(n, k, g)
    initial = init_configuration(n, clustered_placement(n, k), ids)
    result = run(initial, variant, FixedLink(n - 1))
    if result.rounds_elapsed < n - k:
        raise AssertionError(f"finished in {result.rounds_elapsed} rounds, below n-k={n - k}")
    return result
