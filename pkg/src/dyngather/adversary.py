"""Link-removal schedulers. Each round at most one link is missing."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .ring_core import Configuration

POLICIES = ("block-front-of-largest", "isolate-smallest", "split-majority")


@dataclass(frozen=True)
class AdversarySpec:
    kind: str = "none"                  # none | fixed | random | scripted | adaptive
    link: Optional[int] = None          # fixed
    seed: int = 0                       # random
    p_none: float = 0.0                 # random
    script: tuple = field(default_factory=tuple)   # scripted
    policy: Optional[str] = None        # adaptive

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "random", "scripted", "adaptive"):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.kind == "fixed" and self.link is None:
            raise ValueError("fixed adversary needs a link")
        if not 0.0 <= self.p_none <= 1.0:
            raise ValueError(f"p_none must lie in [0, 1], got {self.p_none}")
        if self.kind == "adaptive" and self.policy not in POLICIES:
            raise ValueError(f"unknown adaptive policy {self.policy!r}")
        object.__setattr__(self, "script", tuple(self.script))

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed({self.link})"
        if self.kind == "random":
            return f"random({self.seed},{self.p_none:g})"
        if self.kind == "scripted":
            return f"scripted({len(self.script)})"
        if self.kind == "adaptive":
            return f"adaptive({self.policy})"
        return "none"

    def validate(self, n: int) -> None:
        if self.kind == "fixed" and not 0 <= self.link < n:
            raise ValueError(f"fixed link {self.link} outside 0..{n - 1}")
        for e in self.script:
            if e is not None and not 0 <= e < n:
                raise ValueError(f"scripted link {e} outside 0..{n - 1}")


NoneMissing = AdversarySpec()


def FixedLink(link: int) -> AdversarySpec:
    return AdversarySpec("fixed", link=link)


def RandomUniform(seed: int, p_none: float = 0.2) -> AdversarySpec:
    return AdversarySpec("random", seed=seed, p_none=p_none)


def Scripted(script: Sequence[Optional[int]]) -> AdversarySpec:
    return AdversarySpec("scripted", script=tuple(script))


def AdaptiveBlocker(policy: str) -> AdversarySpec:
    return AdversarySpec("adaptive", policy=policy)


def choose_missing(spec: AdversarySpec, config: Configuration) -> Optional[int]:
    n = config.n
    if spec.kind == "none":
        return None
    if spec.kind == "fixed":
        return spec.link % n
    if spec.kind == "random":
        rng = random.Random(f"{spec.seed}:{config.round}")
        if rng.random() < spec.p_none:
            return None
        return rng.randrange(n)
    if spec.kind == "scripted":
        if config.round < len(spec.script):
            return spec.script[config.round]
        return None
    return _adaptive(spec.policy, config)


def _active_counts(config: Configuration) -> dict:
    live = {a.id for a in config.agents if not a.terminated}
    counts: dict = {}
    for aid, pos in config.positions.items():
        if aid in live:
            counts[pos] = counts.get(pos, 0) + 1
    return counts


def _adaptive(policy: str, config: Configuration) -> Optional[int]:
    n = config.n
    counts = _active_counts(config)
    if not counts:
        return None
    # ties break toward the smaller node index
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if policy == "block-front-of-largest":
        return ranked[0][0]
    if policy == "isolate-smallest":
        node = min(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
        others = [v for v in counts if v != node]
        if not others:
            return node
        fwd = min((v - node) % n for v in others)
        bwd = min((node - v) % n for v in others)
        # cut the side facing the nearest other occupied node
        return node if fwd <= bwd else (node - 1) % n
    # split-majority
    if len(ranked) < 2:
        return ranked[0][0]
    a, b = ranked[0][0], ranked[1][0]
    if (b - a) % n <= (a - b) % n:
        return a
    return (a - 1) % n
