"""Domain types for delegated choice without money.

A principal delegates a pick to n agents. Agent i privately samples k_i
solutions; a solution carries a principal utility x > 0 and an owner utility
y > 0. The null outcome (nothing adopted) is represented by ``winner=None``
in :class:`Outcome`, never as a Solution. Mechanisms, order statistics and
the per-realization utility floors live here; sampling lives in
:mod:`delchoice.distributions`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ABSTAIN",
    "UNLIMITED",
    "Choice",
    "Solution",
    "RealizedInstance",
    "AgentSpec",
    "InstanceSpec",
    "MechanismKind",
    "MechanismSpec",
    "Outcome",
    "InstanceOrderStats",
    "RngSeed",
    "derive_rng",
    "order_statistics_of_instance",
    "threshold_floor",
    "budgeted_floor",
    "instance_spec_to_json",
    "instance_spec_from_json",
]


class _AbstainType:
    """Singleton marker: the always-available do-not-propose strategy."""

    _instance = None

    def __new__(cls) -> "_AbstainType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "ABSTAIN"


ABSTAIN = _AbstainType()

#: Budget value meaning "examine every candidate".
UNLIMITED = None

#: One agent's strategy: a slot index into his solution list, or ABSTAIN.
Choice = Union[int, _AbstainType]


@dataclass(frozen=True)
class Solution:
    """One sampled solution: principal utility x, owner utility y, both > 0."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.x > 0:
            raise ValueError(f"solution requires x > 0, got {self.x}")
        if not self.y > 0:
            raise ValueError(f"solution requires y > 0, got {self.y}")


@dataclass(frozen=True)
class RealizedInstance:
    """Realized solution multisets, one tuple per agent, indices stable.

    ``agents[i][j]`` is agent i's slot-j solution; slots never reorder, so a
    (agent, slot) pair identifies a solution for the whole lifetime of the
    instance.
    """

    agents: tuple[tuple[Solution, ...], ...]

    def __post_init__(self) -> None:
        if len(self.agents) < 1:
            raise ValueError("instance needs at least one agent")
        for i, sols in enumerate(self.agents):
            if len(sols) < 1:
                raise ValueError(f"agent {i} has no solutions")

    @property
    def n(self) -> int:
        return len(self.agents)

    def k(self, i: int) -> int:
        return len(self.agents[i])

    @staticmethod
    def from_values(per_agent: Sequence[Sequence[tuple[float, float]]]) -> "RealizedInstance":
        return RealizedInstance(
            tuple(tuple(Solution(x, y) for x, y in sols) for sols in per_agent)
        )


# A per-agent distribution is one of:
#   - a registry id string ("uniform01", "table:[...]", ...)
#   - explicit solutions ((x, y), ...): the realization is exactly these k pairs
#   - a tuple of k id strings, one per slot, for heterogeneous slot sampling
DistSpec = Union[str, tuple]


@dataclass(frozen=True)
class AgentSpec:
    k: int
    dist: DistSpec

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if isinstance(self.dist, tuple) and self.dist and isinstance(self.dist[0], str):
            if len(self.dist) != self.k:
                raise ValueError("per-slot distribution list must have length k")


@dataclass(frozen=True)
class InstanceSpec:
    """Sampling recipe: n agents, each with k_i draws from its distribution."""

    agents: tuple[AgentSpec, ...]

    @property
    def n(self) -> int:
        return len(self.agents)


class MechanismKind(Enum):
    SPM = "SPM"
    MSPM = "MSPM"
    RSPM = "RSPM"


@dataclass(frozen=True)
class MechanismSpec:
    """Mechanism description.

    thresholds: per-agent eligibility thresholds tau_i (a scalar is shorthand
        for a homogeneous threshold); agent i's eligible set is
        {solution : x >= tau_i}.
    tie_break: permutation of agent indices, most preferred first. None means
        identity (agent 0 most preferred). Must be deterministic; the
        guarantees fail under randomized tie-breaking.
    budget: number of candidates the principal may examine (RSPM), or
        UNLIMITED.
    """

    kind: MechanismKind
    thresholds: Union[float, tuple[float, ...]] = 0.0
    tie_break: Union[tuple[int, ...], None] = None
    budget: Union[int, None] = UNLIMITED

    def __post_init__(self) -> None:
        taus = self.thresholds if isinstance(self.thresholds, tuple) else (self.thresholds,)
        if any(t < 0 for t in taus):
            raise ValueError("thresholds must be >= 0")
        if self.tie_break is not None and sorted(self.tie_break) != list(range(len(self.tie_break))):
            raise ValueError("tie_break must be a permutation of agent indices")
        if self.kind is MechanismKind.RSPM:
            if self.budget is UNLIMITED or self.budget < 1:
                raise ValueError("RSPM requires a finite budget >= 1")

    def tau(self, i: int) -> float:
        if isinstance(self.thresholds, tuple):
            return self.thresholds[i]
        return self.thresholds

    def rho_rank(self, n: int) -> tuple[int, ...]:
        """rank[i] = preference position of agent i (0 = most preferred)."""
        if self.tie_break is None:
            return tuple(range(n))
        if len(self.tie_break) != n:
            raise ValueError("tie_break permutation length differs from agent count")
        rank = [0] * n
        for pos, agent in enumerate(self.tie_break):
            rank[agent] = pos
        return tuple(rank)


@dataclass(frozen=True)
class Outcome:
    """Winner (agent, slot) or None; utilities realized by everyone."""

    winner: Union[tuple[int, int], None]
    principal_utility: float
    agent_utilities: tuple[float, ...]

    @staticmethod
    def from_winner(inst: RealizedInstance, winner: Union[tuple[int, int], None]) -> "Outcome":
        utils = [0.0] * inst.n
        if winner is None:
            return Outcome(None, 0.0, tuple(utils))
        i, j = winner
        sol = inst.agents[i][j]
        utils[i] = sol.y
        return Outcome(winner, sol.x, tuple(utils))


# ----------------------------------------------------------------------------
# Seeding
# ----------------------------------------------------------------------------

def _label_key(label: str) -> int:
    # Stable across runs and platforms, unlike hash().
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngSeed:
    """Counter-based seed: base seed x experiment label x trial index.

    Identical (base, label, trial) always yields the identical stream, no
    matter how many other streams were derived before it.
    """

    base: int
    label: str = ""
    trial: Union[int, None] = None

    def spawn_key(self) -> tuple[int, ...]:
        key = [_label_key(self.label)]
        if self.trial is not None:
            key.append(self.trial)
        return tuple(key)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.base, spawn_key=self.spawn_key())
        return np.random.Generator(np.random.PCG64(seq))

    def with_trial(self, trial: int) -> "RngSeed":
        return RngSeed(self.base, self.label, trial)


def derive_rng(base: int, label: str, trial: Union[int, None] = None) -> np.random.Generator:
    return RngSeed(base, label, trial).generator()


# ----------------------------------------------------------------------------
# Order statistics and utility floors
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class InstanceOrderStats:
    """Cross-agent first-best sequence and per-agent sorted values.

    first_bests[r] is the (r+1)-th largest first-best across agents, so
    first_bests[0] is the overall best. Ties keep stable agent order and are
    independent of any mechanism's tie-break.
    """

    first_bests: tuple[float, ...]
    first_best_owners: tuple[int, ...]
    per_agent: tuple[tuple[float, ...], ...]


def order_statistics_of_instance(inst: RealizedInstance) -> InstanceOrderStats:
    per_agent = tuple(
        tuple(sorted((s.x for s in sols), reverse=True)) for sols in inst.agents
    )
    ranked = sorted(range(inst.n), key=lambda i: (-per_agent[i][0], i))
    return InstanceOrderStats(
        first_bests=tuple(per_agent[i][0] for i in ranked),
        first_best_owners=tuple(ranked),
        per_agent=per_agent,
    )


def threshold_floor(inst: RealizedInstance, tau: float) -> float:
    """Per-realization utility floor of the threshold mechanism.

    X_(2)*1[X_(2) >= tau] + tau*1[X_(1) >= tau > X_(2)], and 0 when even the
    best first-best is ineligible. With a single agent the second-best is
    taken as -inf, leaving only the tau branch.
    """
    stats = order_statistics_of_instance(inst)
    x1 = stats.first_bests[0]
    x2 = stats.first_bests[1] if inst.n >= 2 else -math.inf
    if x2 >= tau:
        return x2
    if x1 >= tau:
        return tau
    return 0.0


def budgeted_floor(inst: RealizedInstance, tau: float, budget: int) -> float:
    """Utility floor of the budget-B examination mechanism.

    With e = #{agents whose first-best clears tau}: when e <= B the unlimited
    floor applies unchanged; when e > B the floor drops to the (e-B+2)-th
    largest first-best (1-indexed).
    """
    if budget < 2:
        raise ValueError("budget must be >= 2")
    stats = order_statistics_of_instance(inst)
    e = sum(1 for x in stats.first_bests if x >= tau)
    if e <= budget:
        return threshold_floor(inst, tau)
    return stats.first_bests[e - budget + 1]


# ----------------------------------------------------------------------------
# Instance JSON
# ----------------------------------------------------------------------------

def _dist_to_json(dist: DistSpec):
    if isinstance(dist, str):
        return dist
    if dist and isinstance(dist[0], str):
        return list(dist)
    return [[x, y] for x, y in dist]


def _dist_from_json(raw, k: int) -> DistSpec:
    if isinstance(raw, str):
        return raw
    if not isinstance(raw, list) or not raw:
        raise ValueError("dist must be an id string, a per-slot id list, or [[x,y],...]")
    if isinstance(raw[0], str):
        return tuple(raw)
    pairs = []
    for entry in raw:
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ValueError("explicit solutions must be [x, y] pairs")
        pairs.append((float(entry[0]), float(entry[1])))
    if len(pairs) != k:
        raise ValueError("explicit solution list must have length k")
    return tuple(pairs)


def instance_spec_to_json(spec: InstanceSpec) -> str:
    payload = {
        "n": spec.n,
        "agents": [{"k": a.k, "dist": _dist_to_json(a.dist)} for a in spec.agents],
    }
    return json.dumps(payload)


def instance_spec_from_json(source: Union[str, dict]) -> InstanceSpec:
    payload = json.loads(source) if isinstance(source, str) else source
    agents = payload["agents"]
    if payload["n"] != len(agents):
        raise ValueError("n field disagrees with the number of agent entries")
    specs = []
    for entry in agents:
        k = int(entry["k"])
        specs.append(AgentSpec(k=k, dist=_dist_from_json(entry["dist"], k)))
    return InstanceSpec(tuple(specs))
