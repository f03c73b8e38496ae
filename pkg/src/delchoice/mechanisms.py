"""Mechanism execution: SPM, MSPM, and budgeted RSPM.

All functions are pure: a realized instance plus a strategy profile in,
an :class:`~delchoice.core.Outcome` out. RSPM returns its exact outcome
distribution rather than a sampled draw, so downstream equilibrium checks
can compare expected utilities with no Monte Carlo error.
"""
from __future__ import annotations

import math
from typing import Sequence

from .core import (
    ABSTAIN,
    Choice,
    MechanismKind,
    MechanismSpec,
    Outcome,
    RealizedInstance,
)

__all__ = ["run_spm", "run_mspm", "run_rspm_exact", "eligible_proposals"]


def eligible_proposals(
    inst: RealizedInstance, spec: MechanismSpec, profile: Sequence[Choice]
) -> list[tuple[int, int]]:
    """(agent, slot) pairs that were proposed and clear the agent's threshold.

    ABSTAIN entries contribute nothing; ineligible proposals are dropped by
    the mechanism, they are not an error here.
    """
    if len(profile) != inst.n:
        raise ValueError("profile length differs from agent count")
    out = []
    for i, choice in enumerate(profile):
        if choice is ABSTAIN:
            continue
        if not 0 <= choice < inst.k(i):
            raise ValueError(f"agent {i} proposal slot {choice} out of range")
        if inst.agents[i][choice].x >= spec.tau(i):
            out.append((i, choice))
    return out


def _strongest(
    inst: RealizedInstance, cands: Sequence[tuple[int, int]], rank: Sequence[int]
) -> tuple[int, int]:
    # Highest x wins; exact float ties go to the rho-preferred agent.
    return max(cands, key=lambda c: (inst.agents[c[0]][c[1]].x, -rank[c[0]]))


def run_mspm(
    inst: RealizedInstance, spec: MechanismSpec, profile: Sequence[Choice]
) -> Outcome:
    """Unlimited-examination mechanism: adopt the best eligible proposal."""
    if spec.kind is not MechanismKind.MSPM:
        raise ValueError("mechanism spec is not MSPM")
    cands = eligible_proposals(inst, spec, profile)
    if not cands:
        return Outcome.from_winner(inst, None)
    rank = spec.rho_rank(inst.n)
    return Outcome.from_winner(inst, _strongest(inst, cands, rank))


def run_rspm_exact(
    inst: RealizedInstance, spec: MechanismSpec, profile: Sequence[Choice]
) -> list[tuple[Outcome, float]]:
    """Exact outcome distribution of the budget-B examination mechanism.

    The principal examines a uniformly random size-B subset of the m eligible
    proposals (all of them when m <= B) and adopts the strongest examined
    candidate. Each proposal ranked r-th strongest (0-based) wins in
    C(m-1-r, B-1) of the C(m, B) subsets.
    """
    if spec.kind is not MechanismKind.RSPM:
        raise ValueError("mechanism spec is not RSPM")
    budget = spec.budget
    cands = eligible_proposals(inst, spec, profile)
    if not cands:
        return [(Outcome.from_winner(inst, None), 1.0)]
    m = len(cands)
    if m <= budget:
        rank = spec.rho_rank(inst.n)
        return [(Outcome.from_winner(inst, _strongest(inst, cands, rank)), 1.0)]
    rank = spec.rho_rank(inst.n)
    by_strength = sorted(
        cands, key=lambda c: (-inst.agents[c[0]][c[1]].x, rank[c[0]])
    )
    total = math.comb(m, budget)
    dist = []
    for pos, cand in enumerate(by_strength):
        wins = math.comb(m - 1 - pos, budget - 1)
        if wins:
            dist.append((Outcome.from_winner(inst, cand), wins / total))
    return dist


def run_spm(inst: RealizedInstance, tau: float, choice: Choice) -> Outcome:
    """Single-agent mechanism: accept the proposal iff its x clears tau."""
    if inst.n != 1:
        raise ValueError("SPM is a single-agent mechanism")
    if choice is ABSTAIN:
        return Outcome.from_winner(inst, None)
    if not 0 <= choice < inst.k(0):
        raise ValueError(f"proposal slot {choice} out of range")
    if inst.agents[0][choice].x >= tau:
        return Outcome.from_winner(inst, (0, choice))
    return Outcome.from_winner(inst, None)
