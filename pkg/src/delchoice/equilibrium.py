"""Complete-information equilibrium machinery.

Works on realized instances: constructive equilibrium play for the
threshold mechanism, pure-Nash verification and exhaustive enumeration on
small discrete instances, and the monotonicity certificate behind the
worst-case incomplete-information construction.

Play assumptions are explicit flags: Rationality restricts an agent to
eligible proposals (plus ABSTAIN, always available); Pareto pruning drops
solutions dominated in (x, y) from enumeration strategy sets.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    ABSTAIN,
    Choice,
    MechanismKind,
    MechanismSpec,
    Outcome,
    RealizedInstance,
    budgeted_floor,
    threshold_floor,
)
from .distributions import Marginal
from .errors import SearchTooLarge
from .mechanisms import run_mspm, run_rspm_exact, run_spm

__all__ = [
    "EquilibriumReport",
    "PROFILE_GUARD",
    "outcome_distribution",
    "expected_utilities",
    "constructive_equilibrium",
    "verify_nash",
    "enumerate_pure_nash",
    "bne_monotonicity_check",
    "pareto_undominated",
]

#: Largest strategy-profile product enumerate_pure_nash will walk.
PROFILE_GUARD = 10**7


def outcome_distribution(
    inst: RealizedInstance, spec: MechanismSpec, profile: Sequence[Choice]
) -> list[tuple[Outcome, float]]:
    if spec.kind is MechanismKind.MSPM:
        return [(run_mspm(inst, spec, profile), 1.0)]
    if spec.kind is MechanismKind.RSPM:
        return run_rspm_exact(inst, spec, profile)
    return [(run_spm(inst, spec.tau(0), profile[0]), 1.0)]


def expected_utilities(
    inst: RealizedInstance, spec: MechanismSpec, profile: Sequence[Choice]
) -> tuple[float, tuple[float, ...]]:
    """(expected principal utility, expected per-agent utilities)."""
    principal = 0.0
    agents = [0.0] * inst.n
    for outcome, p in outcome_distribution(inst, spec, profile):
        principal += p * outcome.principal_utility
        for i, u in enumerate(outcome.agent_utilities):
            if u:
                agents[i] += p * u
    return principal, tuple(agents)


def _eligible_slots(inst: RealizedInstance, spec: MechanismSpec, i: int) -> list[int]:
    tau = spec.tau(i)
    return [j for j in range(inst.k(i)) if inst.agents[i][j].x >= tau]


def pareto_undominated(inst: RealizedInstance, i: int, slots: Sequence[int]) -> list[int]:
    """Drop slots dominated in (x, y) by another listed slot; keeps the frontier."""
    sols = inst.agents[i]
    kept = []
    for j in slots:
        dominated = any(
            jj != j
            and sols[jj].x >= sols[j].x
            and sols[jj].y >= sols[j].y
            and (sols[jj].x > sols[j].x or sols[jj].y > sols[j].y)
            for jj in slots
        )
        if not dominated:
            kept.append(j)
    # Two identical solutions would dominate each other under the rule above;
    # keep the first so the frontier is never empty.
    if not kept and slots:
        best = max(slots, key=lambda j: (sols[j].x, sols[j].y, -j))
        kept = [best]
    return kept


def constructive_equilibrium(
    inst: RealizedInstance, spec: MechanismSpec
) -> list[Choice]:
    """Equilibrium play for the threshold mechanism with deterministic ties.

    The rho-favored agent among those holding the best eligible first-best
    proposes his highest-y eligible solution that still wins: weakly above
    every less-preferred rival's eligible first-best, strictly above every
    more-preferred rival's. Everyone else proposes their eligible first-best
    (ABSTAIN when they have none).
    """
    if spec.kind not in (MechanismKind.MSPM, MechanismKind.SPM):
        raise ValueError("constructive play is defined for the threshold mechanism")
    n = inst.n
    rank = spec.rho_rank(n)
    eligible = [_eligible_slots(inst, spec, i) for i in range(n)]
    first_best = [
        max((inst.agents[i][j].x for j in eligible[i]), default=-math.inf)
        for i in range(n)
    ]
    best = max(first_best)
    if best == -math.inf:
        return [ABSTAIN] * n

    istar = min((i for i in range(n) if first_best[i] == best), key=lambda i: rank[i])
    weak_bar = max(
        (first_best[j] for j in range(n) if j != istar and rank[j] > rank[istar]),
        default=-math.inf,
    )
    strict_bar = max(
        (first_best[j] for j in range(n) if j != istar and rank[j] < rank[istar]),
        default=-math.inf,
    )
    sols = inst.agents[istar]
    feasible = [
        j for j in eligible[istar] if sols[j].x >= weak_bar and sols[j].x > strict_bar
    ]
    if not feasible:
        # The first-best slot always qualifies; this is a pure safety net.
        feasible = [j for j in eligible[istar] if sols[j].x == first_best[istar]]
    pick = min(feasible, key=lambda j: (-sols[j].y, -sols[j].x, j))

    profile: list[Choice] = []
    for i in range(n):
        if i == istar:
            profile.append(pick)
        elif eligible[i]:
            own = inst.agents[i]
            profile.append(
                min(eligible[i], key=lambda j: (-own[j].x, -own[j].y, j))
            )
        else:
            profile.append(ABSTAIN)
    return profile


def _strategy_options(
    inst: RealizedInstance,
    spec: MechanismSpec,
    i: int,
    rationality: bool,
    pareto: bool,
) -> list[Choice]:
    slots = _eligible_slots(inst, spec, i) if rationality else list(range(inst.k(i)))
    if pareto:
        slots = pareto_undominated(inst, i, slots)
    return [*slots, ABSTAIN]


def verify_nash(
    inst: RealizedInstance,
    spec: MechanismSpec,
    profile: Sequence[Choice],
    rationality: bool = True,
) -> tuple[bool, Union[dict, None]]:
    """True iff no agent has a strictly improving unilateral deviation.

    Deviations range over the agent's eligible solutions plus ABSTAIN under
    Rationality, over all solutions plus ABSTAIN otherwise. Returns the first
    profitable deviation found, if any.
    """
    profile = list(profile)
    _, base = expected_utilities(inst, spec, profile)
    for i in range(inst.n):
        for dev in _strategy_options(inst, spec, i, rationality, pareto=False):
            if dev == profile[i]:
                continue
            trial = profile.copy()
            trial[i] = dev
            _, utils = expected_utilities(inst, spec, trial)
            if utils[i] > base[i]:
                deviation = {
                    "agent": i,
                    "from": _choice_json(profile[i]),
                    "to": _choice_json(dev),
                    "gain": utils[i] - base[i],
                }
                return False, deviation
    return True, None


@dataclass(frozen=True)
class EquilibriumReport:
    """Pure-Nash census of one realized instance under one mechanism."""

    nash_profiles: tuple[tuple[Choice, ...], ...]
    utilities: tuple[float, ...]
    floors: tuple[float, ...]
    constructive: Union[tuple[Choice, ...], None]
    constructive_verified: bool
    violations: tuple[dict, ...]

    @property
    def has_pure_nash(self) -> bool:
        return bool(self.nash_profiles)

    def to_json(self) -> str:
        payload = {
            "nash_profiles": [
                {"profile": [_choice_json(c) for c in prof], "expected_utility": u}
                for prof, u in zip(self.nash_profiles, self.utilities)
            ],
            "floors": list(self.floors),
            "constructive": (
                None
                if self.constructive is None
                else {
                    "profile": [_choice_json(c) for c in self.constructive],
                    "verified": self.constructive_verified,
                }
            ),
            "violations": list(self.violations),
        }
        return json.dumps(payload)


def _choice_json(choice: Choice):
    return "ABSTAIN" if choice is ABSTAIN else int(choice)


def _homogeneous_tau(spec: MechanismSpec, n: int) -> Union[float, None]:
    taus = {spec.tau(i) for i in range(n)}
    return taus.pop() if len(taus) == 1 else None


def _instance_floor(inst: RealizedInstance, spec: MechanismSpec) -> float:
    # Both floor guarantees assume one homogeneous threshold.
    tau = _homogeneous_tau(spec, inst.n)
    if tau is None:
        return math.nan
    if spec.kind is MechanismKind.RSPM:
        return budgeted_floor(inst, tau, spec.budget)
    return threshold_floor(inst, tau)


def enumerate_pure_nash(
    inst: RealizedInstance,
    spec: MechanismSpec,
    rationality: bool = True,
    pareto: bool = True,
) -> EquilibriumReport:
    """Exhaustive pure-Nash search over the (pruned) strategy sets.

    Nash checks compare expected utilities, so the budgeted mechanism is
    handled through its exact outcome distribution. Every found equilibrium
    is compared against the per-realization utility floor; violations are
    collected, never silently dropped.
    """
    options = [
        _strategy_options(inst, spec, i, rationality, pareto) for i in range(inst.n)
    ]
    total = math.prod(len(o) for o in options)
    if total > PROFILE_GUARD:
        raise SearchTooLarge(f"{total} strategy profiles exceed guard {PROFILE_GUARD}")

    floor = _instance_floor(inst, spec)
    nash: list[tuple[Choice, ...]] = []
    utilities: list[float] = []
    violations: list[dict] = []
    for profile in itertools.product(*options):
        principal, base = expected_utilities(inst, spec, profile)
        is_nash = True
        for i in range(inst.n):
            for dev in options[i]:
                if dev == profile[i]:
                    continue
                trial = list(profile)
                trial[i] = dev
                _, utils = expected_utilities(inst, spec, trial)
                if utils[i] > base[i]:
                    is_nash = False
                    break
            if not is_nash:
                break
        if not is_nash:
            continue
        nash.append(tuple(profile))
        utilities.append(principal)
        if not math.isnan(floor) and principal < floor:
            violations.append(
                {
                    "profile": [_choice_json(c) for c in profile],
                    "expected_utility": principal,
                    "floor": floor,
                }
            )

    constructive = None
    verified = False
    if spec.kind in (MechanismKind.MSPM, MechanismKind.SPM):
        constructive = tuple(constructive_equilibrium(inst, spec))
        verified, _ = verify_nash(inst, spec, constructive, rationality=True)
    return EquilibriumReport(
        nash_profiles=tuple(nash),
        utilities=tuple(utilities),
        floors=tuple(floor for _ in nash),
        constructive=constructive,
        constructive_verified=verified,
        violations=tuple(violations),
    )


def bne_monotonicity_check(n: int, k: int, x_marg: Marginal, grid: int = 1000) -> bool:
    """Certify that low proposals are best responses in the worst-case joint.

    Evaluates the unclamped expected-utility curve
    u(x0) = (1 - (1 - F(x0))**k)**-(n-1) on a quantile grid and returns True
    iff it is strictly decreasing, which makes the min-x proposal profile a
    Bayes-Nash equilibrium.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    qs = np.linspace(1e-9, 1.0 - 1e-9, grid)
    xs = np.asarray(x_marg.ppf(qs), dtype=float)
    F = np.asarray(x_marg.cdf(xs), dtype=float)
    # log u = -(n-1) log1p(-(1-F)^k); direct evaluation saturates at 1.0 once
    # (1-F)^k drops below an ulp, so compare in log space and let the fully
    # underflowed stretch fall back to strict movement of F itself.
    tail = (1.0 - F) ** k
    log_u = -(n - 1.0) * np.log1p(-tail)
    strict = np.diff(log_u) < 0.0
    saturated = (log_u[:-1] == 0.0) & (log_u[1:] == 0.0) & (np.diff(F) > 0.0)
    return bool(np.all(strict | saturated))
