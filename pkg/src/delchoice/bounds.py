"""Closed-form guarantees, gap bounds, and the named hard instances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import AgentSpec, InstanceSpec, MechanismKind, MechanismSpec, RealizedInstance

__all__ = [
    "bm_threshold",
    "pim_bound_symmetric",
    "pim_bound_mhr",
    "pim_bound_incpdf",
    "incomplete_info_lower_bound",
    "approx_bne_epsilon",
    "bce_ratio",
    "NamedInstance",
    "super_agent_bm",
    "super_agent_bm_from_eps",
    "super_agent_pim",
    "bernoulli_tight",
    "worstcase_bne_instance",
]


def bm_threshold(alpha: float, n: int, k: int) -> tuple[float, float]:
    """Threshold and guarantee for accept-first-above-r with m = alpha*n*k draws.

    r solves r**m = 1/(m+1); the guaranteed fraction of E[max] is
    r - r**(m+1) = r * m / (m+1). The guarantee is reported from that chain
    form directly.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    m = alpha * n * k
    r = (1.0 / (m + 1.0)) ** (1.0 / m)
    return r, r * m / (m + 1.0)


def pim_bound_symmetric(n: int, L: float = 1.0) -> float:
    """Delegation-gap bound L*(1-1/n)**(n-1) for n symmetric agents."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not L > 0:
        raise ValueError("L must be > 0")
    if n == 1:
        return L
    return L * (1.0 - 1.0 / n) ** (n - 1)


def pim_bound_mhr(k: int) -> float:
    """Gap bound sqrt(4k / (3 (k+1)^2 (k+2))) under a nondecreasing hazard."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.sqrt(4.0 * k / (3.0 * (k + 1) ** 2 * (k + 2)))


def pim_bound_incpdf(n: int, k: int) -> float:
    """Gap bound for nondecreasing densities: sqrt(12k/((k+1)^2 (k+2)))/(n+1)."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return math.sqrt(12.0 * k / ((k + 1) ** 2 * (k + 2))) / (n + 1)


def incomplete_info_lower_bound(n: int, k: int) -> float:
    """(k-1)/(k+1) - sqrt(ln n / (2k+3)); may be negative, never clamped."""
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    return (k - 1) / (k + 1) - math.sqrt(math.log(n) / (2 * k + 3))


def approx_bne_epsilon(n: int) -> float:
    """Additive slack 1 - exp(-n^2 / (2 (n-1)^2)) for the approximate analysis."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return -math.expm1(-(n * n) / (2.0 * (n - 1) ** 2))


def bce_ratio(n: int) -> float:
    """Multiplicative ceiling exp(n^2 / (2 (n-1)^2)) on E[max]/E[max on E]."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return math.exp((n * n) / (2.0 * (n - 1) ** 2))


# ----------------------------------------------------------------------------
# Named instances
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NamedInstance:
    """A constructed instance plus the values its analysis pins down.

    ``realizations`` lists every possible realized instance with its
    probability when the support is finite (empty otherwise), so exact
    expectations can be taken without sampling.
    """

    name: str
    spec: InstanceSpec
    mechanism: MechanismSpec
    expected: dict[str, float] = field(default_factory=dict)
    realizations: tuple[tuple[RealizedInstance, float], ...] = ()


def _fmt(v: float) -> str:
    return repr(float(v))


def super_agent_bm(alpha: float) -> NamedInstance:
    """Single agent, two slots: sure (1, 10) plus a gamble with mean 1.

    The gamble pays x = 1/alpha with probability alpha and
    x = alpha/(1-alpha) otherwise, both at y = 5. The agent's preferred
    proposal is the sure slot, so every equilibrium hands the principal
    exactly 1, while E[max x] = 2 - alpha.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("need 0 < alpha < 1/2")
    hi = 1.0 / alpha
    lo = alpha / (1.0 - alpha)
    spec = InstanceSpec(
        agents=(
            AgentSpec(
                k=2,
                dist=(
                    "pointmass:x=1,y=10",
                    f"table:[[{_fmt(hi)},5,{_fmt(alpha)}],[{_fmt(lo)},5,{_fmt(1-alpha)}]]",
                ),
            ),
        )
    )
    mech = MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)
    realizations = (
        (RealizedInstance.from_values([[(1.0, 10.0), (hi, 5.0)]]), alpha),
        (RealizedInstance.from_values([[(1.0, 10.0), (lo, 5.0)]]), 1.0 - alpha),
    )
    expected = {
        "alpha": alpha,
        "E_X1": 2.0 - alpha,
        "alg_ceiling": 1.0 + alpha,
        "ne_utility": 1.0,
    }
    return NamedInstance("super_agent_bm", spec, mech, expected, realizations)


def super_agent_bm_from_eps(eps: float) -> NamedInstance:
    """Calibrate alpha = eps/(3-eps) so (2-eps)*(1+alpha) = 2-alpha exactly."""
    if not 0 < eps < 1:
        raise ValueError("need 0 < eps < 1")
    return super_agent_bm(eps / (3.0 - eps))


def super_agent_pim(L: float, eps: float) -> NamedInstance:
    """Single agent, two deterministic slots (L - eps/2, 5) and (eps/2, 10).

    With no threshold the agent proposes the high-y slot, the principal
    collects eps/2, and the gap to the first best is exactly L - eps.
    """
    if not 0 < eps < L:
        raise ValueError("need 0 < eps < L")
    spec = InstanceSpec(
        agents=(AgentSpec(k=2, dist=((L - eps / 2.0, 5.0), (eps / 2.0, 10.0))),)
    )
    mech = MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)
    inst = RealizedInstance.from_values([[(L - eps / 2.0, 5.0), (eps / 2.0, 10.0)]])
    expected = {
        "ne_utility": eps / 2.0,
        "first_best": L - eps / 2.0,
        "gap": L - eps,
    }
    return NamedInstance("super_agent_pim", spec, mech, expected, (
        (inst, 1.0),
    ))


def bernoulli_tight(n: int, k: int) -> NamedInstance:
    """n agents with k coin draws each, tuned so the symmetric bound is tight.

    Per-draw success p = 1 - (1 - 1/n)**(1/k) makes each agent's best draw a
    coin with success q = 1/n, and the adjacent gap at the top across agents
    equals (1 - 1/n)**(n-1) exactly. Draws live in {0, 1}; gap arithmetic
    runs on the raw draws, not on realized solutions.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    p = 1.0 - (1.0 - 1.0 / n) ** (1.0 / k)
    q = 1.0 / n
    spec = InstanceSpec(
        agents=tuple(AgentSpec(k=k, dist=f"bernoulli:p={_fmt(p)}") for _ in range(n))
    )
    mech = MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)
    expected = {
        "p": p,
        "q": q,
        "gap": (1.0 - 1.0 / n) ** (n - 1),
        "symmetric_bound": pim_bound_symmetric(n),
    }
    return NamedInstance("bernoulli_tight", spec, mech, expected)


def worstcase_bne_instance(n: int, k: int) -> NamedInstance:
    """Comonotone instance whose unique one-shot equilibrium proposes min x.

    Agent utility is tied to x through y = (1 - (1-F)^(k(n-1)))**(-2) (capped),
    which makes the win-weighted payoff strictly decreasing in x, so every
    agent proposes its smallest draw.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    spec = InstanceSpec(
        agents=tuple(
            AgentSpec(k=k, dist=f"worstcase_bne:n={n},k={k}") for _ in range(n)
        )
    )
    mech = MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)
    nk = n * k
    expected = {
        "E_X_max": nk / (nk + 1.0),
        "gap_lower_bound": incomplete_info_lower_bound(n, k),
        "min_exp_upper_bound": 1.0 / (k + 1) + math.sqrt(math.log(n) / (2 * k + 3)),
    }
    return NamedInstance("worstcase_bne", spec, mech, expected)
