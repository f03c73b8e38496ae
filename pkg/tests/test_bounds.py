"""Closed-form bounds and the named hard instances.

Frozen oracle values, recomputed independently from the printed formulas:
  bm_threshold(1, 5, 2)  -> r = 0.7867934421967723, guarantee = 0.7152667656334294
  bm_threshold(1, 1, 1)  -> r = 0.5 exactly, guarantee = 0.25 exactly
  pim_bound_mhr(1)       -> 1/3 exactly
  pim_bound_mhr(10)      -> 0.09582659576267816
  pim_bound_incpdf(3, 2) -> 0.2041241452319315
  incomplete_info(2, 1)  -> -0.3723297411059034 (negative, reported as-is)
  incomplete_info(3, 50) -> 0.8575073137451795
  approx_bne_epsilon(2)  -> 0.8646647167633873
  bce_ratio(10)          -> 1.8538859518680508
"""
import math

import pytest
from hypothesis import given, strategies as st

from delchoice.bounds import (
    approx_bne_epsilon,
    bce_ratio,
    bernoulli_tight,
    bm_threshold,
    incomplete_info_lower_bound,
    pim_bound_incpdf,
    pim_bound_mhr,
    pim_bound_symmetric,
    super_agent_bm,
    super_agent_bm_from_eps,
    super_agent_pim,
    worstcase_bne_instance,
)
from delchoice.core import MechanismKind
from delchoice.equilibrium import enumerate_pure_nash

REL = 1e-12


def test_bm_threshold_frozen():
    r, g = bm_threshold(1.0, 5, 2)
    assert r == pytest.approx(0.7867934421967723, rel=REL)
    assert g == pytest.approx(0.7152667656334294, rel=REL)
    assert bm_threshold(1.0, 1, 1) == (0.5, 0.25)


@given(
    st.floats(0.1, 2.0, allow_nan=False),
    st.integers(1, 20),
    st.integers(1, 20),
)
def test_bm_threshold_identities(alpha, n, k):
    r, g = bm_threshold(alpha, n, k)
    m = alpha * n * k
    assert 0.0 < r < 1.0
    # r solves r**m = 1/(m+1); the guarantee is the chain value r - r**(m+1).
    assert r**m == pytest.approx(1.0 / (m + 1.0), rel=1e-9)
    assert g == pytest.approx(r - r ** (m + 1.0), rel=1e-9)
    assert 0.0 < g < 1.0


def test_bm_threshold_validation():
    with pytest.raises(ValueError):
        bm_threshold(0.0, 2, 2)
    with pytest.raises(ValueError):
        bm_threshold(1.0, 0, 2)


def test_symmetric_bound():
    assert pim_bound_symmetric(1) == 1.0
    assert pim_bound_symmetric(2) == 0.5
    assert pim_bound_symmetric(3) == pytest.approx(4.0 / 9.0, rel=REL)
    assert pim_bound_symmetric(3, L=2.5) == pytest.approx(2.5 * 4.0 / 9.0, rel=REL)
    assert pim_bound_symmetric(1, L=0.4) == 0.4
    with pytest.raises(ValueError):
        pim_bound_symmetric(0)
    with pytest.raises(ValueError):
        pim_bound_symmetric(2, L=0.0)


def test_symmetric_bound_decreases_toward_inverse_e():
    values = [pim_bound_symmetric(n) for n in range(2, 60)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(1.0 / math.e, abs=5e-3)


def test_mhr_bound_frozen():
    assert pim_bound_mhr(1) == pytest.approx(1.0 / 3.0, rel=REL)
    assert pim_bound_mhr(10) == pytest.approx(0.09582659576267816, rel=REL)
    with pytest.raises(ValueError):
        pim_bound_mhr(0)


def test_incpdf_bound_frozen():
    assert pim_bound_incpdf(3, 2) == pytest.approx(0.2041241452319315, rel=REL)
    assert pim_bound_incpdf(2, 1) == pytest.approx(1.0 / 3.0, rel=REL)
    with pytest.raises(ValueError):
        pim_bound_incpdf(0, 1)


@given(st.integers(1, 40), st.integers(1, 40))
def test_incpdf_tightens_with_more_agents(n, k):
    assert pim_bound_incpdf(n + 1, k) < pim_bound_incpdf(n, k)


def test_incomplete_info_frozen():
    assert incomplete_info_lower_bound(2, 1) == pytest.approx(
        -0.3723297411059034, rel=REL
    )
    assert incomplete_info_lower_bound(3, 50) == pytest.approx(
        0.8575073137451795, rel=REL
    )
    # Negative values pass through unclamped.
    assert incomplete_info_lower_bound(2, 1) < 0.0
    with pytest.raises(ValueError):
        incomplete_info_lower_bound(1, 5)


def test_approx_bne_and_bce_ratio_frozen():
    assert approx_bne_epsilon(2) == pytest.approx(0.8646647167633873, rel=REL)
    assert bce_ratio(2) == pytest.approx(math.exp(2.0), rel=REL)
    assert bce_ratio(10) == pytest.approx(1.8538859518680508, rel=REL)
    with pytest.raises(ValueError):
        approx_bne_epsilon(1)
    with pytest.raises(ValueError):
        bce_ratio(1)


@given(st.integers(2, 100))
def test_bce_ratio_complements_epsilon(n):
    # exp(-x) + (1 - exp(-x)) partition: ratio * (1 - eps) == 1.
    assert bce_ratio(n) * (1.0 - approx_bne_epsilon(n)) == pytest.approx(1.0, rel=1e-12)


# ----------------------------------------------------------------------------
# Named instances
# ----------------------------------------------------------------------------

def test_super_agent_bm_expected_values():
    named = super_agent_bm(0.2)
    assert named.expected["E_X1"] == pytest.approx(1.8, rel=REL)
    assert named.expected["alg_ceiling"] == pytest.approx(1.2, rel=REL)
    assert named.expected["ne_utility"] == 1.0
    assert named.mechanism.kind is MechanismKind.MSPM
    # Finite support: probability-weighted first best matches E_X1 exactly.
    total = sum(
        p * max(s.x for s in inst.agents[0]) for inst, p in named.realizations
    )
    assert total == pytest.approx(named.expected["E_X1"], rel=REL)
    assert sum(p for _, p in named.realizations) == pytest.approx(1.0, rel=REL)


def test_super_agent_bm_gamble_mean_matches_ceiling():
    # alpha * (1/alpha) + (1 - alpha) * alpha / (1 - alpha) = 1 + alpha.
    named = super_agent_bm(0.3)
    mean = sum(p * inst.agents[0][1].x for inst, p in named.realizations)
    assert mean == pytest.approx(named.expected["alg_ceiling"], rel=REL)
    assert mean == pytest.approx(1.3, rel=REL)


def test_super_agent_bm_validation():
    for bad in (0.0, 0.5, 0.7, -0.1):
        with pytest.raises(ValueError):
            super_agent_bm(bad)


def test_super_agent_bm_equilibrium_pins_unit_utility():
    # The sure slot maximizes the agent's y in every realization, so all
    # equilibria adopt it and the principal collects exactly 1.
    named = super_agent_bm(0.25)
    for inst, _p in named.realizations:
        report = enumerate_pure_nash(inst, named.mechanism)
        assert report.has_pure_nash
        assert all(u == 1.0 for u in report.utilities)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3, 0.5])
def test_super_agent_bm_from_eps_identity(eps):
    named = super_agent_bm_from_eps(eps)
    alpha = named.expected["alpha"]
    assert alpha == pytest.approx(eps / (3.0 - eps), rel=REL)
    assert abs((2.0 - eps) * (1.0 + alpha) - (2.0 - alpha)) <= 1e-12


def test_super_agent_bm_from_eps_validation():
    with pytest.raises(ValueError):
        super_agent_bm_from_eps(0.0)
    with pytest.raises(ValueError):
        super_agent_bm_from_eps(1.0)


def test_super_agent_pim_exact_gap():
    named = super_agent_pim(1.0, 0.05)
    inst, p = named.realizations[0]
    assert p == 1.0
    report = enumerate_pure_nash(inst, named.mechanism)
    assert report.has_pure_nash
    first_best = max(s.x for s in inst.agents[0])
    for u in report.utilities:
        assert u == 0.025
        assert first_best - u == 0.95
    assert named.expected == {"ne_utility": 0.025, "first_best": 0.975, "gap": 0.95}


def test_super_agent_pim_scales_with_support():
    named = super_agent_pim(2.0, 0.5)
    assert named.expected["gap"] == pytest.approx(1.5, rel=REL)
    with pytest.raises(ValueError):
        super_agent_pim(1.0, 1.0)
    with pytest.raises(ValueError):
        super_agent_pim(1.0, 0.0)


def test_bernoulli_tight_calibration():
    named = bernoulli_tight(4, 3)
    p = named.expected["p"]
    # Per-agent best success probability is exactly 1/n by construction.
    assert 1.0 - (1.0 - p) ** 3 == pytest.approx(0.25, rel=REL)
    assert named.expected["q"] == 0.25
    assert named.expected["gap"] == pytest.approx((0.75) ** 3, rel=REL)
    assert named.expected["gap"] == pytest.approx(named.expected["symmetric_bound"], rel=REL)
    assert len(named.realizations) == 0
    with pytest.raises(ValueError):
        bernoulli_tight(1, 3)


def test_worstcase_instance_expected_values():
    named = worstcase_bne_instance(3, 10)
    assert named.expected["E_X_max"] == pytest.approx(30.0 / 31.0, rel=REL)
    assert named.expected["gap_lower_bound"] == pytest.approx(
        incomplete_info_lower_bound(3, 10), rel=REL
    )
    assert named.expected["min_exp_upper_bound"] == pytest.approx(
        1.0 / 11.0 + math.sqrt(math.log(3.0) / 23.0), rel=REL
    )
    assert all(a.dist == "worstcase_bne:n=3,k=10" for a in named.spec.agents)
    with pytest.raises(ValueError):
        worstcase_bne_instance(1, 10)
