"""Equilibrium search: constructive profile, Nash census, floors, reports."""
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from delchoice.core import (
    ABSTAIN,
    MechanismKind,
    MechanismSpec,
    RealizedInstance,
)
from delchoice.distributions import Bernoulli, Uniform01
from delchoice.equilibrium import (
    bne_monotonicity_check,
    constructive_equilibrium,
    enumerate_pure_nash,
    expected_utilities,
    pareto_undominated,
    verify_nash,
)
from delchoice.errors import SearchTooLarge

from conftest import small_instances

MSPM0 = MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)


def _mspm(tau=0.0, tie_break=None):
    return MechanismSpec(kind=MechanismKind.MSPM, thresholds=tau, tie_break=tie_break)


# ----------------------------------------------------------------------------
# Expected utilities
# ----------------------------------------------------------------------------

def test_expected_utilities_mspm_degenerate():
    inst = RealizedInstance.from_values([[(0.6, 2.0)], [(0.9, 3.0)]])
    principal, agents = expected_utilities(inst, MSPM0, [0, 0])
    assert principal == 0.9
    assert agents == (0.0, 3.0)


def test_expected_utilities_rspm_mixture():
    inst = RealizedInstance.from_values([[(0.9, 2.0)], [(0.7, 3.0)], [(0.5, 5.0)]])
    spec = MechanismSpec(kind=MechanismKind.RSPM, thresholds=0.0, budget=2)
    principal, agents = expected_utilities(inst, spec, [0, 0, 0])
    # Win shares 2/3, 1/3, 0 by subset counting.
    assert principal == pytest.approx(0.9 * 2 / 3 + 0.7 / 3)
    assert agents[0] == pytest.approx(2.0 * 2 / 3)
    assert agents[1] == pytest.approx(3.0 / 3)
    assert agents[2] == 0.0


# ----------------------------------------------------------------------------
# Constructive profile
# ----------------------------------------------------------------------------

def test_constructive_prefers_own_utility_within_winning_slots():
    # Favored agent can retreat to x=0.8: still ties the rival and wins by rho.
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.8, 9.0)], [(0.8, 5.0)]])
    profile = constructive_equilibrium(inst, MSPM0)
    assert profile == [1, 0]
    ok, deviation = verify_nash(inst, MSPM0, profile)
    assert ok, deviation


def test_constructive_respects_strict_bar_against_preferred_rival():
    # Reversed tie-break: the rival now wins ties, so 0.8 is no longer enough.
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.8, 9.0)], [(0.8, 5.0)]])
    profile = constructive_equilibrium(inst, _mspm(tie_break=(1, 0)))
    assert profile == [0, 0]
    ok, _ = verify_nash(inst, _mspm(tie_break=(1, 0)), profile)
    assert ok


def test_constructive_breaks_y_ties_toward_higher_x():
    inst = RealizedInstance.from_values([[(0.9, 5.0), (0.7, 5.0)], [(0.2, 1.0)]])
    assert constructive_equilibrium(inst, MSPM0) == [0, 0]


def test_constructive_all_abstain_when_nothing_eligible():
    inst = RealizedInstance.from_values([[(0.2, 1.0)], [(0.3, 1.0)]])
    assert constructive_equilibrium(inst, _mspm(tau=0.5)) == [ABSTAIN, ABSTAIN]


def test_constructive_others_propose_first_best():
    inst = RealizedInstance.from_values(
        [[(0.9, 1.0)], [(0.6, 9.0), (0.7, 1.0)], [(0.2, 1.0)]]
    )
    profile = constructive_equilibrium(inst, _mspm(tau=0.5))
    # Agent 1 proposes the eligible max-x slot, agent 2 has nothing.
    assert profile == [0, 1, ABSTAIN]


def test_constructive_requires_threshold_mechanism():
    inst = RealizedInstance.from_values([[(0.9, 1.0)]])
    spec = MechanismSpec(kind=MechanismKind.RSPM, thresholds=0.0, budget=2)
    with pytest.raises(ValueError):
        constructive_equilibrium(inst, spec)


@settings(max_examples=200)
@given(small_instances(min_n=1), st.sampled_from([0.0, 0.5, 0.8]))
def test_constructive_is_always_nash(inst, tau):
    spec = _mspm(tau)
    profile = constructive_equilibrium(inst, spec)
    ok, deviation = verify_nash(inst, spec, profile)
    assert ok, deviation


@settings(max_examples=100)
@given(small_instances(min_n=2), st.sampled_from([0.0, 0.5]))
def test_constructive_meets_threshold_floor(inst, tau):
    from delchoice.core import threshold_floor

    spec = _mspm(tau)
    profile = constructive_equilibrium(inst, spec)
    principal, _ = expected_utilities(inst, spec, profile)
    assert principal >= threshold_floor(inst, tau) - 1e-12


# ----------------------------------------------------------------------------
# Nash verification
# ----------------------------------------------------------------------------

def test_verify_nash_reports_deviation():
    # Proposing the low-y slot is strictly dominated for a lone agent.
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.8, 9.0)]])
    ok, deviation = verify_nash(inst, MSPM0, [0])
    assert not ok
    assert deviation["agent"] == 0
    assert deviation["to"] == 1
    assert deviation["gain"] == pytest.approx(8.0)


def test_rationality_prunes_outcome_equivalent_strategies():
    # With no eligible slot, proposing anyway equals abstaining: the
    # permissive census keeps both copies, Rationality keeps one.
    inst = RealizedInstance.from_values([[(0.4, 9.0)]])
    spec = _mspm(tau=0.5)
    rational = enumerate_pure_nash(inst, spec)
    assert rational.nash_profiles == ((ABSTAIN,),)
    permissive = enumerate_pure_nash(inst, spec, rationality=False)
    assert set(permissive.nash_profiles) == {(0,), (ABSTAIN,)}
    assert set(permissive.utilities) == {0.0}


def test_verify_nash_verdict_ignores_rationality():
    # An ineligible proposal is dropped, so deviating to one never strictly
    # gains and both settings agree on every profile.
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.4, 9.0)]])
    for rationality in (True, False):
        ok, deviation = verify_nash(inst, _mspm(tau=0.5), [0], rationality=rationality)
        assert ok and deviation is None


# ----------------------------------------------------------------------------
# Census
# ----------------------------------------------------------------------------

def test_enumerate_finds_unique_equilibrium_utility():
    inst = RealizedInstance.from_values([[(0.95, 5.0), (0.05, 10.0)]])
    report = enumerate_pure_nash(inst, MSPM0)
    assert report.has_pure_nash
    assert set(report.utilities) == {0.05}
    assert report.constructive == (1,)
    assert report.constructive_verified


def test_enumerate_budgeted_uses_exact_distribution():
    inst = RealizedInstance.from_values([[(0.9, 1.0)], [(0.7, 1.0)], [(0.5, 1.0)]])
    spec = MechanismSpec(kind=MechanismKind.RSPM, thresholds=0.0, budget=2)
    report = enumerate_pure_nash(inst, spec)
    assert report.has_pure_nash
    assert report.constructive is None
    floor = report.floors[0]
    assert all(u >= floor - 1e-12 for u in report.utilities)


@settings(max_examples=100, deadline=None)
@given(small_instances(min_n=1, max_n=3, max_k=2), st.sampled_from([0.0, 0.5]))
def test_enumerated_nash_verify_against_unpruned_deviations(inst, tau):
    # Pruning must not admit false equilibria: every census hit survives the
    # full eligible-deviation check.
    spec = _mspm(tau)
    report = enumerate_pure_nash(inst, spec, pareto=True)
    for profile in report.nash_profiles:
        ok, deviation = verify_nash(inst, spec, profile, rationality=True)
        assert ok, deviation


@settings(max_examples=60, deadline=None)
@given(small_instances(min_n=2, max_n=2, max_k=2), st.sampled_from([0.0, 0.5]))
def test_pruned_census_keeps_every_equilibrium_utility(inst, tau):
    spec = _mspm(tau)
    pruned = enumerate_pure_nash(inst, spec, pareto=True)
    full = enumerate_pure_nash(inst, spec, pareto=False)
    assert set(pruned.nash_profiles) <= set(full.nash_profiles)
    assert pruned.has_pure_nash == full.has_pure_nash


def test_pareto_undominated_keeps_frontier():
    inst = RealizedInstance.from_values(
        [[(0.9, 1.0), (0.8, 9.0), (0.7, 0.5)]]
    )
    kept = pareto_undominated(inst, 0, [0, 1, 2])
    assert kept == [0, 1]
    # Dominance is strict in at least one coordinate, so exact twins both
    # stay while a strictly better y on equal x removes the weaker copy.
    twin = RealizedInstance.from_values([[(0.5, 0.5), (0.5, 0.5)]])
    assert pareto_undominated(twin, 0, [0, 1]) == [0, 1]
    near = RealizedInstance.from_values([[(0.5, 0.5), (0.5, 0.6)]])
    assert pareto_undominated(near, 0, [0, 1]) == [1]


def test_search_guard_raises(monkeypatch):
    import delchoice.equilibrium as eq

    monkeypatch.setattr(eq, "PROFILE_GUARD", 3)
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.8, 2.0)], [(0.7, 1.0)]])
    with pytest.raises(SearchTooLarge):
        enumerate_pure_nash(inst, MSPM0, pareto=False)


def test_heterogeneous_thresholds_have_no_floor():
    inst = RealizedInstance.from_values([[(0.9, 1.0)], [(0.7, 1.0)]])
    spec = MechanismSpec(kind=MechanismKind.MSPM, thresholds=(0.0, 0.5))
    report = enumerate_pure_nash(inst, spec)
    assert report.has_pure_nash
    assert all(math.isnan(f) for f in report.floors)
    assert not report.violations


def test_report_json_schema():
    inst = RealizedInstance.from_values([[(0.2, 1.0)], [(0.3, 1.0)]])
    report = enumerate_pure_nash(inst, _mspm(tau=0.5))
    payload = json.loads(report.to_json())
    assert set(payload) == {"nash_profiles", "floors", "constructive", "violations"}
    assert payload["constructive"]["profile"] == ["ABSTAIN", "ABSTAIN"]
    assert payload["constructive"]["verified"] is True
    for entry in payload["nash_profiles"]:
        assert set(entry) == {"profile", "expected_utility"}


# ----------------------------------------------------------------------------
# Worst-case payoff monotonicity
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("n,k", [(2, 1), (3, 10), (5, 20), (2, 50)])
def test_bne_monotonicity_uniform(n, k):
    assert bne_monotonicity_check(n, k, Uniform01())


def test_bne_monotonicity_validation():
    with pytest.raises(ValueError):
        bne_monotonicity_check(1, 2, Uniform01())
    with pytest.raises(ValueError):
        bne_monotonicity_check(2, 0, Uniform01())
