"""Domain types: validation, order statistics, floors, seeding, JSON."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from delchoice.core import (
    AgentSpec,
    InstanceSpec,
    RealizedInstance,
    RngSeed,
    Solution,
    budgeted_floor,
    derive_rng,
    instance_spec_from_json,
    instance_spec_to_json,
    order_statistics_of_instance,
    threshold_floor,
)

from conftest import small_instances


# ----------------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("x,y", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_solution_requires_positive_utilities(x, y):
    with pytest.raises(ValueError):
        Solution(x, y)


def test_instance_needs_agents_and_slots():
    with pytest.raises(ValueError):
        RealizedInstance(())
    with pytest.raises(ValueError):
        RealizedInstance(((Solution(1, 1),), ()))


def test_from_values_shape():
    inst = RealizedInstance.from_values([[(0.5, 1.0)], [(0.2, 0.3), (0.9, 0.1)]])
    assert inst.n == 2
    assert inst.k(0) == 1 and inst.k(1) == 2
    assert inst.agents[1][1] == Solution(0.9, 0.1)


def test_agent_spec_per_slot_length_must_match_k():
    with pytest.raises(ValueError):
        AgentSpec(k=3, dist=("uniform01", "uniform01"))
    AgentSpec(k=2, dist=("uniform01", "pointmass:x=1,y=2"))


# ----------------------------------------------------------------------------
# Instance order statistics
# ----------------------------------------------------------------------------

def test_order_statistics_ranks_first_bests():
    inst = RealizedInstance.from_values(
        [[(0.5, 1), (0.2, 1)], [(0.9, 1)], [(0.7, 1), (0.95, 1)]]
    )
    stats = order_statistics_of_instance(inst)
    assert stats.first_bests == (0.95, 0.9, 0.5)
    assert stats.first_best_owners == (2, 1, 0)
    assert stats.per_agent[0] == (0.5, 0.2)


def test_order_statistics_ties_keep_agent_order():
    inst = RealizedInstance.from_values([[(0.5, 1)], [(0.9, 1)], [(0.9, 1)]])
    stats = order_statistics_of_instance(inst)
    assert stats.first_best_owners == (1, 2, 0)


# ----------------------------------------------------------------------------
# Floors
# ----------------------------------------------------------------------------

def _two_agent(x1: float, x2: float) -> RealizedInstance:
    return RealizedInstance.from_values([[(x1, 1.0)], [(x2, 1.0)]])


def test_threshold_floor_branches():
    # Second best eligible: the floor is the second best itself.
    assert threshold_floor(_two_agent(0.9, 0.5), 0.3) == 0.5
    # Only the best clears tau: floor drops to tau.
    assert threshold_floor(_two_agent(0.9, 0.5), 0.8) == 0.8
    # Nothing clears tau: no guarantee.
    assert threshold_floor(_two_agent(0.9, 0.5), 0.95) == 0.0


def test_threshold_floor_single_agent():
    inst = RealizedInstance.from_values([[(0.9, 1.0), (0.4, 1.0)]])
    assert threshold_floor(inst, 0.5) == 0.5
    assert threshold_floor(inst, 0.95) == 0.0
    assert threshold_floor(inst, 0.0) == 0.0


def test_budgeted_floor_matches_unlimited_when_few_clear():
    inst = _two_agent(0.9, 0.5)
    assert budgeted_floor(inst, 0.3, 2) == threshold_floor(inst, 0.3)
    assert budgeted_floor(inst, 0.8, 2) == threshold_floor(inst, 0.8)


def test_budgeted_floor_drops_with_excess_demand():
    inst = RealizedInstance.from_values(
        [[(0.9, 1)], [(0.7, 1)], [(0.5, 1)], [(0.3, 1)]]
    )
    # e = 4 agents clear tau = 0 with budget 2: floor falls to the 4th best.
    assert budgeted_floor(inst, 0.0, 2) == 0.3
    assert budgeted_floor(inst, 0.0, 3) == 0.5
    assert budgeted_floor(inst, 0.0, 4) == threshold_floor(inst, 0.0) == 0.7
    assert budgeted_floor(inst, 0.6, 2) == threshold_floor(inst, 0.6) == 0.7


def test_budgeted_floor_requires_budget_at_least_two():
    with pytest.raises(ValueError):
        budgeted_floor(_two_agent(0.9, 0.5), 0.0, 1)


@given(small_instances(min_n=2), st.sampled_from([0.0, 0.3, 0.5, 0.8]))
def test_floor_never_exceeds_first_best(inst, tau):
    stats = order_statistics_of_instance(inst)
    assert threshold_floor(inst, tau) <= stats.first_bests[0]


@given(small_instances(min_n=2), st.sampled_from([0.0, 0.3, 0.5, 0.8]), st.integers(2, 4))
def test_budgeted_floor_never_exceeds_unlimited(inst, tau, budget):
    assert budgeted_floor(inst, tau, budget) <= threshold_floor(inst, tau)


# ----------------------------------------------------------------------------
# Seeding
# ----------------------------------------------------------------------------

def test_rng_seed_streams_are_deterministic():
    a = RngSeed(7, "label", 3).generator().random(16)
    b = RngSeed(7, "label", 3).generator().random(16)
    assert np.array_equal(a, b)


def test_rng_seed_components_separate_streams():
    base = RngSeed(7, "label", 3).generator().random(16)
    assert not np.array_equal(base, RngSeed(8, "label", 3).generator().random(16))
    assert not np.array_equal(base, RngSeed(7, "other", 3).generator().random(16))
    assert not np.array_equal(base, RngSeed(7, "label", 4).generator().random(16))


def test_rng_seed_trial_helpers_agree():
    direct = RngSeed(11, "exp", 5).generator().random(8)
    via_with = RngSeed(11, "exp").with_trial(5).generator().random(8)
    via_derive = derive_rng(11, "exp", 5).random(8)
    assert np.array_equal(direct, via_with)
    assert np.array_equal(direct, via_derive)


def test_rng_seed_trialless_stream_is_its_own():
    a = RngSeed(11, "exp").generator().random(8)
    b = RngSeed(11, "exp", 0).generator().random(8)
    assert not np.array_equal(a, b)


# ----------------------------------------------------------------------------
# Instance JSON
# ----------------------------------------------------------------------------

def test_json_round_trip_id_string():
    spec = InstanceSpec((AgentSpec(2, "uniform01"), AgentSpec(3, "exp:lambda=2")))
    assert instance_spec_from_json(instance_spec_to_json(spec)) == spec


def test_json_round_trip_explicit_pairs():
    spec = InstanceSpec((AgentSpec(2, ((0.95, 5.0), (0.05, 10.0))),))
    assert instance_spec_from_json(instance_spec_to_json(spec)) == spec


def test_json_round_trip_per_slot_ids():
    spec = InstanceSpec(
        (AgentSpec(2, ("pointmass:x=1,y=10", "table:[[5,5,0.2],[0.25,5,0.8]]")),)
    )
    assert instance_spec_from_json(instance_spec_to_json(spec)) == spec


def test_json_rejects_inconsistent_n():
    payload = {"n": 3, "agents": [{"k": 1, "dist": "uniform01"}]}
    with pytest.raises(ValueError):
        instance_spec_from_json(payload)


def test_json_rejects_malformed_dist():
    payload = {"n": 1, "agents": [{"k": 1, "dist": 42}]}
    with pytest.raises(ValueError):
        instance_spec_from_json(payload)
    payload = {"n": 1, "agents": [{"k": 2, "dist": [[0.5, 1.0]]}]}
    with pytest.raises(ValueError):
        instance_spec_from_json(payload)


def test_json_accepts_string_or_dict_source():
    spec = InstanceSpec((AgentSpec(1, "uniform01"),))
    text = instance_spec_to_json(spec)
    assert instance_spec_from_json(text) == instance_spec_from_json(json.loads(text))


@given(st.integers(1, 4), st.integers(1, 4))
def test_json_round_trip_property(n, k):
    spec = InstanceSpec(tuple(AgentSpec(k, "uniform01") for _ in range(n)))
    assert instance_spec_from_json(instance_spec_to_json(spec)) == spec


def test_mechanism_spec_validation():
    from delchoice.core import MechanismKind, MechanismSpec

    with pytest.raises(ValueError):
        MechanismSpec(kind=MechanismKind.MSPM, thresholds=-0.1)
    with pytest.raises(ValueError):
        MechanismSpec(kind=MechanismKind.MSPM, tie_break=(0, 0))
    with pytest.raises(ValueError):
        MechanismSpec(kind=MechanismKind.RSPM, budget=None)
    spec = MechanismSpec(kind=MechanismKind.MSPM, thresholds=(0.1, 0.5), tie_break=(1, 0))
    assert spec.tau(0) == 0.1 and spec.tau(1) == 0.5
    assert spec.rho_rank(2) == (1, 0)
    assert MechanismSpec(kind=MechanismKind.MSPM).rho_rank(3) == (0, 1, 2)


def test_outcome_from_winner():
    from delchoice.core import Outcome

    inst = RealizedInstance.from_values([[(0.5, 2.0)], [(0.8, 3.0)]])
    won = Outcome.from_winner(inst, (1, 0))
    assert won.principal_utility == 0.8
    assert won.agent_utilities == (0.0, 3.0)
    null = Outcome.from_winner(inst, None)
    assert null.winner is None
    assert null.principal_utility == 0.0
    assert null.agent_utilities == (0.0, 0.0)
    assert not math.isnan(null.principal_utility)
