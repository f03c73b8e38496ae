"""Delegated choice without money: mechanisms, equilibria, bounds, experiments.

A principal must adopt one of the solutions privately sampled by n agents;
each solution carries a value x for the principal and y for the proposing
agent, and no transfers are available. The package simulates the threshold
proposal mechanisms, enumerates and verifies pure Nash equilibria, evaluates
the closed-form guarantees, and reproduces the supporting order-statistic and
Monte Carlo computations.
"""

from .core import (
    ABSTAIN,
    UNLIMITED,
    AgentSpec,
    InstanceSpec,
    MechanismKind,
    MechanismSpec,
    Outcome,
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
from .distributions import parse_joint, parse_marginal, realize
from .equilibrium import (
    EquilibriumReport,
    constructive_equilibrium,
    enumerate_pure_nash,
    verify_nash,
)
from .errors import (
    DelchoiceError,
    HazardAtSupportEnd,
    QuadratureNonconvergent,
    SearchTooLarge,
)
from .mechanisms import run_mspm, run_rspm_exact, run_spm

__version__ = "0.1.0"

__all__ = [
    "ABSTAIN",
    "UNLIMITED",
    "AgentSpec",
    "DelchoiceError",
    "EquilibriumReport",
    "HazardAtSupportEnd",
    "InstanceSpec",
    "MechanismKind",
    "MechanismSpec",
    "Outcome",
    "QuadratureNonconvergent",
    "RealizedInstance",
    "RngSeed",
    "SearchTooLarge",
    "Solution",
    "budgeted_floor",
    "constructive_equilibrium",
    "derive_rng",
    "enumerate_pure_nash",
    "instance_spec_from_json",
    "instance_spec_to_json",
    "order_statistics_of_instance",
    "parse_joint",
    "parse_marginal",
    "realize",
    "run_mspm",
    "run_rspm_exact",
    "run_spm",
    "threshold_floor",
    "verify_nash",
    "__version__",
]
