"""End-to-end acceptance checks, one function per numbered criterion.

Each criterion returns a CriterionResult; `run_all` executes a selection and
`format_report` renders one PASS/FAIL line per criterion. The same functions
back both the test suite and the `verify-all` subcommand. `quick=True` trims
trial counts (and widens Monte Carlo slack from 3 to 4 standard errors) for a
fast smoke run; the acceptance bar is the full-size run.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .bounds import (
    bm_threshold,
    pim_bound_incpdf,
    pim_bound_mhr,
    super_agent_bm_from_eps,
    super_agent_pim,
)
from .core import (
    MechanismKind,
    MechanismSpec,
    RealizedInstance,
    derive_rng,
)
from .distributions import (
    Bernoulli,
    Exponential,
    LinearPdf2x,
    Uniform01,
    max_of_k_marginal,
)
from .equilibrium import enumerate_pure_nash
from .experiments import (
    correspondence_experiment,
    estimate_bce,
    estimate_bernoulli_tight_gap,
    estimate_pr_event_E,
    estimate_threshold_utility,
    estimate_uniform_first_best_gap,
    estimate_worstcase_bne,
    prE_bounds_dominance_sweep,
)
from .orderstats import GapQuery, Side, gap_expectation, verify_mhr_monotonicity, verify_scaled_monotonicity

SEED = 2024

RUNTIME_LIMITS = {1: 30.0, 2: 1.0, 6: 60.0, 7: 300.0}


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime_s: float
    detail: str

    @property
    def limit_s(self):
        return RUNTIME_LIMITS.get(self.number)


def _finish(number: int, name: str, t0: float, ok: bool, detail: str) -> CriterionResult:
    runtime = time.perf_counter() - t0
    limit = RUNTIME_LIMITS.get(number)
    if limit is not None and runtime >= limit:
        ok = False
        detail += f"; runtime {runtime:.1f}s over limit {limit:.0f}s"
    return CriterionResult(number, name, ok, runtime, detail)


def criterion_1(quick: bool = False) -> CriterionResult:
    """Pr[E] estimates dominate both closed-form lower bounds."""
    t0 = time.perf_counter()
    trials = 3000 if quick else 30000
    sig = 4.0 if quick else 3.0
    ok = True
    parts = []
    for n, k in ((5, 10), (20, 20), (100, 100)):
        res = estimate_pr_event_E(n, k, trials, SEED)
        good = res.estimate >= res.refs["product_lb"] - sig * res.std_err and (
            res.estimate >= res.refs["exp_lb"] - sig * res.std_err
        )
        ok = ok and good
        parts.append(f"({n},{k})={res.estimate:.4f}")
    return _finish(1, "prE lower bounds", t0, ok, " ".join(parts))


def criterion_2(quick: bool = False) -> CriterionResult:
    """Product-form bound dominates the exponential form on the full grid."""
    t0 = time.perf_counter()
    ok = prE_bounds_dominance_sweep(500, 500)
    return _finish(2, "bound dominance sweep", t0, ok, "2<=n,k<=500")


def criterion_3(quick: bool = False) -> CriterionResult:
    """Tuned coin gap matches (1-1/n)^(n-1) exactly and in Monte Carlo."""
    t0 = time.perf_counter()
    trials = 10000 if quick else 100000
    ok = True
    worst = 0.0
    for n in range(2, 11):
        exact = gap_expectation(GapQuery(Bernoulli(1.0 / n), n, 1, Side.TOP))
        target = (1.0 - 1.0 / n) ** (n - 1)
        worst = max(worst, abs(exact - target))
        if abs(exact - target) > 1e-9:
            ok = False
        mc = estimate_bernoulli_tight_gap(n, 2, trials, SEED)
        if abs(mc.estimate - mc.refs["exact_gap"]) > 4.0 * mc.std_err:
            ok = False
    return _finish(3, "coin tightness", t0, ok, f"max exact err {worst:.2e}")


def criterion_4(quick: bool = False) -> CriterionResult:
    """Super-agent calibration identity and the sure-slot equilibrium."""
    t0 = time.perf_counter()
    ok = True
    worst = 0.0
    for eps in (0.01, 0.05, 0.1, 0.3, 0.5):
        alpha = eps / (3.0 - eps)
        gap = abs((2.0 - eps) * (1.0 + alpha) - (2.0 - alpha))
        worst = max(worst, gap)
        if gap > 1e-12:
            ok = False
        named = super_agent_bm_from_eps(eps)
        # Accept-only-the-sure-slot eligible set: the game restricted to it.
        for inst, _prob in named.realizations:
            restricted = RealizedInstance((inst.agents[0][:1],))
            report = enumerate_pure_nash(
                restricted, MechanismSpec(kind=MechanismKind.MSPM, thresholds=0.0)
            )
            if not report.has_pure_nash or any(u != 1.0 for u in report.utilities):
                ok = False
    return _finish(4, "super-agent identity", t0, ok, f"max identity err {worst:.2e}")


def criterion_5(quick: bool = False) -> CriterionResult:
    """Two-slot instance: utility eps/2 and additive gap L-eps, exactly."""
    t0 = time.perf_counter()
    ok = True
    for eps in (0.05, 0.2):
        named = super_agent_pim(1.0, eps)
        inst, _ = named.realizations[0]
        report = enumerate_pure_nash(inst, named.mechanism)
        first_best = max(s.x for s in inst.agents[0])
        if not report.has_pure_nash:
            ok = False
            continue
        for u in report.utilities:
            if u != eps / 2.0 or first_best - u != 1.0 - eps:
                ok = False
    return _finish(5, "two-slot exact gap", t0, ok, "eps in {0.05, 0.2}")


def _random_grid_instance(rng, n: int) -> RealizedInstance:
    vals = rng.integers(1, 11, size=(n, 2, 2)) / 10.0
    return RealizedInstance.from_values(
        [[(float(x), float(y)) for x, y in agent] for agent in vals]
    )


def criterion_6(quick: bool = False) -> CriterionResult:
    """Per-realization floor holds for every pure NE; constructive verifies."""
    t0 = time.perf_counter()
    count = 50 if quick else 200
    rng = derive_rng(SEED, "acceptance grid instances")
    ok = True
    checked = 0
    for _ in range(count):
        n = int(rng.integers(2, 4))
        inst = _random_grid_instance(rng, n)
        for tau in (0.0, 0.5):
            spec = MechanismSpec(kind=MechanismKind.MSPM, thresholds=tau)
            report = enumerate_pure_nash(inst, spec)
            if report.violations or not report.constructive_verified:
                ok = False
            checked += len(report.nash_profiles)
    return _finish(6, "threshold floor census", t0, ok, f"{checked} NE checked")


def criterion_7(quick: bool = False) -> CriterionResult:
    """Budgeted floor holds for every pure NE of the examination mechanism."""
    t0 = time.perf_counter()
    count = 25 if quick else 100
    rng = derive_rng(SEED, "acceptance budget instances")
    ok = True
    checked = 0
    for _ in range(count):
        inst = _random_grid_instance(rng, 4)
        for budget in (2, 3):
            for tau in (0.0, 0.5):
                spec = MechanismSpec(
                    kind=MechanismKind.RSPM, thresholds=tau, budget=budget
                )
                report = enumerate_pure_nash(inst, spec)
                floor = report.floors[0] if report.floors else 0.0
                for u in report.utilities:
                    # 1e-12 absorbs float dust in the probability-weighted sum.
                    if u < floor - 1e-12:
                        ok = False
                checked += len(report.nash_profiles)
    return _finish(7, "budgeted floor census", t0, ok, f"{checked} NE checked")


def criterion_8(quick: bool = False) -> CriterionResult:
    """Order-statistic gap oracles and the shape-condition monotonicity."""
    t0 = time.perf_counter()
    ok = True
    # Memoryless spacings: the top-side gap of Exponential(1) is exactly 1/k.
    for n in range(2, 11):
        for k in range(1, n):
            gap = gap_expectation(GapQuery(Exponential(1.0), n, k, Side.TOP))
            if abs(gap - 1.0 / k) > 1e-6:
                ok = False
    # Uniform spacings are all 1/(n+1).
    for n in range(2, 11):
        for k in range(1, n):
            gap = gap_expectation(GapQuery(Uniform01(), n, k, Side.TOP), tol=1e-12)
            if abs(gap - 1.0 / (n + 1)) > 1e-9:
                ok = False
    # Fair-coin counterexample: the gap increases from n=4 to n=5.
    g4 = gap_expectation(GapQuery(Bernoulli(0.5), 4, 3, Side.TOP))
    g5 = gap_expectation(GapQuery(Bernoulli(0.5), 5, 3, Side.TOP))
    if not (g4 == 0.25 and g5 == 0.3125 and g4 < g5):
        ok = False
    if verify_mhr_monotonicity(Bernoulli(0.5), 3, range(4, 6)):
        ok = False
    # Hazard-monotone first-best compositions keep the gap nonincreasing in n.
    for base in (Exponential(1.0), Uniform01()):
        for k_comp in (1, 2, 3):
            marg = max_of_k_marginal(base, k_comp)
            if not verify_mhr_monotonicity(marg, 1, range(2, 9)):
                ok = False
    # Scaled refinement for the increasing-density marginal.
    if not verify_scaled_monotonicity(LinearPdf2x(), 1, range(3, 9), Side.TOP, tol=1e-7):
        ok = False
    return _finish(8, "order statistic oracles", t0, ok, "exp/unif/coin/shape")


def criterion_9(quick: bool = False) -> CriterionResult:
    """Uniform symmetric gap stays under both subconstant bounds."""
    t0 = time.perf_counter()
    trials = 10000 if quick else 100000
    sig = 4.0 if quick else 3.0
    ok = True
    for n in range(2, 7):
        for k in range(1, 9):
            res = estimate_uniform_first_best_gap(n, k, trials, SEED)
            slack = sig * res.std_err
            if res.estimate > pim_bound_mhr(k) + slack:
                ok = False
            if res.estimate > pim_bound_incpdf(n, k) + slack:
                ok = False
    return _finish(9, "subconstant gap bounds", t0, ok, "(n,k) in 2..6 x 1..8")


def criterion_10(quick: bool = False) -> CriterionResult:
    """Threshold-mechanism equilibrium utility meets the closed-form floor."""
    t0 = time.perf_counter()
    trials = 10000 if quick else 100000
    sig = 4.0 if quick else 3.0
    ok = True
    parts = []
    for n, k in ((5, 2), (3, 4)):
        res = estimate_threshold_utility(n, k, 1.0, trials, SEED)
        if res.estimate < res.refs["guarantee"] - sig * res.std_err:
            ok = False
        parts.append(f"({n},{k})={res.estimate:.4f}>={res.refs['guarantee']:.4f}")
    return _finish(10, "threshold guarantee", t0, ok, " ".join(parts))


def criterion_11(quick: bool = False) -> CriterionResult:
    """Worst-case equilibrium instance: gap, chosen value, and E[X_max]."""
    t0 = time.perf_counter()
    trials = 3000 if quick else 30000
    sig = 4.0 if quick else 3.0
    ok = True
    for n, k in ((3, 10), (5, 20)):
        res = estimate_worstcase_bne(n, k, trials, SEED)
        d = res.details
        if res.estimate < res.refs["gap_lower_bound"] - sig * res.std_err:
            ok = False
        if d["chosen_mean"] > res.refs["min_exp_upper_bound"] + sig * d["chosen_se"]:
            ok = False
        if abs(d["top_mean"] - res.refs["E_x_max"]) > sig * d["top_se"]:
            ok = False
        if not res.checks["payoff_monotone"]:
            ok = False
    return _finish(11, "worst-case equilibrium", t0, ok, "(3,10) and (5,20)")


def criterion_12(quick: bool = False) -> CriterionResult:
    """Splitting ten draws across agents never hurts, trial by trial."""
    t0 = time.perf_counter()
    trials = 1000 if quick else 10000
    ok = True
    total_failures = 0
    for split in ((2, 2, 2, 2, 2), (5, 5)):
        for tau in (0.0, 0.5, 0.8):
            res = correspondence_experiment(split, tau, trials, SEED)
            total_failures += res["failures"]
            if res["failures"]:
                ok = False
    return _finish(12, "split dominance", t0, ok, f"{total_failures} failures")


def criterion_13(quick: bool = False) -> CriterionResult:
    """Correlated-event direction: E[X_max 1_E] >= Pr[E] E[X_max], ratio capped."""
    t0 = time.perf_counter()
    trials = 3000 if quick else 30000
    sig = 4.0 if quick else 3.0
    res = estimate_bce(10, 10, trials, SEED)
    d = res.details
    ok = res.estimate >= d["pr_E"] * d["E_x_max"] - sig * d["combined_se"]
    if d["ratio"] > res.refs["bce_ratio"] + sig * d["ratio_se"]:
        ok = False
    detail = f"lhs={res.estimate:.4f} ratio={d['ratio']:.4f}<={res.refs['bce_ratio']:.4f}"
    return _finish(13, "correlated direction", t0, ok, detail)


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
    criterion_13,
)


def run_all(quick: bool = False, numbers=None) -> list[CriterionResult]:
    wanted = set(numbers) if numbers else None
    results = []
    for i, fn in enumerate(CRITERIA, start=1):
        if wanted is not None and i not in wanted:
            continue
        results.append(fn(quick=quick))
    return results


def format_report(results) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"[{status}] criterion {r.number:2d} {r.name}: {r.detail} ({r.runtime_s:.1f}s)"
        )
    return "\n".join(lines)
