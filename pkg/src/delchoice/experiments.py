"""Monte Carlo experiments with deterministic, chunk-seeded streams.

Every estimator draws in chunks whose size depends only on (n, k), with one
derived seed per chunk. The first T trials of any run are therefore a prefix
of any longer run with the same base seed, and results are reproducible
regardless of how many other experiments ran before.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    bce_ratio,
    bm_threshold,
    incomplete_info_lower_bound,
    pim_bound_incpdf,
    pim_bound_mhr,
)
from .core import MechanismKind, MechanismSpec, RealizedInstance, RngSeed
from .distributions import Uniform01
from .equilibrium import bne_monotonicity_check, constructive_equilibrium
from .mechanisms import run_mspm

__all__ = [
    "McResult",
    "closed_form_prE_lower_bounds",
    "prE_bounds_dominance_sweep",
    "estimate_pr_event_E",
    "prE_figure_rows",
    "estimate_bernoulli_tight_gap",
    "estimate_uniform_first_best_gap",
    "estimate_bce",
    "estimate_worstcase_bne",
    "estimate_threshold_utility",
    "correspondence_experiment",
]

# Trials per chunk, sized so one chunk stays around 2 MB of draws.
_CHUNK_BUDGET = 1 << 18
# Exponent above which scores are compared in log space.
_LOG_SPACE_ABOVE = 64
# Leading trials re-run through the reference equilibrium path.
_CROSS_CHECK = 64


def _chunk_size(n: int, k: int) -> int:
    return max(1, _CHUNK_BUDGET // (n * k))


def _chunks(trials: int, n: int, k: int):
    size = _chunk_size(n, k)
    for idx, start in enumerate(range(0, trials, size)):
        yield idx, min(size, trials - start)


@dataclass(frozen=True)
class McResult:
    """Point estimate with its standard error and the checks it feeds."""

    estimate: float
    std_err: float
    trials: int
    seed: int
    refs: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# ----------------------------------------------------------------------------
# Event E: the win-weighted argmax agrees with the plain argmax
# ----------------------------------------------------------------------------

def closed_form_prE_lower_bounds(n: int, k: int) -> tuple[float, float]:
    """(product form, exponential form) lower bounds on Pr[E].

    product = [prod_{j=2..k} (1 - ((k-1)/(kn-1))**(j-1) / 2)]**n and
    exp = exp(-n^2 / (2(n-1)^2)); the product form always dominates.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    ratio = (k - 1) / (k * n - 1)
    log_product = 0.0
    power = 1.0
    for _ in range(2, k + 1):
        power *= ratio
        if power < 1e-18:
            break
        log_product += math.log1p(-0.5 * power)
    product = math.exp(n * log_product)
    exp_form = math.exp(-(n * n) / (2.0 * (n - 1) ** 2))
    assert product >= exp_form, f"product bound below exp bound at n={n}, k={k}"
    return product, exp_form


def prE_bounds_dominance_sweep(n_max: int = 500, k_max: int = 500) -> bool:
    """Check product >= exp over the whole 2..n_max x 2..k_max rectangle."""
    ns = np.arange(2, n_max + 1, dtype=float)
    log_exp = -(ns * ns) / (2.0 * (ns - 1.0) ** 2)
    for k in range(2, k_max + 1):
        ratio = (k - 1.0) / (k * ns - 1.0)
        log_sum = np.zeros_like(ns)
        power = np.ones_like(ns)
        for _ in range(2, k + 1):
            power = power * ratio
            if power.max() < 1e-18:
                break
            log_sum += np.log1p(-0.5 * power)
        if not np.all(ns * log_sum >= log_exp):
            return False
    return True


def _event_hits(x: np.ndarray, y: np.ndarray, n: int, k: int) -> np.ndarray:
    # Per-trial indicator that every agent's score argmax equals its x argmax.
    exponent = k * (n - 1)
    if exponent > _LOG_SPACE_ABOVE:
        score = exponent * np.log(x) + np.log(y)
    else:
        score = x**exponent * y
    agent_ok = np.argmax(score, axis=2) == np.argmax(x, axis=2)
    return agent_ok.all(axis=1)


def _uniform_pairs(rng: np.random.Generator, c: int, n: int, k: int):
    x = 1.0 - rng.random((c, n, k))
    y = 1.0 - rng.random((c, n, k))
    return x, y


def estimate_pr_event_E(
    n: int, k: int, trials: int = 30000, seed: int = 0
) -> McResult:
    """Estimate Pr[E] for n agents with k iid uniform (x, y) draws each."""
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    hits = 0
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"prE n={n} k={k}", idx).generator()
        x, y = _uniform_pairs(rng, c, n, k)
        hits += int(_event_hits(x, y, n, k).sum())
    est = hits / trials
    se = math.sqrt(est * (1.0 - est) / trials)
    product, exp_form = closed_form_prE_lower_bounds(n, k)
    return McResult(
        estimate=est,
        std_err=se,
        trials=trials,
        seed=seed,
        refs={"product_lb": product, "exp_lb": exp_form},
        checks={
            "ge_product_lb": est >= product - 3.0 * se,
            "ge_exp_lb": est >= exp_form - 3.0 * se,
        },
    )


def prE_figure_rows(
    ns, k: int, trials: int = 30000, seed: int = 0, reps: int = 1
) -> list[dict]:
    """Plot-ready rows of the Pr[E] estimate over n at fixed k."""
    rows = []
    for n in ns:
        for rep in range(reps):
            res = estimate_pr_event_E(n, k, trials, seed + rep)
            rows.append(
                {
                    "n": n,
                    "k": k,
                    "trials": trials,
                    "seed": seed + rep,
                    "estimate": res.estimate,
                    "std_err": res.std_err,
                    "product_lb": res.refs["product_lb"],
                    "exp_lb": res.refs["exp_lb"],
                    "pass": res.passed,
                }
            )
    return rows


# ----------------------------------------------------------------------------
# Tight coin instance
# ----------------------------------------------------------------------------

def estimate_bernoulli_tight_gap(
    n: int, k: int, trials: int = 100000, seed: int = 0
) -> McResult:
    """MC estimate of the top adjacent gap for the tuned coin instance.

    Draws stay raw 0/1 floats; the gap sample is the indicator that exactly
    one agent saw a success, whose mean is (1 - 1/n)**(n-1) by construction.
    """
    p = 1.0 - (1.0 - 1.0 / n) ** (1.0 / k)
    hits = 0
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"bernoulli n={n} k={k}", idx).generator()
        agent_best = (rng.random((c, n, k)) < p).any(axis=2)
        hits += int((agent_best.sum(axis=1) == 1).sum())
    est = hits / trials
    se = math.sqrt(est * (1.0 - est) / trials)
    exact = (1.0 - 1.0 / n) ** (n - 1)
    return McResult(
        estimate=est,
        std_err=se,
        trials=trials,
        seed=seed,
        refs={"exact_gap": exact, "p": p},
        checks={"within_4se": abs(est - exact) <= 4.0 * se},
    )


def estimate_uniform_first_best_gap(
    n: int, k: int, trials: int = 100000, seed: int = 0
) -> McResult:
    """MC estimate of E[X_(1) - X_(2)] for n agents with k uniform draws.

    X_(r) is the r-th largest per-agent best; the mean gap is what the
    subconstant delegation-gap bounds cap from above.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    samples = []
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"unigap n={n} k={k}", idx).generator()
        fb = (1.0 - rng.random((c, n, k))).max(axis=2)
        ordered = np.sort(fb, axis=1)
        samples.append(ordered[:, -1] - ordered[:, -2])
    gap = np.concatenate(samples)
    mean = float(gap.mean())
    se = float(gap.std(ddof=1)) / math.sqrt(trials)
    mhr = pim_bound_mhr(k)
    incpdf = pim_bound_incpdf(n, k)
    return McResult(
        estimate=mean,
        std_err=se,
        trials=trials,
        seed=seed,
        refs={"mhr_bound": mhr, "incpdf_bound": incpdf},
        checks={
            "le_mhr": mean <= mhr + 3.0 * se,
            "le_incpdf": mean <= incpdf + 3.0 * se,
        },
    )


# ----------------------------------------------------------------------------
# Correlation-robust comparison on event E
# ----------------------------------------------------------------------------

def estimate_bce(n: int, k: int, trials: int = 30000, seed: int = 0) -> McResult:
    """Joint estimates of E[X_max 1_E], Pr[E], E[X_max] on shared samples.

    Checks E[X_max 1_E] >= Pr[E] E[X_max] minus three combined standard
    errors, and that E[X_max] / E[X_max 1_E] stays under the closed-form
    ceiling with a delta-method error bar.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    a_parts, b_parts, c_parts = [], [], []
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"bce n={n} k={k}", idx).generator()
        x, y = _uniform_pairs(rng, c, n, k)
        ind = _event_hits(x, y, n, k).astype(float)
        x_max = x.max(axis=(1, 2))
        a_parts.append(x_max * ind)
        b_parts.append(ind)
        c_parts.append(x_max)
    a = np.concatenate(a_parts)  # X_max * 1_E
    b = np.concatenate(b_parts)  # 1_E
    c_all = np.concatenate(c_parts)  # X_max
    lhs, p, m = float(a.mean()), float(b.mean()), float(c_all.mean())
    se_lhs = float(a.std(ddof=1)) / math.sqrt(trials)
    se_p = float(b.std(ddof=1)) / math.sqrt(trials)
    se_m = float(c_all.std(ddof=1)) / math.sqrt(trials)
    combined = math.sqrt(se_lhs**2 + (m * se_p) ** 2 + (p * se_m) ** 2)

    # ratio = E[X_max] / E[X_max 1_E] = m / lhs; delta method on (lhs, m).
    ratio = m / lhs
    grad = np.array([-m / lhs**2, 1.0 / lhs])
    cov = np.cov(np.vstack([a, c_all]), ddof=1)
    ratio_se = math.sqrt(float(grad @ cov @ grad) / trials)
    ceiling = bce_ratio(n)
    return McResult(
        estimate=lhs,
        std_err=se_lhs,
        trials=trials,
        seed=seed,
        refs={"bce_ratio": ceiling},
        details={
            "pr_E": p,
            "pr_E_se": se_p,
            "E_x_max": m,
            "E_x_max_se": se_m,
            "combined_se": combined,
            "ratio": ratio,
            "ratio_se": ratio_se,
        },
        checks={
            "product_lower": lhs >= p * m - 3.0 * combined,
            "ratio_ceiling": ratio <= ceiling + 3.0 * ratio_se,
        },
    )


# ----------------------------------------------------------------------------
# Worst-case one-shot equilibrium instance
# ----------------------------------------------------------------------------

def estimate_worstcase_bne(
    n: int, k: int, trials: int = 30000, seed: int = 0
) -> McResult:
    """Simulate the min-proposing equilibrium of the comonotone instance.

    Per trial the principal receives max_i min_j x_ij while the first best is
    the max over all nk draws; only x is drawn since y is a function of x.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    gaps, mins, tops = [], [], []
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"worstbne n={n} k={k}", idx).generator()
        x = 1.0 - rng.random((c, n, k))
        top = x.max(axis=(1, 2))
        chosen = x.min(axis=2).max(axis=1)
        tops.append(top)
        mins.append(chosen)
        gaps.append(top - chosen)
    gap = np.concatenate(gaps)
    chosen = np.concatenate(mins)
    top = np.concatenate(tops)
    gap_mean = float(gap.mean())
    gap_se = float(gap.std(ddof=1)) / math.sqrt(trials)
    chosen_mean = float(chosen.mean())
    chosen_se = float(chosen.std(ddof=1)) / math.sqrt(trials)
    top_mean = float(top.mean())
    top_se = float(top.std(ddof=1)) / math.sqrt(trials)
    lb = incomplete_info_lower_bound(n, k)
    min_ub = 1.0 / (k + 1) + math.sqrt(math.log(n) / (2 * k + 3))
    top_ref = n * k / (n * k + 1.0)
    monotone = bne_monotonicity_check(n, k, Uniform01())
    return McResult(
        estimate=gap_mean,
        std_err=gap_se,
        trials=trials,
        seed=seed,
        refs={
            "gap_lower_bound": lb,
            "min_exp_upper_bound": min_ub,
            "E_x_max": top_ref,
        },
        details={
            "chosen_mean": chosen_mean,
            "chosen_se": chosen_se,
            "top_mean": top_mean,
            "top_se": top_se,
            "payoff_monotone_decreasing": float(monotone),
        },
        checks={
            "gap_ge_bound": gap_mean >= lb - 3.0 * gap_se,
            "chosen_le_ub": chosen_mean <= min_ub + 3.0 * chosen_se,
            "top_matches": abs(top_mean - top_ref) <= 3.0 * top_se,
            "payoff_monotone": monotone,
        },
    )


# ----------------------------------------------------------------------------
# Fast equilibrium winner, cross-checked against the reference path
# ----------------------------------------------------------------------------

def _constructive_winner_x(
    xs: np.ndarray, ys: np.ndarray, tau: float
) -> float:
    """Principal's payoff under the constructive profile, identity tie-break.

    Mirrors constructive_equilibrium + run_mspm for homogeneous thresholds on
    raw arrays; rows may be -inf padded (padding is never eligible).
    """
    elig = xs >= tau
    if not elig.any():
        return 0.0
    fb = np.where(elig, xs, -np.inf).max(axis=1)
    istar = int(np.argmax(fb))
    strict = float(fb[:istar].max()) if istar > 0 else -np.inf
    weak = float(fb[istar + 1 :].max()) if istar + 1 < len(fb) else -np.inf
    best_key = None
    best_x = 0.0
    for j in range(xs.shape[1]):
        if not elig[istar, j]:
            continue
        xj = float(xs[istar, j])
        if xj < weak or xj <= strict:
            continue
        key = (float(ys[istar, j]), xj, -j)
        if best_key is None or key > best_key:
            best_key = key
            best_x = xj
    return best_x


def _reference_winner_x(rows: list, tau: float) -> float:
    # Full pipeline on the same draws; rows are per-agent [(x, y), ...] lists.
    inst = RealizedInstance.from_values(rows)
    spec = MechanismSpec(kind=MechanismKind.MSPM, thresholds=tau)
    profile = constructive_equilibrium(inst, spec)
    outcome = run_mspm(inst, spec, profile)
    return outcome.principal_utility


def _rows_from_arrays(xs: np.ndarray, ys: np.ndarray, counts) -> list:
    rows = []
    for i, k_i in enumerate(counts):
        rows.append([(float(xs[i, j]), float(ys[i, j])) for j in range(k_i)])
    return rows


def estimate_threshold_utility(
    n: int,
    k: int,
    alpha: float = 1.0,
    trials: int = 100000,
    seed: int = 0,
    tau: float = None,
) -> McResult:
    """Equilibrium utility of the tuned homogeneous-threshold mechanism.

    x is drawn from the power cdf F(x) = x**alpha on [0, 1], y uniform; the
    threshold defaults to the tuned r solving r**m = 1/(m+1) with m = alpha
    n k (pass tau to override, e.g. tau=0 for the no-threshold variant), and
    the reported guarantee is the closed form r - r**(m+1). The per-trial
    winner uses the fast path above; the first trials also run the reference
    equilibrium and must agree exactly.
    """
    r, _ = bm_threshold(alpha, n, k)
    m = alpha * n * k
    floor = r - r ** (m + 1.0)
    play_tau = r if tau is None else tau
    total = 0.0
    total_sq = 0.0
    done = 0
    for idx, c in _chunks(trials, n, k):
        rng = RngSeed(seed, f"threshold n={n} k={k} a={alpha} t={play_tau}", idx).generator()
        u = 1.0 - rng.random((c, n, k))
        x = u ** (1.0 / alpha)
        y = 1.0 - rng.random((c, n, k))
        for t in range(c):
            w = _constructive_winner_x(x[t], y[t], play_tau)
            if done + t < _CROSS_CHECK:
                ref = _reference_winner_x(
                    _rows_from_arrays(x[t], y[t], [k] * n), play_tau
                )
                if w != ref:
                    raise AssertionError(
                        f"fast path {w} != reference {ref} at trial {done + t}"
                    )
            total += w
            total_sq += w * w
        done += c
    mean = total / trials
    var = (total_sq - trials * mean * mean) / (trials - 1)
    se = math.sqrt(max(var, 0.0) / trials)
    checks = {}
    if tau is None:
        checks["ge_guarantee"] = mean >= floor - 3.0 * se
    return McResult(
        estimate=mean,
        std_err=se,
        trials=trials,
        seed=seed,
        refs={"threshold": r, "guarantee": floor, "tau": play_tau},
        checks=checks,
    )


def correspondence_experiment(
    split, tau: float, trials: int = 10000, seed: int = 0
) -> dict:
    """Per-trial dominance of the split-agent mechanism over one agent.

    The same k_total draws are handed once to a single agent, then partitioned
    sequentially into len(split) agents with split[i] draws each. Both sides
    run their equilibrium under the same threshold; the multi-agent winner's x
    must be at least the single-agent winner's x in every trial.
    """
    split = tuple(int(s) for s in split)
    if any(s < 1 for s in split):
        raise ValueError("every group needs at least one draw")
    k_total = sum(split)
    n = len(split)
    k_max = max(split)
    offsets = np.cumsum((0,) + split)
    failures = 0
    done = 0
    for idx, c in _chunks(trials, 1, k_total):
        rng = RngSeed(seed, f"correspond {split} tau={tau}", idx).generator()
        x = 1.0 - rng.random((c, k_total))
        y = 1.0 - rng.random((c, k_total))
        for t in range(c):
            single = _constructive_winner_x(
                x[t].reshape(1, k_total), y[t].reshape(1, k_total), tau
            )
            xs = np.full((n, k_max), -np.inf)
            ys = np.zeros((n, k_max))
            for i in range(n):
                xs[i, : split[i]] = x[t, offsets[i] : offsets[i + 1]]
                ys[i, : split[i]] = y[t, offsets[i] : offsets[i + 1]]
            multi = _constructive_winner_x(xs, ys, tau)
            if done + t < _CROSS_CHECK:
                ref_single = _reference_winner_x([list(zip(x[t], y[t]))], tau)
                ref_multi = _reference_winner_x(
                    _rows_from_arrays(xs, ys, split), tau
                )
                if single != ref_single or multi != ref_multi:
                    raise AssertionError("fast path disagrees with reference")
            if multi < single:
                failures += 1
        done += c
    return {
        "split": split,
        "tau": tau,
        "trials": trials,
        "seed": seed,
        "failures": failures,
        "pass": failures == 0,
    }
