"""Expected order-statistic gaps and monotonicity verification.

Conventions: samples are iid from one marginal; ``X_{r:n}`` is the r-th
smallest of n. The top-side gap for 1 <= k <= n-1 is

    top_gap(k, n) = E[X_{n-k+1:n}] - E[X_{n-k:n}]

(the k-th largest minus the (k+1)-th largest); the bottom-side gap is
E[X_{k+1:n}] - E[X_{k:n}]. Continuous marginals integrate the order-statistic
density with adaptive Simpson; discrete marginals use exact binomial sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .distributions import Marginal, _QUANTILE_EPS, quantile_window
from .quadrature import adaptive_simpson

__all__ = [
    "Side",
    "GapQuery",
    "order_stat_mean",
    "gap_expectation",
    "gap_expectation_identity",
    "verify_mhr_monotonicity",
    "verify_scaled_monotonicity",
    "verify_mhr_preservation",
    "verify_pdf_shape_preservation",
    "lopez_bound",
    "is_mhr_on_grid",
    "pdf_is_monotone",
]

_GRID = 1000
_MONOTONE_SLACK = 1e-9


class Side(Enum):
    TOP = "top"
    BOTTOM = "bottom"


@dataclass(frozen=True)
class GapQuery:
    """Which adjacent order-statistic gap to evaluate."""

    marginal: Marginal
    n: int
    k: int
    side: Side = Side.TOP

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n - 1:
            raise ValueError("need 1 <= k <= n-1")


def _ascending_rank(q: GapQuery) -> int:
    # Returns r such that the gap is E[X_{r+1:n}] - E[X_{r:n}].
    return q.n - q.k if q.side is Side.TOP else q.k


# Order-statistic densities live in a narrow band that the first coarse
# Simpson nodes can straddle entirely, which would accept 0. Integrating per
# quantile panel pins nodes where the marginal carries mass.
_PANELS = 16


def _integrate_by_quantiles(marg: Marginal, f, tol: float) -> float:
    edges = np.asarray(
        marg.ppf(np.linspace(_QUANTILE_EPS, 1.0 - _QUANTILE_EPS, _PANELS + 1)),
        dtype=float,
    )
    lo, hi = quantile_window(marg)
    edges = np.clip(edges, lo, hi)
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        if b > a:
            value, _ = adaptive_simpson(f, float(a), float(b), tol=tol / _PANELS)
            total += value
    return total


def order_stat_mean(marg: Marginal, r: int, n: int, tol: float = 1e-9) -> float:
    """E[X_{r:n}], the r-th smallest of n iid draws."""
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    if marg.is_discrete:
        return _discrete_order_stat_mean(marg, r, n)
    coeff = r * math.comb(n, r)

    def integrand(x: float) -> float:
        F = float(marg.cdf(x))
        return x * coeff * float(marg.pdf(x)) * F ** (r - 1) * (1.0 - F) ** (n - r)

    return _integrate_by_quantiles(marg, integrand, tol)


def _cdf_at_least(n: int, r: int, F: float) -> float:
    # P(at least r of n draws land at or below cdf level F), exact arithmetic.
    return math.fsum(
        math.comb(n, j) * F**j * (1.0 - F) ** (n - j) for j in range(r, n + 1)
    )


def _discrete_order_stat_mean(marg: Marginal, r: int, n: int) -> float:
    values = marg.values
    levels = np.cumsum(marg.probs)
    total = 0.0
    prev = 0.0
    for v, F in zip(values, levels):
        here = _cdf_at_least(n, r, min(float(F), 1.0))
        total += v * (here - prev)
        prev = here
    return total


def gap_expectation(q: GapQuery, tol: float = 1e-9) -> float:
    """Adjacent gap as a difference of two order-statistic expectations."""
    r = _ascending_rank(q)
    return order_stat_mean(q.marginal, r + 1, q.n, tol) - order_stat_mean(
        q.marginal, r, q.n, tol
    )


def gap_expectation_identity(q: GapQuery, tol: float = 1e-9) -> float:
    """Same gap through the survival identity, as an independent route.

    E[X_{r+1:n}] - E[X_{r:n}] = C(n, r) * integral of F**r (1-F)**(n-r) dx,
    which follows from integrating P(exactly r of n draws at or below t)
    over t. Used as a cross-check against :func:`gap_expectation`.
    """
    r = _ascending_rank(q)
    marg = q.marginal
    coeff = math.comb(q.n, r)
    if marg.is_discrete:
        values = marg.values
        levels = np.cumsum(marg.probs)
        total = 0.0
        for (v, F), v_next in zip(zip(values, levels), values[1:]):
            F = min(float(F), 1.0)
            total += (v_next - v) * coeff * F**r * (1.0 - F) ** (q.n - r)
        return total

    def integrand(x: float) -> float:
        F = float(marg.cdf(x))
        return coeff * F**r * (1.0 - F) ** (q.n - r)

    return _integrate_by_quantiles(marg, integrand, tol)


# ----------------------------------------------------------------------------
# Grid predicates
# ----------------------------------------------------------------------------

def _quantile_grid(marg: Marginal, points: int = _GRID) -> np.ndarray:
    qs = np.linspace(1e-9, 1.0 - 1e-9, points)
    return np.asarray(marg.ppf(qs), dtype=float)


def is_mhr_on_grid(marg: Marginal, points: int = _GRID) -> bool:
    """Hazard nondecreasing on a quantile grid; False for discrete marginals."""
    if marg.is_discrete:
        return False
    xs = _quantile_grid(marg, points)
    F = np.asarray(marg.cdf(xs), dtype=float)
    h = np.asarray(marg.pdf(xs), dtype=float) / (1.0 - F)
    return bool(np.all(np.diff(h) >= -_MONOTONE_SLACK))


def pdf_is_monotone(marg: Marginal, nondecreasing: bool, points: int = _GRID) -> bool:
    if marg.is_discrete:
        return False
    f = np.asarray(marg.pdf(_quantile_grid(marg, points)), dtype=float)
    step = np.diff(f)
    if nondecreasing:
        return bool(np.all(step >= -_MONOTONE_SLACK))
    return bool(np.all(step <= _MONOTONE_SLACK))


# ----------------------------------------------------------------------------
# Gap monotonicity verification
# ----------------------------------------------------------------------------

def verify_mhr_monotonicity(
    marg: Marginal, k: int, n_range: range, tol: float = 1e-7
) -> bool:
    """Is the top-side gap nonincreasing in n over the range?

    Expected to hold whenever the marginal has a monotone hazard rate; run it
    on anything to surface counterexamples (the discrete coin is the known
    one).
    """
    gaps = [
        gap_expectation(GapQuery(marg, n, k, Side.TOP))
        for n in n_range
        if n >= k + 1
    ]
    return all(later <= earlier + tol for earlier, later in zip(gaps, gaps[1:]))


def verify_scaled_monotonicity(
    marg: Marginal,
    k: int,
    n_range: range,
    side: Side = Side.TOP,
    tol: float = 1e-7,
) -> bool:
    """Check (n+1)*gap(k, n) <= n*gap(k, n-1) across the range.

    Precondition (enforced): nondecreasing pdf for the top side,
    nonincreasing for the bottom side. The inequality is the scaled
    refinement available under those shape constraints.
    """
    if side is Side.TOP and not pdf_is_monotone(marg, nondecreasing=True):
        raise ValueError("top-side scaled monotonicity requires a nondecreasing pdf")
    if side is Side.BOTTOM and not pdf_is_monotone(marg, nondecreasing=False):
        raise ValueError("bottom-side scaled monotonicity requires a nonincreasing pdf")
    for n in n_range:
        if n < k + 2:
            raise ValueError(f"n={n} too small for gap index k={k} at both n and n-1")
        gap_n = gap_expectation(GapQuery(marg, n, k, side))
        gap_prev = gap_expectation(GapQuery(marg, n - 1, k, side))
        if (n + 1) * gap_n > n * gap_prev + tol:
            return False
    return True


def verify_mhr_preservation(
    marg: Marginal, n: int, r: int, points: int = _GRID
) -> bool:
    """Hazard of the r-th smallest of n stays nondecreasing on the grid.

    Uses the order statistic's density n!/((r-1)!(n-r)!) f F^(r-1) (1-F)^(n-r)
    and survival sum_{j<r} C(n,j) F^j (1-F)^(n-j) directly; slack 1e-9 absorbs
    float noise.
    """
    if not 1 <= r <= n:
        raise ValueError("need 1 <= r <= n")
    xs = _quantile_grid(marg, points)
    F = np.asarray(marg.cdf(xs), dtype=float)
    f = np.asarray(marg.pdf(xs), dtype=float)
    coeff = r * math.comb(n, r)
    dens = coeff * f * F ** (r - 1) * (1.0 - F) ** (n - r)
    survival = np.zeros_like(F)
    for j in range(r):
        survival += math.comb(n, j) * F**j * (1.0 - F) ** (n - j)
    hazard = dens / survival
    return bool(np.all(np.diff(hazard) >= -_MONOTONE_SLACK))


def verify_pdf_shape_preservation(
    marg: Marginal, n: int, side: Side = Side.TOP, points: int = _GRID
) -> bool:
    """Max-of-n density stays nondecreasing / min-of-n stays nonincreasing.

    Top side assumes (and checks) a nondecreasing base pdf and verifies
    n f F^(n-1) keeps the shape; bottom side is the mirrored statement for
    n f (1-F)^(n-1).
    """
    xs = _quantile_grid(marg, points)
    F = np.asarray(marg.cdf(xs), dtype=float)
    f = np.asarray(marg.pdf(xs), dtype=float)
    if side is Side.TOP:
        if not pdf_is_monotone(marg, nondecreasing=True):
            raise ValueError("top side requires a nondecreasing pdf")
        dens = n * f * F ** (n - 1)
        return bool(np.all(np.diff(dens) >= -_MONOTONE_SLACK))
    if not pdf_is_monotone(marg, nondecreasing=False):
        raise ValueError("bottom side requires a nonincreasing pdf")
    dens = n * f * (1.0 - F) ** (n - 1)
    return bool(np.all(np.diff(dens) <= _MONOTONE_SLACK))


def lopez_bound(n: int, s: int, L: float) -> float:
    """Interval-support gap bound L * C(n,s) (s/n)^s (1-s/n)^(n-s).

    At s = n-1 this is L (1 - 1/n)^(n-1), decreasing toward L/e.
    """
    if not 1 <= s <= n - 1:
        raise ValueError("need 1 <= s <= n-1")
    if not L > 0:
        raise ValueError("support length L must be > 0")
    frac = s / n
    return L * math.comb(n, s) * frac**s * (1.0 - frac) ** (n - s)
