"""Adaptive Simpson quadrature.

Recursive interval bisection with Richardson correction. Every routine
returns ``(value, error_estimate)`` so callers can propagate accuracy
claims instead of trusting a bare float.
"""
from __future__ import annotations

from typing import Callable

from .errors import QuadratureNonconvergent

DEFAULT_TOL = 1e-9
_MAX_DEPTH = 48


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _recurse(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
) -> tuple[float, float]:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, abs(delta) / 15.0
    if depth <= 0:
        raise QuadratureNonconvergent(
            f"interval [{a}, {b}] still above tolerance after maximum bisection depth"
        )
    lv, le = _recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
    rv, re = _recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    return lv + rv, le + re


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_depth: int = _MAX_DEPTH,
) -> tuple[float, float]:
    """Integrate f over [a, b] to absolute tolerance tol.

    Returns (value, error_estimate). Raises QuadratureNonconvergent when a
    subinterval cannot meet its share of the tolerance within max_depth
    bisections.
    """
    if not b > a:
        return 0.0, 0.0
    fa = f(a)
    m = 0.5 * (a + b)
    fm = f(m)
    fb = f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
