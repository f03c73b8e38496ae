"""Joint (x, y) solution distributions and their scalar marginals.

Marginals expose cdf/pdf/ppf/hazard plus seeded sampling; joints produce
:class:`~delchoice.core.Solution` draws. Registry id strings ("uniform01",
"bernoulli:p=0.5", ...) are the config-facing names; ``parse_joint`` and
``parse_marginal`` resolve them. A bare scalar-marginal id used as a joint
means "x from that marginal, y from Uniform01, independent".
"""
from __future__ import annotations

import json
import math
from typing import Callable, Sequence, Union

import numpy as np

from .core import AgentSpec, InstanceSpec, RealizedInstance, Solution
from .errors import HazardAtSupportEnd
from .quadrature import adaptive_simpson

__all__ = [
    "Marginal",
    "Uniform01",
    "Bernoulli",
    "PowerCdf",
    "Exponential",
    "LinearPdf2x",
    "PointMass",
    "Discrete",
    "MaxOfK",
    "IndependentProduct",
    "Comonotone",
    "DiscreteTable",
    "JointDistribution",
    "sample",
    "max_of_k_marginal",
    "worstcase_bne_joint",
    "parse_marginal",
    "parse_joint",
    "realize",
    "WORSTCASE_Y_CLAMP",
]

#: Largest owner utility the worst-case comonotone joint will emit; the raw
#: curve diverges at the support minimum.
WORSTCASE_Y_CLAMP = 1e12

# cdf quantile window used when clipping unbounded supports for quadrature
_QUANTILE_EPS = 1e-12


class Marginal:
    """Scalar distribution over principal or owner utility values."""

    is_discrete = False
    support: tuple[float, float] = (-math.inf, math.inf)
    spec_id: str = ""

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def hazard(self, x) -> float:
        """pdf / (1 - cdf); undefined once the survival function hits zero."""
        s = 1.0 - float(self.cdf(x))
        if s <= 0.0:
            raise HazardAtSupportEnd(f"{self.spec_id or type(self).__name__}: survival is 0 at x={x}")
        return float(self.pdf(x)) / s

    def mean(self) -> float:
        lo, hi = quantile_window(self)
        value, _ = adaptive_simpson(lambda t: t * self.pdf(t), lo, hi)
        return value

    def variance(self) -> float:
        m = self.mean()
        lo, hi = quantile_window(self)
        second, _ = adaptive_simpson(lambda t: t * t * self.pdf(t), lo, hi)
        return second - m * m

    def __repr__(self) -> str:
        return self.spec_id or type(self).__name__


def quantile_window(marg: Marginal) -> tuple[float, float]:
    """Support clipped to cdf in [eps, 1-eps]; finite even for exponential tails."""
    lo = float(marg.ppf(_QUANTILE_EPS))
    hi = float(marg.ppf(1.0 - _QUANTILE_EPS))
    a, b = marg.support
    return max(lo, a), min(hi, b)


class Uniform01(Marginal):
    support = (0.0, 1.0)
    spec_id = "uniform01"

    def cdf(self, x):
        return np.clip(x, 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        return u

    def sample(self, rng, size=None):
        # 1 - U keeps draws strictly positive, same distribution.
        return 1.0 - rng.random(size)

    def mean(self) -> float:
        return 0.5

    def variance(self) -> float:
        return 1.0 / 12.0


class PowerCdf(Marginal):
    """F(x) = x**alpha on [0, 1]; the boundary case of alpha-decaying cdfs."""

    support = (0.0, 1.0)

    def __init__(self, alpha: float) -> None:
        if not alpha > 0:
            raise ValueError("alpha must be > 0")
        self.alpha = float(alpha)
        self.spec_id = f"powercdf:alpha={self.alpha:g}"

    def cdf(self, x):
        return np.clip(x, 0.0, 1.0) ** self.alpha

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            (x > 0.0) & (x <= 1.0), self.alpha * x ** (self.alpha - 1.0), 0.0
        )
        return out if out.ndim else float(out)

    def ppf(self, u):
        return np.asarray(u, dtype=float) ** (1.0 / self.alpha)

    def sample(self, rng, size=None):
        return (1.0 - rng.random(size)) ** (1.0 / self.alpha)

    def mean(self) -> float:
        return self.alpha / (self.alpha + 1.0)

    def variance(self) -> float:
        return self.alpha / (self.alpha + 2.0) - self.mean() ** 2


class Exponential(Marginal):
    def __init__(self, lam: float) -> None:
        if not lam > 0:
            raise ValueError("lambda must be > 0")
        self.lam = float(lam)
        self.spec_id = f"exp:lambda={self.lam:g}"
        self.support = (0.0, math.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0.0, -np.expm1(-self.lam * np.maximum(x, 0.0)), 0.0)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0.0, self.lam * np.exp(-self.lam * x), 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.lam

    def sample(self, rng, size=None):
        return rng.exponential(scale=1.0 / self.lam, size=size)

    def mean(self) -> float:
        return 1.0 / self.lam

    def variance(self) -> float:
        return 1.0 / self.lam**2


class LinearPdf2x(Marginal):
    """f(x) = 2x on [0, 1]: the simplest strictly increasing density."""

    support = (0.0, 1.0)
    spec_id = "linpdf2x"

    def cdf(self, x):
        return np.clip(x, 0.0, 1.0) ** 2

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= 0.0) & (x <= 1.0), 2.0 * x, 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        return np.sqrt(u)

    def sample(self, rng, size=None):
        return np.sqrt(1.0 - rng.random(size))

    def mean(self) -> float:
        return 2.0 / 3.0

    def variance(self) -> float:
        return 1.0 / 18.0


class Discrete(Marginal):
    """Finite-support marginal; probabilities must sum to 1 within 1e-12."""

    is_discrete = True

    def __init__(self, values: Sequence[float], probs: Sequence[float]) -> None:
        if len(values) != len(probs) or not values:
            raise ValueError("values and probs must be equal-length and nonempty")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be >= 0")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        order = np.argsort(values, kind="stable")
        self.values = np.asarray(values, dtype=float)[order]
        self.probs = np.asarray(probs, dtype=float)[order]
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        self.support = (float(self.values[0]), float(self.values[-1]))
        self.spec_id = (
            "discrete:" + json.dumps([[v, p] for v, p in zip(self.values, self.probs)])
        )

    def cdf(self, x):
        idx = np.searchsorted(self.values, x, side="right")
        padded = np.concatenate(([0.0], self._cum))
        out = padded[idx]
        return out if np.ndim(x) else float(out)

    def pmf(self, v: float) -> float:
        matches = self.probs[self.values == v]
        return float(matches.sum())

    def pdf(self, x):
        raise ValueError("discrete marginal has a pmf, not a density")

    def ppf(self, u):
        idx = np.searchsorted(self._cum, u, side="left")
        idx = np.minimum(idx, len(self.values) - 1)
        out = self.values[idx]
        return out if np.ndim(u) else float(out)

    def sample(self, rng, size=None):
        u = rng.random(size)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self.values) - 1)
        out = self.values[idx]
        return out if size is not None else float(out)

    def mean(self) -> float:
        return float(self.values @ self.probs)

    def variance(self) -> float:
        return float((self.values**2) @ self.probs) - self.mean() ** 2


class Bernoulli(Discrete):
    def __init__(self, p: float) -> None:
        if not 0.0 < p < 1.0:
            raise ValueError("p must be in (0, 1)")
        super().__init__((0.0, 1.0), (1.0 - p, p))
        self.p = float(p)
        self.spec_id = f"bernoulli:p={self.p:g}"


class PointMass(Discrete):
    def __init__(self, v: float) -> None:
        super().__init__((v,), (1.0,))
        self.v = float(v)
        self.spec_id = f"pointmass:v={self.v:g}"


class MaxOfK(Marginal):
    """Distribution of the largest of k iid draws from ``base``; cdf = F**k."""

    def __init__(self, base: Marginal, k: int) -> None:
        if k < 1:
            raise ValueError("k must be >= 1")
        self.base = base
        self.k = int(k)
        self.is_discrete = base.is_discrete
        self.support = base.support
        self.spec_id = f"max{self.k}:{base.spec_id}"
        if base.is_discrete:
            cdf_k = np.concatenate(([0.0], np.cumsum(base.probs))) ** self.k
            self._values = base.values
            self._probs = np.diff(cdf_k)

    @property
    def values(self):
        return self._values

    @property
    def probs(self):
        return self._probs

    def cdf(self, x):
        return np.asarray(self.base.cdf(x), dtype=float) ** self.k

    def pdf(self, x):
        if self.is_discrete:
            raise ValueError("discrete marginal has a pmf, not a density")
        F = np.asarray(self.base.cdf(x), dtype=float)
        out = self.k * F ** (self.k - 1) * np.asarray(self.base.pdf(x), dtype=float)
        return out if out.ndim else float(out)

    def ppf(self, u):
        return self.base.ppf(np.asarray(u, dtype=float) ** (1.0 / self.k))

    def sample(self, rng, size=None):
        return self.ppf(rng.random(size))

    def mean(self) -> float:
        if isinstance(self.base, Uniform01):
            return self.k / (self.k + 1.0)
        if self.is_discrete:
            return float(self._values @ self._probs)
        return super().mean()

    def variance(self) -> float:
        if isinstance(self.base, Uniform01):
            return self.k / ((self.k + 1.0) ** 2 * (self.k + 2.0))
        if self.is_discrete:
            return float((self._values**2) @ self._probs) - self.mean() ** 2
        return super().variance()


def max_of_k_marginal(marg: Marginal, k: int) -> MaxOfK:
    return MaxOfK(marg, k)


# ----------------------------------------------------------------------------
# Joints
# ----------------------------------------------------------------------------

class IndependentProduct:
    """x and y drawn independently from two marginals."""

    def __init__(self, x_marg: Marginal, y_marg: Marginal) -> None:
        self.x_marg = x_marg
        self.y_marg = y_marg

    def sample(self, rng: np.random.Generator) -> Solution:
        return Solution(float(self.x_marg.sample(rng)), float(self.y_marg.sample(rng)))

    def __repr__(self) -> str:
        return f"IndependentProduct({self.x_marg!r}, {self.y_marg!r})"


class Comonotone:
    """x from a marginal, y = curve(x) deterministically."""

    def __init__(self, x_marg: Marginal, curve: Callable[[float], float], spec_id: str = "") -> None:
        self.x_marg = x_marg
        self.curve = curve
        self.spec_id = spec_id

    def sample(self, rng: np.random.Generator) -> Solution:
        x = float(self.x_marg.sample(rng))
        return Solution(x, float(self.curve(x)))

    def __repr__(self) -> str:
        return self.spec_id or f"Comonotone({self.x_marg!r})"


class DiscreteTable:
    """Explicit finite joint: rows of (x, y, prob) with probs summing to 1."""

    def __init__(self, rows: Sequence[tuple[float, float, float]]) -> None:
        if not rows:
            raise ValueError("table needs at least one row")
        if any(p < 0 for _, _, p in rows):
            raise ValueError("probabilities must be >= 0")
        total = math.fsum(p for _, _, p in rows)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"table probabilities sum to {total}, not 1")
        self.rows = tuple((float(x), float(y), float(p)) for x, y, p in rows)
        self._cum = np.cumsum([p for _, _, p in self.rows])
        self._cum[-1] = 1.0

    def sample(self, rng: np.random.Generator) -> Solution:
        u = rng.random()
        idx = int(np.searchsorted(self._cum, u, side="right"))
        idx = min(idx, len(self.rows) - 1)
        x, y, _ = self.rows[idx]
        return Solution(x, y)

    def __repr__(self) -> str:
        return "table:" + json.dumps([[x, y, p] for x, y, p in self.rows])


JointDistribution = Union[IndependentProduct, Comonotone, DiscreteTable]


def sample(dist: JointDistribution, rng: np.random.Generator) -> Solution:
    """One (x, y) draw from a joint distribution."""
    return dist.sample(rng)


def worstcase_bne_joint(n: int, k: int, x_marg: Marginal) -> Comonotone:
    """Comonotone joint whose owner utilities punish high-x proposals.

    y(x) = (1 - (1-F(x))**(k(n-1)))**(-2), clamped at WORSTCASE_Y_CLAMP near
    the support minimum where the raw curve diverges.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    if x_marg.is_discrete:
        raise ValueError("worst-case joint requires a continuous x marginal")
    exponent = k * (n - 1)

    def curve(x: float) -> float:
        survival = 1.0 - float(x_marg.cdf(x))
        inner = 1.0 - survival**exponent
        if inner <= 0.0:
            return WORSTCASE_Y_CLAMP
        return min(inner**-2.0, WORSTCASE_Y_CLAMP)

    return Comonotone(x_marg, curve, spec_id=f"worstcase_bne:n={n},k={k}")


# ----------------------------------------------------------------------------
# Registry ids
# ----------------------------------------------------------------------------

def _kwargs(argstr: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in argstr.split(","):
        if not part:
            continue
        key, _, val = part.partition("=")
        out[key.strip()] = val.strip()
    return out


def parse_marginal(spec_id: str) -> Marginal:
    name, _, argstr = spec_id.partition(":")
    if name == "uniform01":
        return Uniform01()
    if name == "linpdf2x":
        return LinearPdf2x()
    if name == "bernoulli":
        return Bernoulli(float(_kwargs(argstr)["p"]))
    if name == "powercdf":
        return PowerCdf(float(_kwargs(argstr)["alpha"]))
    if name == "exp":
        return Exponential(float(_kwargs(argstr)["lambda"]))
    if name == "pointmass":
        return PointMass(float(_kwargs(argstr)["v"]))
    if name == "discrete":
        rows = json.loads(argstr)
        return Discrete([v for v, _ in rows], [p for _, p in rows])
    raise ValueError(f"unknown marginal id: {spec_id!r}")


def parse_joint(spec_id: str) -> JointDistribution:
    name, _, argstr = spec_id.partition(":")
    if name == "table":
        rows = json.loads(argstr)
        return DiscreteTable(tuple((r[0], r[1], r[2]) for r in rows))
    if name == "pointmass" and "x" in _kwargs(argstr):
        kv = _kwargs(argstr)
        return DiscreteTable(((float(kv["x"]), float(kv["y"]), 1.0),))
    if name == "worstcase_bne":
        kv = _kwargs(argstr)
        return worstcase_bne_joint(int(kv["n"]), int(kv["k"]), Uniform01())
    if name == "uniform01":
        return IndependentProduct(Uniform01(), Uniform01())
    # Any other scalar marginal id: that x marginal, independent Uniform01 y.
    return IndependentProduct(parse_marginal(spec_id), Uniform01())


def _agent_joints(agent: AgentSpec):
    if isinstance(agent.dist, str):
        return [parse_joint(agent.dist)] * agent.k
    if agent.dist and isinstance(agent.dist[0], str):
        return [parse_joint(d) for d in agent.dist]
    return None


def realize(spec: InstanceSpec, rng: np.random.Generator) -> RealizedInstance:
    """Draw one realized instance: k_i solutions per agent, slot order kept."""
    per_agent = []
    for agent in spec.agents:
        joints = _agent_joints(agent)
        if joints is None:
            sols = tuple(Solution(x, y) for x, y in agent.dist)
        else:
            sols = tuple(j.sample(rng) for j in joints)
        per_agent.append(sols)
    return RealizedInstance(tuple(per_agent))
