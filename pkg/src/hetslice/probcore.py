"""Probability primitives: binomial/multinomial masses, finite-support PMF
algebra, percentile extraction, and Markov steady-state solving.

All combinatorial coefficients go through log-gamma so that block sizes well
past 170 (where factorials overflow a double) stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Mass below which adaptive tail truncation stops (residual is folded into the
# last support point, never into the deficit: the deficit is reserved for
# genuine packet loss).
TAIL_EPS = 1e-9

_LGAMMA_TABLE = np.zeros(1)


def _lgamma_table(n: int) -> np.ndarray:
    """log(k!) for k = 0..n, grown on demand and cached."""
    global _LGAMMA_TABLE
    if len(_LGAMMA_TABLE) <= n:
        old = len(_LGAMMA_TABLE)
        new = np.empty(n + 1)
        new[:old] = _LGAMMA_TABLE
        for k in range(old, n + 1):
            new[k] = math.lgamma(k + 1)
        _LGAMMA_TABLE = new
    return _LGAMMA_TABLE


def _xlogy(x: float, y: float) -> float:
    if x == 0:
        return 0.0
    if y == 0.0:
        return -math.inf
    return x * math.log(y)


def binomial(k: int, n: int, p: float) -> float:
    """Bin(k; n, p). Out-of-range k yields 0 by convention."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k < 0 or k > n:
        return 0.0
    lg = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
          + _xlogy(k, p) + _xlogy(n - k, 1.0 - p))
    return math.exp(lg) if lg > -math.inf else 0.0


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Vector of Bin(k; n, p) for k = 0..n."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if n == 0:
        return np.ones(1)
    if p == 0.0:
        out = np.zeros(n + 1); out[0] = 1.0; return out
    if p == 1.0:
        out = np.zeros(n + 1); out[n] = 1.0; return out
    lg = _lgamma_table(n)
    k = np.arange(n + 1)
    return np.exp(lg[n] - lg[k] - lg[n - k] + k * math.log(p) + (n - k) * math.log1p(-p))


def binomial_tail(k: int, n: int, p: float) -> float:
    """Pr[Bin(n, p) >= k]."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return float(binomial_pmf(n, p)[k:].sum())


def multinomial(counts: list[int], n: int, probs: list[float]) -> float:
    """Mass of the multinomial with category counts `counts` out of n trials,
    category probabilities `probs` and an implicit remainder category.
    """
    if len(counts) != len(probs):
        raise ValueError("counts and probs must have equal length")
    s = sum(probs)
    if s > 1.0 + 1e-12:
        raise ValueError(f"sum(probs)={s} exceeds 1")
    if any(p < 0 for p in probs):
        raise ValueError("negative category probability")
    total = sum(counts)
    if any(c < 0 for c in counts) or total > n:
        return 0.0
    rest = max(1.0 - s, 0.0)
    lg = math.lgamma(n + 1) - math.lgamma(n - total + 1)
    lg += _xlogy(n - total, rest)
    for c, p in zip(counts, probs):
        lg += _xlogy(c, p) - math.lgamma(c + 1)
    return math.exp(lg) if lg > -math.inf else 0.0


def trinomial_grid(n: int, k1: np.ndarray, k2: np.ndarray, p1: float, p2: float) -> np.ndarray:
    """Vectorised Mult((k1, k2); n, (p1, p2)) over integer arrays k1, k2."""
    k1 = np.asarray(k1, dtype=np.int64)
    k2 = np.asarray(k2, dtype=np.int64)
    k3 = n - k1 - k2
    ok = (k1 >= 0) & (k2 >= 0) & (k3 >= 0)
    rest = max(1.0 - p1 - p2, 0.0)
    if 1.0 - p1 - p2 < -1e-12:
        raise ValueError("category probabilities exceed 1")
    lg = _lgamma_table(max(n, 1))
    a1 = np.where(ok, k1, 0)
    a2 = np.where(ok, k2, 0)
    a3 = np.where(ok, k3, 0)

    def xl(k, p):
        if p == 0.0:
            return np.where(k == 0, 0.0, -np.inf)
        return k * math.log(p)

    with np.errstate(invalid="ignore"):
        l = lg[n] - lg[a1] - lg[a2] - lg[a3] + xl(a1, p1) + xl(a2, p2) + xl(a3, rest)
    out = np.zeros(np.shape(k1), dtype=float)
    good = ok & (l > -np.inf)
    out[good] = np.exp(l[good])
    return out


@dataclass(frozen=True)
class Pmf:
    """Finite-support PMF on the integers plus a point mass at +inf.

    `mass[i]` is the probability of `offset + i`; `deficit` is the mass at
    +inf (lost packets). Unnormalized instances are legal intermediates but
    must be combined or normalized before percentile queries.
    """

    offset: int
    mass: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "mass", m)
        if m.ndim != 1:
            raise ValueError("mass must be one-dimensional")
        if len(m) and m.min() < -1e-15:
            raise ValueError(f"negative probability mass: {m.min()}")
        if self.deficit < -1e-15:
            raise ValueError("negative deficit")

    @staticmethod
    def point(value: int) -> "Pmf":
        return Pmf(value, np.array([1.0]))

    @staticmethod
    def from_dict(points: dict[int, float], deficit: float = 0.0) -> "Pmf":
        if not points:
            return Pmf(0, np.zeros(0), deficit)
        lo, hi = min(points), max(points)
        mass = np.zeros(hi - lo + 1)
        for v, p in points.items():
            mass[v - lo] += p
        return Pmf(lo, mass, deficit)

    @staticmethod
    def geometric(p: float, tail_eps: float = TAIL_EPS) -> "Pmf":
        """Geometric on {1, 2, ...}, truncated once accumulated mass reaches
        1 - tail_eps; the residual tail is folded into the last point.
        """
        if not 0.0 < p <= 1.0:
            raise ValueError("geometric parameter must be in (0, 1]")
        n = 1 if p == 1.0 else max(1, math.ceil(math.log(tail_eps) / math.log1p(-p)))
        k = np.arange(1, n + 1)
        mass = p * (1.0 - p) ** (k - 1)
        mass[-1] += (1.0 - p) ** n
        return Pmf(1, mass)

    @property
    def support(self) -> np.ndarray:
        return self.offset + np.arange(len(self.mass))

    def total(self) -> float:
        return float(self.mass.sum()) + self.deficit

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.total() - 1.0) <= tol

    def normalized(self) -> "Pmf":
        """Scale finite mass so that total (incl. deficit) is exactly 1."""
        t = self.total()
        if t <= 0:
            raise ValueError("cannot normalize an empty PMF")
        return Pmf(self.offset, self.mass / t, self.deficit / t)

    def scaled(self, factor: float, extra_deficit: float = 0.0) -> "Pmf":
        return Pmf(self.offset, self.mass * factor, self.deficit * factor + extra_deficit)

    def trimmed(self) -> "Pmf":
        nz = np.nonzero(self.mass)[0]
        if len(nz) == 0:
            return Pmf(0, np.zeros(0), self.deficit)
        lo, hi = nz[0], nz[-1]
        return Pmf(self.offset + int(lo), self.mass[lo:hi + 1].copy(), self.deficit)

    def stretched(self, stride: int) -> "Pmf":
        """PMF of stride * X (integer dilation of the support)."""
        if stride < 1:
            raise ValueError("stride must be >= 1")
        if stride == 1 or len(self.mass) == 0:
            return self
        mass = np.zeros((len(self.mass) - 1) * stride + 1)
        mass[::stride] = self.mass
        return Pmf(self.offset * stride, mass, self.deficit)

    def prob_below(self, n: int) -> float:
        """Pr[X < n] (deficit never counts: +inf is below no finite n)."""
        i = n - self.offset
        if i <= 0:
            return 0.0
        return float(self.mass[:min(i, len(self.mass))].sum())

    def tvd(self, other: "Pmf") -> float:
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self.mass), other.offset + len(other.mass))
        a = np.zeros(hi - lo)
        b = np.zeros(hi - lo)
        a[self.offset - lo:self.offset - lo + len(self.mass)] = self.mass
        b[other.offset - lo:other.offset - lo + len(other.mass)] = other.mass
        return 0.5 * (np.abs(a - b).sum() + abs(self.deficit - other.deficit))


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Distribution of X + Y for independent X ~ a, Y ~ b.

    Deficits combine as 1 - (1 - da)(1 - db): the sum is infinite as soon as
    either term is.
    """
    if len(a.mass) == 0 or len(b.mass) == 0:
        empty = np.zeros(0)
        return Pmf(0, empty, 1.0 - (1.0 - a.deficit) * (1.0 - b.deficit))
    mass = np.convolve(a.mass, b.mass)
    deficit = 1.0 - (1.0 - a.deficit) * (1.0 - b.deficit)
    return Pmf(a.offset + b.offset, mass, deficit)


INFINITE = math.inf


def percentile(x: Pmf, level: float) -> float:
    """max{n : Pr[X < n] < level}, or INFINITE when every finite n qualifies.

    This is the strict-inequality definition used for the timeliness
    percentiles; it differs from the conventional inverse CDF at atoms.
    """
    if not 0.0 < level <= 1.0:
        raise ValueError("level must be in (0, 1]")
    reachable = float(x.mass.sum())
    if reachable < level:
        return INFINITE
    cum = np.concatenate(([0.0], np.cumsum(x.mass)))
    # First index j with Pr[X < offset + j] >= level; the maximum below it.
    j = int(np.searchsorted(cum, level, side="left"))
    return x.offset + j - 1


class SteadyStateError(ValueError):
    """The chain does not have the single recurrent class we rely on."""


def check_stochastic(P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("transition matrix must be square")
    if P.min() < -tol:
        raise ValueError("negative transition probability")
    rows = P.sum(axis=1)
    if np.abs(rows - 1.0).max() > tol:
        raise ValueError(f"row sums deviate from 1 by {np.abs(rows - 1.0).max():.2e}")
    return P


def steady_state(P: np.ndarray) -> np.ndarray:
    """Stationary distribution pi with pi P = pi, sum(pi) = 1.

    Solves the linear system with the normalization replacing one balance
    equation; raises SteadyStateError when the system is singular beyond the
    expected rank deficiency of one (multiple recurrent classes).
    """
    P = check_stochastic(P)
    n = P.shape[0]
    M = P.T - np.eye(n)
    M[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:
        raise SteadyStateError(f"no unique stationary distribution: {exc}") from exc
    residual = np.abs(pi @ P - pi).max()
    if residual > 1e-12 or pi.min() < -1e-10:
        raise SteadyStateError(f"stationary solve failed (residual {residual:.2e})")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()
