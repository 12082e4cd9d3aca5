"""Hypergeometric and binomial distribution kernels.

Exact log-domain pmf/tail evaluation, exact cumulants of the standardized
variable, the explicit Stirling-number cumulant bound, a tilted-Gaussian
tail approximation, real-rootedness certification of the probability
generating function, and the classical normal approximation of binomial
tails with its validity window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy

from .numerics import (
    NEG_INFINITY,
    LogValue,
    log_comb,
    log_sub,
    normal_upper_tail,
)


class CapacityError(ValueError):
    """Raised when an exact computation would exceed its declared capacity."""


@dataclass(frozen=True)
class HypergeomParams:
    """Sampling without replacement: ``draws`` from a population of size
    ``population`` containing ``successes`` marked items."""

    population: int
    successes: int
    draws: int

    def __post_init__(self):
        if self.population < 1:
            raise ValueError(f"population must be positive, got {self.population}")
        if not 0 <= self.successes <= self.population:
            raise ValueError(
                f"successes must be in [0, {self.population}], got {self.successes}"
            )
        if not 0 <= self.draws <= self.population:
            raise ValueError(
                f"draws must be in [0, {self.population}], got {self.draws}"
            )

    @property
    def support(self) -> tuple[int, int]:
        lo = max(0, self.draws - (self.population - self.successes))
        hi = min(self.successes, self.draws)
        return lo, hi

    @property
    def support_size(self) -> int:
        lo, hi = self.support
        return hi - lo + 1

    def mean(self) -> float:
        return (self.draws * self.successes) / self.population

    def variance(self) -> float:
        N, K, D = self.population, self.successes, self.draws
        if N == 1:
            return 0.0
        # exact integer ratio, correctly rounded by big-int true division
        return (D * K * (N - K) * (N - D)) / (N * N * (N - 1))


def log_pmf(params: HypergeomParams, x: int) -> LogValue:
    """log P(X = x); NEG_INFINITY outside the support."""
    lo, hi = params.support
    if x < lo or x > hi:
        return NEG_INFINITY
    N, K, D = params.population, params.successes, params.draws
    return log_comb(K, x) + log_comb(N - K, D - x) - log_comb(N, D)


def log_pmf_table(params: HypergeomParams) -> tuple[int, np.ndarray]:
    """(support_min, array of log pmf values over the whole support)."""
    lo, hi = params.support
    return lo, np.array([log_pmf(params, x) for x in range(lo, hi + 1)])


def log_tail(params: HypergeomParams, t: int) -> LogValue:
    """log P(X >= t), summed exactly over the smaller side of the support."""
    lo, hi = params.support
    if t <= lo:
        return 0.0
    if t > hi:
        return NEG_INFINITY
    n_upper = hi - t + 1
    n_lower = t - lo
    if n_upper <= n_lower:
        vals = [log_pmf(params, x) for x in range(t, hi + 1)]
        return _logsumexp_list(vals)
    vals = [log_pmf(params, x) for x in range(lo, t)]
    return log_sub(0.0, _logsumexp_list(vals))


def _logsumexp_list(vals: list[float]) -> float:
    m = max(vals)
    if m == NEG_INFINITY:
        return NEG_INFINITY
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def sample(params: HypergeomParams, rng: np.random.Generator) -> int:
    """One exact draw (rejection/inversion under the hood)."""
    N, K, D = params.population, params.successes, params.draws
    if D == 0 or K == 0:
        return 0
    if K == N:
        return D
    return int(rng.hypergeometric(K, N - K, D))


def degree_moments(n: int, m: int) -> tuple[float, float]:
    """Mean and variance of one vertex degree in a uniform n-vertex,
    m-edge graph, i.e. of Hypergeom(N, n-1, m) with N = n(n-1)/2.

    Both are exact integer ratios: mu = 2m/n and
    sigma2 = (n-1) p (1-p) (N-(n-1))/(N-1) with p = m/N.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    N = n * (n - 1) // 2
    if not 1 <= m <= N:
        raise ValueError(f"m must be in [1, {N}], got {m}")
    mu = (2 * m) / n
    if N == 1:
        return mu, 0.0
    sigma2 = ((n - 1) * m * (N - m) * (N - n + 1)) / (N * N * (N - 1))
    return mu, sigma2


def tilted_tail_gaussian(a: float, t: float) -> float:
    """Gaussian approximation of the exponentially tilted upper tail of a
    standardized variable: returns the complementary normal CDF at t - a."""
    return normal_upper_tail(t - a)


def exact_cumulants(params: HypergeomParams, r_max: int) -> list[float]:
    """Cumulants of the standardized variable Y = (X - mean)/sd, orders
    1..r_max, from exact raw moments and the moment-cumulant recursion."""
    if not 1 <= r_max <= 8:
        raise ValueError(f"r_max must be in [1, 8], got {r_max}")
    if params.support_size > 10**6:
        raise CapacityError(
            f"support size {params.support_size} exceeds exact-summation capacity"
        )
    var = params.variance()
    if var == 0.0:
        raise ValueError("degenerate distribution: zero variance")
    lo, logp = log_pmf_table(params)
    p = np.exp(logp)
    x = np.arange(lo, lo + p.size, dtype=np.float64)
    y = (x - params.mean()) / math.sqrt(var)
    raw = [1.0] + [float(np.dot(p, y**j)) for j in range(1, r_max + 1)]
    kappa: list[float] = []
    for r in range(1, r_max + 1):
        k_r = raw[r]
        for i in range(1, r):
            k_r -= math.comb(r - 1, i - 1) * kappa[i - 1] * raw[r - i]
        kappa.append(k_r)
    return kappa


@lru_cache(maxsize=None)
def _stirling2_row(r: int) -> tuple[int, ...]:
    """Stirling numbers of the second kind S(r, 0..r) by the triangle
    recurrence S(r, q) = q S(r-1, q) + S(r-1, q-1)."""
    if r == 0:
        return (1,)
    prev = _stirling2_row(r - 1)
    row = [0] * (r + 1)
    for q in range(1, r + 1):
        row[q] = q * (prev[q] if q < r else 0) + prev[q - 1]
    return tuple(row)


def stirling_cumulant_bound(r: int, sigma: float) -> float:
    """Explicit bound on |kappa_r| of the standardized hypergeometric:
    (2 / sigma^(r-2)) * sum_{q=1}^{r} (q-1)! S(r, q)."""
    if r < 3:
        raise ValueError(f"r must be >= 3, got {r}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    row = _stirling2_row(r)
    total = sum(math.factorial(q - 1) * row[q] for q in range(1, r + 1))
    return 2.0 * total / sigma ** (r - 2)


def pgf_real_rooted(params: HypergeomParams) -> bool | None:
    """Certify that the probability generating function has only real,
    strictly negative roots.

    Returns None (not applicable) for the degenerate boundary cases
    successes in {0, population}, draws = 0, or a single-point support.
    When the lower support endpoint is positive the pmf carries a
    structural z^min monomial whose roots sit at zero; the check applies
    to the remaining polynomial.  Root counting is exact (integer Sturm
    sequences), so no imaginary-part tolerance is involved.
    """
    N, K, D = params.population, params.successes, params.draws
    if K == 0 or K == N or D == 0:
        return None
    if params.support_size > 64:
        raise CapacityError(
            f"support size {params.support_size} exceeds the degree-64 capacity"
        )
    lo, hi = params.support
    if hi == lo:
        return None
    coeffs = [math.comb(K, x) * math.comb(N - K, D - x) for x in range(lo, hi + 1)]
    z = sympy.Symbol("z")
    poly = sympy.Poly(coeffs[::-1], z)
    sqf = poly.quo(poly.gcd(poly.diff(z)))
    n_neg_real = sqf.count_roots(-sympy.oo, 0)
    return n_neg_real == sqf.degree()


@dataclass(frozen=True)
class BinomialTailApprox:
    """Normal tail approximation of P[Bin(n, p) >= np + h] with the
    standardized exceedance x = h / sqrt(np(1-p)).  ``flagged`` is set
    when x lies outside the validity window 1 < x < (np(1-p))^(1/6)."""

    value: float
    standardized: float
    flagged: bool


def binomial_tail_dml(n: int, p: float, h: float) -> BinomialTailApprox:
    """Approximate P[Bin(n, p) >= np + h] by exp(-x^2/2) / (x sqrt(2 pi))."""
    variance = n * p * (1.0 - p)
    if variance <= 0.0:
        raise ValueError(f"np(1-p) must be positive, got {variance}")
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    x = h / math.sqrt(variance)
    value = math.exp(-0.5 * x * x) / (x * math.sqrt(2.0 * math.pi))
    flagged = x <= 1.0 or x >= variance ** (1.0 / 6.0)
    return BinomialTailApprox(value=value, standardized=x, flagged=flagged)
