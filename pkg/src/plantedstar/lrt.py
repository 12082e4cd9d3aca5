"""Test statistics and decisions for planted-star detection.

The exact log likelihood ratio and its random-energy-model form, the
max-degree threshold test, a low-degree polynomial statistic built from
centered falling-factorial sums, and hub estimation.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .graphmodels import DegreeVector, ModelParams, sample_null_degrees
from .hypergeom import degree_moments
from .numerics import NEG_INFINITY, LogValue

DECISION_NULL = "null"
DECISION_PLANTED = "planted"


@dataclass(frozen=True)
class TestOutcome:
    """Decision of a thresholding test.  Ties go to "planted": the decision
    is planted exactly when statistic >= threshold."""

    __test__ = False  # not a pytest class despite the name

    decision: str
    statistic: float
    threshold: float
    auxiliary: dict

    def __post_init__(self):
        expected = DECISION_PLANTED if self.statistic >= self.threshold else DECISION_NULL
        if self.decision != expected:
            raise ValueError(
                f"decision {self.decision!r} inconsistent with statistic "
                f"{self.statistic} vs threshold {self.threshold}"
            )


def _make_outcome(statistic: float, threshold: float, auxiliary: dict) -> TestOutcome:
    decision = DECISION_PLANTED if statistic >= threshold else DECISION_NULL
    return TestOutcome(
        decision=decision, statistic=statistic, threshold=threshold, auxiliary=auxiliary
    )


def _check_consistent(deg: DegreeVector, params: ModelParams) -> None:
    if deg.n != params.n:
        raise ValueError(f"degree vector has n={deg.n}, params have n={params.n}")
    if deg.m != params.m:
        raise ValueError(f"degree vector has m={deg.m}, params have m={params.m}")


def log_lr_exact(deg: DegreeVector, params: ModelParams) -> LogValue:
    """Exact log likelihood ratio of planted vs null given the degrees.

    The ratio is the k-star count sum_i C(d_i, k) divided by its exact
    null mean n (n-1)_k (m)_k / (N)_k; both are evaluated in log domain.
    For k = 1 the count is the degree sum 2m and the mean telescopes to
    2m as well, so the ratio is identically 1 and 0.0 is returned exactly.
    """
    _check_consistent(deg, params)
    n, m, k, N = params.n, params.m, params.k, params.N
    if k == 1:
        return 0.0
    d = deg.degrees[deg.degrees >= k]
    if d.size == 0:
        return NEG_INFINITY
    log_counts = gammaln(d + 1.0) - gammaln(d - k + 1.0)
    log_numerator = float(logsumexp(log_counts)) - math.lgamma(k + 1.0)
    log_mean = (
        math.log(n)
        - math.lgamma(k + 1.0)
        + math.fsum(
            math.log(n - 1 - j) + math.log(m - j) - math.log(N - j) for j in range(k)
        )
    )
    return log_numerator - log_mean


def log_lr_rem_form(deg: DegreeVector, params: ModelParams) -> tuple[LogValue, float]:
    """Random-energy-model form of the log likelihood ratio:
    log[ e^{-a^2/2} (1/n) sum_i e^{a Y_i} ] with a = k sigma / mu and
    Y_i the standardized degrees.  Returns (log value, a)."""
    _check_consistent(deg, params)
    mu, sigma2 = degree_moments(params.n, params.m)
    if sigma2 == 0.0:
        raise ValueError("degenerate degree distribution: zero variance")
    sigma = math.sqrt(sigma2)
    a = params.k * sigma / mu
    y = (deg.degrees - mu) / sigma
    value = float(logsumexp(a * y)) - math.log(params.n) - 0.5 * a * a
    return value, a


def max_degree_threshold(params: ModelParams) -> float:
    """Null max-degree threshold
    t* = 2m/n + sqrt((2m/n)(1 - m/N)) sqrt(2 ln n - (1/alpha) ln ln n)."""
    n, m, N = params.n, params.m, params.N
    inner = 2.0 * math.log(n) - math.log(math.log(n)) / params.alpha
    if inner <= 0.0:
        raise ValueError(f"2 ln n - (1/alpha) ln ln n = {inner} is not positive")
    mean = 2.0 * m / n
    return mean + math.sqrt(mean * (1.0 - m / N)) * math.sqrt(inner)


def decide_max_degree(deg: DegreeVector, params: ModelParams) -> TestOutcome:
    """Declare planted when the maximum degree reaches the t* threshold."""
    _check_consistent(deg, params)
    t_star = max_degree_threshold(params)
    max_degree = float(deg.degrees.max())
    return _make_outcome(
        max_degree, t_star, {"max_degree": max_degree, "t_star": t_star}
    )


def decide_lr(deg: DegreeVector, params: ModelParams) -> TestOutcome:
    """Declare planted when the likelihood ratio is at least 1 (log >= 0)."""
    log_lr = log_lr_exact(deg, params)
    mu, sigma2 = degree_moments(params.n, params.m)
    a = params.k * math.sqrt(sigma2) / mu
    return _make_outcome(log_lr, 0.0, {"log_lr": log_lr, "a_n": a})


def hub_estimate(deg: DegreeVector) -> int:
    """Smallest index attaining the maximum degree."""
    return int(np.argmax(deg.degrees))


# --- low-degree statistic ---------------------------------------------------

_CALIBRATION_ROOT = 0x5D5747
_calibration_cache: dict = {}
_calibration_lock = threading.Lock()


def _falling_factorial_sums(degrees: np.ndarray, d_max: int) -> np.ndarray:
    """Array of sum_i (d_i)_j for j = 1..d_max, float64."""
    out = np.empty(d_max)
    ff = degrees.astype(np.float64)
    out[0] = ff.sum()
    for j in range(1, d_max):
        ff = ff * (degrees - j)
        out[j] = ff.sum()
    return out


def _exact_factorial_moment_totals(n: int, m: int, d_max: int) -> list[Fraction]:
    """Exact n * E0[(d_1)_j] = n (n-1)_j (m)_j / (N)_j for j = 1..d_max."""
    N = n * (n - 1) // 2
    totals = []
    num = n
    den = 1
    for j in range(d_max):
        num *= (n - 1 - j) * (m - j)
        den *= N - j
        totals.append(Fraction(num, den))
    return totals


def _calibrated_sd(params: ModelParams, d_max: int, n_calibration: int) -> np.ndarray:
    """Null standard deviations of the centered falling-factorial sums,
    Monte Carlo estimated once per (n, m, d_max, replicate count) and cached."""
    key = (params.n, params.m, d_max, n_calibration)
    with _calibration_lock:
        if key in _calibration_cache:
            return _calibration_cache[key]
        null_params = ModelParams(n=params.n, m=params.m, k=1)
        centers = np.array(
            [float(t) for t in _exact_factorial_moment_totals(params.n, params.m, d_max)]
        )
        rng = np.random.default_rng(
            np.random.SeedSequence([_CALIBRATION_ROOT, params.n, params.m, d_max])
        )
        rows = np.empty((n_calibration, d_max))
        for r in range(n_calibration):
            deg = sample_null_degrees(null_params, rng)
            rows[r] = _falling_factorial_sums(deg.degrees, d_max) - centers
        sd = rows.std(axis=0, ddof=1)
        _calibration_cache[key] = sd
        return sd


def low_degree_stat(
    deg: DegreeVector,
    params: ModelParams,
    D: int,
    n_calibration: int = 10_000,
) -> float:
    """Low-degree detection statistic: unit-weight sum over j = 1..D of the
    centered falling-factorial sums [sum_i (d_i)_j - n E0[(d_1)_j]] / sd_j.

    Centering uses the exact hypergeometric factorial moments; sd_j comes
    from a cached Monte Carlo null calibration.  A term with sd_j = 0
    (the j = 1 handshake identity) contributes 0.
    """
    _check_consistent(deg, params)
    if not 1 <= D <= params.n - 1:
        raise ValueError(f"D must be in [1, {params.n - 1}], got {D}")
    sd = _calibrated_sd(params, D, n_calibration)
    totals = _falling_factorial_sums(deg.degrees, D)
    centers = np.array(
        [float(t) for t in _exact_factorial_moment_totals(params.n, params.m, D)]
    )
    centered = totals - centers
    terms = np.divide(centered, sd, out=np.zeros_like(centered), where=sd > 0)
    return float(terms.sum())
