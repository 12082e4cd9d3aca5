"""Random energy model partition function and its normalized fluctuations.

The partition sum Z = sum_j exp(-beta H_j) over i.i.d. Gaussian energies
H_j ~ N(0, variance) is accumulated streamwise in log domain; energies are
never stored, so replicate sizes of 10^7+ are cheap.  The graph-problem
mapping sets variance = ln(n_energies) and beta = 1/sqrt(2c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BLOCK = 1 << 20


@dataclass(frozen=True)
class RemParams:
    """n_energies i.i.d. Gaussian energy levels of the given variance at
    inverse temperature beta.  c is the redundant window coordinate kept
    for reporting; beta = 1/sqrt(2c) must hold when both are given."""

    n_energies: int
    variance: float
    beta: float
    c: float | None = None

    def __post_init__(self):
        if self.n_energies < 1:
            raise ValueError(f"n_energies must be positive, got {self.n_energies}")
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.c is not None:
            if not self.c > 0:
                raise ValueError(f"c must be positive, got {self.c}")
            implied = 0.0 if math.isinf(self.c) else 1.0 / math.sqrt(2.0 * self.c)
            if abs(self.beta - implied) > 1e-12 * max(1.0, implied):
                raise ValueError(
                    f"beta {self.beta} inconsistent with c {self.c} "
                    f"(implies {implied})"
                )

    @classmethod
    def from_c(cls, n_energies: int, c: float) -> "RemParams":
        """Graph-problem mapping: variance = ln(n_energies), beta = 1/sqrt(2c).
        c = inf gives the degenerate beta = 0 row."""
        if not c > 0:
            raise ValueError(f"c must be positive, got {c}")
        beta = 0.0 if math.isinf(c) else 1.0 / math.sqrt(2.0 * c)
        return cls(
            n_energies=n_energies,
            variance=math.log(n_energies),
            beta=beta,
            c=c,
        )

    @property
    def uses_standard_mapping(self) -> bool:
        target = math.log(self.n_energies)
        return abs(self.variance - target) <= 1e-9 * max(1.0, target)


def rem_partition(params: RemParams, rng: np.random.Generator) -> float:
    """log Z for one disorder realization, streamed in blocks."""
    sd = math.sqrt(params.variance)
    running_max = float("-inf")
    acc = 0.0
    remaining = params.n_energies
    while remaining > 0:
        size = min(_BLOCK, remaining)
        remaining -= size
        exponents = (-params.beta * sd) * rng.standard_normal(size)
        block_max = float(exponents.max())
        if block_max > running_max:
            if acc > 0.0:
                acc *= math.exp(running_max - block_max)
            running_max = block_max
        acc += float(np.exp(exponents - running_max).sum())
    return running_max + math.log(acc)


def rem_normalized(params: RemParams, rng: np.random.Generator) -> float:
    """Z / E[Z] for one realization; requires the standard mapping
    variance = ln(n_energies), under which
    E[Z] = n_energies * exp(beta^2 variance / 2)."""
    if not params.uses_standard_mapping:
        raise ValueError(
            "rem_normalized requires variance = ln(n_energies); "
            f"got variance={params.variance}, n_energies={params.n_energies}"
        )
    log_z = rem_partition(params, rng)
    log_mean = math.log(params.n_energies) + 0.5 * params.beta**2 * params.variance
    return math.exp(log_z - log_mean)
