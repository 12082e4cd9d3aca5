import math

import numpy as np
import pytest

from plantedstar.harness import derive_rng
from plantedstar.rem import RemParams, rem_normalized, rem_partition


class TestRemParams:
    def test_mapping_constructor(self):
        p = RemParams.from_c(10**4, 0.5)
        assert p.beta == pytest.approx(1.0)
        assert p.variance == pytest.approx(math.log(10**4))
        assert p.uses_standard_mapping

    def test_beta_c_consistency_enforced(self):
        RemParams(n_energies=10, variance=1.0, beta=1.0, c=0.5)
        with pytest.raises(ValueError):
            RemParams(n_energies=10, variance=1.0, beta=0.9, c=0.5)

    def test_infinite_c_means_beta_zero(self):
        p = RemParams.from_c(100, math.inf)
        assert p.beta == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            RemParams(n_energies=0, variance=1.0, beta=1.0)
        with pytest.raises(ValueError):
            RemParams(n_energies=5, variance=0.0, beta=1.0)
        with pytest.raises(ValueError):
            RemParams(n_energies=5, variance=1.0, beta=-0.1)
        with pytest.raises(ValueError):
            RemParams.from_c(100, 0.0)


class TestRemPartition:
    def test_beta_zero_exact(self):
        for n in (1, 7, 1000, 1 << 21):  # spans multiple streaming blocks
            p = RemParams(n_energies=n, variance=math.log(max(n, 2)), beta=0.0)
            rng = derive_rng(0, 0, 0, 0, 0)
            assert rem_partition(p, rng) == pytest.approx(math.log(n), abs=1e-12)

    def test_single_site_is_gaussian(self):
        p = RemParams(n_energies=1, variance=2.0, beta=1.5)
        n_reps = 100_000
        vals = np.empty(n_reps)
        for r in range(n_reps):
            vals[r] = rem_partition(p, derive_rng(1, 0, 0, 0, r))
        want_var = p.beta**2 * p.variance
        assert vals.var(ddof=1) == pytest.approx(want_var, rel=0.05)
        assert abs(vals.mean()) <= 3 * math.sqrt(want_var / n_reps)

    def test_agrees_with_naive_summation(self):
        rng_pairs = [(n, beta) for n in (100, 10**4) for beta in (0.3, 1.0)]
        for i, (n, beta) in enumerate(rng_pairs):
            p = RemParams(n_energies=n, variance=math.log(n), beta=beta)
            log_z = rem_partition(p, derive_rng(2, 0, 0, 0, i))
            rng = derive_rng(2, 0, 0, 0, i)
            energies = math.sqrt(p.variance) * rng.standard_normal(n)
            naive = float(np.exp(-beta * energies).sum())
            assert log_z == pytest.approx(math.log(naive), rel=1e-10)

    def test_mean_of_normalized_partition(self):
        # E[Z] = n^(1 + 1/(4c)) under the mapping; Z/E[Z] should average 1
        p = RemParams.from_c(10**4, 1.0)
        n_reps = 10_000
        vals = np.empty(n_reps)
        for r in range(n_reps):
            vals[r] = rem_normalized(p, derive_rng(3, 0, 0, 0, r))
        se = vals.std(ddof=1) / math.sqrt(n_reps)
        assert abs(vals.mean() - 1.0) <= 3 * se, (vals.mean(), se)


class TestRemNormalized:
    def test_requires_standard_mapping(self):
        p = RemParams(n_energies=100, variance=2.0, beta=1.0)
        with pytest.raises(ValueError):
            rem_normalized(p, derive_rng(0, 0, 0, 0, 0))

    def test_beta_zero_is_exactly_one(self):
        p = RemParams(n_energies=5000, variance=math.log(5000), beta=0.0)
        for r in range(20):
            assert rem_normalized(p, derive_rng(4, 0, 0, 0, r)) == 1.0

    def test_phase_medians_at_moderate_size(self):
        n = 10**5
        n_reps = 100
        medians = {}
        for c in (0.5, 0.25, 0.125):
            p = RemParams.from_c(n, c)
            vals = [
                rem_normalized(p, derive_rng(5, 0, int(c * 1000), 0, r))
                for r in range(n_reps)
            ]
            medians[c] = float(np.median(vals))
        assert 0.85 <= medians[0.5] <= 1.15, medians
        assert 0.3 <= medians[0.25] <= 0.7, medians
        assert medians[0.125] <= 0.15, medians
