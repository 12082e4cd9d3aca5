"""Planted k-star detection laboratory for the uniform n-vertex, m-edge
random graph: exact samplers, likelihood-ratio and max-degree tests,
scaling-window arithmetic, a random-energy-model fluctuation simulator,
hypergeometric numerics, and a seeded Monte Carlo experiment harness."""

__version__ = "0.1.0"

from .graphmodels import (  # noqa: F401
    DegreeVector,
    ModelParams,
    PlantedSample,
    decode_pair,
    encode_pair,
    gamma_from_m,
    m_from_c,
    m_from_gamma,
    sample_center_degree,
    sample_coupled,
    sample_null_degrees,
    sample_null_edges,
    sample_planted,
)
from .hypergeom import (  # noqa: F401
    BinomialTailApprox,
    CapacityError,
    HypergeomParams,
    binomial_tail_dml,
    degree_moments,
    exact_cumulants,
    log_pmf,
    log_tail,
    pgf_real_rooted,
    sample,
    stirling_cumulant_bound,
    tilted_tail_gaussian,
)
from .lrt import (  # noqa: F401
    TestOutcome,
    decide_lr,
    decide_max_degree,
    hub_estimate,
    log_lr_exact,
    log_lr_rem_form,
    low_degree_stat,
    max_degree_threshold,
)
from .numerics import NEG_INFINITY, LogValue  # noqa: F401
from .rem import RemParams, rem_normalized, rem_partition  # noqa: F401
