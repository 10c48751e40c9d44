"""Poisson process of order k, its subordinated and inverse-subordinated variants, and an order-k ruin model."""

from .combinatorics import PartitionVector, PoKParams, enumerate_partitions, pok_pgf, pok_pmf, pok_pmf_table
from .process import CountPath, ppok_corr, ppok_cov, ppok_dispersion_index, ppok_lln_check, ppok_mean, ppok_var, simulate_ppok
from .rng import RngStream
from .ruin import (
    AggregateClaimDist,
    Erlang,
    Exponential,
    RiskModel,
    RuinEstimate,
    aggregate_claim_cdf,
    g_ode_residual,
    premium_loading,
    simulate_ruin,
    solve_g_fixed_point,
    solve_g_k1,
)
from .stats import McEstimate
from .subordinators import Drift, Gamma, InverseGaussian, SamplePath, Subordinator, TemperedStable, inverse_path, simulate_path
from .timechange import (
    Mode,
    TimeChangedSpec,
    lrd_decay_check,
    simulate,
    tc_cov,
    tc_mean,
    tc_var,
    tcppok1_pmf,
    tcppok2_asymptotic_mean,
    tcppok2_pmf,
)

__version__ = "0.1.0"
