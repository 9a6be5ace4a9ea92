"""Post-hoc-level knockoff variable selection."""
from ._accel import NUMBA_ENABLED
from .evalue_engine import (
    EValueVector,
    LocalEFamily,
    RejectionReport,
    average_evalues,
    averaged_subset_values,
    closed_knockoff_search,
    closure_membership,
    derandomized_evalues,
    ebh,
    filter_dph,
    local_evalue,
    rwc_posthoc_eta,
    rwc_rejections,
)
from .exceptions import CapabilityError, FitError, KnockoffError, NotPositiveDefiniteError
from .gauss_knockoffs import (
    GaussianKnockoffSampler,
    KnockoffConfig,
    ar1_covariance,
    equicorrelated_s,
    sample_design,
    sample_knockoffs,
)
from .importance_stats import FitConfig, WStatistics, cv_select_lambda, fit_l1, knockoff_statistics
from .knockoff_filters import (
    FilterOutcome,
    RunEValues,
    Threshold,
    filter_bc,
    filter_pfer,
    filter_ph,
    run_evalues,
    threshold_bc,
    threshold_pfer,
    threshold_ph,
)
from .sim_harness import Scenario, aggregate_metrics, build_beta, gen_response, run_scenario

__version__ = "0.1.0"
