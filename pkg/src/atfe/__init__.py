"""Adaptive-time frequency estimation for two-level probes.

Simulation of locally optimal binary measurements with confidence-interval
driven sensing-time escalation, maximum-likelihood estimation on restricted
frequency intervals, the matching analytic error bounds, and a reproducible
Monte Carlo harness with a CLI front end.
"""

from .adaptive import (
    AtfeConfig,
    S1Result,
    TraceStep,
    TrialState,
    TrialTrace,
    aqse_step,
    initial_sensing_time,
    new_trial_state,
    run_atfe_ghz,
    run_atfe_product,
    run_trials,
    schedule_nu_min,
    schedule_s1,
)
from .bounds import (
    BoundQuery,
    ScheduleCurve,
    atfe_ideal_bound,
    atfe_step_bound,
    evaluate_bound_query,
    ghz_fixed_time_bound,
    nu_total_approx,
    qcrb_ghz,
    qcrb_max_ramsey,
    qcrb_product,
    qcrb_total_time,
    schedule_curve,
    second_term_upper_bound,
    total_time,
)
from .errors import AtfeError, ConfigurationError, DomainError, UsageError
from .harness import (
    EnsembleSummary,
    ExperimentPlan,
    GhzProductComparison,
    compare_ghz_vs_product,
    plan_from_dict,
    plan_to_dict,
    reproduce_figure,
    run_ensemble,
)
from .inference import (
    FULL_DOMAIN,
    ConfidenceInterval,
    EstimateResult,
    confidence_interval,
    holevo_variance_empirical,
    log_likelihood_eval,
    mle,
    normal_quantile,
)
from .probe import (
    OMEGA_MAX,
    LocalOptimalPovm,
    MeasurementRecord,
    ProbeConfig,
    ProbeMode,
    fisher_information_per_measurement,
    outcome_probability,
    povm_effect_vector,
    quantum_fisher_information,
    rotate_about_axis,
    sample_outcome,
)

__version__ = "0.1.0"
