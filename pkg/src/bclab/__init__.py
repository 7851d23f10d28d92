"""bclab: exact finite-horizon diagnostics for dependent event sequences.

Build event-sequence models over explicit probability spaces, compute the
exact law of the running occurrence count with rational arithmetic, probe
the weak-independence conditions that drive occurrence zero-one behavior,
and reproduce the counterexample constructions separating them.
"""

from .probability import (
    BclabError,
    CapabilityError,
    ConfigError,
    DomainError,
    EventModel,
    HorizonError,
    MomentRecord,
    MomentSeries,
    Prob,
    SparsePmf,
    SupportCapError,
    chebyshev_bound,
    iter_moment_records,
    mean_count,
    moment_series,
    parse_ratio,
    pmf_moments,
    ratio_deviation_mass,
    ratio_law,
    ratio_str,
    sample_paths,
    spawn_rng,
    support_cap,
)
from .models import (
    BernoulliModel,
    IntervalModel,
    NullifiedModel,
    RunModel,
    RunPattern,
    RunSelection,
    Schedule,
    interval_exact_pmf,
    model_from_config,
    nullify_prefix,
    run_model_from_selection,
    run_second_moment_ratio,
    select_run_lengths,
)
from .galton import (
    GaltonCoefficients,
    GaltonModel,
    absorption_probability,
    closed_form_pmf,
    galton_coefficient,
    galton_mu_bounds,
    galton_pairwise,
    pmf_step,
)
from .conditions import (
    IMPLICATIONS,
    BrussSeries,
    Condition,
    ConditionReport,
    CovarianceScan,
    Method,
    SubsequenceWitness,
    Verdict,
    bruss_sum,
    build_nk_subsequence,
    chebyshev_tail_check,
    eval_b,
    eval_cov,
    eval_d,
    eval_er,
    eval_ind,
    eval_io,
    eval_ks,
    eval_sub,
    extract_fast_subsequence,
    variance_bound_check,
)
from .oracle import (
    FiniteSpace,
    discretize,
    enumerate_cov,
    enumerate_pmf,
    galton_space,
    model_sampling_check,
    sampling_validation,
)
from .experiments import (
    EXPERIMENT_NAMES,
    ExperimentReport,
    SweepResult,
    run_bruss_demo,
    run_d_not_er,
    run_diagram_sweep,
    run_er_not_d,
    run_experiment,
    run_io_not_sub,
    run_nop_implies_d_demo,
    sweep_zoo,
)

__version__ = "0.1.0"
