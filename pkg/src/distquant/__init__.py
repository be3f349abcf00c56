"""Quantizer design workbench for distributed Bayesian estimation in
sensor networks: Fisher-information analysis, variational quantizer
synthesis, spectral quantizer recovery, finite-grid best-response
optimization, rate-constraint tests, and Monte Carlo MSE experiments."""

from .design import (
    DesignSolution,
    FailureRecord,
    deconvolve_quantizer,
    least_favorable_gstar,
    solve_euler_lagrange,
    threshold_optimal_noise,
)
from .errors import (
    ConfigDomainMismatch,
    ConfigError,
    DegenerateResponse,
    InfeasibleCandidate,
    InputError,
    InvalidLevels,
    NoConvergence,
    NotAMaximum,
    NumericalFailure,
    QuadratureDivergence,
    SingularCovariance,
    SpectrumUnderflow,
    SupportMismatch,
    TooLarge,
    UnboundedCurvature,
    WorkbenchError,
)
from .fisher import (
    DataProcessingReport,
    FisherReport,
    data_processing_check,
    equicorrelated_fisher,
    fi_pointwise,
    gaussian_binary_threshold_fisher,
    gaussian_single_obs_fisher,
    posterior_fisher,
)
from .pbpo import (
    CounterexampleReport,
    DiscreteProblem,
    GroupingReport,
    Strategy,
    SweepResult,
    bayes_risk,
    best_response_dependent,
    best_response_independent,
    brute_force,
    dependence_counterexample,
    grouping_check,
    mmse_estimator,
    output_fisher,
    pbpo_multistart,
    pbpo_sweep,
    risk_with_mmse,
    sensor_fisher,
)
from .probmodel import (
    HciModel,
    Interval,
    NoiseModel,
    ParamPrior,
    prior_fisher,
    sample_noise,
    sample_theta,
)
from .quantizers import (
    BinaryQuantizer,
    MultiLevelQuantizer,
    ResponseCurve,
    apply_binary,
    apply_multilevel,
    response_curve,
)
from .rate import (
    CandidateReport,
    LowSnrReport,
    RateBudget,
    binary_optimality_condition,
    check_feasible,
    compare_rate_strategies,
    gaussian_low_snr_test,
    multilevel_threshold_fisher,
    optimize_breakpoints,
)
from .simulate import (
    SimConfig,
    SimResult,
    SimRow,
    equicorrelated_curve,
    mle_estimate,
    run_mse_experiment,
)
from .streams import substream

__version__ = "0.1.0"
