"""Gaussian partial information decomposition for static and MVAR systems."""
from .complexity import (
    ComplexityReport,
    causal_density,
    complexity_report,
    global_transfer_entropy,
    synergistic_complexity,
)
from .data import Dataset, FitResult, estimate_covariance, fit_mvar, read_csv, write_csv
from .errors import GaussPidError, NumericalError, ValidationError
from .flows import (
    FlowQuery,
    InfiniteLags,
    conditional_transfer_entropy,
    dynamic_mmi_pid,
    granger_causality,
    lagged_mutual_information,
    transfer_entropy,
)
from .gaussian import (
    CovarianceMatrix,
    InfoUnit,
    InfoValue,
    conditional_mutual_information,
    gaussian_entropy,
    mutual_information,
    partial_covariance,
)
from .mvar import (
    MvarModel,
    autocovariances,
    example1,
    example2,
    example3,
    history_covariance,
    simulate,
    stationary_covariance,
)
from .pid import GaussianTriplet, PidResult, TripletSpec, mmi_pid, net_synergy, net_synergy_sigma, sweep_univariate
from .union import MarginalConstraints, OptimizerConfig, minimize_union_information, verify_mmi

__version__ = "0.1.0"
