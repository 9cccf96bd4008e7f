"""Supersymmetric partner Poschl-Teller systems, their autocorrelation
functions at random times, and the Jacobi theta limit law."""

__version__ = "0.1.0"

from .autocorr import (
    AutocorrConfig,
    GridTimes,
    RandomTimes,
    TableDensity,
    Triangular,
    Uniform,
    autocorrelation,
    coefficient_profile,
    rescaled_X,
    sample_random_times,
)
from .errors import (
    AccuracyError,
    CapacityError,
    ConfigError,
    DomainError,
    ParameterError,
    ReductionError,
    SingularPartnerError,
    SusyPTError,
)
from .jacobi_theta import (
    GroupPoint,
    ThetaPair,
    apply_generator,
    lift_time,
    reduce_to_fundamental,
    sample_haar,
    theta,
    theta_pair,
)
from .pt_model import PTParams, eigenfunction, eigenvalue, potential_v0
from .stats import (
    EmpiricalLaw,
    TailReport,
    d_constant,
    dependence_report,
    ks_distance,
    sample_limit_law,
    sample_time_law,
    tail_report,
)
from .susy_partner import PartnerKind, build_first_order, build_second_order
from .windows import GaussianBump, HermiteBasis, Indicator, TableFn, rotated_window

__all__ = [
    "AccuracyError",
    "AutocorrConfig",
    "CapacityError",
    "ConfigError",
    "DomainError",
    "EmpiricalLaw",
    "GaussianBump",
    "GridTimes",
    "GroupPoint",
    "HermiteBasis",
    "Indicator",
    "PTParams",
    "ParameterError",
    "PartnerKind",
    "RandomTimes",
    "ReductionError",
    "SingularPartnerError",
    "SusyPTError",
    "TableDensity",
    "TableFn",
    "TailReport",
    "ThetaPair",
    "Triangular",
    "Uniform",
    "apply_generator",
    "autocorrelation",
    "build_first_order",
    "build_second_order",
    "coefficient_profile",
    "d_constant",
    "dependence_report",
    "eigenfunction",
    "eigenvalue",
    "ks_distance",
    "lift_time",
    "potential_v0",
    "reduce_to_fundamental",
    "rescaled_X",
    "rotated_window",
    "sample_haar",
    "sample_limit_law",
    "sample_random_times",
    "sample_time_law",
    "tail_report",
    "theta",
    "theta_pair",
]
