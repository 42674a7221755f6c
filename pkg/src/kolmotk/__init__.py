"""Toolkit for degenerate hypoelliptic Kolmogorov operators.

Structure analysis (Kalman index and block decomposition), the anisotropic
Hölder calculus it induces, exact and approximate simulation of the
associated diffusion, Monte Carlo semigroup evaluation with Girsanov
reweighting, probabilistic elliptic/parabolic solvers, and a quantitative
verification harness for the scaling laws the theory predicts.
"""

from .errors import (
    ConfigError,
    DegenerateBox,
    KolmotkError,
    NonPositiveValue,
    NotHypoelliptic,
    OutOfDomain,
    SingularGramian,
)
from .gramian import (
    TMIN,
    Gramian,
    block_exp_norm,
    gramian,
    gramian_quadrature,
    whitened_direction_norm,
)
from .holder import (
    SCALE_MIN,
    ScalarField,
    SeminormEstimate,
    holder_norm,
    holder_seminorm,
    third_difference,
)
from .kalman import (
    Block,
    KalmanDecomposition,
    decompose,
    distance,
    kalman_index,
    quasi_norm,
)
from .operators import DriftField, DriftTerm, OperatorSpec, matrix_exp
from .semigroup import (
    MCEstimate,
    QuadratureScheme,
    default_steps,
    derivative_estimate,
    elliptic_cosine_oracle_field,
    evaluate,
    ou_cosine_expectation,
    parabolic_cosine_oracle,
    solve_elliptic,
    solve_parabolic,
)
from .simulate import (
    PathBundle,
    PathGrid,
    deterministic_flow,
    sample_ou_endpoint,
    sample_ou_endpoints,
    simulate_bundle,
    simulate_endpoints,
    variation_flow_along_path,
    write_path_csv,
)
from .verify import (
    CheckReport,
    ExponentFit,
    check_exponential_blocks,
    check_flow_moments,
    check_gramian_scaling,
    check_parabolic_schauder_ratio,
    check_schauder_ratio,
    fit_exponent,
)
from .config import RunConfig, field_from_config, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateBox",
    "KolmotkError",
    "NonPositiveValue",
    "NotHypoelliptic",
    "OutOfDomain",
    "SingularGramian",
    "TMIN",
    "Gramian",
    "block_exp_norm",
    "gramian",
    "gramian_quadrature",
    "whitened_direction_norm",
    "SCALE_MIN",
    "ScalarField",
    "SeminormEstimate",
    "holder_norm",
    "holder_seminorm",
    "third_difference",
    "Block",
    "KalmanDecomposition",
    "decompose",
    "distance",
    "kalman_index",
    "quasi_norm",
    "DriftField",
    "DriftTerm",
    "OperatorSpec",
    "matrix_exp",
    "MCEstimate",
    "QuadratureScheme",
    "default_steps",
    "derivative_estimate",
    "elliptic_cosine_oracle_field",
    "evaluate",
    "ou_cosine_expectation",
    "parabolic_cosine_oracle",
    "solve_elliptic",
    "solve_parabolic",
    "PathBundle",
    "PathGrid",
    "deterministic_flow",
    "sample_ou_endpoint",
    "sample_ou_endpoints",
    "simulate_bundle",
    "simulate_endpoints",
    "variation_flow_along_path",
    "write_path_csv",
    "CheckReport",
    "ExponentFit",
    "check_exponential_blocks",
    "check_flow_moments",
    "check_gramian_scaling",
    "check_parabolic_schauder_ratio",
    "check_schauder_ratio",
    "fit_exponent",
    "RunConfig",
    "field_from_config",
    "load_config",
    "parse_config",
]
