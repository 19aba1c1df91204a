"""Spectral and ratio-limit analysis of discrete-time birth-death walks."""

from .accel import backend_name
from .analysis import (
    DiagnoseConfig,
    SeriesReport,
    SrlpReport,
    diagnose,
    series_L,
    series_L_eta,
    series_M1,
    series_M_theta,
    series_r_over_p,
)
from .errors import (
    ConvergenceFailure,
    DegenerateInput,
    InvalidBase,
    InvalidSpec,
    NonComparable,
    NotConverged,
    ResourceLimit,
    SrlpLabError,
    ThetaBelowEta,
)
from .polynomials import (
    PolySequence,
    ScaledValue,
    christoffel_darboux_residual,
    eval_Q,
    q_at_minus_one,
    q_ratio_sequence,
)
from .spectral import (
    DiscreteMeasure,
    EtaEstimate,
    JacobiTruncation,
    c_n_sequence,
    eigen_decompose,
    estimate_eta,
    jacobi_truncation,
    quadrature_measure,
    whitehurst_check,
)
from .theta_transform import (
    TransformedWalk,
    eta_of_transform,
    example_44,
    transform,
    transformed_pi_identity_residual,
    transformed_Q_identity_residual,
)
from .transitions import RatioTrace, WindowedKernel, km_representation_residual, n_step, ratio_trace
from .walk import Walk, WalkSpec, log_pi, make_walk

__version__ = "0.1.0"
