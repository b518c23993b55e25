"""Uplink simulator for extremely large planar arrays.

Compares a spherical-wavefront channel model with per-element amplitude
and projected-aperture variation ("pnusw") against the far-field plane
wave approximation ("upw"), and evaluates MRC/ZF/MMSE receive beamforming
SINR, correlation coefficients, loss factors, and sum rate.
"""

__version__ = "0.1.0"

from .beamforming import (
    BeamformerReport,
    Scenario,
    evaluate_scenario,
    mmse,
    mrc,
    response_matrix,
    sinr,
    sinr_closed,
    solve_user,
    sum_rate,
    two_user_sinrs,
    zf,
)
from .channel import (
    ResponseVector,
    UpwConfig,
    channel_power,
    correlation,
    pnusw_gain,
    pnusw_response,
    upw_correlation_closed,
    upw_response,
)
from .errors import (
    ConfigError,
    DegenerateChannelError,
    DegenerateGeometryError,
    DimensionMismatchError,
    NearSingularError,
    ZeroForcingInfeasibleError,
)
from .experiments import SweepResult, UserRegion, sample_users
from .geometry import (
    ArrayGeometry,
    UserLocation,
    Vector3,
    cartesian_to_spherical,
    element_distance,
    element_position,
    user_position,
)

__all__ = [
    "ArrayGeometry",
    "BeamformerReport",
    "ConfigError",
    "DegenerateChannelError",
    "DegenerateGeometryError",
    "DimensionMismatchError",
    "NearSingularError",
    "ResponseVector",
    "Scenario",
    "SweepResult",
    "UpwConfig",
    "UserLocation",
    "UserRegion",
    "Vector3",
    "ZeroForcingInfeasibleError",
    "cartesian_to_spherical",
    "channel_power",
    "correlation",
    "element_distance",
    "element_position",
    "evaluate_scenario",
    "mmse",
    "mrc",
    "pnusw_gain",
    "pnusw_response",
    "response_matrix",
    "sample_users",
    "sinr",
    "sinr_closed",
    "solve_user",
    "sum_rate",
    "two_user_sinrs",
    "upw_correlation_closed",
    "upw_response",
    "user_position",
    "zf",
]
