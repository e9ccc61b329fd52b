from .rational import ImproperError, RationalTransferFunction, StateSpace, realize_state_space
from .routh import companion_verdict, is_hurwitz, routh_verdict
from .hinf import HinfResult, UnstableSystemError, grid_peak, hinf_norm, hinf_norm_detailed
from .agent import (
    NominalModelSet,
    UnstableErrorSystem,
    agent_coefficients,
    load_nominal_model,
    local_agent_tf,
    local_sensitivity_tf,
    multiplicative_error,
    nominal_from_dict,
)

__all__ = [
    "ImproperError", "RationalTransferFunction", "StateSpace", "realize_state_space",
    "companion_verdict", "is_hurwitz", "routh_verdict",
    "HinfResult", "UnstableSystemError", "grid_peak", "hinf_norm", "hinf_norm_detailed",
    "NominalModelSet", "UnstableErrorSystem", "agent_coefficients", "load_nominal_model",
    "local_agent_tf", "local_sensitivity_tf", "multiplicative_error", "nominal_from_dict",
]
