from .trace import SimulationTrace
from .linear import (
    LinearModel,
    OracleResult,
    closed_loop_eigen_oracle,
    hierarchical_model,
    lfc_model,
    model_for,
    swing_model,
)
from .simulate import (
    ScatteringConfig,
    SimulationError,
    integrate_linear,
    load_grid,
    rk4_propagator,
    simulate,
    simulate_hierarchical,
    simulate_lfc,
    simulate_swing,
)
from .audit import AuditError, AuditReport, energy_audit

__all__ = [
    "SimulationTrace", "LinearModel", "OracleResult", "closed_loop_eigen_oracle",
    "hierarchical_model", "lfc_model", "model_for", "swing_model",
    "ScatteringConfig", "SimulationError", "integrate_linear", "load_grid", "rk4_propagator",
    "simulate", "simulate_hierarchical", "simulate_lfc", "simulate_swing",
    "AuditError", "AuditReport", "energy_audit",
]
