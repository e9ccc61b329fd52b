"""Storage-function audits on simulation traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .trace import SimulationTrace

MAX_AUDIT_STEP = 1e-2
BALANCE_RTOL = 1e-6
SUPPLY_ATOL = 1e-9


class AuditError(ValueError):
    pass


@dataclass
class AuditReport:
    """Worst-case residuals of the energy checks.

    ``balance_residual`` and ``osp_violation`` are normalized by
    ``max(1, |w'P|)`` pointwise.
    """

    balance_residual: float
    balance_ok: bool
    osp_margin: float
    osp_violation: float
    osp_ok: bool
    min_scattering_supply: float | None
    scattering_ok: bool | None
    interior_points: int

    @property
    def passed(self) -> bool:
        return self.balance_ok and self.osp_ok and self.scattering_ok is not False

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"


def energy_audit(trace: SimulationTrace, rtol: float = BALANCE_RTOL) -> AuditReport:
    """Check the storage balance, the strict-passivity bound and scattering supply.

    With ``S = w'Mw/2 + d'Td/2`` the swing dynamics give exactly
    ``w'P - dS/dt = w'Dw``; ``dS/dt`` is taken by centered differences, so
    the grid must be fine.  The strict-passivity bound uses ``rho = min D``.
    """
    h = trace.step
    if h > MAX_AUDIT_STEP:
        raise AuditError(f"insufficient resolution: step {h:g} exceeds {MAX_AUDIT_STEP:g}")
    S = trace.storage
    wP = trace.supplied
    wDw = trace.dissipation
    if len(S) < 3:
        raise AuditError("insufficient resolution: fewer than three samples")
    dS = (S[2:] - S[:-2]) / (2 * h)
    scale = np.maximum(1.0, np.abs(wP[1:-1]))
    resid = np.abs(wP[1:-1] - dS - wDw[1:-1]) / scale
    rho = float(trace.damping.min())
    ww = np.einsum("ki,ki->k", trace.omega, trace.omega)[1:-1]
    osp = (dS - (wP[1:-1] - rho * ww)) / scale
    bal = float(resid.max())
    osp_v = float(max(osp.max(), 0.0))
    supply_min, supply_ok = None, None
    if trace.scattering_supply is not None:
        supply_min = float(trace.scattering_supply.min())
        supply_ok = supply_min >= -SUPPLY_ATOL
    return AuditReport(bal, bal <= rtol, rho, osp_v, osp_v <= rtol,
                       supply_min, supply_ok, len(resid))
