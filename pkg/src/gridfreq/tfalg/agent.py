"""Per-area LFC loop transfer functions and the nominal model set."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..netmodel import AreaParams, PidGains, ScenarioError, load_json
from .rational import RationalTransferFunction
from .routh import is_hurwitz


class UnstableErrorSystem(ValueError):
    pass


def _lfc_fields(area: AreaParams):
    if not area.has_lfc_params:
        raise ValueError("area lacks governor/turbine/droop/bias parameters")
    return area.M, area.D, area.tau_g, area.tau_t, area.R, area.B


def agent_coefficients(area: AreaParams, pid: PidGains) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form numerator ``b4..b0`` and monic denominator ``1, a5..a0``.

    The area loop from external tie-line power to frequency, with the
    filtered PID acting on the local ACE, is

        H(s) = (b4 s^4 + ... + b0) / (s^6 + a5 s^5 + ... + a1 s)

    Every coefficient is a ratio over the common factor
    ``X = R tau_d tau_g tau_t M``.
    """
    M, D, tg, tt, R, B = _lfc_fields(area)
    kp, ki, kd, td = pid.kp, pid.ki, pid.kd, pid.tau_d
    X = R * td * tg * tt * M

    a5 = (R * td * (tg * (tt * D + M) + tt * M) + R * tg * tt * M) / X
    a4 = R * (td * (tg * D + tt * D + M) + tg * (tt * D + M) + tt * M) / X
    a3 = (R * (td * D + tg * D + tt * D + M) + B * R * (kd + td * kp) + td) / X
    a2 = (B * R * (kp + td * ki) + 1 + R * D) / X
    a1 = B * R * ki / X

    b4 = 1.0 / M  # R td tg tt / X
    b3 = R * (td * (tg + tt) + tg * tt) / X
    b2 = R * (td + tg + tt + kd + td * kp) / X
    b1 = R * (kp + td * ki + 1) / X
    b0 = R * ki / X

    num = np.array([b4, b3, b2, b1, b0])
    den = np.array([1.0, a5, a4, a3, a2, a1, 0.0])
    return num, den


def local_agent_tf(area: AreaParams, pid: PidGains) -> RationalTransferFunction:
    """Sixth-order area transfer function with an exact pole at the origin."""
    num, den = agent_coefficients(area, pid)
    return RationalTransferFunction(num, den)


def local_sensitivity_tf(area: AreaParams, pid: PidGains) -> RationalTransferFunction:
    """``1 / (1 + C F_g F_t)`` for the filtered PID and governor/turbine lags."""
    _, _, tg, tt, _, _ = _lfc_fields(area)
    kp, ki, kd, td = pid.kp, pid.ki, pid.kd, pid.tau_d
    lag = np.polymul(np.polymul([td, 1.0, 0.0], [tg, 1.0]), [tt, 1.0])
    pid_num = np.array([kd + td * kp, kp + td * ki, ki])
    return RationalTransferFunction(lag, np.polyadd(lag, pid_num))


def multiplicative_error(h_i: RationalTransferFunction,
                         h_n: RationalTransferFunction) -> RationalTransferFunction:
    """``(h_i - h_n) / h_n`` with the shared integrator removed first.

    Raises
    ------
    UnstableErrorSystem
        The error system has a pole in the closed right half-plane, so its
        H-infinity norm is undefined.
    """
    for label, h in (("h_i", h_i), ("h_n", h_n)):
        if h.den[-1] != 0.0:
            raise ValueError(f"{label} must have a pole at the origin")
    a_i, a_n = h_i.den[:-1], h_n.den[:-1]
    b_i, b_n = h_i.num, h_n.num
    num = np.polysub(np.polymul(b_i, a_n), np.polymul(a_i, b_n))
    den = np.polymul(a_i, b_n)
    if not is_hurwitz(b_n):
        raise UnstableErrorSystem("unstable error system: nominal numerator has a zero "
                                  "in the closed right half-plane")
    if not is_hurwitz(a_i):
        raise UnstableErrorSystem("unstable error system: local agent has an unstable pole")
    return RationalTransferFunction(num, den)


@dataclass(frozen=True)
class NominalModelSet:
    """Shared nominal plant ``h_n`` and model-matching index ``xi``."""

    h_n: RationalTransferFunction
    xi: float

    def __post_init__(self):
        if not 0.0 < self.xi < 1.0:
            raise ValueError(f"model-matching index must lie in (0, 1), got {self.xi}")
        den = self.h_n.den
        if len(den) < 2 or den[-1] != 0.0 or den[-2] == 0.0:
            raise ValueError("nominal model must have exactly one pole at the origin")

    def with_xi(self, xi: float) -> "NominalModelSet":
        return NominalModelSet(self.h_n, xi)


def nominal_from_dict(doc: dict, xi: float | None = None) -> NominalModelSet:
    """Build the nominal model set from raw coefficients or physical parameters.

    Accepted forms: ``{"num": [...], "den": [...]}`` or
    ``{"params": {M, D, tau_g, tau_t, R, B}, "pid": {kp, ki, kd, tau_d}}``;
    either may carry ``xi``.
    """
    if "num" in doc and "den" in doc:
        h_n = RationalTransferFunction(doc["num"], doc["den"])
    elif "params" in doc and "pid" in doc:
        p, g = doc["params"], doc["pid"]
        try:
            area = AreaParams(M=p["M"], D=p["D"], R=p["R"], B=p["B"],
                              tau_g=p["tau_g"], tau_t=p["tau_t"])
            pid = PidGains(kp=g["kp"], ki=g["ki"], kd=g.get("kd", 0.0),
                           tau_d=g.get("tau_d", 0.01))
        except KeyError as exc:
            raise ScenarioError(f"nominal model: missing field {exc}") from None
        h_n = local_agent_tf(area, pid)
    else:
        raise ScenarioError("nominal model needs either num/den or params/pid")
    xi = xi if xi is not None else doc.get("xi")
    if xi is None:
        raise ScenarioError("nominal model: xi not given")
    return NominalModelSet(h_n, float(xi))


def load_nominal_model(name: str | Path = "eq22.json", xi: float | None = None) -> NominalModelSet:
    return nominal_from_dict(load_json(name), xi)
