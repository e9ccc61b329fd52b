"""Power-network scenarios: area parameters, tie-line coupling, controllers, loads.

A scenario document is JSON with top-level keys ``areas``, ``torque``,
``control`` and optionally ``loads`` and ``horizon``.  ``control`` is a tagged
union selected by its ``mode`` key (``swing_pi``, ``hierarchical`` or
``ace_lfc``).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

ZERO_EIG_TOL = 1e-9
ROW_SUM_TOL = 1e-9

CONTROL_MODES = ("swing_pi", "hierarchical", "ace_lfc")


class ScenarioError(ValueError):
    """Malformed scenario document (missing field, wrong arity, bad type)."""


class InvariantError(ValueError):
    """Well-formed scenario whose values violate a model invariant."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class AreaParams:
    """Aggregated parameters of one control area.

    Only inertia and damping are needed by the swing-equation models; the
    governor/turbine/droop/bias fields are required for ACE-based LFC.
    """

    M: float
    D: float
    R: float | None = None
    B: float | None = None
    tau_g: float | None = None
    tau_t: float | None = None

    def problems(self) -> list[str]:
        out = []
        for name in ("M", "D", "R", "B", "tau_g", "tau_t"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                out.append(f"{name} must be strictly positive (got {v})")
        return out

    @property
    def has_lfc_params(self) -> bool:
        return None not in (self.R, self.B, self.tau_g, self.tau_t)


@dataclass(frozen=True)
class PidGains:
    """PID gains ``kp + ki/s + kd*s/(tau_d*s + 1)``."""

    kp: float
    ki: float
    kd: float = 0.0
    tau_d: float = 0.01

    def __post_init__(self):
        if not self.tau_d > 0:
            raise InvariantError([f"tau_d must be positive (got {self.tau_d})"])

    @property
    def is_passive(self) -> bool:
        return self.kp > 0 and self.ki > 0 and self.kd >= 0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.kp, self.ki, self.kd)


@dataclass(frozen=True)
class TorqueMatrix:
    """Synchronizing torque coefficient matrix (Laplacian structure)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ScenarioError(f"torque matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_couplings(cls, n: int, couplings: dict[tuple[int, int], float]) -> "TorqueMatrix":
        """Build T from nonnegative pair coefficients t_ij (0-based pairs)."""
        T = np.zeros((n, n))
        for (i, j), t in couplings.items():
            T[i, j] -= t
            T[j, i] -= t
            T[i, i] += t
            T[j, j] += t
        return cls(T)


@dataclass
class TorqueValidation:
    checks: dict[str, bool]
    messages: list[str]
    lambda_min: float
    kernel_residual: float

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": dict(self.checks),
            "messages": list(self.messages),
            "lambda_min": self.lambda_min,
            "kernel_residual": self.kernel_residual,
        }


def validate_torque_matrix(T: TorqueMatrix | np.ndarray) -> TorqueValidation:
    """Check symmetry, sign pattern, row sums and semidefiniteness of T.

    Failures are reported, never raised.
    """
    A = T.entries if isinstance(T, TorqueMatrix) else np.asarray(T, dtype=float)
    n = A.shape[0]
    messages: list[str] = []
    checks = {}

    asym = [(i, j) for i in range(n) for j in range(i + 1, n) if A[i, j] != A[j, i]]
    checks["symmetry"] = not asym
    for i, j in asym:
        messages.append(f"symmetry violated at ({i + 1},{j + 1})/({j + 1},{i + 1})")

    off = A - np.diag(np.diag(A))
    pos = np.argwhere(off > 0)
    checks["off_diagonal_sign"] = pos.size == 0
    for i, j in pos:
        messages.append(f"off-diagonal sign violated at ({i + 1},{j + 1}): {A[i, j]:+g} > 0")

    row_err = np.diag(A) + off.sum(axis=1)
    bad_rows = np.flatnonzero(np.abs(row_err) > ROW_SUM_TOL)
    checks["row_sum"] = bad_rows.size == 0
    for i in bad_rows:
        messages.append(
            f"diagonal ({i + 1},{i + 1}) = {A[i, i]:g} differs from off-diagonal row sum "
            f"{-off[i].sum():g}"
        )

    eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
    lam_min = float(eigs[0]) if n else 0.0
    checks["semidefinite"] = lam_min >= -ZERO_EIG_TOL
    checks["zero_eigenvalue"] = abs(lam_min) <= ZERO_EIG_TOL
    if not checks["semidefinite"]:
        messages.append(f"matrix is indefinite: lambda_min = {lam_min:.3e}")
    elif not checks["zero_eigenvalue"]:
        messages.append(f"no zero eigenvalue: lambda_min = {lam_min:.3e}")

    kernel = float(np.abs(A @ np.ones(n)).max()) if n else 0.0
    return TorqueValidation(checks, messages, lam_min, kernel)


def interaction_spectrum(T: TorqueMatrix | np.ndarray) -> np.ndarray:
    """Eigenvalues of Q = -T in ascending order.

    Eigenvalues within ``ZERO_EIG_TOL`` of zero are snapped to exactly 0.
    """
    A = T.entries if isinstance(T, TorqueMatrix) else np.asarray(T, dtype=float)
    try:
        eigs = np.linalg.eigvalsh(-A)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"symmetric eigensolver did not converge: {exc}") from exc
    eigs = np.where(np.abs(eigs) <= ZERO_EIG_TOL, 0.0, eigs)
    return np.sort(eigs)


def split_spectrum(eigs: Sequence[float], tol: float = ZERO_EIG_TOL) -> tuple[np.ndarray, int]:
    """Return (strictly negative eigenvalues, number of zero eigenvalues)."""
    eigs = np.asarray(eigs, dtype=float)
    zero = np.abs(eigs) <= tol
    return eigs[~zero & (eigs < 0)], int(zero.sum())


@dataclass(frozen=True)
class LoadStep:
    t: float
    area: int  # 1-based
    dp: float


@dataclass(frozen=True)
class LoadScenario:
    steps: tuple[LoadStep, ...]
    horizon: float = 100.0

    def problems(self, n: int) -> list[str]:
        out = []
        for s in self.steps:
            if not 0.0 <= s.t <= self.horizon:
                out.append(f"load step time {s.t} outside [0, {self.horizon}]")
            if not 1 <= s.area <= n:
                out.append(f"load step area {s.area} outside [1, {n}]")
        return out

    def vector(self, t: float, n: int) -> np.ndarray:
        """Total load deviation per area in effect at time ``t`` (right-continuous)."""
        p = np.zeros(n)
        for s in self.steps:
            if t >= s.t:
                p[s.area - 1] += s.dp
        return p

    def scaled(self, factor: float) -> "LoadScenario":
        return LoadScenario(
            tuple(LoadStep(s.t, s.area, s.dp * factor) for s in self.steps), self.horizon
        )

    def with_magnitude(self, dp: float) -> "LoadScenario":
        return LoadScenario(tuple(LoadStep(s.t, s.area, dp) for s in self.steps), self.horizon)


DEFAULT_LOAD_AREAS = (3, 4, 5, 7, 8, 10)


def default_load_scenario(magnitude: float = 0.01, t_step: float = 10.0,
                          horizon: float = 100.0, areas=DEFAULT_LOAD_AREAS) -> LoadScenario:
    return LoadScenario(tuple(LoadStep(t_step, a, magnitude) for a in areas), horizon)


@dataclass(frozen=True)
class NetworkSpec:
    areas: tuple[AreaParams, ...]
    torque: TorqueMatrix
    mode: str
    local_pids: tuple[PidGains, ...] | None = None
    local_kp: tuple[float, ...] | None = None
    global_ki: float | None = None
    delays_up: tuple[float, ...] | None = None
    delays_down: tuple[float, ...] | None = None
    scattering_alpha: float | None = None
    aggregation: str = "mean"
    loads: LoadScenario | None = None
    name: str = ""

    @property
    def n(self) -> int:
        return self.torque.n

    @property
    def inertia(self) -> np.ndarray:
        return np.array([a.M for a in self.areas])

    @property
    def damping(self) -> np.ndarray:
        return np.array([a.D for a in self.areas])

    def problems(self) -> list[str]:
        """Invariant violations (empty when the network is valid)."""
        n = self.torque.n
        out: list[str] = []
        if len(self.areas) != n:
            out.append(f"{len(self.areas)} areas but torque matrix is {n}x{n}")
        for k, a in enumerate(self.areas, 1):
            out += [f"area {k}: {p}" for p in a.problems()]
        out += validate_torque_matrix(self.torque).messages
        if self.mode not in CONTROL_MODES:
            out.append(f"unknown control mode {self.mode!r}")
        if self.mode in ("swing_pi", "ace_lfc"):
            if self.local_pids is None or len(self.local_pids) != n:
                out.append(f"{self.mode} needs one PID per area")
        if self.mode == "ace_lfc":
            for k, a in enumerate(self.areas, 1):
                if not a.has_lfc_params:
                    out.append(f"area {k}: ACE-based LFC needs R, B, tau_g and tau_t")
        if self.mode == "hierarchical":
            if self.local_kp is None or len(self.local_kp) != n:
                out.append("hierarchical mode needs one local proportional gain per area")
            if self.global_ki is None:
                out.append("hierarchical mode needs global_ki")
            for label, d in (("delays_up", self.delays_up), ("delays_down", self.delays_down)):
                if d is not None and (len(d) != n or min(d, default=0.0) < 0):
                    out.append(f"{label} must hold {n} nonnegative delays")
            if self.scattering_alpha is not None and not self.scattering_alpha > 0:
                out.append("scattering alpha must be positive")
            if self.aggregation not in ("mean", "sum"):
                out.append(f"aggregation must be 'mean' or 'sum', got {self.aggregation!r}")
        if self.loads is not None:
            out += self.loads.problems(n)
        return out

    def validated(self) -> "NetworkSpec":
        probs = self.problems()
        if probs:
            raise InvariantError(probs)
        for k, a in enumerate(self.areas, 1):
            if a.tau_g is not None and a.tau_t is not None and not a.tau_g < a.tau_t:
                warnings.warn(f"area {k}: governor time constant is not below turbine time constant")
        return self

    def replace(self, **changes) -> "NetworkSpec":
        from dataclasses import replace
        return replace(self, **changes)


# -- parsing ---------------------------------------------------------------

def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ScenarioError(f"{where}: missing field {key!r}")
    return doc[key]


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _num_list(v, n: int | None, where: str) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ScenarioError(f"{where}: expected a list")
    if n is not None and len(v) != n:
        raise ScenarioError(f"{where}: expected {n} entries, got {len(v)}")
    return tuple(_num(x, f"{where}[{i}]") for i, x in enumerate(v))


def _parse_pid(d, where: str) -> PidGains:
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected an object")
    return PidGains(
        kp=_num(_require(d, "kp", where), where + ".kp"),
        ki=_num(_require(d, "ki", where), where + ".ki"),
        kd=_num(d.get("kd", 0.0), where + ".kd"),
        tau_d=_num(d.get("tau_d", 0.01), where + ".tau_d"),
    )


def _parse_area(d, where: str) -> AreaParams:
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected an object")
    opt = {k: (_num(d[k], f"{where}.{k}") if k in d else None)
           for k in ("R", "B", "tau_g", "tau_t")}
    return AreaParams(M=_num(_require(d, "M", where), where + ".M"),
                      D=_num(_require(d, "D", where), where + ".D"), **opt)


def network_from_dict(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    areas_doc = _require(doc, "areas", "scenario")
    if not isinstance(areas_doc, list) or not areas_doc:
        raise ScenarioError("scenario.areas: expected a non-empty list")
    areas = tuple(_parse_area(a, f"areas[{i}]") for i, a in enumerate(areas_doc))
    n = len(areas)

    rows = _require(doc, "torque", "scenario")
    if not isinstance(rows, list) or len(rows) != n:
        raise ScenarioError(f"torque: expected {n} rows")
    torque = TorqueMatrix(np.array([_num_list(r, n, f"torque[{i}]") for i, r in enumerate(rows)]))

    ctl = _require(doc, "control", "scenario")
    mode = _require(ctl, "mode", "control")
    kw: dict[str, Any] = {}
    if mode in ("swing_pi", "ace_lfc"):
        pids = _require(ctl, "pids", "control")
        if not isinstance(pids, list) or len(pids) != n:
            raise ScenarioError(f"control.pids: expected {n} entries")
        kw["local_pids"] = tuple(_parse_pid(p, f"control.pids[{i}]") for i, p in enumerate(pids))
    elif mode == "hierarchical":
        kw["local_kp"] = _num_list(_require(ctl, "local_kp", "control"), n, "control.local_kp")
        kw["global_ki"] = _num(_require(ctl, "global_ki", "control"), "control.global_ki")
        for key in ("delays_up", "delays_down"):
            kw[key] = _num_list(ctl.get(key, [0.0] * n), n, f"control.{key}")
        if ctl.get("alpha") is not None:
            kw["scattering_alpha"] = _num(ctl["alpha"], "control.alpha")
        kw["aggregation"] = str(ctl.get("aggregation", "mean"))
    else:
        raise ScenarioError(f"control.mode must be one of {CONTROL_MODES}, got {mode!r}")

    horizon = _num(doc.get("horizon", 100.0), "horizon")
    loads = None
    if "loads" in doc:
        if not isinstance(doc["loads"], list):
            raise ScenarioError("loads: expected a list")
        steps = []
        for i, s in enumerate(doc["loads"]):
            where = f"loads[{i}]"
            area = _require(s, "area", where)
            if isinstance(area, bool) or not isinstance(area, int):
                raise ScenarioError(f"{where}.area: expected an integer")
            steps.append(LoadStep(_num(_require(s, "t", where), where + ".t"), area,
                                  _num(_require(s, "dp", where), where + ".dp")))
        loads = LoadScenario(tuple(steps), horizon)

    return NetworkSpec(areas=areas, torque=torque, mode=mode, loads=loads,
                       name=str(doc.get("name", "")), **kw)


def parse_network_config(text: str) -> NetworkSpec:
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        The document does not follow the schema.
    InvariantError
        The document is well formed but the network is invalid.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return network_from_dict(doc).validated()


BUNDLED = ("appendix1.json", "appendix2.json", "appendix3.json", "eq22.json",
           "nominal_params.json")


def resolve_path(name: str | Path) -> Path:
    """Return ``name`` if it exists on disk, else the bundled data file of that name."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("gridfreq") / "data" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioError(f"no such file: {name}")


def load_network(name: str | Path) -> NetworkSpec:
    path = resolve_path(name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_network_config(text)


def load_json(name: str | Path) -> dict:
    path = resolve_path(name)
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc


def reference_tables() -> dict:
    return json.loads((resources.files("gridfreq") / "data" / "reference_tables.json").read_text())
