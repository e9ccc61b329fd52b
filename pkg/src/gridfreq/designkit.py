"""Two-step decentralized LFC design check and a local PID tuner.

The check runs three tests against a shared nominal model set
``{h_n, xi}``:

* nominal stability: interaction eigenvalues inside the stable domain,
* robust stability: ``kappa = ||lam h_n / (1 - lam h_n)||_inf - 1/xi <= 0``,
* model matching: ``||Delta_i||_inf <= xi`` for every area.

All three are sufficient conditions; a failing test is inconclusive.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np
from scipy.optimize import minimize

from .gfv import NominalTestResult, ZERO_EIG_TOL, nominal_stability_test
from .netmodel import AreaParams, NetworkSpec, PidGains, interaction_spectrum
from .tfalg import (
    NominalModelSet,
    RationalTransferFunction,
    UnstableErrorSystem,
    UnstableSystemError,
    hinf_norm,
    local_agent_tf,
    multiplicative_error,
)

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    env = os.environ.get("GRIDFREQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map, threaded up to ``GRIDFREQ_THREADS`` workers."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class NominalTestFailed(RuntimeError):
    pass


class DesignInputError(ValueError):
    pass


class MatchingInfeasibleError(RuntimeError):
    def __init__(self, xi: float, best: "PidSynthesis"):
        self.xi = xi
        self.best = best
        super().__init__(f"matching infeasible at xi = {xi:g} "
                         f"(best achieved {best.norm:.6g})")


@dataclass(frozen=True)
class RobustRow:
    eigenvalue: float
    norm: float
    kappa: float

    @property
    def passed(self) -> bool:
        return self.kappa <= 0.0


@dataclass(frozen=True)
class MatchingRow:
    area: int
    norm: float
    passed: bool
    diagnostic: str = ""


def complementary_loop(h_n: RationalTransferFunction, lam: float) -> RationalTransferFunction:
    """``lam h_n / (1 - lam h_n)`` as a single rational function."""
    num = lam * h_n.num
    return RationalTransferFunction(num, np.polysub(h_n.den, num))


def robust_stability_test(model_set: NominalModelSet, spectrum: Sequence[float],
                          nominal: NominalTestResult | None = None) -> list[RobustRow]:
    """Robust-stability margins for each nonzero interaction eigenvalue.

    Raises
    ------
    NominalTestFailed
        The nominal test does not pass, so the loops whose norms would be
        measured are not known to be stable.
    """
    if nominal is None:
        nominal = nominal_stability_test(model_set.h_n, spectrum)
    if not nominal.passed:
        raise NominalTestFailed("nominal stability test failed; robust test not applicable")
    lams = [float(np.real(l)) for l in spectrum if abs(l) > ZERO_EIG_TOL]

    def row(lam):
        norm = hinf_norm(complementary_loop(model_set.h_n, lam))
        return RobustRow(lam, norm, norm - 1.0 / model_set.xi)

    return parallel_map(row, lams)


def matching_norm(area: AreaParams, pid: PidGains, h_n: RationalTransferFunction) -> float:
    return hinf_norm(multiplicative_error(local_agent_tf(area, pid), h_n))


def model_matching_test(areas: Sequence[AreaParams], pids: Sequence[PidGains],
                        model_set: NominalModelSet) -> list[MatchingRow]:
    if len(areas) != len(pids):
        raise DesignInputError("one controller per area is required")

    def row(k):
        try:
            norm = matching_norm(areas[k], pids[k], model_set.h_n)
        except (UnstableErrorSystem, UnstableSystemError) as exc:
            return MatchingRow(k + 1, float("inf"), False, str(exc))
        return MatchingRow(k + 1, norm, norm <= model_set.xi)

    return parallel_map(row, range(len(areas)))


@dataclass
class StabilityReport:
    xi: float
    nominal: NominalTestResult
    robust: list[RobustRow] | None
    matching: list[MatchingRow]
    robust_note: str = ""
    oracle_abscissa: float | None = None

    @property
    def nominal_pass(self) -> bool:
        return self.nominal.passed

    @property
    def robust_pass(self) -> bool:
        return self.robust is not None and all(r.passed for r in self.robust)

    @property
    def matching_pass(self) -> bool:
        return all(r.passed for r in self.matching)

    @property
    def overall(self) -> bool:
        return self.nominal_pass and self.robust_pass and self.matching_pass

    def xi_interval(self) -> tuple[float, float] | None:
        """Range of xi for which robust and matching tests both pass with these gains.

        ``None`` when the range is empty or cannot be computed.
        """
        if self.robust is None or not self.matching:
            return None
        lo = max(r.norm for r in self.matching)
        peak = max((r.norm for r in self.robust), default=0.0)
        hi = 1.0 / peak if peak > 0 else float("inf")
        if not lo <= hi:
            return None
        return lo, hi

    def as_dict(self) -> dict:
        interval = self.xi_interval()
        return {
            "xi": self.xi,
            "nominal": self.nominal.as_list(),
            "robust": None if self.robust is None else [
                {"lambda": r.eigenvalue, "norm": r.norm, "kappa": r.kappa, "pass": r.passed}
                for r in self.robust],
            "robust_note": self.robust_note,
            "matching": [
                {"area": r.area, "norm": (None if not np.isfinite(r.norm) else r.norm),
                 "pass": r.passed, **({"diagnostic": r.diagnostic} if r.diagnostic else {})}
                for r in self.matching],
            "xi_interval": None if interval is None else list(interval),
            "oracle_spectral_abscissa": self.oracle_abscissa,
            "overall": self.overall,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=False,
                          default=lambda o: None) + "\n"

    def to_text(self) -> str:
        verdict = lambda ok: "pass" if ok else "inconclusive"
        lines = [f"model-matching index xi = {self.xi:.4f}", "",
                 "nominal stability test"]
        lines.append(f"  {'lambda':>10}  {'status':>10}")
        for v in self.nominal.verdicts:
            lines.append(f"  {v.eigenvalue:>10.4f}  {v.status:>10}")
        lines += ["", "robust stability test"]
        if self.robust is None:
            lines.append(f"  not run: {self.robust_note}")
        else:
            lines.append(f"  {'lambda':>10}  {'norm':>10}  {'kappa':>10}  {'result':>12}")
            for r in self.robust:
                lines.append(f"  {r.eigenvalue:>10.4f}  {r.norm:>10.4f}  {r.kappa:>10.4f}  "
                             f"{verdict(r.passed):>12}")
        lines += ["", "model matching test"]
        lines.append(f"  {'area':>4}  {'norm':>10}  {'result':>12}")
        for r in self.matching:
            lines.append(f"  {r.area:>4d}  {r.norm:>10.4f}  {verdict(r.passed):>12}"
                         + (f"  ({r.diagnostic})" if r.diagnostic else ""))
        lines.append("")
        interval = self.xi_interval()
        if interval is None:
            lines.append("admissible xi interval: empty")
        else:
            lines.append(f"admissible xi interval: [{interval[0]:.4f}, {interval[1]:.4f}]")
        if self.oracle_abscissa is not None:
            lines.append(f"closed-loop spectral abscissa: {self.oracle_abscissa:.6g}")
        lines.append(f"overall: {verdict(self.overall)}")
        return "\n".join(lines) + "\n"


def run_design_procedure(network: NetworkSpec, model_set: NominalModelSet,
                         oracle: bool = False) -> StabilityReport:
    """Run nominal, robust and matching tests on an ACE-based LFC network.

    Every test is reported; the robust test is skipped (and fails) only
    when the nominal test does not pass.
    """
    if network.mode != "ace_lfc" or network.local_pids is None:
        raise DesignInputError("per-area controller gains absent: an ace_lfc scenario is required")
    spectrum = interaction_spectrum(network.torque)
    nominal = nominal_stability_test(model_set.h_n, spectrum)
    robust, note = None, ""
    try:
        robust = robust_stability_test(model_set, spectrum, nominal)
    except NominalTestFailed as exc:
        note = str(exc)
    matching = model_matching_test(network.areas, network.local_pids, model_set)
    report = StabilityReport(model_set.xi, nominal, robust, matching, note)
    if oracle:
        from .sim.linear import closed_loop_eigen_oracle
        report.oracle_abscissa = closed_loop_eigen_oracle(network).abscissa
    return report


@dataclass(frozen=True)
class PidSynthesis:
    gains: PidGains
    norm: float
    evaluations: int

    def success(self, xi: float) -> bool:
        return self.norm <= xi


def synthesize_local_pid(area: AreaParams, model_set: NominalModelSet, init: PidGains,
                         max_evals: int = 2000, restarts: int = 100,
                         seed: int = 0) -> PidSynthesis:
    """Tune ``(kp, ki, kd)`` by Nelder–Mead to minimize ``||Delta||_inf``.

    ``tau_d`` is held at the value in ``init``.  If the initial gains give an
    unstable error system, random perturbations of up to 50% are tried
    until a feasible starting point appears.

    Raises
    ------
    MatchingInfeasibleError
        The best norm found exceeds ``model_set.xi``.
    """
    h_n = model_set.h_n
    evals = 0

    def cost(v):
        nonlocal evals
        evals += 1
        try:
            return matching_norm(area, PidGains(v[0], v[1], v[2], init.tau_d), h_n)
        except (UnstableErrorSystem, UnstableSystemError, ValueError):
            return np.inf

    x0 = np.array(init.as_tuple(), dtype=float)
    f0 = cost(x0)
    rng = np.random.default_rng(seed)
    tries = 0
    while not np.isfinite(f0) and tries < restarts:
        tries += 1
        cand = x0 * rng.uniform(0.5, 1.5, size=3)
        fc = cost(cand)
        if np.isfinite(fc):
            x0, f0 = cand, fc

    best_x, best_f = x0, f0
    if np.isfinite(f0) and f0 > 0:
        budget = max(max_evals - evals, 1)
        res = minimize(cost, x0, method="Nelder-Mead",
                       options={"maxfev": budget, "xatol": 1e-6, "fatol": 1e-8})
        if res.fun < best_f:
            best_x, best_f = res.x, float(res.fun)
    out = PidSynthesis(PidGains(*map(float, best_x), tau_d=init.tau_d), float(best_f), evals)
    if not out.success(model_set.xi):
        raise MatchingInfeasibleError(model_set.xi, out)
    return out
