"""Time-indexed simulation results."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WAVE_NAMES = ("p_mg", "u_l", "v_l", "u_r", "v_r", "u_g", "v_g")


@dataclass
class SimulationTrace:
    """Signals on a uniform time grid.

    ``power`` is the net external input ``P`` in ``M w' + D w + T d = P``;
    ``waves`` holds the hierarchical-loop channel signals when present.
    Arrays are ``(len(t), n)`` unless noted.
    """

    mode: str
    step: float
    t: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    ptl: np.ndarray
    ace: np.ndarray
    power: np.ndarray
    inertia: np.ndarray
    damping: np.ndarray
    torque: np.ndarray
    waves: dict[str, np.ndarray] = field(default_factory=dict)
    scattering_supply: np.ndarray | None = None  # (len(t),) cumulative
    status: str = "completed"
    message: str = ""

    @property
    def n(self) -> int:
        return self.omega.shape[1]

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    @property
    def storage(self) -> np.ndarray:
        kin = 0.5 * np.einsum("ki,i,ki->k", self.omega, self.inertia, self.omega)
        pot = 0.5 * np.einsum("ki,ij,kj->k", self.delta, self.torque, self.delta)
        return kin + pot

    @property
    def supplied(self) -> np.ndarray:
        return np.einsum("ki,ki->k", self.omega, self.power)

    @property
    def dissipation(self) -> np.ndarray:
        return np.einsum("ki,i,ki->k", self.omega, self.damping, self.omega)

    def window(self, t0: float, t1: float = np.inf) -> np.ndarray:
        return (self.t > t0) & (self.t <= t1)

    def rms_omega(self, t0: float, t1: float = np.inf) -> float:
        w = self.omega[self.window(t0, t1)]
        return float(np.sqrt(np.mean(w**2))) if w.size else float("nan")

    def max_abs(self, name: str, t0: float) -> float:
        arr = getattr(self, name)[self.window(t0)]
        return float(np.abs(arr).max()) if arr.size else float("nan")

    def to_csv(self, path: str | Path, every: int = 1) -> None:
        """Write the trace with 6 significant figures, keeping every ``every``-th row."""
        n = self.n
        cols = (["t"] + [f"omega_{i}" for i in range(1, n + 1)]
                + [f"delta_{i}" for i in range(1, n + 1)]
                + [f"ace_{i}" for i in range(1, n + 1)]
                + [f"ptl_{i}" for i in range(1, n + 1)]
                + ["S", "supply", "dissipation"])
        blocks = [self.t[:, None], self.omega, self.delta, self.ace, self.ptl,
                  self.storage[:, None], self.supplied[:, None], self.dissipation[:, None]]
        for name in WAVE_NAMES:
            if name in self.waves:
                cols += [f"{name}_{i}" for i in range(1, n + 1)]
                blocks.append(self.waves[name])
        if self.scattering_supply is not None:
            cols.append("scattering_supply")
            blocks.append(self.scattering_supply[:, None])
        data = np.hstack(blocks)[::max(1, int(every))]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, fmt="%.6g", delimiter=",")

    def summary(self) -> dict:
        out = {
            "mode": self.mode,
            "status": self.status,
            "step": self.step,
            "end_time": float(self.t[-1]),
            "max_abs_omega": float(np.abs(self.omega).max()),
            "max_abs_omega_after_80s": self.max_abs("omega", 80.0),
            "rms_omega_80_100s": self.rms_omega(80.0, 100.0),
        }
        if np.isfinite(self.ace).all():
            out["max_abs_ace_after_80s"] = self.max_abs("ace", 80.0)
        if self.message:
            out["message"] = self.message
        return out
