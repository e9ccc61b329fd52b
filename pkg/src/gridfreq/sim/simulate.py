"""Fixed-step RK4 simulators for the three control architectures.

All models are linear with piecewise-constant loads, so one RK4 step is an
affine map that is precomputed once.  The hierarchical loop additionally
reads delayed channel signals from ring buffers; its RK4 step takes those
samples at the start, midpoint and end of the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..netmodel import LoadScenario, NetworkSpec, default_load_scenario
from .linear import LinearModel, lfc_model, swing_model
from .trace import SimulationTrace

BLOWUP = 10.0
MAX_STEP = 1e-2


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class ScatteringConfig:
    alpha: float
    delays_up: tuple[float, ...]
    delays_down: tuple[float, ...]
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not self.alpha > 0:
            raise SimulationError("scattering alpha must be positive")
        if min(self.delays_up + self.delays_down, default=0.0) < 0:
            raise SimulationError("delays must be nonnegative")

    @classmethod
    def from_network(cls, network: NetworkSpec, enabled: bool | None = None,
                     alpha: float | None = None) -> "ScatteringConfig":
        n = network.n
        a = alpha if alpha is not None else network.scattering_alpha
        on = (a is not None) if enabled is None else enabled
        if on and a is None:
            raise SimulationError("scattering requested but no alpha given")
        return cls(a if a is not None else 0.0,
                   tuple(network.delays_up or (0.0,) * n),
                   tuple(network.delays_down or (0.0,) * n), on)


def rk4_propagator(A: np.ndarray, h: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """One RK4 step of ``x' = A x + b(t)`` as ``x+ = Phi x + G0 b0 + Gh bh + G1 b1``.

    ``b0, bh, b1`` are the inputs at the start, midpoint and end of the step.
    """
    I = np.eye(A.shape[0])
    Z = h * A
    Z2 = Z @ Z
    Z3 = Z2 @ Z
    Phi = I + Z + Z2 / 2 + Z3 / 6 + Z3 @ Z / 24
    G0 = h / 6 * (I + Z + Z2 / 2 + Z3 / 4)
    Gh = h / 6 * (4 * I + 2 * Z + Z2 / 2)
    G1 = h / 6 * I
    return Phi, [G0, Gh, G1]


def _check_step(step: float) -> None:
    if not 0 < step <= MAX_STEP:
        raise SimulationError(f"step must lie in (0, {MAX_STEP}], got {step}")


def _resolve_loads(network: NetworkSpec, loads: LoadScenario | None,
                   horizon: float | None) -> tuple[LoadScenario, float]:
    loads = loads or network.loads or default_load_scenario()
    horizon = loads.horizon if horizon is None else float(horizon)
    probs = loads.problems(network.n)
    if probs:
        raise SimulationError("; ".join(probs))
    return loads, horizon


def load_grid(loads: LoadScenario, n: int, t: np.ndarray) -> np.ndarray:
    """Load vector at every grid time (right-continuous steps)."""
    h = t[1] - t[0] if len(t) > 1 else 1.0
    out = np.zeros((len(t), n))
    for s in loads.steps:
        out[t >= s.t - 1e-9 * h, s.area - 1] += s.dp
    return out


def _time_grid(horizon: float, step: float) -> np.ndarray:
    N = int(round(horizon / step))
    return np.arange(N + 1) * step


def integrate_linear(model: LinearModel, t: np.ndarray, p: np.ndarray,
                     x0: np.ndarray | None = None) -> tuple[np.ndarray, int | None]:
    """Propagate ``x' = A x + L p`` with zero-order-hold loads.

    Returns the state history and the index at which the frequency guard
    tripped (``None`` if it never did); the history is cut after that index.
    """
    h = t[1] - t[0]
    Phi, (G0, Gh, G1) = rk4_propagator(model.A, h)
    Gam = (G0 + Gh + G1) @ model.L
    X = np.empty((len(t), model.A.shape[0]))
    X[0] = 0.0 if x0 is None else x0
    PhiT, GamT = Phi.T, Gam.T
    wsl = model.omega
    for k in range(len(t) - 1):
        X[k + 1] = X[k] @ PhiT + p[k] @ GamT
        if np.abs(X[k + 1, wsl]).max() > BLOWUP or not np.isfinite(X[k + 1]).all():
            return X[:k + 2], k + 1
    return X, None


def _trace(mode: str, network: NetworkSpec, model: LinearModel, t, X, p, step,
           blow: int | None, inertia=None, damping=None) -> SimulationTrace:
    t, p = t[:len(X)], p[:len(X)]
    omega, delta = X[:, model.omega], X[:, model.delta]
    T = network.torque.entries
    ptl = delta @ T.T
    B = [a.B for a in network.areas]
    ace = ptl + omega * np.array(B, dtype=float) if None not in B else np.full_like(ptl, np.nan)
    power = X @ model.Px.T + p @ model.Pl.T
    tr = SimulationTrace(mode, step, t, omega, delta, ptl, ace, power,
                         network.inertia if inertia is None else inertia,
                         network.damping if damping is None else damping, T)
    if blow is not None:
        tr.status = "diverged"
        tr.message = f"numerical blow-up: |omega| exceeded {BLOWUP:g} at t = {t[blow]:.6g} s"
    return tr


def simulate_swing(network: NetworkSpec, loads: LoadScenario | None = None,
                   step: float = 1e-3, horizon: float | None = None) -> SimulationTrace:
    """Swing network with a decentralized PI on each area's frequency."""
    if network.mode != "swing_pi":
        raise SimulationError("swing simulation needs a swing_pi scenario")
    _check_step(step)
    loads, horizon = _resolve_loads(network, loads, horizon)
    pids = network.local_pids
    model = swing_model(network.inertia, network.damping, network.torque.entries,
                        [g.kp for g in pids], [g.ki for g in pids])
    t = _time_grid(horizon, step)
    p = load_grid(loads, network.n, t)
    X, blow = integrate_linear(model, t, p)
    return _trace("swing", network, model, t, X, p, step, blow)


def simulate_lfc(network: NetworkSpec, loads: LoadScenario | None = None,
                 step: float = 1e-3, horizon: float | None = None) -> SimulationTrace:
    """ACE-based LFC with governor, turbine and filtered PID per area."""
    if network.mode != "ace_lfc":
        raise SimulationError("LFC simulation needs an ace_lfc scenario")
    _check_step(step)
    loads, horizon = _resolve_loads(network, loads, horizon)
    model = lfc_model(network)
    t = _time_grid(horizon, step)
    p = load_grid(loads, network.n, t)
    X, blow = integrate_linear(model, t, p)
    tr = _trace("lfc", network, model, t, X, p, step, blow)
    tr.waves = {}
    return tr


# -- hierarchical loop with delayed channels -----------------------------------

@dataclass(frozen=True)
class _ChannelMaps:
    """Linear maps from (state x, delayed samples hv) to loop signals.

    ``hv = [up-channel samples, down-channel samples]``.  Each entry is a
    pair ``(X-part, H-part)``.
    """

    signals: dict[str, tuple[np.ndarray, np.ndarray]]
    sources: tuple[np.ndarray, np.ndarray]


def _channel_maps(n: int, scat: ScatteringConfig) -> _ChannelMaps:
    nx = 2 * n + 1
    W = np.zeros((n, nx)); W[:, :n] = np.eye(n)          # omega
    G = np.zeros((n, nx)); G[:, 2 * n] = 1.0             # p_g seen by each area
    Hu = np.zeros((n, 2 * n)); Hu[:, :n] = np.eye(n)     # delayed up-channel sample
    Hd = np.zeros((n, 2 * n)); Hd[:, n:] = np.eye(n)     # delayed down-channel sample
    zx, zh = np.zeros((n, nx)), np.zeros((n, 2 * n))
    up0 = np.array([d == 0 for d in scat.delays_up])
    dn0 = np.array([d == 0 for d in scat.delays_down])

    if not scat.enabled:
        r_up = (np.where(up0[:, None], W, zx), np.where(up0[:, None], zh, Hu))
        r_dn = (np.where(dn0[:, None], G, zx), np.where(dn0[:, None], zh, Hd))
        signals = {"p_mg": r_dn, "v_g": r_up, "u_g": (G, zh)}
        return _ChannelMaps(signals, (np.vstack([W, G]), np.zeros((2 * n, 2 * n))))

    a = scat.alpha
    c = math.sqrt(2 * a)
    rux, ruh = np.zeros((n, nx)), np.zeros((n, 2 * n))
    rdx, rdh = np.zeros((n, nx)), np.zeros((n, 2 * n))
    for i in range(n):
        if not up0[i] and not dn0[i]:
            ruh[i] = Hu[i]
            rdh[i] = Hd[i]
        elif up0[i] and not dn0[i]:
            rdh[i] = Hd[i]
            ruh[i] = Hd[i]
            rux[i] = c * W[i]
        elif not up0[i] and dn0[i]:
            ruh[i] = Hu[i]
            rdx[i] = 2 / c * G[i]
            rdh[i] = -Hu[i]
        else:
            rdx[i] = G[i] / c - c / 2 * W[i]
            rux[i] = G[i] / c + c / 2 * W[i]
    signals = {
        "u_l": (rdx, rdh),
        "v_r": (rux, ruh),
        "u_g": (G, zh),
        "p_mg": (c * rdx + a * W, c * rdh),
        "v_l": (rdx + c * W, rdh),
        "u_r": (2 / c * G - rux, -ruh),
        "v_g": ((c * rux - G) / a, c * ruh / a),
    }
    vl, ur = signals["v_l"], signals["u_r"]
    sources = (np.vstack([vl[0], ur[0]]), np.vstack([vl[1], ur[1]]))
    return _ChannelMaps(signals, sources)


def simulate_hierarchical(network: NetworkSpec, loads: LoadScenario | None = None,
                          scattering: ScatteringConfig | None = None, step: float = 1e-3,
                          horizon: float | None = None) -> SimulationTrace:
    """Local proportional control plus a global integrator over delayed channels.

    Each area sends its frequency up to the coordinator and receives the
    integrator output back, each way through a constant delay.  With
    scattering enabled both ends exchange wave variables instead of raw
    signals.  Delay lines start from zero history.
    """
    if network.mode != "hierarchical":
        raise SimulationError("hierarchical simulation needs a hierarchical scenario")
    _check_step(step)
    loads, horizon = _resolve_loads(network, loads, horizon)
    scat = scattering or ScatteringConfig.from_network(network)
    n = network.n
    h = step
    delays = np.array(scat.delays_up + scat.delays_down, dtype=float)
    if len(delays) != 2 * n:
        raise SimulationError("one up and one down delay per area required")
    if np.any((delays > 0) & (delays < h * (1 - 1e-9))):
        raise SimulationError("nonzero delays must be at least one step long")

    maps = _channel_maps(n, scat)
    M, D = network.inertia, network.damping
    T = network.torque.entries
    kp = np.asarray(network.local_kp, dtype=float)
    agg = np.full(n, 1.0 / n if network.aggregation == "mean" else 1.0)
    nx = 2 * n + 1

    # x' = A0 x + E_pmg p_mg + E_vg v_g + L p
    A0 = np.zeros((nx, nx))
    A0[:n, :n] = -np.diag((D + kp) / M)
    A0[:n, n:2 * n] = -T / M[:, None]
    A0[n:2 * n, :n] = np.eye(n)
    E_pmg = np.zeros((nx, n)); E_pmg[:n] = -np.diag(1.0 / M)
    E_vg = np.zeros((nx, n)); E_vg[2 * n] = network.global_ki * agg
    L = E_pmg.copy()
    pmx, pmh = maps.signals["p_mg"]
    vgx, vgh = maps.signals["v_g"]
    A = A0 + E_pmg @ pmx + E_vg @ vgx
    Bh = E_pmg @ pmh + E_vg @ vgh

    Phi, (G0, Gh, G1) = rk4_propagator(A, h)
    K0, Kh, K1 = (G @ Bh for G in (G0, Gh, G1))
    Kl = (G0 + Gh + G1) @ L
    Sx, Sh = maps.sources

    # ring buffer of channel sources; zero-delay channels read a dummy lag
    dd = np.where(delays > 0, delays / h, 1.0)
    dd = np.where(np.abs(dd - np.round(dd)) < 1e-9, np.round(dd), dd)
    size = int(math.ceil(dd.max())) + 2
    buf = np.zeros((size, 2 * n))
    ch = np.arange(2 * n)
    lags = []
    for theta in (0.0, 0.5, 1.0):
        off = np.floor(theta - dd).astype(int)
        lags.append((off, theta - dd - off))

    def sample(k, lag):
        off, f = lag
        j = (k + off) % size
        return buf[j, ch] * (1 - f) + buf[(j + 1) % size, ch] * f

    t = _time_grid(horizon, step)
    p = load_grid(loads, n, t)
    N = len(t) - 1
    X = np.zeros((N + 1, nx))
    HV = np.zeros((N + 1, 2 * n))
    blow = None
    x = X[0].copy()
    hv0 = np.zeros(2 * n)
    for k in range(N):
        buf[k % size] = Sx @ x + Sh @ hv0
        hvh = sample(k, lags[1])
        hv1 = sample(k, lags[2])
        x = Phi @ x + K0 @ hv0 + Kh @ hvh + K1 @ hv1 + Kl @ p[k]
        X[k + 1] = x
        HV[k + 1] = hv1
        hv0 = hv1
        if np.abs(x[:n]).max() > BLOWUP or not np.isfinite(x).all():
            blow = k + 1
            X, HV, t, p = X[:k + 2], HV[:k + 2], t[:k + 2], p[:k + 2]
            break

    model = LinearModel(A, L, slice(0, n), slice(n, 2 * n),
                        np.hstack([-np.diag(kp), np.zeros((n, n + 1))]), -np.eye(n))
    tr = _trace("hierarchical", network, model, t, X, p, step, blow)
    waves = {name: X @ mx.T + HV @ mh.T for name, (mx, mh) in maps.signals.items()}
    tr.power = tr.power - waves["p_mg"]
    tr.waves = waves
    if scat.enabled:
        integrand = (np.einsum("ki,ki->k", waves["p_mg"], tr.omega)
                     - np.einsum("ki,ki->k", waves["v_g"], waves["u_g"]))
        tr.scattering_supply = cumulative_trapezoid(integrand, t, initial=0.0)
    return tr


def simulate(network: NetworkSpec, mode: str | None = None, **kw) -> SimulationTrace:
    """Dispatch on ``mode`` (``swing``, ``hierarchical`` or ``lfc``)."""
    mode = mode or {"swing_pi": "swing", "hierarchical": "hierarchical",
                    "ace_lfc": "lfc"}[network.mode]
    if mode == "swing":
        kw.pop("scattering", None)
        return simulate_swing(network, **kw)
    if mode == "lfc":
        kw.pop("scattering", None)
        return simulate_lfc(network, **kw)
    if mode == "hierarchical":
        return simulate_hierarchical(network, **kw)
    raise SimulationError(f"unknown simulation mode {mode!r}")
