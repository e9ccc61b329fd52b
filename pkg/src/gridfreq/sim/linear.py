"""State-space assembly of the coupled closed loops and the eigenvalue oracle.

State layouts (blocks of length ``n`` unless noted):

* swing with PI:   ``[delta, omega]``
* ACE-based LFC:   ``[omega, delta, x_g, p_m, xi, z]``
* hierarchical:    ``[omega, delta, p_g]`` with ``p_g`` scalar
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..netmodel import NetworkSpec

STRUCTURAL_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class LinearModel:
    """``x' = A x + L p`` with load vector ``p`` and linear output maps.

    ``P = Px x + Pl p`` is the net power input to the swing dynamics.
    """

    A: np.ndarray
    L: np.ndarray
    omega: slice
    delta: slice
    Px: np.ndarray
    Pl: np.ndarray
    pm: slice | None = None


class StateAssemblyError(AssertionError):
    pass


def swing_model(M, D, T, a, b) -> LinearModel:
    """Swing network with a decentralized PI ``p_M = a w + b int(w)`` per area.

    Starting from rest the PI integrator equals the phase deviation, so it is
    not carried as a separate state (doing so would add one conserved,
    uncontrollable mode per area).
    """
    M, D, a, b = (np.asarray(v, dtype=float) for v in (M, D, a, b))
    T = np.asarray(T, dtype=float)
    n = len(M)
    Z, I = np.zeros((n, n)), np.eye(n)
    Minv = np.diag(1.0 / M)
    A = np.block([
        [Z, I],
        [-Minv @ (T + np.diag(b)), -Minv @ np.diag(D + a)],
    ])
    L = np.vstack([Z, -Minv])
    Px = np.hstack([-np.diag(b), -np.diag(a)])
    return LinearModel(A, L, slice(n, 2 * n), slice(0, n), Px, -I)


def lfc_model(network: NetworkSpec) -> LinearModel:
    """ACE-based LFC: governor, turbine and filtered PID per area, coupled by ``T d``."""
    n = network.n
    T = network.torque.entries
    M = network.inertia
    D = network.damping
    tg = np.array([a.tau_g for a in network.areas])
    tt = np.array([a.tau_t for a in network.areas])
    R = np.array([a.R for a in network.areas])
    B = np.array([a.B for a in network.areas])
    kp = np.array([p.kp for p in network.local_pids])
    ki = np.array([p.ki for p in network.local_pids])
    kd = np.array([p.kd for p in network.local_pids])
    td = np.array([p.tau_d for p in network.local_pids])

    N = 6 * n
    W, Dl, XG, PM, XI, ZF = (slice(k * n, (k + 1) * n) for k in range(6))
    A = np.zeros((N, N))
    I = np.eye(n)

    # ACE = T d + B w, as a map from the full state
    ace = np.zeros((n, N))
    ace[:, W] = np.diag(B)
    ace[:, Dl] = T
    # u = -(kp ACE + ki xi + (kd/td)(ACE - z))
    u = -((kp + kd / td)[:, None] * ace)
    u[:, XI] -= np.diag(ki)
    u[:, ZF] += np.diag(kd / td)

    A[W, W] = -np.diag(D / M)
    A[W, PM] = np.diag(1.0 / M)
    A[W, Dl] = -T / M[:, None]
    A[Dl, W] = I
    A[XG] = u / tg[:, None]
    A[XG, W] -= np.diag(1.0 / (R * tg))
    A[XG, XG] -= np.diag(1.0 / tg)
    A[PM, XG] = np.diag(1.0 / tt)
    A[PM, PM] = -np.diag(1.0 / tt)
    A[XI] = ace
    A[ZF] = ace / td[:, None]
    A[ZF, ZF] -= np.diag(1.0 / td)

    L = np.zeros((N, n))
    L[W] = -np.diag(1.0 / M)
    Px = np.zeros((n, N))
    Px[:, PM] = I
    return LinearModel(A, L, W, Dl, Px, -I, pm=PM)


def hierarchical_model(network: NetworkSpec) -> LinearModel:
    """Hierarchical loop with every channel delay set to zero."""
    n = network.n
    T = network.torque.entries
    M, D = network.inertia, network.damping
    kp = np.asarray(network.local_kp, dtype=float)
    agg = np.full(n, 1.0 / n if network.aggregation == "mean" else 1.0)
    A = np.zeros((2 * n + 1, 2 * n + 1))
    A[:n, :n] = -np.diag((D + kp) / M)
    A[:n, n:2 * n] = -T / M[:, None]
    A[:n, 2 * n] = -1.0 / M
    A[n:2 * n, :n] = np.eye(n)
    A[2 * n, :n] = network.global_ki * agg
    L = np.zeros((2 * n + 1, n))
    L[:n] = -np.diag(1.0 / M)
    Px = np.zeros((n, 2 * n + 1))
    Px[:, :n] = -np.diag(kp)
    Px[:, 2 * n] = -1.0
    return LinearModel(A, L, slice(0, n), slice(n, 2 * n), Px, -np.eye(n))


def model_for(network: NetworkSpec) -> LinearModel:
    if network.mode == "swing_pi":
        pids = network.local_pids
        return swing_model(network.inertia, network.damping, network.torque.entries,
                           [p.kp for p in pids], [p.ki for p in pids])
    if network.mode == "ace_lfc":
        return lfc_model(network)
    if network.mode == "hierarchical":
        return hierarchical_model(network)
    raise ValueError(f"unknown control mode {network.mode!r}")


@dataclass(frozen=True)
class OracleResult:
    eigenvalues: np.ndarray
    excluded: np.ndarray
    abscissa: float

    @property
    def stable(self) -> bool:
        return self.abscissa < 0


def split_structural_zero(eigs: np.ndarray, tol: float = STRUCTURAL_ZERO_TOL):
    """Remove the single smallest-magnitude eigenvalue if it is below ``tol``."""
    eigs = np.asarray(eigs)
    if eigs.size == 0:
        return eigs, eigs[:0]
    k = int(np.argmin(np.abs(eigs)))
    if abs(eigs[k]) < tol:
        return np.delete(eigs, k), eigs[k:k + 1]
    return eigs, eigs[:0]


def closed_loop_eigen_oracle(network: NetworkSpec) -> OracleResult:
    """Eigenvalues of the full delay-free closed loop.

    The synchronous mode (uniform phase shift, in the kernel of ``T``)
    is excluded from the spectral abscissa.
    """
    model = model_for(network)
    expected = {"swing_pi": 2 * network.n, "ace_lfc": 6 * network.n,
                "hierarchical": 2 * network.n + 1}[network.mode]
    if model.A.shape != (expected, expected):
        raise StateAssemblyError(f"state matrix is {model.A.shape}, expected {expected}")
    eigs = np.linalg.eigvals(model.A)
    eigs = eigs[np.lexsort((eigs.imag, -eigs.real))]
    kept, excluded = split_structural_zero(eigs)
    abscissa = float(kept.real.max()) if kept.size else -np.inf
    return OracleResult(eigs, excluded, abscissa)
