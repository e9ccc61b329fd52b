"""Stable-domain test in the generalized frequency variable.

For a nominal agent ``h_n = num/den`` the coupled network is stable when every
nonzero eigenvalue ``lam`` of the interaction matrix keeps the complex
polynomial ``den(s) - lam*num(s)`` Hurwitz.  Hurwitz-ness of a complex
polynomial is decided by the signs of a sequence of block determinants
``D_1..D_n`` built from its real and imaginary coefficient parts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .tfalg.rational import RationalTransferFunction

BOUNDARY_TOL = 1e-9
ZERO_EIG_TOL = 1e-9
_CHUNK = 16384


@dataclass(frozen=True)
class GfvTestPolynomial:
    """Coefficients ``p_i + j q_i`` of ``s^(n-i)``, ``i = 1..n`` (monic leading term)."""

    p: np.ndarray
    q: np.ndarray
    x: float
    y: float

    @property
    def degree(self) -> int:
        return len(self.p)

    def coefficients(self) -> np.ndarray:
        return np.concatenate([[1.0 + 0j], self.p + 1j * self.q])


@dataclass(frozen=True)
class GfvDeterminants:
    sign: np.ndarray
    logabs: np.ndarray

    @property
    def d(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.logabs)

    @property
    def positive(self) -> np.ndarray:
        return (self.sign > 0) & (self.logabs > np.log(BOUNDARY_TOL))

    @property
    def all_positive(self) -> bool:
        return bool(self.positive.all())


def _check_nominal(h_n: RationalTransferFunction) -> tuple[np.ndarray, np.ndarray]:
    den, num = h_n.den, h_n.num
    if den[0] != 1.0:
        raise ValueError("nominal model denominator must be monic")
    n = len(den) - 1
    if len(num) > n:
        raise ValueError("nominal model must be strictly proper")
    num = np.concatenate([np.zeros(n + 1 - len(num)), num])
    return den[1:], num[1:]


def gfv_polynomial(h_n: RationalTransferFunction, x: float, y: float) -> GfvTestPolynomial:
    """Test polynomial ``den(s) - (x + jy) num(s)`` split into real and imaginary parts."""
    a, b = _check_nominal(h_n)
    return GfvTestPolynomial(a - x * b, -y * b, float(x), float(y))


@lru_cache(maxsize=None)
def _stencil(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Index and sign maps of the k-th block matrix.

    Entries are gathered from ``v = [0, 1, p_1..p_n, q_1..q_n]`` so that
    ``M = sign * v[index]``.
    """
    ZERO, ONE = 0, 1
    P = lambda i: 1 + i if 1 <= i <= n else ZERO
    Q = lambda i: 1 + n + i if 1 <= i <= n else ZERO

    def F(vec: list[int], size: int) -> np.ndarray:
        out = np.full((size, size), ZERO, dtype=int)
        for r in range(1, size + 1):
            for c in range(1, size + 1):
                m = 2 * c - r + 1
                if 1 <= m <= len(vec):
                    out[r - 1, c - 1] = vec[m - 1]
        return out

    pk = [ONE] + [P(i) for i in range(1, 2 * k)]
    pk1 = [ONE] + [P(i) for i in range(1, 2 * k - 2)]
    qk = [ZERO, ZERO] + [Q(i) for i in range(1, 2 * k - 1)]
    Fp, Fq, Fp1 = F(pk, k), F(qk, k), F(pk1, k - 1)
    idx = np.block([[Fp, Fq[:, 1:]], [Fq[:-1, :], Fp1]])
    sgn = np.block([
        [np.ones((k, k)), -np.ones((k, k - 1))],
        [np.ones((k - 1, k)), np.ones((k - 1, k - 1))],
    ])
    return idx, sgn


def _determinants(a: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Signs and log-magnitudes of D_1..D_n at many points, shape (N, n)."""
    n = len(a)
    x = np.asarray(x, dtype=float).ravel()
    y = np.abs(np.asarray(y, dtype=float).ravel())
    N = x.size
    v = np.empty((N, 2 * n + 2))
    v[:, 0] = 0.0
    v[:, 1] = 1.0
    v[:, 2:n + 2] = a[None, :] - x[:, None] * b[None, :]
    v[:, n + 2:] = -y[:, None] * b[None, :]
    sign = np.empty((N, n))
    logabs = np.empty((N, n))
    sign[:, 0] = np.sign(v[:, 2])
    with np.errstate(divide="ignore"):
        logabs[:, 0] = np.log(np.abs(v[:, 2]))
    for k in range(2, n + 1):
        idx, sgn = _stencil(n, k)
        for lo in range(0, N, _CHUNK):
            mats = v[lo:lo + _CHUNK][:, idx] * sgn
            s, la = np.linalg.slogdet(mats)
            sign[lo:lo + _CHUNK, k - 1] = s
            logabs[lo:lo + _CHUNK, k - 1] = la
    return sign, logabs


def stability_determinants(h_n: RationalTransferFunction, x: float, y: float) -> GfvDeterminants:
    """Determinant sequence ``D_1..D_n`` at the point ``x + jy``.

    Values are kept as sign and log-magnitude since the higher-order
    determinants easily exceed the double range.
    """
    a, b = _check_nominal(h_n)
    s, la = _determinants(a, b, np.array([x]), np.array([y]))
    return GfvDeterminants(s[0], la[0])


def in_stable_domain(h_n: RationalTransferFunction, lam: complex) -> bool:
    """True iff ``den(s) - lam*num(s)`` has every root in the open left half-plane.

    Points on the domain boundary count as outside.
    """
    lam = complex(lam)
    if abs(lam) <= ZERO_EIG_TOL:
        raise ValueError("zero eigenvalue is excluded from the stable-domain test")
    return stability_determinants(h_n, lam.real, lam.imag).all_positive


@dataclass(frozen=True)
class EigenVerdict:
    eigenvalue: float
    status: str  # "inside", "outside" or "excluded"

    @property
    def passed(self) -> bool:
        return self.status != "outside"


@dataclass(frozen=True)
class NominalTestResult:
    verdicts: tuple[EigenVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def as_list(self) -> list[dict]:
        return [{"lambda": v.eigenvalue, "status": v.status, "pass": v.passed}
                for v in self.verdicts]


def nominal_stability_test(h_n: RationalTransferFunction,
                           spectrum: Iterable[float]) -> NominalTestResult:
    """Check every strictly negative eigenvalue against the stable domain.

    Zero eigenvalues (the synchronous mode) are recorded as excluded.
    """
    out = []
    for lam in spectrum:
        lam = float(np.real(lam))
        if lam > ZERO_EIG_TOL:
            raise ValueError(f"positive interaction eigenvalue {lam:g}: torque matrix invalid")
        if abs(lam) <= ZERO_EIG_TOL:
            out.append(EigenVerdict(0.0, "excluded"))
        else:
            out.append(EigenVerdict(lam, "inside" if in_stable_domain(h_n, lam) else "outside"))
    return NominalTestResult(tuple(out))


@dataclass(frozen=True)
class DomainGrid:
    """In/out flags of the stable domain over a rectangular window.

    ``inside[i, j]`` refers to the point ``(xs[j], ys[i])``.  ``binding_k`` is
    the first determinant index that is not positive (0 inside the domain).
    """

    xs: np.ndarray
    ys: np.ndarray
    inside: np.ndarray
    binding_k: np.ndarray

    def boundary_mask(self) -> np.ndarray:
        """Outside cells that touch an inside 4-neighbour."""
        f = self.inside
        edge = np.zeros_like(f)
        edge[:, 1:] |= f[:, 1:] != f[:, :-1]
        edge[:, :-1] |= f[:, :-1] != f[:, 1:]
        edge[1:, :] |= f[1:, :] != f[:-1, :]
        edge[:-1, :] |= f[:-1, :] != f[1:, :]
        return edge & ~f

    def boundary_points(self) -> list[tuple[float, float, int]]:
        """Outside points adjacent to the domain, with the determinant that fails there."""
        ii, jj = np.nonzero(self.boundary_mask())
        return [(float(self.xs[j]), float(self.ys[i]), int(self.binding_k[i, j]))
                for i, j in zip(ii, jj)]

    def to_csv(self, path: str | Path) -> None:
        lines = ["x,y,inside,binding_k"]
        for i, y in enumerate(self.ys):
            for j, x in enumerate(self.xs):
                lines.append(f"{x:.6g},{y:.6g},{int(self.inside[i, j])},{int(self.binding_k[i, j])}")
        Path(path).write_text("\n".join(lines) + "\n")

    def to_svg(self, path: str | Path, markers: Sequence[complex] = (), size: int = 480) -> None:
        x0, x1 = float(self.xs[0]), float(self.xs[-1])
        y0, y1 = float(self.ys[0]), float(self.ys[-1])
        sx = size / (x1 - x0) if x1 > x0 else 1.0
        sy = size / (y1 - y0) if y1 > y0 else 1.0
        dx = (x1 - x0) / max(len(self.xs) - 1, 1)
        dy = (y1 - y0) / max(len(self.ys) - 1, 1)
        X = lambda x: (x - x0) * sx
        Y = lambda y: size - (y - y0) * sy
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
                 f'viewBox="0 0 {size} {size}">',
                 f'<rect width="{size}" height="{size}" fill="white"/>']
        # one rectangle per horizontal run of inside cells
        for i, y in enumerate(self.ys):
            row = self.inside[i]
            j = 0
            while j < len(row):
                if not row[j]:
                    j += 1
                    continue
                start = j
                while j < len(row) and row[j]:
                    j += 1
                xa, xb = self.xs[start] - dx / 2, self.xs[j - 1] + dx / 2
                parts.append(f'<rect x="{X(xa):.2f}" y="{Y(y + dy / 2):.2f}" '
                             f'width="{(xb - xa) * sx:.2f}" height="{dy * sy:.2f}" '
                             'fill="#9ecae1" stroke="none"/>')
        if x0 <= 0 <= x1:
            parts.append(f'<line x1="{X(0):.2f}" y1="0" x2="{X(0):.2f}" y2="{size}" stroke="black"/>')
        if y0 <= 0 <= y1:
            parts.append(f'<line x1="0" y1="{Y(0):.2f}" x2="{size}" y2="{Y(0):.2f}" stroke="black"/>')
        for lam in markers:
            lam = complex(lam)
            parts.append(f'<circle cx="{X(lam.real):.2f}" cy="{Y(lam.imag):.2f}" r="3" '
                         'fill="red" stroke="black"/>')
        parts.append("</svg>")
        Path(path).write_text("\n".join(parts) + "\n")


def domain_flags(h_n: RationalTransferFunction, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized membership and binding determinant index at points ``x + j y``."""
    a, b = _check_nominal(h_n)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sign, logabs = _determinants(a, b, x, y)
    ok = (sign > 0) & (logabs > np.log(BOUNDARY_TOL))
    inside = ok.all(axis=1)
    binding = np.where(inside, 0, np.argmin(ok, axis=1) + 1)
    return inside.reshape(x.shape), binding.reshape(x.shape)


def sample_stable_domain(h_n: RationalTransferFunction, x_range: tuple[float, float],
                         y_range: tuple[float, float], resolution: int | tuple[int, int] = 300
                         ) -> DomainGrid:
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 per axis")
    xs = np.linspace(*x_range, int(nx))
    ys = np.linspace(*y_range, int(ny))
    X, Y = np.meshgrid(xs, ys)
    inside, binding = domain_flags(h_n, X, Y)
    return DomainGrid(xs, ys, inside, binding)
