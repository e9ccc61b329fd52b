"""Real-coefficient rational transfer functions and state-space realizations."""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np
from scipy import signal


def _trim(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1)
    return c[nz[0]:].copy()


class ImproperError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RationalTransferFunction:
    """``num(s)/den(s)`` with coefficients in descending powers of ``s``.

    Leading zeros are stripped; common factors are never cancelled implicitly.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num, den = _trim(self.num), _trim(self.den)
        if den[0] == 0.0:
            raise ValueError("denominator must be a nonzero polynomial")
        num.setflags(write=False)
        den.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def constant(cls, k: float) -> "RationalTransferFunction":
        return cls([k], [1.0])

    @property
    def relative_degree(self) -> int:
        if not self.num.any():
            return len(self.den) - 1
        return (len(self.den) - 1) - (len(self.num) - 1)

    @property
    def is_proper(self) -> bool:
        return self.relative_degree >= 0

    @property
    def order(self) -> int:
        return len(self.den) - 1

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def freqresp(self, w) -> np.ndarray:
        return self(1j * np.asarray(w, dtype=float))

    def poles(self) -> np.ndarray:
        return np.roots(self.den)

    def zeros(self) -> np.ndarray:
        return np.roots(self.num)

    # -- algebra -----------------------------------------------------------

    @staticmethod
    def _lift(other) -> "RationalTransferFunction":
        if isinstance(other, RationalTransferFunction):
            return other
        if isinstance(other, Number):
            return RationalTransferFunction.constant(float(other))
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if np.array_equal(self.den, o.den):
            return RationalTransferFunction(np.polyadd(self.num, o.num), self.den)
        return RationalTransferFunction(
            np.polyadd(np.polymul(self.num, o.den), np.polymul(o.num, self.den)),
            np.polymul(self.den, o.den),
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalTransferFunction(-self.num, self.den)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return RationalTransferFunction(np.polymul(self.num, o.num), np.polymul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if not o.num.any():
            raise ZeroDivisionError("division by the zero transfer function")
        return RationalTransferFunction(np.polymul(self.num, o.den), np.polymul(self.den, o.num))

    def feedback(self, gain: float = 1.0) -> "RationalTransferFunction":
        """Negative unity-type feedback ``G / (1 + gain*G)``."""
        return RationalTransferFunction(self.num, np.polyadd(self.den, gain * self.num))

    def cancel_origin_pole(self) -> "RationalTransferFunction":
        """Remove one factor of ``s`` from both numerator and denominator.

        Only legal when both polynomials vanish at the origin.
        """
        if self.den[-1] != 0.0 or self.num[-1] != 0.0:
            raise ValueError("numerator and denominator must both have a root at s = 0")
        num = self.num[:-1] if len(self.num) > 1 else np.zeros(1)
        return RationalTransferFunction(num, self.den[:-1])

    def strip_origin_pole(self) -> "RationalTransferFunction":
        """Return ``s * G(s)`` computed by dropping the trailing zero of ``den``."""
        if self.den[-1] != 0.0:
            raise ValueError("no pole at the origin")
        return RationalTransferFunction(self.num, self.den[:-1])

    def normalized(self) -> "RationalTransferFunction":
        lead = self.den[0]
        return RationalTransferFunction(self.num / lead, self.den / lead)

    def __repr__(self):
        return f"RationalTransferFunction(num={self.num.tolist()}, den={self.den.tolist()})"


@dataclass(frozen=True, eq=False)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1) if n else np.zeros((0, 1))
        C = np.asarray(self.C, dtype=float).reshape(-1, n) if n else np.zeros((1, 0))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if A.shape != (n, n) or D.shape != (C.shape[0], B.shape[1]):
            raise ValueError("inconsistent state-space dimensions")
        for name, m in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, m)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def __call__(self, s) -> np.ndarray:
        """SISO frequency response at complex points ``s``."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        n = self.n_states
        out = np.empty(s.shape, dtype=complex)
        eye = np.eye(n)
        for k, sk in enumerate(s):
            if n:
                x = np.linalg.solve(sk * eye - self.A, self.B[:, 0])
                out[k] = self.C[0] @ x + self.D[0, 0]
            else:
                out[k] = self.D[0, 0]
        return out

    def to_tf(self) -> RationalTransferFunction:
        if self.n_states == 0:
            return RationalTransferFunction.constant(self.D[0, 0])
        num, den = signal.ss2tf(self.A, self.B, self.C, self.D)
        return RationalTransferFunction(num[0], den)


def realize_state_space(g: RationalTransferFunction) -> StateSpace:
    """Controllable canonical realization of a proper SISO rational function."""
    if not g.is_proper:
        raise ImproperError("improper transfer function has no state-space realization")
    g = g.normalized()
    den = g.den
    n = len(den) - 1
    num = np.concatenate([np.zeros(n + 1 - len(g.num)), g.num])
    d = num[0]
    resid = num[1:] - d * den[1:]  # strictly proper remainder, degree n-1
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[d]])
    A = np.zeros((n, n))
    A[0, :] = -den[1:]
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    C = resid.reshape(1, n)
    return StateSpace(A, B, C, [[d]])
