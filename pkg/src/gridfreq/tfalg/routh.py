"""Routh–Hurwitz test with a companion-matrix cross-check."""
from __future__ import annotations

import numpy as np

PIVOT_EPS = 1e-12


def routh_table(poly) -> np.ndarray | None:
    """Build the Routh array for a real polynomial (descending coefficients).

    Returns ``None`` when a whole row vanishes (roots symmetric about the
    origin, so the polynomial cannot be strictly stable).  Zero pivots are
    replaced by ``PIVOT_EPS``.
    """
    c = np.asarray(poly, dtype=float)
    n = len(c) - 1
    width = n // 2 + 1
    table = np.zeros((n + 1, width))
    table[0, : len(c[0::2])] = c[0::2]
    table[1, : len(c[1::2])] = c[1::2]
    scale = max(np.abs(c).max(), 1.0)
    for r in range(2, n + 1):
        prev, pprev = table[r - 1], table[r - 2]
        if np.all(np.abs(prev) <= PIVOT_EPS * scale):
            return None
        pivot = prev[0]
        if abs(pivot) <= PIVOT_EPS * scale:
            pivot = PIVOT_EPS * scale
            table[r - 1, 0] = pivot
        for j in range(width - 1):
            table[r, j] = (pivot * pprev[j + 1] - pprev[0] * prev[j + 1]) / pivot
    return table


def routh_verdict(poly) -> bool:
    c = np.trim_zeros(np.asarray(poly, dtype=float), "f")
    if c.size == 0:
        raise ValueError("degenerate (all-zero) polynomial")
    if c[0] < 0:
        c = -c
    if len(c) == 1:
        return True
    table = routh_table(c)
    if table is None:
        return False
    return bool(np.all(table[:, 0] > 0))


def companion_verdict(poly, margin: float = 1e-10) -> bool:
    c = np.trim_zeros(np.asarray(poly, dtype=complex), "f")
    if c.size == 0:
        raise ValueError("degenerate (all-zero) polynomial")
    if len(c) == 1:
        return True
    r = np.roots(c)
    return bool(np.all(r.real < -margin * np.maximum(1.0, np.abs(r))))


def is_hurwitz(poly) -> bool:
    """True iff every root of ``poly`` has strictly negative real part.

    The Routh verdict is cross-checked against the eigenvalues of the
    companion matrix; when the two disagree (near-marginal cases), the
    eigenvalue verdict wins.
    """
    a = routh_verdict(poly)
    b = companion_verdict(poly)
    return b if a != b else a
