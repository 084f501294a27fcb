"""Exact rational simplex for small dense LPs.

Solves  maximize c.x  subject to  A x <= b,  x >= 0  with b >= 0, so the
origin is a feasible starting basis.  Pivoting follows Bland's rule, which
rules out cycling; arithmetic uses fractions.Fraction throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class Unbounded(ArithmeticError):
    """The objective can be increased without limit."""


@dataclass
class LpSolution:
    objective: Fraction
    x: list
    pivots: int


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence, max_pivots: int = 100_000) -> LpSolution:
    m, n = len(A), len(c)
    if len(b) != m or any(len(row) != n for row in A):
        raise ValueError("lp: dimension mismatch")
    rhs = [_frac(v) for v in b]
    if any(v < 0 for v in rhs):
        raise ValueError("lp: right-hand side must be non-negative")
    # tableau rows: [A | I | b], objective row holds reduced costs -c
    width = n + m
    rows = [[_frac(v) for v in A[r]] + [Fraction(int(r == k)) for k in range(m)] + [rhs[r]]
            for r in range(m)]
    obj = [-_frac(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + r for r in range(m)]
    pivots = 0
    while True:
        entering = next((j for j in range(width) if obj[j] < 0), None)
        if entering is None:
            break
        best, leaving = None, None
        for r in range(m):
            a = rows[r][entering]
            if a > 0:
                ratio = rows[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leaving]):
                    best, leaving = ratio, r
        if leaving is None:
            raise Unbounded("lp: objective unbounded")
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("lp: pivot limit reached")
        prow = rows[leaving]
        pv = prow[entering]
        prow = [v / pv for v in prow]
        rows[leaving] = prow
        for r in range(m):
            if r != leaving and rows[r][entering] != 0:
                f = rows[r][entering]
                rows[r] = [v - f * w for v, w in zip(rows[r], prow)]
        if obj[entering] != 0:
            f = obj[entering]
            obj = [v - f * w for v, w in zip(obj, prow)]
        basis[leaving] = entering
    x = [Fraction(0)] * n
    for r, var in enumerate(basis):
        if var < n:
            x[var] = rows[r][-1]
    return LpSolution(obj[-1], x, pivots)
