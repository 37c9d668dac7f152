"""Exact feasibility for {x >= 0 : A x = b} by a phase-one simplex over Q.

Entering variable: lowest index with negative reduced cost (Bland).
Leaving variable: minimum ratio, ties broken lexicographically on the rows of
the current basis inverse, which rules out cycling independently of the
entering rule.  There are no tolerances; every pivot is exact.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .rational import Vector, frac


class LPError(RuntimeError):
    pass


def _phase_one(A: list[list[Fraction]], b: list[Fraction]):
    m = len(A)
    n = len(A[0]) if m else 0
    # normalise to b >= 0
    rows = []
    for i in range(m):
        if b[i] < 0:
            rows.append([-a for a in A[i]] + [-b[i]])
        else:
            rows.append(list(A[i]) + [b[i]])
    # tableau columns: n structural, m artificial, rhs
    T = []
    for i, r in enumerate(rows):
        art = [Fraction(int(i == k)) for k in range(m)]
        T.append(r[:n] + art + [r[n]])
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * (n + m + 1)
    for r in T:
        for j in range(n):
            cost[j] -= r[j]
        cost[-1] -= r[-1]

    max_iter = 50 * (n + m + 1) ** 2 + 1000
    for _ in range(max_iter):
        enter = next((j for j in range(n + m) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        best_key = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                key = [T[i][-1] / a] + [T[i][n + k] / a for k in range(m)]
                if best_key is None or key < best_key:
                    best, best_key = i, key
        if best is None:
            raise LPError("phase-one objective unbounded; impossible for a feasibility LP")
        piv = T[best][enter]
        T[best] = [x / piv for x in T[best]]
        for i in range(m):
            if i != best and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [x - f * y for x, y in zip(T[i], T[best])]
        if cost[enter] != 0:
            f = cost[enter]
            cost = [x - f * y for x, y in zip(cost, T[best])]
        basis[best] = enter
    else:
        raise LPError("simplex iteration cap reached")
    return T, basis, -cost[-1], n


def feasible_nonneg(A: Sequence[Sequence], b: Sequence) -> Vector | None:
    """A point x >= 0 with A x = b, or None when none exists."""
    A = [[frac(x) for x in row] for row in A]
    b = [frac(x) for x in b]
    if not A:
        return ()
    n = len(A[0])
    if n == 0:
        return () if all(x == 0 for x in b) else None
    T, basis, infeas, n = _phase_one(A, b)
    if infeas != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    return tuple(x)


def farkas_certificate(A: Sequence[Sequence], b: Sequence) -> Vector | None:
    """y with y^T A >= 0 and y^T b = -1, proving A x = b has no x >= 0.

    Returns None when the system is feasible (no such y exists).
    """
    A = [[frac(x) for x in row] for row in A]
    b = [frac(x) for x in b]
    m = len(A)
    n = len(A[0]) if m else 0
    # unknowns: y+ (m), y- (m), s (n); constraints A^T y - s = 0, b.y = -1
    rows = []
    for j in range(n):
        rows.append([A[i][j] for i in range(m)] + [-A[i][j] for i in range(m)]
                    + [Fraction(-int(k == j)) for k in range(n)])
    rows.append(list(b) + [-x for x in b] + [Fraction(0)] * n)
    rhs = [Fraction(0)] * n + [Fraction(-1)]
    sol = feasible_nonneg(rows, rhs)
    if sol is None:
        return None
    return tuple(sol[i] - sol[m + i] for i in range(m))
