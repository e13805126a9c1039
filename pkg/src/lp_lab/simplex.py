"""Exact linear programming by integer-pivoting simplex with Bland's rule.

The condensed tableau holds integers ``T`` and a common denominator ``D``;
the rational entry is ``T/D``.  After each pivot every entry is a minor of
the original integer data, so the update ``(T*p - col*row) // D`` is an exact
division (Edmonds/Bareiss).  No floating point is involved anywhere.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_X0 = -1  # phase-one auxiliary; smallest index so Bland lets it leave first


def to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, (float, np.floating)):
        return Fraction(float(v))
    return Fraction(v)


def integer_row(coeffs: Sequence, rhs=None) -> tuple[list[int], int | None, int]:
    """Scale a rational row by the lcm of its denominators.

    Returns the integer coefficients, integer rhs and the positive scale.
    """
    fr = [to_fraction(a) for a in coeffs]
    if rhs is not None:
        fr.append(to_fraction(rhs))
    scale = 1
    for f in fr:
        scale = scale * f.denominator // math.gcd(scale, f.denominator)
    ints = [int(f * scale) for f in fr]
    if rhs is None:
        return ints, None, scale
    return ints[:-1], ints[-1], scale


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, A: list[list[int]], b: list[int], c: list[int]):
        R, N = len(A), len(c)
        self.n_struct = N
        need_aux = any(bi < 0 for bi in b)
        cols = N + (1 if need_aux else 0)
        T = np.empty((R + 2, cols + 1), dtype=object)
        for i in range(R):
            T[i, :N] = A[i]
            if need_aux:
                T[i, N] = -1
            T[i, cols] = b[i]
        T[R, :N] = [-ci for ci in c]
        T[R + 1, :N] = 0
        if need_aux:
            T[R, N] = 0
            T[R + 1, N] = 1
        T[R, cols] = 0
        T[R + 1, cols] = 0
        self.T = T
        self.D = 1
        self.R = R
        self.basis = [N + i for i in range(R)]
        self.nonbasic = list(range(N)) + ([_X0] if need_aux else [])
        self.need_aux = need_aux
        self.pivots = 0

    def pivot(self, r: int, s: int) -> None:
        T, D = self.T, self.D
        p = T[r, s]
        col = T[:, s].copy()
        prow = T[r, :].copy()
        T = (T * p - np.multiply.outer(col, prow)) // D
        T[r, :] = prow
        T[:, s] = -col
        T[r, s] = D
        if p < 0:
            T = -T
            p = -p
        self.T, self.D = T, p
        self.basis[r], self.nonbasic[s] = self.nonbasic[s], self.basis[r]
        self.pivots += 1

    def _entering(self, obj_row: int) -> int | None:
        row = self.T[obj_row]
        best = None
        for j, var in enumerate(self.nonbasic):
            if var == _X0 and obj_row == self.R:
                continue
            if row[j] < 0 and (best is None or var < self.nonbasic[best]):
                best = j
        return best

    def _leaving(self, s: int) -> int | None:
        T, rhs = self.T, self.T.shape[1] - 1
        best = None
        for i in range(self.R):
            a = T[i, s]
            if a > 0:
                if best is None:
                    best = i
                    continue
                lhs = T[i, rhs] * T[best, s]
                cur = T[best, rhs] * a
                if lhs < cur or (lhs == cur and self.basis[i] < self.basis[best]):
                    best = i
        return best

    def run(self, obj_row: int, max_pivots: int) -> str:
        while True:
            if self.need_aux and obj_row == self.R + 1 and _X0 not in self.basis:
                return OPTIMAL
            s = self._entering(obj_row)
            if s is None:
                return OPTIMAL
            r = self._leaving(s)
            if r is None:
                return UNBOUNDED
            self.pivot(r, s)
            if self.pivots > max_pivots:
                raise NumericError(f"simplex exceeded {max_pivots} pivots")

    def phase_one(self, max_pivots: int) -> bool:
        T, rhs = self.T, self.T.shape[1] - 1
        aux_col = self.nonbasic.index(_X0)
        r = min(range(self.R), key=lambda i: (T[i, rhs], self.basis[i]))
        self.pivot(r, aux_col)
        self.run(self.R + 1, max_pivots)
        if _X0 in self.basis:
            r = self.basis.index(_X0)
            if self.T[r, -1] != 0:
                return False
            nz = [j for j in range(len(self.nonbasic)) if self.T[r, j] != 0]
            if nz:
                self.pivot(r, nz[0])
        if _X0 in self.nonbasic:
            j = self.nonbasic.index(_X0)
            self.T = np.delete(self.T, j, axis=1)
            del self.nonbasic[j]
        return True

    def solution(self) -> tuple[Fraction, tuple[Fraction, ...]]:
        rhs = self.T.shape[1] - 1
        x = [Fraction(0)] * self.n_struct
        for i, var in enumerate(self.basis):
            if 0 <= var < self.n_struct:
                x[var] = Fraction(int(self.T[i, rhs]), int(self.D))
        return Fraction(int(self.T[self.R, rhs]), int(self.D)), tuple(x)


def solve_canonical(c: Sequence[int], A: Sequence[Sequence[int]], b: Sequence[int], max_pivots: int = 100_000) -> LPResult:
    """Maximise ``c.x`` subject to ``A x <= b``, ``x >= 0``; integer data."""
    A = [list(map(int, row)) for row in A]
    b = [int(v) for v in b]
    c = [int(v) for v in c]
    if not A:
        if any(ci > 0 for ci in c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, Fraction(0), tuple(Fraction(0) for _ in c))
    tab = _Tableau(A, b, c)
    if tab.need_aux and not tab.phase_one(max_pivots):
        return LPResult(INFEASIBLE, pivots=tab.pivots)
    status = tab.run(tab.R, max_pivots)
    if status != OPTIMAL:
        return LPResult(status, pivots=tab.pivots)
    value, x = tab.solution()
    return LPResult(OPTIMAL, value, x, tab.pivots)


def linprog(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    bounds: Sequence[tuple] | None = None,
    maximize: bool = False,
) -> LPResult:
    """Exact LP with a scipy-like signature.

    ``bounds`` is a list of ``(lo, hi)`` pairs, ``None`` meaning unbounded;
    the default is ``(0, None)`` for every variable.
    """
    n = len(c)
    bounds = list(bounds) if bounds is not None else [(0, None)] * n
    if len(bounds) != n:
        raise ValueError("bounds length differs from number of variables")
    # x_k = shift_k + sum(sign * y_col) over the columns that represent it
    col_map: list[list[tuple[int, int]]] = []
    shift: list[Fraction] = []
    n_cols = 0
    extra_rows: list[tuple[dict[int, int], Fraction]] = []
    for lo, hi in bounds:
        if lo is None:
            col_map.append([(n_cols, 1), (n_cols + 1, -1)])
            shift.append(Fraction(0))
            n_cols += 2
            if hi is not None:
                extra_rows.append(({n_cols - 2: 1, n_cols - 1: -1}, to_fraction(hi)))
        else:
            lo = to_fraction(lo)
            col_map.append([(n_cols, 1)])
            shift.append(lo)
            if hi is not None:
                extra_rows.append(({n_cols: 1}, to_fraction(hi) - lo))
            n_cols += 1

    def transform(row: Sequence, rhs) -> tuple[list[Fraction], Fraction]:
        out = [Fraction(0)] * n_cols
        rhs = to_fraction(rhs)
        for k, a in enumerate(row):
            a = to_fraction(a)
            if a:
                rhs -= a * shift[k]
                for col, sgn in col_map[k]:
                    out[col] += sgn * a
        return out, rhs

    rows: list[tuple[list[Fraction], Fraction]] = []
    for row, rhs in zip(A_ub, b_ub):
        rows.append(transform(row, rhs))
    for row, rhs in zip(A_eq, b_eq):
        r, v = transform(row, rhs)
        rows.append((r, v))
        rows.append(([-a for a in r], -v))
    for coeffs, rhs in extra_rows:
        r = [Fraction(0)] * n_cols
        for col, a in coeffs.items():
            r[col] = Fraction(a)
        rows.append((r, rhs))

    sign = 1 if maximize else -1
    cc, const = transform([sign * to_fraction(v) for v in c], 0)
    const = -const  # objective constant from the shift
    c_int, _, c_scale = integer_row(cc)
    A_int, b_int = [], []
    for r, v in rows:
        ai, bi, _ = integer_row(r, v)
        A_int.append(ai)
        b_int.append(bi)
    res = solve_canonical(c_int, A_int, b_int)
    if not res.optimal:
        return LPResult(res.status, pivots=res.pivots)
    y = res.x
    x = tuple(shift[k] + sum(sgn * y[col] for col, sgn in col_map[k]) for k in range(n))
    value = sign * (res.value / c_scale + const)
    return LPResult(OPTIMAL, value, x, res.pivots)
