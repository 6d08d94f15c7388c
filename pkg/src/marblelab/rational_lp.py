"""Exact zero-sum matrix game solving over rationals.

The dominance checks in the solver need game values and optimal mixed
strategies without any floating-point tolerance, so this is a small
tableau simplex over :class:`fractions.Fraction` with Bland's rule
(termination guaranteed, speed is irrelevant at these sizes).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def solve_zero_sum(
    matrix: Sequence[Sequence[int | Fraction]],
) -> tuple[Fraction, list[Fraction], list[Fraction]]:
    """Value and optimal mixed strategies of a zero-sum matrix game.

    The row player maximizes ``x^T M y``, the column player minimizes.
    Returns ``(value, row_mix, col_mix)`` with exact rational entries.
    """
    m = len(matrix)
    if m == 0:
        raise ValueError("matrix needs at least one row")
    n = len(matrix[0])
    if n == 0 or any(len(row) != n for row in matrix):
        raise ValueError("matrix rows must be non-empty and equal length")

    rows = [[Fraction(v) for v in row] for row in matrix]
    # Shift all entries positive so the game value is > 0 and the
    # classic normalization (variables scaled by 1/value) applies.
    shift = Fraction(1) - min(min(row) for row in rows)
    shifted = [[v + shift for v in row] for row in rows]

    # Column player's scaled LP: max 1^T t  s.t.  M' t <= 1, t >= 0.
    # Objective optimum is 1/value'; duals give the row player's mix.
    obj, t_vals, duals = _simplex_max_leq(shifted, [Fraction(1)] * m)
    value_shifted = Fraction(1) / obj
    col_mix = [tj * value_shifted for tj in t_vals]
    row_mix = [ui * value_shifted for ui in duals]
    value = value_shifted - shift

    assert sum(col_mix) == 1 and sum(row_mix) == 1
    # The mixes must certify the value on both sides.
    for j in range(n):
        assert sum(row_mix[i] * rows[i][j] for i in range(m)) >= value
    for i in range(m):
        assert sum(col_mix[j] * rows[i][j] for j in range(n)) <= value
    return value, row_mix, col_mix


def _simplex_max_leq(
    a: list[list[Fraction]], b: list[Fraction]
) -> tuple[Fraction, list[Fraction], list[Fraction]]:
    """Solve max 1^T x s.t. a x <= b, x >= 0 with b >= 0.

    Returns (optimum, x, duals).  The origin is feasible, so a single
    primal phase with Bland's anti-cycling rule suffices.
    """
    m, n = len(a), len(a[0])
    # Tableau columns: n structural vars, m slacks, rhs.
    tab = [row[:] + [Fraction(0)] * m + [b[i]] for i, row in enumerate(a)]
    for i in range(m):
        tab[i][n + i] = Fraction(1)
    # Objective row holds z_j - c_j (maximization: optimal when all >= 0).
    zrow = [Fraction(-1)] * n + [Fraction(0)] * (m + 1)
    basis = list(range(n, n + m))

    while True:
        enter = next((j for j in range(n + m) if zrow[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            coeff = tab[i][enter]
            if coeff > 0:
                ratio = tab[i][-1] / coeff
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best, leave = ratio, i
        if leave is None:
            raise ArithmeticError("LP is unbounded; matrix shift failed")
        _pivot(tab, zrow, basis, leave, enter)

    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = tab[i][-1]
    duals = [zrow[n + i] for i in range(m)]
    return zrow[-1], x, duals


def _pivot(
    tab: list[list[Fraction]],
    zrow: list[Fraction],
    basis: list[int],
    row: int,
    col: int,
) -> None:
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    for i in range(len(tab)):
        if i != row and tab[i][col]:
            factor = tab[i][col]
            tab[i] = [v - factor * w for v, w in zip(tab[i], tab[row])]
    if zrow[col]:
        factor = zrow[col]
        for j in range(len(zrow)):
            zrow[j] -= factor * tab[row][j]
    basis[row] = col
