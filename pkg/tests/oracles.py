"""Independent brute-force oracles used to cross-check the solvers."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_DENOMINATOR = 64


@lru_cache(maxsize=8)
def belief_grid(k: int) -> tuple[np.ndarray, list[tuple[int, ...]], list[int]]:
    """All belief vectors over ``k`` rivals with denominator <= 64.

    Returns float weights (one row per belief, vertices included via the
    denominator-1 row set), plus the integer numerators and denominators
    for exact re-checking.
    """
    rows: list[tuple[int, ...]] = []
    dens: list[int] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            rows.append(tuple(prefix + [remaining]))
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    for d in range(1, MAX_DENOMINATOR + 1):
        start = len(rows)
        rec([], d, k)
        dens.extend([d] * (len(rows) - start))

    arr = np.array(rows, dtype=np.float64)
    arr /= np.array(dens, dtype=np.float64)[:, None]
    return arr, rows, dens


def grid_justifiable(cand_vec: list[int], alt_vecs: list[list[int]]) -> bool:
    """Belief-simplex search: does some grid belief make the candidate
    weakly optimal among the alternatives?

    Float arithmetic prefilters the grid; every near-hit is re-verified
    in exact rationals before the oracle says yes.
    """
    k = len(cand_vec)
    weights, rows, dens = belief_grid(k)
    cand = np.array(cand_vec, dtype=np.float64)
    alts = np.array(alt_vecs, dtype=np.float64)
    margin = weights @ cand - (weights @ alts.T).max(axis=1)
    hits = np.nonzero(margin >= -1e-9)[0]
    for idx in hits:
        raw, den = rows[idx], dens[idx]
        ev_cand = sum(Fraction(w, den) * v for w, v in zip(raw, cand_vec))
        if all(
            ev_cand >= sum(Fraction(w, den) * v for w, v in zip(raw, alt))
            for alt in alt_vecs
        ):
            return True
    return False
