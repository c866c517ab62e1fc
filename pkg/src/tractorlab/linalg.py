"""Exact linear algebra over Q, with a fast mod-p layer for rank bounds.

The mod-p results are used only in directions where they are rigorous:

* columns independent mod p  =>  columns independent over Q,
* nullity over Q  <=  nullity mod p (rank can only drop under reduction).

Dimension certificates in the Killing-tensor machinery combine both bounds
with an exact lower bound coming from explicitly constructed solutions, so a
matching sandwich pins the rational dimension exactly.  The exact Gaussian
elimination below is the fallback when the sandwich does not close.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

# largest prime below 2**31: products of two residues stay inside int64
DEFAULT_PRIME = 2147483647


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a matrix of Fractions by exact Gaussian elimination."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(m)):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        prow = [x / pv for x in m[rank]]
        m[rank] = prow
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], prow)]
        rank += 1
        if rank == min(len(m), ncols):
            break
    return rank


def exact_nullity(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    rows = [r for r in rows if any(r)]
    if not rows:
        return ncols
    return ncols - exact_rank(rows)


def exact_nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list:
    """Basis of the exact rational nullspace (list of coefficient vectors)."""
    m = [list(r) for r in rows if any(r)]
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(m)):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        m[rank] = [x / pv for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -m[r][fc]
        basis.append(vec)
    return basis


def _to_modp(rows: Sequence[Sequence[Fraction]], p: int) -> np.ndarray:
    out = np.zeros((len(rows), len(rows[0])), dtype=np.int64)
    inv_cache: dict[int, int] = {}
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if not v:
                continue
            num = v.numerator % p
            den = v.denominator % p
            if den == 0:
                raise ZeroDivisionError("denominator divisible by the prime")
            if den not in inv_cache:
                inv_cache[den] = pow(den, p - 2, p)
            out[i, j] = (num * inv_cache[den]) % p
    return out


def modp_rank_pivots(rows: Sequence[Sequence[Fraction]], p: int = DEFAULT_PRIME):
    """(rank mod p, pivot column indices).  Pivot columns are independent
    over Q as well; the rank is a lower bound for the rational rank."""
    if not rows:
        return 0, []
    m = _to_modp(rows, p)
    nrows, ncols = m.shape
    rank = 0
    pivots = []
    for col in range(ncols):
        if rank >= nrows:
            break
        sub = m[rank:, col]
        nz = np.nonzero(sub)[0]
        if nz.size == 0:
            continue
        r = rank + int(nz[0])
        if r != rank:
            m[[rank, r]] = m[[r, rank]]
        inv = pow(int(m[rank, col]), p - 2, p)
        m[rank] = (m[rank] * inv) % p
        colvals = m[:, col].copy()
        colvals[rank] = 0
        mask = colvals != 0
        if mask.any():
            m[mask] = (m[mask] - np.outer(colvals[mask], m[rank])) % p
        pivots.append(col)
        rank += 1
    return rank, pivots


def modp_nullity(rows: Sequence[Sequence[Fraction]], ncols: int, p: int = DEFAULT_PRIME) -> int:
    """Upper bound for the rational nullity (exact nullity <= this)."""
    rows = [r for r in rows if any(r)]
    if not rows:
        return ncols
    rank, _ = modp_rank_pivots(rows, p)
    return ncols - rank
