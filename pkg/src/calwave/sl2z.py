"""SL(2,Z) enumeration for the divergence stress demo.

The discrete group is handled separately from the continuous catalog: Haar
measure is counting measure and the only supported use is accumulating the
partial sums sum_{|gamma| <= N} |psi_hat(gamma^T xi)|^2 by word length.

Word length is measured through the standard continued-fraction
decomposition gamma = +/- T^{a_1} S T^{a_2} S ... with generators
S = [[0,-1],[1,0]] and T = [[1,1],[0,1]], counting |a_i| steps of T (or its
inverse) plus one step per S.  Enumeration runs over all matrices with a
given entry bound rather than over abstract words: the group grows
exponentially with word length, but entries bound the matrices that can
contribute to the sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

S = np.array([[0, -1], [1, 0]], dtype=np.int64)
T = np.array([[1, 1], [0, 1]], dtype=np.int64)


def word_length(mat: np.ndarray) -> int:
    """Length of the continued-fraction word for a matrix in SL(2,Z)."""
    a, b, c, d = int(mat[0, 0]), int(mat[0, 1]), int(mat[1, 0]), int(mat[1, 1])
    if a * d - b * c != 1:
        raise ValueError("matrix is not in SL(2,Z)")
    length = 0
    # Reduce with T^-q then S until the lower-left entry vanishes.
    while c != 0:
        q = round(a / c)
        a, b = a - q * c, b - q * d
        length += abs(q)
        # left-multiply by S^{-1}: (a,b;c,d) -> (c,d;-a,-b)
        a, b, c, d = c, d, -a, -b
        length += 1
    # Now the matrix is +/- T^b.
    if a == -1:
        length += 2  # -I = S^2
        b = -b
    length += abs(b)
    return length


def elements_by_entry_bound(entry_bound: int) -> tuple[np.ndarray, np.ndarray]:
    """All SL(2,Z) matrices with max |entry| <= bound, plus word lengths.

    Returns ``(mats, lengths)`` with ``mats`` of shape (n, 2, 2).  The first
    column (a, c) ranges over coprime pairs; (b, d) then runs over the
    lattice line of solutions of ad - bc = 1 within the bound.
    """
    E = int(entry_bound)
    mats = []
    for a in range(-E, E + 1):
        for c in range(-E, E + 1):
            if gcd(a, c) != 1:
                continue
            # particular solution of a*d0 - c*b0 = 1
            b0, d0 = _solve(a, c)
            # general solution: b = b0 + k*a, d = d0 + k*c
            ks = _k_range(b0, a, E) & _k_range(d0, c, E)
            for k in ks:
                b, d = b0 + k * a, d0 + k * c
                mats.append((a, b, c, d))
    arr = np.array(mats, dtype=np.int64).reshape(-1, 2, 2)
    lengths = np.array([word_length(m) for m in arr], dtype=np.int64)
    return arr, lengths


def _solve(a: int, c: int) -> tuple[int, int]:
    # extended euclid for a*d - c*b = 1
    old_r, r = a, c
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    # old_s*a + old_t*c == old_r == +/-1
    sign = 1 if old_r == 1 else -1
    d, b = sign * old_s, -sign * old_t
    assert a * d - c * b == 1
    return b, d

def _k_range(x0: int, step: int, E: int) -> set[int]:
    if step == 0:
        return set(range(-3 * E, 3 * E + 1)) if abs(x0) <= E else set()
    lo = -(E + x0) / step
    hi = (E - x0) / step
    if lo > hi:
        lo, hi = hi, lo
    import math

    return set(range(math.ceil(lo), math.floor(hi) + 1))


def bfs_elements(max_word_length: int) -> dict[tuple, int]:
    """Breadth-first ball in generators S, T, T^-1 (small radii only).

    Used to cross-check the word-length function; infeasible beyond
    radius ~12 because the group has exponential growth.
    """
    Tinv = np.array([[1, -1], [0, 1]], dtype=np.int64)
    gens = [S, T, Tinv]
    seen = {tuple(np.eye(2, dtype=np.int64).ravel()): 0}
    frontier = [np.eye(2, dtype=np.int64)]
    for depth in range(1, max_word_length + 1):
        nxt = []
        for m in frontier:
            for gmat in gens:
                prod = m @ gmat
                key = tuple(prod.ravel())
                if key not in seen:
                    seen[key] = depth
                    nxt.append(prod)
        frontier = nxt
    return seen


@dataclass
class Sl2zModel:
    """Discrete SL(2,Z) model: counting measure, enumeration by word length."""

    name: str = "sl2z_demo"
    d: int = 2
    entry_bound: int = 256

    def elements(self, max_word_length: int) -> tuple[np.ndarray, np.ndarray]:
        mats, lengths = elements_by_entry_bound(self.entry_bound)
        keep = lengths <= max_word_length
        return mats[keep], lengths[keep]


def partial_sums(
    psi_hat_sq,
    xis: np.ndarray,
    word_lengths: np.ndarray,
    entry_bound: int = 256,
) -> np.ndarray:
    """S_N(xi) = sum over gamma with word length <= N of psi_hat_sq(gamma^T xi).

    ``psi_hat_sq`` is a vectorized map from points (n, 2) to nonnegative
    reals.  Returns an array of shape (len(word_lengths), len(xis)).
    Truncation to the entry bound only ever undercounts the sums.
    """
    mats, lengths = elements_by_entry_bound(entry_bound)
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    contrib = np.empty((len(mats), len(xis)))
    for i, m in enumerate(mats):
        contrib[i] = psi_hat_sq(xis @ m.astype(float))
    word_lengths = np.asarray(word_lengths)
    out = np.empty((len(word_lengths), len(xis)))
    for j, N in enumerate(word_lengths):
        out[j] = contrib[lengths <= N].sum(axis=0)
    return out
