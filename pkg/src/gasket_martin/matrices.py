"""Transfer matrices A_n^(i), the matrix product for rho and its limit.

Row j of A_n^(i) is the exit distribution rho(i j^(n-1)) over the corners
of level n. The exit distribution of a word x = i_1 ... i_n is

    rho(x) = e_{i_n} A_2^(i_{n-1}) ... A_n^(i_1),

i.e. rho(i_1 w) = rho(w) A_n^(i_1) for |w| = n - 1.

Matrices are numpy arrays; exact mode uses object arrays of Fractions.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .kernel import ChainParams
from .recursion import HittingState, sequence, sequence_from
from .words import BoundaryWord, check_word, third

_lock = threading.Lock()
_states: dict = {}


def state(params: ChainParams, n: int) -> HittingState:
    """Cached recursion state at level n >= 2."""
    with _lock:
        seq = _states.setdefault(params, [])
        if not seq:
            seq.extend(sequence(params, 2))
        if len(seq) < n - 1:
            seq.extend(sequence_from(seq[-1], params, n))
        return seq[n - 2]


def _dtype(params: ChainParams):
    return object if params.exact else float


def pattern(i: int, alpha, beta, gamma, dtype=float) -> np.ndarray:
    """Matrix with row i = e_i and row j having alpha at i, beta at j, gamma at the third."""
    M = np.zeros((3, 3), dtype=dtype)
    if dtype is object:
        M[:] = Fraction(0)
    M[i - 1, i - 1] = alpha * 0 + 1
    for j in (1, 2, 3):
        if j == i:
            continue
        M[j - 1, i - 1] = alpha
        M[j - 1, j - 1] = beta
        M[j - 1, third(i, j) - 1] = gamma
    return M


def level_matrix(i: int, n: int, params: ChainParams) -> np.ndarray:
    if n < 2:
        raise ValueError("level matrices start at n = 2")
    s = state(params, n)
    return pattern(i, s.alpha, s.beta, s.gamma, _dtype(params))


@lru_cache(maxsize=3)
def _limit(i: int) -> np.ndarray:
    M = pattern(i, Fraction(2, 5), Fraction(2, 5), Fraction(1, 5), object)
    M.setflags(write=False)
    return M


def limit_matrix(i: int, exact: bool = True) -> np.ndarray:
    """The limit of A_n^(i) as n grows."""
    M = _limit(i)
    return M.copy() if exact else M.astype(float)


def unit(i: int, exact: bool) -> np.ndarray:
    e = np.array([Fraction(0)] * 3, dtype=object) if exact else np.zeros(3)
    e[i - 1] = 1
    return e


def rho_finite(x, params: ChainParams) -> np.ndarray:
    """Exit distribution of the word x over the corners of level |x|."""
    x = check_word(x)
    n = len(x)
    if n == 0:
        raise ValueError("rho_finite needs |x| >= 1")
    v = unit(x[-1], params.exact)
    for k in range(2, n + 1):
        v = v @ level_matrix(x[n - k], k, params)
    return v


def rho_level(n: int, params: ChainParams) -> np.ndarray:
    """rho(x) for every word of length n, rows in base-3 index order."""
    R = np.eye(3, dtype=float)
    if params.exact:
        R = np.array([[Fraction(int(i == j)) for j in range(3)] for i in range(3)], dtype=object)
    for k in range(2, n + 1):
        R = np.concatenate([R @ level_matrix(i, k, params) for i in (1, 2, 3)])
    return R


def spread(M: np.ndarray):
    """Largest column range: zero iff all rows coincide."""
    return max(max(M[:, j]) - min(M[:, j]) for j in range(M.shape[1]))


def t_finite(x: BoundaryWord, n: int, params: ChainParams) -> np.ndarray:
    """A_2^(i_n) ... A_{n+1}^(i_1) for the first n letters of x."""
    if n < 1:
        raise ValueError("n must be at least 1")
    letters = x.head(n)
    T = level_matrix(letters[n - 1], 2, params)
    for k in range(2, n + 1):
        T = T @ level_matrix(letters[n - k], k + 1, params)
    return T


def cut_matrix(x, m: int, params: ChainParams) -> np.ndarray:
    """Q_{n-1,m-1}^x = A_2^(i_{n-1}) ... A_{n-m+1}^(i_m) for a word x of length n.

    Row j is the exit distribution from x_1..x_{n-1} j over the outer
    vertices of the cell with stem x_1..x_{m-1}.
    """
    x = check_word(x)
    n = len(x)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= |x|")
    Q = np.eye(3) if not params.exact else np.array(
        [[Fraction(int(i == j)) for j in range(3)] for i in range(3)], dtype=object)
    for k in range(2, n - m + 2):
        Q = Q @ level_matrix(x[n - k], k, params)
    return Q


@dataclass(frozen=True)
class TInfinity:
    matrix: np.ndarray
    depth: int
    spread: float


def t_infinity(x: BoundaryWord, tol: float = 1e-12, max_depth: int = 100000) -> TInfinity:
    """Limit of A^(i_k) ... A^(i_1); grown until the row spread is below tol.

    Left multiplication by a stochastic matrix cannot increase the spread,
    so the stopping rule is monotone.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mats = {i: limit_matrix(i, exact=False) for i in (1, 2, 3)}
    T = mats[x.letter(0)]
    k = 1
    while spread(T) >= tol:
        if k >= max_depth:
            raise RuntimeError(f"no contraction below {tol} within depth {max_depth}")
        T = mats[x.letter(k)] @ T
        k += 1
    return TInfinity(T, k, float(spread(T)))


def _stationary(C) -> tuple:
    # solve pi (C - I) = 0, sum(pi) = 1 by Gaussian elimination over Fractions
    rows = [[C[j][i] - (1 if i == j else 0) for j in range(3)] + [Fraction(0)] for i in range(3)]
    rows[2] = [Fraction(1)] * 3 + [Fraction(1)]
    n = 3
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col] / rows[col][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return tuple(rows[i][3] / rows[i][i] for i in range(n))


def rho_boundary_exact(x: BoundaryWord) -> np.ndarray:
    """rho(x) in exact rationals.

    The tail product converges to the rank-one matrix whose rows are the
    stationary vector of the cycle matrix C = A^(c_L) ... A^(c_1); the
    prefix matrices are then applied on the right.
    """
    C = np.array([[Fraction(int(i == j)) for j in range(3)] for i in range(3)], dtype=object)
    for c in x.cycle:
        C = _limit(c) @ C
    v = np.array(_stationary(C), dtype=object)
    B = np.array([[Fraction(int(i == j)) for j in range(3)] for i in range(3)], dtype=object)
    for c in x.prefix:
        B = _limit(c) @ B
    return v @ B


def rho_boundary(x: BoundaryWord, tol: float = 1e-12) -> np.ndarray:
    """rho(x) as floats: the mean row of t_infinity (rows agree within tol)."""
    T = t_infinity(x, tol).matrix
    return T.mean(axis=0)


def as_float(M) -> np.ndarray:
    return np.asarray(M, dtype=float)
