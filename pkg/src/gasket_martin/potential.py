"""Hitting probabilities, Green function and Martin kernel.

Within one level the chain only moves between words of that level until it
leaves through a corner i^n, after which it never comes back. All
quantities therefore reduce to the interior system of one level:

    (I - Q) g = b,

with Q the kernel restricted to interior words. Exact mode factors it with
a rational sparse LU; floating mode uses SuperLU. In both cases interior
words are eliminated in order of increasing final run length, which is a
nested dissection of the gasket graph and keeps fill-in small.

Across levels, exits are tracked on the corners with the 3x3 matrices

    M_m[j, j] = (1 + 2 a_m) / 3,   M_m[j, k] = (b_m + c_m) / 3   (k != j),

mapping the corner distribution of level m-1 to that of level m.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .graph import corner_index, word_index
from .kernel import ChainParams, kernel_probs, level_targets, run_lengths, transition
from .matrices import rho_boundary_exact, rho_finite, state
from .words import BoundaryWord, check_word

EXACT_MAX_LEVEL = 6
FLOAT_MAX_LEVEL = 13


class _RationalLU:
    """LU factorization without pivoting for a structurally symmetric matrix.

    ``rows[k]`` maps column -> value; pivots are taken in index order.
    Works for any field type (Fractions here).
    """

    def __init__(self, rows: list[dict]):
        N = len(rows)
        A = [dict(r) for r in rows]
        self.piv = [None] * N
        self.U = [None] * N
        self.L = [None] * N
        for k in range(N):
            row = A[k]
            piv = row.pop(k)
            self.piv[k] = piv
            self.U[k] = row
            lk = []
            for i in row:
                Ai = A[i]
                aik = Ai.pop(k, 0)
                if aik == 0:
                    continue
                m = aik / piv
                lk.append((i, m))
                for j, v in row.items():
                    Ai[j] = Ai.get(j, 0) - m * v
            self.L[k] = lk
            A[k] = None

    def solve(self, b: list) -> list:
        y = list(b)
        for k, lk in enumerate(self.L):
            yk = y[k]
            if yk:
                for i, m in lk:
                    y[i] -= m * yk
        for k in range(len(y) - 1, -1, -1):
            s = y[k]
            for j, v in self.U[k].items():
                s -= v * y[j]
            y[k] = s / self.piv[k]
        return y

    def solve_transpose(self, b: list) -> list:
        z = list(b)
        for k in range(len(z)):
            z[k] = zk = z[k] / self.piv[k]
            if zk:
                for j, v in self.U[k].items():
                    z[j] -= v * zk
        for k in range(len(z) - 1, -1, -1):
            s = z[k]
            for i, m in self.L[k]:
                s -= m * z[i]
            z[k] = s
        return z


class LevelSystem:
    """The interior system of level n together with its exits.

    ``pos[u]`` is the position of word index u among interior unknowns
    (-1 for corners). ``R`` holds the one-step probabilities from interior
    words into the corners.
    """

    def __init__(self, params: ChainParams, n: int, kernel: str = "standard"):
        cap = EXACT_MAX_LEVEL if params.exact else FLOAT_MAX_LEVEL
        if not 1 <= n <= cap:
            raise ValueError(f"level {n} outside [1, {cap}] for {params.mode} mode")
        self.params, self.n, self.kernel = params, n, kernel
        N = 3**n
        targets, corner = level_targets(n)
        r = run_lengths(n)
        interior = np.flatnonzero(~corner)
        self.order = interior[np.lexsort((interior, r[interior]))]
        self.pos = -np.ones(N, dtype=np.int64)
        self.pos[self.order] = np.arange(len(self.order))
        self.corners = [corner_index(i, n) for i in (1, 2, 3)]
        probs = kernel_probs(params, kernel)
        M = len(self.order)
        self.size = M
        if params.exact:
            zero = Fraction(0)
            rows = [{k: Fraction(1)} for k in range(M)]
            R = [[zero, zero, zero] for _ in range(M)]
            for k, u in enumerate(self.order):
                for c, pr in enumerate(probs):
                    t = int(targets[u, c])
                    if self.pos[t] >= 0:
                        col = int(self.pos[t])
                        rows[k][col] = rows[k].get(col, zero) - pr
                    else:
                        R[k][self.corners.index(t)] += pr
            self.R = R
            self._lu = _RationalLU(rows) if M else None
        else:
            pr = [float(x) for x in probs]
            ii, jj, vv = [np.arange(M)], [np.arange(M)], [np.ones(M)]
            R = np.zeros((M, 3))
            for c in range(3):
                tg = targets[self.order, c] if M else np.zeros(0, dtype=np.int64)
                inner = self.pos[tg] >= 0
                ii.append(np.flatnonzero(inner))
                jj.append(self.pos[tg[inner]])
                vv.append(np.full(inner.sum(), -pr[c]))
                for i, cu in enumerate(self.corners):
                    R[tg == cu, i] += pr[c]
            self.R = R
            if M:
                A = sp.csc_matrix((np.concatenate(vv), (np.concatenate(ii), np.concatenate(jj))),
                                  shape=(M, M))
                self._lu = sla.splu(A, permc_spec="NATURAL")
            else:
                self._lu = None
        self._cols: dict = {}
        self._absorption = None
        self._lock = threading.Lock()

    # -- raw solves over interior unknowns
    def solve(self, b):
        if self.params.exact:
            return self._lu.solve(list(b))
        return self._lu.solve(np.asarray(b, dtype=float))

    def solve_transpose(self, b):
        if self.params.exact:
            return self._lu.solve_transpose(list(b))
        return self._lu.solve(np.asarray(b, dtype=float), trans="T")

    def _zeros(self, m):
        if self.params.exact:
            return [Fraction(0)] * m
        return np.zeros(m)

    def _full(self, interior_vals, corner_vals):
        """Scatter interior values and corner values into a level-indexed vector."""
        N = 3**self.n
        out = np.empty(N, dtype=object) if self.params.exact else np.empty(N)
        if self.size:
            if self.params.exact:
                for k, u in enumerate(self.order):
                    out[u] = interior_vals[k]
            else:
                out[self.order] = interior_vals
        for cu, v in zip(self.corners, corner_vals):
            out[cu] = v
        return out

    def absorption(self) -> np.ndarray:
        """rho over the three corners for every word of the level, shape (3^n, 3)."""
        with self._lock:
            if self._absorption is None:
                N = 3**self.n
                one, zero = self.params.num(1), self.params.num(0)
                cols = []
                for i in range(3):
                    if self.size:
                        rhs = [row[i] for row in self.R] if self.params.exact else self.R[:, i]
                        g = self.solve(rhs)
                    else:
                        g = []
                    cols.append(self._full(g, [one if k == i else zero for k in range(3)]))
                self._absorption = np.stack(cols, axis=1)
                assert self._absorption.shape == (N, 3)
            return self._absorption

    def green_column(self, y: int) -> np.ndarray:
        """G(s, y) for every word s of the level (word index y)."""
        with self._lock:
            col = self._cols.get(y)
        if col is not None:
            return col
        zero = self.params.num(0)
        if self.pos[y] < 0:
            i = self.corners.index(y)
            col = self.absorption()[:, i]
        else:
            b = self._zeros(self.size)
            b[int(self.pos[y])] = self.params.num(1)
            col = self._full(self.solve(b), [zero] * 3)
        with self._lock:
            self._cols[y] = col
        return col

    def green_row(self, s: int) -> np.ndarray:
        """G(s, z) for every word z of the level (word index s)."""
        one, zero = self.params.num(1), self.params.num(0)
        if self.pos[s] < 0:
            row = self._full(self._zeros(self.size), [one if c == s else zero for c in self.corners])
            return row
        b = self._zeros(self.size)
        b[int(self.pos[s])] = one
        g = self.solve_transpose(b)
        if self.params.exact:
            to_corner = [sum((g[k] * self.R[k][i] for k in range(self.size)), zero) for i in range(3)]
        else:
            to_corner = list(np.asarray(g) @ self.R)
        return self._full(g, to_corner)

    def green_diagonal(self, block: int = 256) -> np.ndarray:
        """G(z, z) for every word z of the level (1 at the corners)."""
        if self.params.exact:
            out = np.empty(3**self.n, dtype=object)
            for u in range(3**self.n):
                out[u] = self.green_column(u)[u]
            return out
        d = np.empty(self.size)
        for start in range(0, self.size, block):
            stop = min(start + block, self.size)
            E = np.zeros((self.size, stop - start))
            E[np.arange(start, stop), np.arange(stop - start)] = 1.0
            X = self._lu.solve(E)
            d[start:stop] = X[np.arange(start, stop), np.arange(stop - start)]
        return self._full(d, [1.0, 1.0, 1.0])


_systems: dict = {}
_systems_lock = threading.Lock()


def level_system(params: ChainParams, n: int, kernel: str = "standard") -> LevelSystem:
    """Cached :class:`LevelSystem` (a pure memo keyed by params, level, kernel)."""
    key = (params, n, kernel)
    with _systems_lock:
        sysm = _systems.get(key)
    if sysm is None:
        sysm = LevelSystem(params, n, kernel)
        with _systems_lock:
            sysm = _systems.setdefault(key, sysm)
    return sysm


def clear_cache() -> None:
    with _systems_lock:
        _systems.clear()


def absorption_probabilities(params: ChainParams, n: int) -> np.ndarray:
    """Linear-solve exit distributions over V^n for all words of length n."""
    return level_system(params, n).absorption()


# -- exits across levels -----------------------------------------------------

def level_transfer(m: int, params: ChainParams) -> np.ndarray:
    """M_m: corner distribution at level m-1 -> corner distribution at level m (m >= 2)."""
    s = state(params, m)
    d = (1 + 2 * s.a) / 3
    o = (s.b + s.c) / 3
    M = np.array([[d, o, o], [o, d, o], [o, o, d]], dtype=object if params.exact else float)
    return M


def exit_distribution(params: ChainParams, x, level: int) -> np.ndarray:
    """rho_{x, i^level} for i = 1, 2, 3 (requires level >= max(|x|, 1))."""
    x = check_word(x)
    m = len(x)
    if level < max(m, 1):
        raise ValueError("level must be at least max(|x|, 1)")
    if m == 0:
        third = params.num(Fraction(1, 3))
        v = np.array([third] * 3, dtype=object if params.exact else float)
        m = 1
    else:
        v = rho_finite(x, params)
    for k in range(m + 1, level + 1):
        if not params.exact and state(params, k).b < 1e-18:
            break  # M_k and all later transfers are the identity in binary64
        v = v @ level_transfer(k, params)
    return v


# -- hitting probabilities and Green function ------------------------------

def _same_level_ratio(params, x, y):
    sysm = level_system(params, len(y))
    col = sysm.green_column(word_index(y))
    return col[word_index(x)] / col[word_index(y)]


def hitting_probability(params: ChainParams, x, y):
    """rho_{x,y}: probability that the chain started at x ever visits y."""
    x, y = check_word(x), check_word(y)
    if x == y:
        return params.num(1)
    if len(y) < len(x):
        return params.num(0)
    if len(y) == len(x):
        return _same_level_ratio(params, x, y)
    n = len(y)
    # exit through a corner of level n-1, then one uniform step down
    if n == 1:
        return params.num(Fraction(1, 3))
    dist = exit_distribution(params, x, n - 1)
    sysm = level_system(params, n)
    col = sysm.green_column(word_index(y))
    gyy = col[word_index(y)]
    third = params.num(Fraction(1, 3))
    total = params.num(0)
    for i in (1, 2, 3):
        base = 3 * corner_index(i, n - 1)
        total += dist[i - 1] * third * sum((col[base + k] for k in range(3)), params.num(0)) / gyy
    return total


def return_probability(params: ChainParams, y):
    """First-return probability: one step from y, then a first passage back to y."""
    y = check_word(y)
    n = len(y)
    if n == 0 or len(set(y)) == 1:
        return params.num(0)
    sysm = level_system(params, n)
    col = sysm.green_column(word_index(y))
    gyy = col[word_index(y)]
    return sum((pr * col[word_index(v)] / gyy for v, pr in transition(params, y).targets),
               params.num(0))


@dataclass(frozen=True)
class GreenValue:
    value: object
    exact: bool

    def __float__(self):
        return float(self.value)


def green(params: ChainParams, x, y) -> GreenValue:
    """G(x, y) = rho_{x,y} / (1 - first-return probability of y)."""
    rho = hitting_probability(params, x, y)
    ret = return_probability(params, y)
    return GreenValue(rho / (1 - ret), params.exact)


def green_finite(params: ChainParams, x, y):
    """G(x, y) for |x| = |y| straight from the column solve."""
    x, y = check_word(x), check_word(y)
    if len(x) != len(y):
        raise ValueError("words must have equal length")
    return level_system(params, len(y)).green_column(word_index(y))[word_index(x)]


def green_vector(params: ChainParams, stem, y) -> np.ndarray:
    """(G(stem j^(n-|stem|), y))_j for the outer vertices of the cell with this stem."""
    stem, y = check_word(stem), check_word(y)
    n = len(y)
    col = level_system(params, n).green_column(word_index(y))
    r = n - len(stem)
    return np.array([col[word_index(stem + (j,) * r)] for j in (1, 2, 3)],
                    dtype=object if params.exact else float)


def bound_inverse(params: ChainParams, z):
    """C_z^{-1} = rho_{root, z}."""
    return hitting_probability(params, (), z)


@dataclass(frozen=True)
class KernelValue:
    value: object
    bound: object  # C_x
    other: object  # value of the second quotient form


def martin_kernel(params: ChainParams, x, y, rtol: float = 1e-9) -> KernelValue:
    """K(x, y) computed as rho_{x,y}/rho_{root,y} and as G(x,y)/G(root,y)."""
    x, y = check_word(x), check_word(y)
    k1 = hitting_probability(params, x, y) / hitting_probability(params, (), y)
    k2 = green(params, x, y).value / green(params, (), y).value
    if params.exact:
        if k1 != k2:
            raise ArithmeticError("kernel quotient forms disagree")
    elif abs(k1 - k2) > rtol * max(1.0, abs(k1)):
        raise ArithmeticError("kernel quotient forms disagree")
    return KernelValue(k1, 1 / bound_inverse(params, x), k2)


def root_hitting_level(params: ChainParams, n: int) -> np.ndarray:
    """rho_{root, z} for every z of length n, the inverse bounds C_z^{-1}."""
    if n == 0:
        return np.array([params.num(1)], dtype=object if params.exact else float)
    if n == 1:
        return np.array([params.num(Fraction(1, 3))] * 3, dtype=object if params.exact else float)
    sysm = level_system(params, n)
    # the root reaches each corner of level n-1 with probability 1/3
    acc = None
    for i in (1, 2, 3):
        base = 3 * corner_index(i, n - 1)
        for k in range(3):
            row = sysm.green_row(base + k)
            acc = row if acc is None else acc + row
    diag = sysm.green_diagonal()
    return acc / (9 * diag)


# -- boundary limits ---------------------------------------------------------

def head(x: BoundaryWord) -> tuple[int, int | None]:
    """(i, t) with x = i^t i_{t+1} ..., i_{t+1} != i; t is None for i^inf."""
    i = x.letter(0)
    if x.prefix == () and x.cycle == (i,):
        return i, None
    t = 1
    while x.letter(t) == i:
        t += 1
    return i, t


@dataclass(frozen=True)
class GreenLimit:
    value: object
    degenerate: bool  # x is a constant word i^inf


def green_boundary_limit(params: ChainParams, j: int, x: BoundaryWord) -> GreenLimit:
    """Limit of G(j^(n-1), x|_n) as given by the closed formula with c = 1/(15p).

    For a constant word i^inf the limit is computed directly:
    G(i^(n-1), i^n) = (1 + 2 a_n)/3 -> 1 and G(j^(n-1), i^n) = (b_n + c_n)/3 -> 0.
    """
    i, t = head(x)
    one = params.num(1)
    if t is None:
        return GreenLimit(one if j == i else params.num(0), True)
    c = one / (15 * params.p)
    rho = rho_boundary_exact(x.shift())
    if not params.exact:
        rho = rho.astype(float)
    if j == i:
        return GreenLimit(c * (5 * rho[i - 1] + 2 * (1 - rho[i - 1])), False)
    k = 6 - i - j
    return GreenLimit(c * (2 * rho[j - 1] + rho[k - 1]), False)


def green_corner_values(params: ChainParams, x: BoundaryWord, n: int) -> np.ndarray:
    """G(j^(n-1), x|_n) for j = 1, 2, 3 by a single level-n column solve."""
    y = x.head(n)
    col = level_system(params, n).green_column(word_index(y))
    out = []
    for j in (1, 2, 3):
        base = 3 * corner_index(j, n - 1)
        out.append(sum((col[base + k] for k in range(3)), params.num(0)) / 3)
    return np.array(out, dtype=object if params.exact else float)


def kernel_at_boundary(params: ChainParams, z, x: BoundaryWord, tol: float = 1e-10,
                       max_level: int = 4096) -> float:
    """K(z, x) for a boundary word x, by doubling the level until stable.

    Uses K(z, y) = sum_i rho_{z,i^(n-1)} G(i^(n-1), y) / (sum_i G(i^(n-1), y) / 3)
    with the Green limits substituted for G(i^(n-1), x|_n).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = check_word(z)
    if not z:
        return 1.0
    fp = params.as_float()
    g = np.array([float(green_boundary_limit(params, j, x).value) for j in (1, 2, 3)])
    g = g / (g.sum() / 3)
    n = max(len(z) + 1, 4)
    prev = float(exit_distribution(fp, z, n - 1) @ g)
    while n < max_level:
        n *= 2
        cur = float(exit_distribution(fp, z, n - 1) @ g)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise RuntimeError(f"kernel not Cauchy within level {max_level}")
