"""Martin metric, boundary points, and the harmonic functions h_i.

h_i(z) = K(z, i^inf) equals 3 times the probability that the chain started
at z leaves every sufficiently deep level through the corner i^n. On the
boundary, h_i(x) = 3 rho_i(x), which gives the 1/5-2/5 rule and makes the
boundary values independent of p.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import corner_index, word_index
from .kernel import ChainParams
from .matrices import rho_boundary_exact, rho_finite, rho_level, state
from .potential import (hitting_probability, kernel_at_boundary,
                        level_system, level_transfer, root_hitting_level)
from .words import BoundaryWord, constant, format_boundary, parse_boundary, pi_partner

CATALOG_VERSION = 1
CATALOG_HEADER = f"# gasket boundary catalog v{CATALOG_VERSION}"


@dataclass(frozen=True)
class MetricParams:
    r: float = 0.5
    N: int = 8
    kernel_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        if self.N < 1:
            raise ValueError("N must be at least 1")


def _lex_less(x: BoundaryWord, y: BoundaryWord) -> bool:
    bound = max(len(x.prefix), len(y.prefix)) + math.lcm(len(x.cycle), len(y.cycle))
    for k in range(bound):
        a, b = x.letter(k), y.letter(k)
        if a != b:
            return a < b
    return False


@dataclass(frozen=True)
class BoundaryPoint:
    """A pi-class, represented by its lexicographically smallest member."""

    representative: BoundaryWord

    @classmethod
    def of(cls, w: BoundaryWord) -> "BoundaryPoint":
        other = pi_partner(w)
        if other is not None and _lex_less(other, w):
            w = other
        return cls(w)

    @property
    def members(self) -> tuple[BoundaryWord, ...]:
        other = pi_partner(self.representative)
        return (self.representative,) if other is None else (self.representative, other)

    def __str__(self) -> str:
        return "[" + format_boundary(self.representative) + "]"


@dataclass(frozen=True)
class Classification:
    kind: str  # "interior" or "boundary"
    point: object


def cauchy_class(seq) -> Classification:
    """Classify a Cauchy sequence: a constant finite word or the prefixes of a boundary word."""
    if isinstance(seq, BoundaryWord):
        return Classification("boundary", BoundaryPoint.of(seq))
    if isinstance(seq, tuple) and all(c in (1, 2, 3) for c in seq):
        return Classification("interior", seq)
    raise ValueError("unsupported sequence shape")


def minimal_boundary() -> frozenset:
    return frozenset(BoundaryPoint.of(constant(i)) for i in (1, 2, 3))


def catalog() -> list[BoundaryWord]:
    """Fixed sample of boundary words: omega k^inf with |omega| <= 2 and (ij)^inf."""
    seen = []
    words = [()] + [(a,) for a in (1, 2, 3)] + [(a, b) for a in (1, 2, 3) for b in (1, 2, 3)]
    for omega in words:
        for k in (1, 2, 3):
            w = BoundaryWord.make(omega, (k,))
            if w not in seen:
                seen.append(w)
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i != j:
                w = BoundaryWord.make((), (i, j))
                if w not in seen:
                    seen.append(w)
    return seen


def write_catalog(path) -> None:
    lines = [CATALOG_HEADER] + [format_boundary(w) for w in catalog()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_catalog(path) -> list[BoundaryWord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != CATALOG_HEADER:
        raise ValueError("unknown catalog format")
    return [parse_boundary(s) for s in lines[1:] if s.strip() and not s.startswith("#")]


# -- harmonic functions ------------------------------------------------------

_cache: dict = {}
_cache_lock = threading.Lock()


def _memo(key, fn):
    with _cache_lock:
        if key in _cache:
            return _cache[key]
    val = fn()
    with _cache_lock:
        _cache.setdefault(key, val)
    return val


def transfer_tail(params: ChainParams, n: int) -> np.ndarray:
    """prod_{m > n} M_m in floating point (stops once M_m is the identity)."""
    fp = params.as_float()

    def build():
        T = np.eye(3)
        m = max(n + 1, 2)
        while state(fp, m).b >= 1e-18:
            T = T @ level_transfer(m, fp)
            m += 1
        return T
    return _memo(("tail", fp, n), build)


def harmonic_level(params: ChainParams, n: int) -> np.ndarray:
    """h_i(z) for all words z of length n, shape (3^n, 3)."""
    fp = params.as_float()
    if n == 0:
        return np.ones((1, 3))
    return _memo(("H", fp, n), lambda: 3 * rho_level(n, fp) @ transfer_tail(fp, n))


def harmonic_h(params: ChainParams, i: int, x, tol: float = 1e-10) -> float:
    """h_i(x) = K(x, i^inf)."""
    x = tuple(x)
    return _memo(("h", params.as_float(), i, x, tol),
                 lambda: kernel_at_boundary(params, x, constant(i), tol))


def harmonic_prefix(params: ChainParams, i: int, x) -> float:
    """h_i(x) for a finite word as 3 rho(x) prod_{m>|x|} M_m (the limit kernel_at_boundary approaches)."""
    fp = params.as_float()
    x = tuple(x)
    if not x:
        return 1.0
    return float(3 * (rho_finite(x, fp) @ transfer_tail(fp, len(x)))[i - 1])


def harmonic_at_boundary(params: ChainParams, i: int, x: BoundaryWord, tol: float = 1e-10,
                         max_level: int = 512) -> float:
    """lim h_i(x|_n), doubling n until successive values differ by less than tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = len(x.prefix) + len(x.cycle) + 2
    prev = harmonic_prefix(params, i, x.head(n))
    while n < max_level:
        n *= 2
        cur = harmonic_prefix(params, i, x.head(n))
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise RuntimeError(f"h_{i} not Cauchy along prefixes up to level {max_level}")


def harmonic_from_boundary(params: ChainParams, weights, x, tol: float = 1e-10) -> float:
    """sum_i w_i h_i(x): the harmonic function of an atomic measure on the minimal boundary."""
    w = [float(v) for v in weights]
    if len(w) != 3 or min(w) < 0:
        raise ValueError("need three non-negative weights")
    return sum(wi * harmonic_h(params, i, x, tol) for i, wi in zip((1, 2, 3), w) if wi)


# -- Martin metric -------------------------------------------------------------

def kernel_level(params: ChainParams, n: int, target) -> np.ndarray:
    """K(z, target) for all z of length n (floating point).

    ``target`` is a finite word or a boundary word.
    """
    fp = params.as_float()
    if isinstance(target, BoundaryWord):
        rho = rho_boundary_exact(target).astype(float)
        return harmonic_level(fp, n) @ rho
    y = tuple(target)
    m = len(y)
    if n == 0:
        return np.ones(1)
    if n > m:
        return np.zeros(3**n)
    denom = float(hitting_probability(fp, (), y))
    sysm = level_system(fp, m)
    col = sysm.green_column(word_index(y))
    rho_y = col / col[word_index(y)]
    if n == m:
        return rho_y / denom
    # exits through the corners of level m-1, then one uniform step down
    w = np.array([rho_y[3 * corner_index(i, m - 1): 3 * corner_index(i, m - 1) + 3].mean()
                  for i in (1, 2, 3)])
    E = rho_level(n, fp)
    for k in range(n + 1, m):
        E = E @ level_transfer(k, fp)
    return E @ w / denom


def root_level(params: ChainParams, n: int) -> np.ndarray:
    fp = params.as_float()
    return _memo(("root", fp, n), lambda: root_hitting_level(fp, n))


def _depth(w) -> float:
    return math.inf if isinstance(w, BoundaryWord) else len(w)


def metric_terms(params: ChainParams, mp: MetricParams, x, y) -> list[float]:
    """sup_z C_z^{-1} |K(z,x) - K(z,y)| for n = 0..N."""
    return [float(np.max(root_level(params, n)
                         * np.abs(kernel_level(params, n, x) - kernel_level(params, n, y))))
            for n in range(mp.N + 1)]


@dataclass(frozen=True)
class MetricValue:
    value: float
    error_bound: float
    params: dict

    def to_dict(self) -> dict:
        return {"value": self.value, "error_bound": self.error_bound, "params": self.params}


def martin_metric(params: ChainParams, mp: MetricParams, x, y) -> MetricValue:
    """Truncated Martin distance with a rigorous tail bound.

    Each summand is at most r^n, so dropping n > N costs at most
    r^(N+1)/(1-r); kernel errors add 2 * kernel_tol / (1 - r).
    """
    r = mp.r
    rx = 0.0 if _depth(x) == math.inf else r ** _depth(x)
    ry = 0.0 if _depth(y) == math.inf else r ** _depth(y)
    meta = {"p": str(params.p), "r": r, "N": mp.N, "kernel_tol": mp.kernel_tol}
    if x == y:
        return MetricValue(0.0, 0.0, meta)
    terms = metric_terms(params, mp, x, y)
    value = abs(rx - ry) + sum(r**n * t for n, t in enumerate(terms))
    bound = r ** (mp.N + 1) / (1 - r) + 2 * mp.kernel_tol / (1 - r)
    return MetricValue(value, bound, meta)
