"""Finite and eventually periodic words over the alphabet {1, 2, 3}.

Finite words are plain tuples of ints. Infinite words are restricted to
eventually periodic ones, ``prefix + cycle^inf``, stored in a canonical
form (primitive cycle, shortest prefix) so that equality and hashing are
decidable.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

ALPHABET = (1, 2, 3)
SQRT3 = math.sqrt(3.0)

Word = tuple  # tuple[int, ...]

# corners of the gasket in (x, y / sqrt(3)) coordinates, exact
_Q = {
    1: (Fraction(1, 2), Fraction(1, 2)),
    2: (Fraction(0), Fraction(0)),
    3: (Fraction(1), Fraction(0)),
}


def check_word(w: Iterable[int]) -> Word:
    w = tuple(int(c) for c in w)
    for c in w:
        if c not in ALPHABET:
            raise ValueError(f"letter {c!r} not in {{1,2,3}}")
    return w


def third(i: int, j: int) -> int:
    """The letter of {1,2,3} different from both i and j (i != j)."""
    return 6 - i - j


def _primitive(cycle: Word) -> Word:
    L = len(cycle)
    for d in range(1, L + 1):
        if L % d == 0 and cycle[:d] * (L // d) == cycle:
            return cycle[:d]
    return cycle


@dataclass(frozen=True)
class BoundaryWord:
    """Eventually periodic infinite word ``prefix cycle cycle ...``.

    Instances are always canonical; build them with :meth:`make`.
    """

    prefix: Word
    cycle: Word

    @classmethod
    def make(cls, prefix: Sequence[int], cycle: Sequence[int]) -> "BoundaryWord":
        prefix = check_word(prefix)
        cycle = check_word(cycle)
        if not cycle:
            raise ValueError("cycle must be nonempty")
        cycle = _primitive(cycle)
        # absorb trailing prefix letters into the cycle by rotation
        while prefix and prefix[-1] == cycle[-1]:
            prefix = prefix[:-1]
            cycle = cycle[-1:] + cycle[:-1]
        return cls(prefix, cycle)

    def letter(self, k: int) -> int:
        """0-based k-th letter."""
        m = len(self.prefix)
        if k < m:
            return self.prefix[k]
        return self.cycle[(k - m) % len(self.cycle)]

    def head(self, n: int) -> Word:
        """The finite prefix x|_n of length n."""
        return tuple(self.letter(k) for k in range(n))

    def shift(self) -> "BoundaryWord":
        return shift(self)

    def __str__(self) -> str:
        return format_boundary(self)


def shift(w: BoundaryWord) -> BoundaryWord:
    """Left shift: drop the first letter."""
    if w.prefix:
        return BoundaryWord.make(w.prefix[1:], w.cycle)
    return BoundaryWord(w.prefix, w.cycle[1:] + w.cycle[:1])


def constant(i: int) -> BoundaryWord:
    """The word i^inf."""
    return BoundaryWord.make((), (i,))


def relabel(w, tau):
    """Apply a letter permutation ``tau`` (mapping letter -> letter)."""
    if isinstance(w, BoundaryWord):
        return BoundaryWord.make([tau[c] for c in w.prefix], [tau[c] for c in w.cycle])
    return tuple(tau[c] for c in w)


# -- projection onto the gasket ---------------------------------------------

def _apply_prefix(word: Word, z):
    # S_word(z) = z / 2^m + sum_t q_{w_t} / 2^t
    x, y = z
    for c in reversed(word):
        qx, qy = _Q[c]
        x, y = (x + qx) / 2, (y + qy) / 2
    return x, y


def project_exact(w: BoundaryWord) -> tuple[Fraction, Fraction]:
    """Exact projection in (x, y/sqrt(3)) coordinates."""
    L = len(w.cycle)
    b = _apply_prefix(w.cycle, (Fraction(0), Fraction(0)))
    scale = 1 - Fraction(1, 2**L)
    fixed = (b[0] / scale, b[1] / scale)
    return _apply_prefix(w.prefix, fixed)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def dist(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def project(w: BoundaryWord, tol: float = 1e-12) -> Point2D:
    """Standard projection pi(w) onto the gasket.

    Eventually periodic words are handled exactly through the fixed point of
    the affine cycle map, so ``tol`` only bounds the final float rounding.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, y = project_exact(w)
    return Point2D(float(x), float(y) * SQRT3)


def vertex_point(omega: Sequence[int], i: int) -> Point2D:
    """Gasket vertex S_omega(q_i)."""
    x, y = _apply_prefix(check_word(omega), _Q[i])
    return Point2D(float(x), float(y) * SQRT3)


# -- comparisons -----------------------------------------------------------

def common_prefix_length(x: BoundaryWord, y: BoundaryWord) -> float:
    """Length of the longest common prefix (inf when x == y)."""
    if x == y:
        return math.inf
    # eventually periodic words agreeing this far agree forever
    bound = max(len(x.prefix), len(y.prefix)) + math.lcm(len(x.cycle), len(y.cycle))
    for k in range(bound):
        if x.letter(k) != y.letter(k):
            return k
    raise AssertionError("non-canonical words")  # pragma: no cover


def d_metric(x: BoundaryWord, y: BoundaryWord) -> float:
    """Ultrametric 2^-(common prefix length)."""
    m = common_prefix_length(x, y)
    return 0.0 if m == math.inf else 2.0 ** (-m)


def _tail_pair(w: BoundaryWord, m: int):
    # returns (l, k) if shift^m(w) = l k^inf, else None
    for _ in range(m):
        w = shift(w)
    if len(w.prefix) == 1 and len(w.cycle) == 1:
        return w.prefix[0], w.cycle[0]
    return None


def pi_partner(w: BoundaryWord) -> BoundaryWord | None:
    """The other member of the pi-class of ``w``, if the class has two."""
    if len(w.cycle) != 1 or not w.prefix:
        return None
    k = w.cycle[0]
    l = w.prefix[-1]
    return BoundaryWord.make(w.prefix[:-1] + (k,), (l,))


def pi_equivalent(x: BoundaryWord, y: BoundaryWord) -> bool:
    if x == y:
        return True
    m = common_prefix_length(x, y)
    tx, ty = _tail_pair(x, m), _tail_pair(y, m)
    return tx is not None and ty is not None and tx == ty[::-1]


# -- text grammar -----------------------------------------------------------

_BOUNDARY_RE = re.compile(r"^([123]*)\(([123]+)\)$")


def parse_word(s: str) -> Word:
    s = s.strip()
    if s == "e":
        return ()
    if not s or not set(s) <= set("123"):
        raise ValueError(f"not a finite word: {s!r}")
    return tuple(int(c) for c in s)


def parse_boundary(s: str) -> BoundaryWord:
    m = _BOUNDARY_RE.match(s.strip())
    if not m:
        raise ValueError(f"not a boundary word: {s!r}")
    return BoundaryWord.make(parse_word(m.group(1)) if m.group(1) else (), parse_word(m.group(2)))


def parse_any(s: str):
    """Boundary word if the string contains a cycle, else finite word."""
    return parse_boundary(s) if "(" in s else parse_word(s)


def format_word(w: Sequence[int]) -> str:
    return "".join(map(str, w)) if len(w) else "e"


def format_boundary(w: BoundaryWord) -> str:
    return "".join(map(str, w.prefix)) + "(" + "".join(map(str, w.cycle)) + ")"


def format_any(w) -> str:
    return format_boundary(w) if isinstance(w, BoundaryWord) else format_word(w)
