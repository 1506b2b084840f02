"""Level graphs Gamma^n on Sigma^n and their cells.

Vertices are encoded as base-3 integers with the first letter most
significant (letter i -> digit i-1), so appending letter k to the word with
index ``u`` gives ``3*u + k - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator

import numpy as np

from .words import Word, check_word, format_word

MAX_LEVEL = 13


def word_index(w) -> int:
    idx = 0
    for c in w:
        idx = 3 * idx + (c - 1)
    return idx


def index_word(idx: int, n: int) -> Word:
    out = []
    for _ in range(n):
        idx, d = divmod(idx, 3)
        out.append(d + 1)
    return tuple(reversed(out))


def corner_index(i: int, n: int) -> int:
    """Index of the word i^n."""
    return (i - 1) * (3**n - 1) // 2


def all_words(n: int) -> Iterator[Word]:
    return product((1, 2, 3), repeat=n)


def digits(n: int) -> np.ndarray:
    """Letters of every word of length n as an array of shape (3^n, n)."""
    idx = np.arange(3**n)
    out = np.empty((3**n, n), dtype=np.int64)
    for t in range(n - 1, -1, -1):
        out[:, t] = idx % 3 + 1
        idx //= 3
    return out


@dataclass(frozen=True, eq=False)
class LevelGraph:
    level: int
    edges: np.ndarray  # (E, 2) int, each pair stored once with u < v
    nbr: np.ndarray  # (3^n, 3) neighbour indices, -1 padded

    @property
    def size(self) -> int:
        return 3**self.level

    @property
    def boundary(self) -> tuple[Word, ...]:
        return tuple((i,) * self.level for i in (1, 2, 3))

    def degree(self) -> np.ndarray:
        return (self.nbr >= 0).sum(axis=1)

    def neighbor_indices(self, u: int) -> list[int]:
        return [int(v) for v in self.nbr[u] if v >= 0]

    def edge_set(self) -> set[frozenset]:
        return {frozenset((index_word(int(u), self.level), index_word(int(v), self.level)))
                for u, v in self.edges}


def _edges(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[0, 1], [0, 2], [1, 2]], dtype=np.int64)
    prev = _edges(n - 1)
    block = 3 ** (n - 1)
    parts = [prev + i * block for i in range(3)]
    bridges = []
    for k, l in ((1, 2), (1, 3), (2, 3)):
        # (l k^{n-1}, k l^{n-1})
        u = (l - 1) * block + corner_index(k, n - 1)
        v = (k - 1) * block + corner_index(l, n - 1)
        bridges.append(sorted((u, v)))
    return np.concatenate(parts + [np.array(bridges, dtype=np.int64)])


@lru_cache(maxsize=16)
def build_graph(n: int) -> LevelGraph:
    """Gamma^n built recursively from three prefixed copies of Gamma^{n-1}."""
    if not 1 <= n <= MAX_LEVEL:
        raise ValueError(f"level must lie in [1, {MAX_LEVEL}], got {n}")
    edges = _edges(n)
    N = 3**n
    nbr = np.full((N, 3), -1, dtype=np.int64)
    fill = np.zeros(N, dtype=np.int64)
    for u, v in edges:
        nbr[u, fill[u]] = v
        fill[u] += 1
        nbr[v, fill[v]] = u
        fill[v] += 1
    # sort each row with the -1 padding last
    nbr = np.sort(np.where(nbr < 0, N, nbr), axis=1)
    nbr[nbr == N] = -1
    edges.setflags(write=False)
    nbr.setflags(write=False)
    return LevelGraph(n, edges, nbr)


def neighbors(g: LevelGraph, u) -> set[Word]:
    u = check_word(u)
    if len(u) != g.level:
        raise ValueError(f"word length {len(u)} does not match level {g.level}")
    return {index_word(v, g.level) for v in g.neighbor_indices(word_index(u))}


@dataclass(frozen=True)
class Cell:
    stem: Word
    level: int

    @property
    def m(self) -> int:
        return len(self.stem) + 1

    @property
    def outer(self) -> frozenset:
        r = self.level - len(self.stem)
        return frozenset(self.stem + (i,) * r for i in (1, 2, 3))

    def members(self) -> Iterator[Word]:
        for tail in all_words(self.level - len(self.stem)):
            yield self.stem + tail

    def __contains__(self, w) -> bool:
        return len(w) == self.level and tuple(w[: len(self.stem)]) == self.stem


def cell(omega, m: int, n: int) -> Cell:
    """The (m, n)-cell with stem omega of length m - 1."""
    omega = check_word(omega)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    if len(omega) != m - 1:
        raise ValueError("stem must have length m - 1")
    return Cell(omega, n)


def to_dot(g: LevelGraph) -> str:
    lines = [f"graph gamma{g.level} {{"]
    for u, v in g.edges:
        lines.append(f'  "{format_word(index_word(int(u), g.level))}" -- '
                     f'"{format_word(index_word(int(v), g.level))}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
