"""Transition kernel of the chain on Sigma* and a seeded Monte Carlo sampler.

From an interior word u = omega i j^r (r >= 1, i != j, l the third letter)
the chain moves to

* w = omega j i^r        (the pi-equivalent neighbour) with probability p,
* v = omega i j^(r-1) i  with probability p,
* z = omega i j^(r-1) l  with probability q = 1 - 2p.

Corner words i^n and the empty word step one level down uniformly.
The rotated variant puts q on w and p on v and z.

Random numbers come from numpy's PCG64. Paths are simulated in fixed-size
batches; batch ``b`` draws from ``SeedSequence(seed, spawn_key=(b,))`` and
counts are summed, so estimates do not depend on the number of threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numba
import numpy as np

from .graph import corner_index, digits, word_index
from .words import Word, check_word, third

BATCH = 1 << 16
DEFAULT_STEP_CAP = 10**7
KERNELS = ("standard", "rotated")


@dataclass(frozen=True)
class ChainParams:
    """Parameter p of the chain; a Fraction selects exact arithmetic."""

    p: Fraction | float

    def __post_init__(self):
        p = self.p
        if isinstance(p, int):
            p = Fraction(p)
        if not isinstance(p, Fraction):
            p = float(p)
            if not math.isfinite(p):
                raise ValueError("p must lie in (0, 1/2)")
        if not 0 < p < Fraction(1, 2):
            raise ValueError("p must lie in (0, 1/2)")
        object.__setattr__(self, "p", p)

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    @property
    def q(self):
        return 1 - 2 * self.p

    def num(self, x):
        """Convert a rational constant into this mode's number type."""
        return Fraction(x) if self.exact else float(x)

    def as_float(self) -> "ChainParams":
        return self if not self.exact else ChainParams(float(self.p))

    def __str__(self) -> str:
        return str(self.p)


def parse_p(text: str, mode: str | None = None) -> ChainParams:
    """Parse p from "num/den" (exact) or a decimal string (floating).

    Decimals always give floating mode; ``mode="float"`` turns a rational
    into a float.
    """
    text = str(text).strip()
    try:
        if "/" in text:
            value = Fraction(text)
        elif any(c in text for c in ".eE") or mode == "float":
            value = float(text)
        else:
            value = Fraction(int(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError("p must lie in (0, 1/2)") from None
    if mode == "exact" and not isinstance(value, Fraction):
        raise ValueError("decimal p forces floating mode; give p as num/den for exact mode")
    if mode == "float":
        value = float(value)
    return ChainParams(value)


@dataclass(frozen=True)
class TransitionRow:
    source: Word
    targets: tuple  # ((word, probability), ...)

    def as_dict(self) -> dict:
        return dict(self.targets)


def _run_length(u: Word) -> int:
    j = u[-1]
    r = 1
    while r < len(u) and u[-1 - r] == j:
        r += 1
    return r


def neighbour_triple(u: Word) -> tuple[Word, Word, Word]:
    """(w, v, z) for an interior word u."""
    n = len(u)
    r = _run_length(u)
    if r == n:
        raise ValueError("corner words have no same-level move")
    j = u[-1]
    i = u[n - 1 - r]
    omega = u[: n - 1 - r]
    w = omega + (j,) + (i,) * r
    v = u[:-1] + (i,)
    z = u[:-1] + (third(i, j),)
    return w, v, z


def _row(params: ChainParams, u, rotated: bool) -> TransitionRow:
    u = check_word(u)
    third_ = params.num(Fraction(1, 3))
    if not u or _run_length(u) == len(u):
        return TransitionRow(u, tuple((u + (k,), third_) for k in (1, 2, 3)))
    w, v, z = neighbour_triple(u)
    p, q = params.p, params.q
    probs = (q, p, p) if rotated else (p, p, q)
    return TransitionRow(u, ((w, probs[0]), (v, probs[1]), (z, probs[2])))


def transition(params: ChainParams, u) -> TransitionRow:
    return _row(params, u, rotated=False)


def rotated_transition(params: ChainParams, u) -> TransitionRow:
    return _row(params, u, rotated=True)


def kernel_probs(params: ChainParams, kernel: str = "standard"):
    """Probabilities on the (w, v, z) columns of :func:`level_targets`."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    p, q = params.p, params.q
    return (q, p, p) if kernel == "rotated" else (p, p, q)


@lru_cache(maxsize=32)
def run_lengths(n: int) -> np.ndarray:
    """Length of the final run of equal letters for every word of length n."""
    D = digits(n)
    j = D[:, -1]
    r = np.ones(3**n, dtype=np.int64)
    running = np.ones(3**n, dtype=bool)
    for t in range(n - 2, -1, -1):
        running &= D[:, t] == j
        r += running
    r.setflags(write=False)
    return r


@lru_cache(maxsize=32)
def level_targets(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Same-level targets (w, v, z) of every word of length n.

    Returns ``(targets, corner)`` where ``targets`` has shape (3^n, 3) and
    ``corner`` flags the three words i^n (their target rows are meaningless).
    """
    D = digits(n)
    idx = np.arange(3**n, dtype=np.int64)
    j = D[:, -1]
    r = run_lengths(n)
    corner = r == n
    pos = np.where(corner, 0, n - 1 - r)
    i = np.where(corner, j % 3 + 1, D[np.arange(3**n), pos])
    l = 6 - i - j
    p3 = 3**r
    w = idx - (i - 1) * p3 - (j - 1) * (p3 - 1) // 2 + (j - 1) * p3 + (i - 1) * (p3 - 1) // 2
    v = idx - (j - 1) + (i - 1)
    z = idx - (j - 1) + (l - 1)
    targets = np.stack([w, v, z], axis=1)
    targets[corner] = -1
    targets.setflags(write=False)
    corner.setflags(write=False)
    return targets, corner


# -- Monte Carlo -----------------------------------------------------------

def _offset(n: int) -> int:
    return (3**n - 1) // 2


def _global_tables(params: ChainParams, top: int, kernel: str):
    """Flattened kernel over levels 0..top; states at level top+1 are not stored."""
    S = _offset(top + 1)
    tgt = np.zeros((S, 3), dtype=np.int64)
    c0 = np.zeros(S)
    c1 = np.zeros(S)
    pw, pv, _ = (float(x) for x in kernel_probs(params, kernel))
    for n in range(0, top + 1):
        off = _offset(n)
        N = 3**n
        if n == 0:
            tgt[0] = [1, 2, 3]
            c0[0], c1[0] = 1 / 3, 2 / 3
            continue
        t, corner = level_targets(n)
        tgt[off:off + N] = t + off
        c0[off:off + N] = pw
        c1[off:off + N] = pw + pv
        for i in (1, 2, 3):
            u = corner_index(i, n)
            if n < top:
                child = _offset(n + 1) + 3 * u
                tgt[off + u] = [child, child + 1, child + 2]
            c0[off + u], c1[off + u] = 1 / 3, 2 / 3
    return tgt, c0, c1


@numba.njit(nogil=True, cache=True)
def _walk_batch(gen, tgt, c0, c1, term, start, m, cap, counts):
    for _ in range(m):
        s = start
        steps = 0
        capped = False
        while term[s] == 0:
            if steps >= cap:
                capped = True
                break
            u = gen.random()
            if u < c0[s]:
                s = tgt[s, 0]
            elif u < c1[s]:
                s = tgt[s, 1]
            else:
                s = tgt[s, 2]
            steps += 1
        if capped:
            counts[0] += 1
        else:
            counts[term[s]] += 1


def batch_generator(seed: int, b: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))


def _run(tgt, c0, c1, term, start, paths, seed, threads, cap, ncodes):
    nb = -(-paths // BATCH)

    def one(b):
        counts = np.zeros(ncodes + 1, dtype=np.int64)
        m = min(BATCH, paths - b * BATCH)
        _walk_batch(batch_generator(seed, b), tgt, c0, c1, term, start, m, cap, counts)
        return counts

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(one, range(nb)))
    else:
        parts = [one(b) for b in range(nb)]
    return np.sum(parts, axis=0) if parts else np.zeros(ncodes + 1, dtype=np.int64)


@dataclass(frozen=True)
class HittingEstimate:
    estimates: np.ndarray
    stderr: np.ndarray
    paths: int
    seed: int
    capped: int = 0

    def to_dict(self) -> dict:
        return {
            "estimates": [float(x) for x in self.estimates],
            "stderr": [float(x) for x in self.stderr],
            "paths": self.paths,
            "seed": self.seed,
            "capped": self.capped,
        }


def _estimate(counts, paths, seed) -> HittingEstimate:
    done = counts[1:].astype(float)
    est = done / paths
    err = np.sqrt(est * (1 - est) / paths)
    return HittingEstimate(est, err, paths, seed, int(counts[0]))


def _start_state(start: Word) -> int:
    return _offset(len(start)) + word_index(start)


def estimate_hitting(params: ChainParams, start, level: int, paths: int, seed: int, *,
                     kernel: str = "standard", threads: int = 1,
                     cap: int = DEFAULT_STEP_CAP) -> HittingEstimate:
    """Empirical exit distribution of ``start`` over the corners of level ``level``."""
    start = check_word(start)
    if len(start) > level:
        raise ValueError("start must not be deeper than the target level")
    tgt, c0, c1 = _global_tables(params, level, kernel)
    term = np.zeros(len(tgt), dtype=np.int64)
    for i in (1, 2, 3):
        term[_offset(level) + corner_index(i, level)] = i
    counts = _run(tgt, c0, c1, term, _start_state(start), paths, seed, threads, cap, 3)
    return _estimate(counts, paths, seed)


def estimate_word_hit(params: ChainParams, start, target, paths: int, seed: int, *,
                      kernel: str = "standard", threads: int = 1,
                      cap: int = DEFAULT_STEP_CAP) -> HittingEstimate:
    """Empirical probability of ever visiting ``target`` from ``start``.

    ``estimates`` is (hit, miss). A path misses once it leaves the level of
    ``target`` without visiting it; levels are never revisited.
    """
    start, target = check_word(start), check_word(target)
    L = len(target)
    if len(start) > L or (len(start) == L and L == 0):
        hit = float(start == target)
        return HittingEstimate(np.array([hit, 1 - hit]), np.zeros(2), paths, seed)
    tgt, c0, c1 = _global_tables(params, L, kernel)
    term = np.zeros(len(tgt), dtype=np.int64)
    if L > 0:
        for i in (1, 2, 3):
            term[_offset(L) + corner_index(i, L)] = 2
    term[_offset(L) + word_index(target)] = 1
    counts = _run(tgt, c0, c1, term, _start_state(start), paths, seed, threads, cap, 2)
    return _estimate(counts, paths, seed)


@dataclass(frozen=True)
class StopRule:
    """Stop when the level exceeds ``level``, on visiting ``target``, or after ``cap`` steps."""

    level: int | None = None
    target: Word | None = None
    cap: int = DEFAULT_STEP_CAP


@dataclass
class Path:
    states: list = field(default_factory=list)
    reason: str = ""  # "level", "hit", "miss" or "cap"

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def simulate_path(params: ChainParams, start, stop: StopRule, seed: int,
                  kernel: str = "standard") -> Path:
    """One trajectory, reproducible from ``seed``."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    row = rotated_transition if kernel == "rotated" else transition
    fparams = params.as_float()
    gen = np.random.Generator(np.random.PCG64(seed))
    u = check_word(start)
    path = Path([u])
    target = None if stop.target is None else check_word(stop.target)
    while True:
        if target is not None:
            if u == target:
                path.reason = "hit"
                return path
            if len(u) > len(target):
                path.reason = "miss"
                return path
        if stop.level is not None and len(u) > stop.level:
            path.reason = "level"
            return path
        if path.steps >= stop.cap:
            path.reason = "cap"
            return path
        x = gen.random()
        acc = 0.0
        targets = row(fparams, u).targets
        for v, pr in targets:
            acc += pr
            if x < acc:
                break
        u = v
        path.states.append(u)


__all__ = [
    "ChainParams", "parse_p", "TransitionRow", "transition", "rotated_transition",
    "kernel_probs", "level_targets", "neighbour_triple", "estimate_hitting",
    "estimate_word_hit", "HittingEstimate", "StopRule", "Path", "simulate_path",
    "run_lengths",
]
