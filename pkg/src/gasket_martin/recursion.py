"""Recursive computation of the corner hitting probabilities.

For level n >= 2:

    alpha_n, beta_n, gamma_n = rho(1 2^(n-1))
    a_n, b_n, c_n            = rho(1^(n-1) 2)

The state at n+1 depends only on (p, b_n, c_n). Exact arithmetic with
rationals doubles the number of digits per level unless p = 1/3, so
:func:`certified_sequence` switches to outward-rounded interval arithmetic
once a digit budget is exhausted. Every inequality is then decided by
interval endpoints, and every identity by containment of zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath.ctx_iv import MPIntervalContext

from .kernel import ChainParams

FLOAT_CHECK_TOL = 1e-12
EXACT_DIGIT_BUDGET = 4000
LIMITS = (Fraction(2, 5), Fraction(2, 5), Fraction(1, 5), Fraction(1), Fraction(0), Fraction(0))


class RecursionCheckError(ArithmeticError):
    """An implicit relation between consecutive states failed."""


class PrecisionBudgetError(ArithmeticError):
    """Exact rationals grew beyond the digit budget."""


@dataclass(frozen=True)
class HittingState:
    n: int
    alpha: object
    beta: object
    gamma: object
    a: object
    b: object
    c: object
    denom: object = None

    def values(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.a, self.b, self.c)

    @property
    def kind(self) -> str:
        if isinstance(self.b, Fraction):
            return "exact"
        if isinstance(self.b, float):
            return "float"
        return "interval"


def _start(p):
    d = 5 - 7 * p
    return (3 - 4 * p) / d, (1 - p) / d, (1 - 2 * p) / d


def _advance(p, b, c):
    d = (c * (2 - p) * p + c * c * (1 - 2 * p) + b * b * p * (2 - 3 * p)
         + b * p * (3 - 4 * p) + b * c * (2 - 6 * p + 6 * p * p))
    if isinstance(d, (Fraction, float)) and d == 0:
        raise ArithmeticError("vanishing denominator in recursion step")
    s = b + c
    alpha = (s * (1 - p) * p + c * c * (1 - 2 * p) + b * b * p * (2 - 3 * p)
             + b * c * (2 - 6 * p * (1 - p))) / d
    beta = s * (1 - p) * p / d
    gamma = p * (b * (1 - 2 * p) + c * p) / d
    a = (c * (2 - p) * p + c * c * (1 - 3 * p) + b * p * (3 - 4 * p)
         + b * c * (2 - 9 * p + 9 * p * p)) / d
    bn = p * (b * c * (2 - 3 * p) + b * b * (1 - p) + c * c * p) / d
    cn = p * (b * c + c * c * (1 - p) + b * b * (1 - 2 * p)) / d
    return alpha, beta, gamma, a, bn, cn, d


def dependency_residuals(p, old: HittingState, new: HittingState) -> list:
    """lhs - rhs of the six relations linking consecutive states."""
    a, b, c = old.a, old.b, old.c
    al, be, ga = new.alpha, new.beta, new.gamma
    return [
        al * (1 - a * (1 - 2 * p) - b * (1 - 3 * p) - p) - (p * be + p * b + c * (1 - 2 * p)),
        be * (1 - a * (1 - p)) - (p * al + ga * (p * c + b * (1 - 2 * p))),
        ga * (1 - p) * (1 - a) - be * (p * c + b * (1 - 2 * p)),
        new.a - (a + (b + c) * al),
        new.b - (b * be + c * ga),
        new.c - (b * ga + c * be),
    ]


def ratio_identity_residual(p, old: HittingState, new: HittingState):
    b, c = old.b, old.c
    lhs = (new.b - new.c) / new.c
    rhs = (b - c) / c * (c * (1 - 2 * p) + b * p) / (b + c * (1 - p) + b * b / c * (1 - 2 * p))
    return lhs - rhs


def init(params: ChainParams) -> HittingState:
    a, b, c = _start(params.p)
    return HittingState(2, a, b, c, a, b, c)


def _is_zero(x) -> bool:
    if isinstance(x, Fraction):
        return x == 0
    if isinstance(x, float):
        return abs(x) <= FLOAT_CHECK_TOL
    return 0 in x


def _raw_step(p, state: HittingState) -> HittingState:
    alpha, beta, gamma, a, b, c, d = _advance(p, state.b, state.c)
    return HittingState(state.n + 1, alpha, beta, gamma, a, b, c, d)


def step(state: HittingState, params: ChainParams) -> HittingState:
    """Advance one level and check the implicit relations."""
    p = params.p
    new = _raw_step(p, state)
    for k, r in enumerate(dependency_residuals(p, state, new)):
        if not _is_zero(r):
            raise RecursionCheckError(f"relation {k} violated at n={new.n}: residual {r}")
    return new


def _digits(x: Fraction) -> int:
    return max(x.denominator.bit_length(), x.numerator.bit_length()) * 30103 // 100000 + 1


def sequence(params: ChainParams, N: int, budget: int | None = None) -> list[HittingState]:
    """States for n = 2..N.

    In exact mode a :class:`PrecisionBudgetError` is raised when the
    rationals exceed ``budget`` decimal digits.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    first = init(params)
    return [first] + sequence_from(first, params, N, budget)


def sequence_from(s: HittingState, params: ChainParams, N: int,
                  budget: int | None = None) -> list[HittingState]:
    """Continue from state ``s`` up to level N (``s`` itself excluded)."""
    budget = budget or EXACT_DIGIT_BUDGET
    out = []
    while s.n < N:
        if params.exact and _digits(s.b) > budget:
            raise PrecisionBudgetError(
                f"exact rationals exceed {budget} digits at n={s.n}; use floating mode")
        s = step(s, params)
        out.append(s)
    return out


def interval_context(N: int) -> MPIntervalContext:
    ctx = MPIntervalContext()
    ctx.prec = max(256, 8 * N)
    return ctx


def to_interval(ctx, x):
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def certified_sequence(params: ChainParams, N: int,
                       budget: int | None = None) -> list[HittingState]:
    """Exact states while within budget, then interval enclosures.

    Floating mode simply returns :func:`sequence`.
    """
    if not params.exact:
        return sequence(params, N)
    if N < 2:
        raise ValueError("N must be at least 2")
    budget = budget or EXACT_DIGIT_BUDGET
    out = [init(params)]
    p = params.p
    ctx = None
    while out[-1].n < N:
        s = out[-1]
        if ctx is None and _digits(s.b) > budget:
            ctx = interval_context(N)
            p = to_interval(ctx, params.p)
            s = HittingState(s.n, *(to_interval(ctx, v) for v in s.values()))
            out[-1] = s
        new = _raw_step(p, s)
        for k, r in enumerate(dependency_residuals(p, s, new)):
            if not _is_zero(r):
                raise RecursionCheckError(f"relation {k} violated at n={new.n}")
        out.append(new)
    return out


# -- comparisons that respect the arithmetic kind ----------------------------

def nonneg(x) -> bool | None:
    """x >= 0 decided exactly (True/False) or None when an interval straddles 0.

    Floats are compared with the absolute slack FLOAT_CHECK_TOL.
    """
    if isinstance(x, Fraction):
        return x >= 0
    if isinstance(x, float):
        return x >= -FLOAT_CHECK_TOL
    if x.a >= 0:
        return True
    if x.b < 0:
        return False
    return None


def upper(x) -> float:
    """A float upper bound of x (rounded up for intervals)."""
    if isinstance(x, Fraction):
        return math.nextafter(float(x), math.inf)
    if isinstance(x, float):
        return x
    return math.nextafter(float(x.b), math.inf)


# -- lemma suite -------------------------------------------------------------

@dataclass
class LemmaReport:
    p: object
    N: int
    failures: dict = field(default_factory=dict)  # check name -> list of n
    undecided: dict = field(default_factory=dict)
    checked: dict = field(default_factory=dict)  # check name -> count
    exact_levels: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures and not self.undecided

    def _record(self, name, n, verdict):
        self.checked[name] = self.checked.get(name, 0) + 1
        if verdict is None:
            self.undecided.setdefault(name, []).append(n)
        elif not verdict:
            self.failures.setdefault(name, []).append(n)


def lemma_suite(params: ChainParams, N: int = 50) -> LemmaReport:
    """Check the inequalities and identities satisfied by the sequences.

    Exact mode is certified (exact rationals, then intervals); floating mode
    uses a 1e-12 tolerance.
    """
    states = certified_sequence(params, N)
    rep = LemmaReport(params.p, N)
    rep.exact_levels = sum(s.kind == "exact" for s in states)
    p_exact = params.p
    third = p_exact <= Fraction(1, 3)
    ge_third = p_exact >= Fraction(1, 3)
    b2, c2 = states[0].b, states[0].c
    for k, s in enumerate(states):
        conv = _converter(s)
        p = conv(params.p)
        b2i, c2i = conv(b2), conv(c2)
        rep._record("b>=c", s.n, nonneg(s.b - s.c))
        rep._record("beta>=gamma", s.n, nonneg(s.beta - s.gamma))
        if third:
            rep._record("beta<=2/5", s.n, nonneg(conv(Fraction(2, 5)) - s.beta))
        if ge_third:
            rep._record("alpha>=2/5", s.n, nonneg(s.alpha - conv(Fraction(2, 5))))
        bound = (b2i - c2i) / c2i * (1 - p) ** (s.n - 2)
        rep._record("ratio bound", s.n, nonneg(bound - abs(s.b / s.c - 1)))
        rep._record("sums", s.n, _is_zero(s.alpha + s.beta + s.gamma - 1)
                    and _is_zero(s.a + s.b + s.c - 1))
        if k + 1 < len(states):
            nxt = states[k + 1]
            # lift the previous state into the next one's arithmetic
            conv = _converter(nxt)
            prev = HittingState(s.n, *(conv(v) for v in s.values()))
            p = conv(params.p)
            rep._record("b decreasing", nxt.n, nonneg(prev.b - nxt.b))
            rep._record("dependencies", nxt.n,
                        all(_is_zero(r) for r in dependency_residuals(p, prev, nxt)))
            rep._record("ratio identity", nxt.n, _is_zero(ratio_identity_residual(p, prev, nxt)))
    return rep


def _converter(state: HittingState):
    kind = state.kind
    if kind == "exact":
        return Fraction
    if kind == "float":
        return float
    ctx = state.b.ctx
    return lambda x: to_interval(ctx, x)


# -- limits ------------------------------------------------------------------

@dataclass
class LimitReport:
    p: object
    tol: float
    converged: bool
    n: int | None
    deviation: float
    envelope_base: Fraction
    envelope_ok: bool
    envelope_violations: list

    def summary(self) -> str:
        status = f"converged at n={self.n}" if self.converged else "not converged"
        env = "holds" if self.envelope_ok else f"violated at {self.envelope_violations}"
        return (f"p={self.p}: {status} (deviation {self.deviation:.3e} < {self.tol:g}); "
                f"envelope b+c <= ({self.envelope_base})^(n-2) {env}")


def envelope_base(p) -> Fraction:
    return Fraction(4, 5) if p <= Fraction(1, 3) else Fraction(3, 5)


def deviation(s: HittingState):
    conv = _converter(s)
    return [abs(v - conv(t)) for v, t in zip(s.values(), LIMITS)]


def verify_limits(params: ChainParams, tol: float, N_max: int = 120) -> LimitReport:
    """First n whose six values lie within ``tol`` of their limits."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not params.exact and tol < 16 * 2.0**-52:
        raise ValueError("tolerance below float resolution")
    states = certified_sequence(params, N_max)
    base = envelope_base(params.p)
    violations = []
    hit = None
    dev = math.inf
    for s in states:
        env = _converter(s)(base) ** (s.n - 2)
        if nonneg(env - s.b - s.c) is not True:
            violations.append(s.n)
        dev = max(upper(d) for d in deviation(s))
        if dev < tol:
            hit = s.n
            break
    return LimitReport(params.p, tol, hit is not None, hit, dev, base, not violations, violations)
