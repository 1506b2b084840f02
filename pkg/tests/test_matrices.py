from fractions import Fraction

import numpy as np
import pytest

from gasket_martin.graph import all_words, word_index
from gasket_martin.kernel import ChainParams, estimate_hitting
from gasket_martin.matrices import (cut_matrix, level_matrix, limit_matrix, rho_boundary,
                                    rho_boundary_exact, rho_finite, rho_level, spread, t_finite,
                                    t_infinity)
from gasket_martin.potential import absorption_probabilities
from gasket_martin.words import BoundaryWord, constant

F = Fraction
B = BoundaryWord.make


def test_level_matrix_examples(third):
    A = level_matrix(1, 2, third)
    assert A.tolist() == [[1, 0, 0], [F(5, 8), F(1, 4), F(1, 8)], [F(5, 8), F(1, 8), F(1, 4)]]
    for n in (2, 5, 9):
        assert level_matrix(2, n, ChainParams(F(1, 5)))[1].tolist() == [0, 1, 0]
    fp = ChainParams(0.3)
    assert np.abs(level_matrix(3, 60, fp) - limit_matrix(3, exact=False)).max() < 1e-12


def test_limit_matrix():
    assert limit_matrix(1).tolist() == [[1, 0, 0], [F(2, 5), F(2, 5), F(1, 5)],
                                        [F(2, 5), F(1, 5), F(2, 5)]]
    assert limit_matrix(2).tolist() == [[F(2, 5), F(2, 5), F(1, 5)], [0, 1, 0],
                                        [F(1, 5), F(2, 5), F(2, 5)]]
    for i in (1, 2, 3):
        assert all(sum(r) == 1 for r in limit_matrix(i))


def test_rho_finite_examples(third):
    assert rho_finite((2, 2, 2), third).tolist() == [0, 1, 0]
    assert rho_finite((1, 2), third).tolist() == [F(5, 8), F(1, 4), F(1, 8)]
    v = rho_finite((1, 2, 3), third)
    expected = np.array([0, 0, 1], dtype=object) @ level_matrix(2, 2, third) @ level_matrix(1, 3, third)
    assert v.tolist() == expected.tolist()
    assert v.tolist() == absorption_probabilities(third, 3)[word_index((1, 2, 3))].tolist()


@pytest.mark.parametrize("p", [F(1, 4), F(2, 5)])
def test_rho_level_equals_absorption(p):
    params = ChainParams(p)
    for n in (1, 2, 3, 4):
        assert rho_level(n, params).tolist() == absorption_probabilities(params, n).tolist()
        for x in all_words(n):
            assert rho_finite(x, params).tolist() == rho_level(n, params)[word_index(x)].tolist()


def test_t_infinity():
    T = t_infinity(constant(1), 1e-12)
    assert np.allclose(T.matrix, [[1, 0, 0]] * 3, atol=1e-12)
    assert T.matrix[0].tolist() == [1, 0, 0]
    a, b = t_infinity(B((1,), (2,))), t_infinity(B((2,), (1,)))
    assert np.abs(a.matrix - b.matrix).max() < 1e-11
    a, b = t_infinity(B((), (1, 2))), t_infinity(B((), (2, 1)))
    assert np.abs(a.matrix - b.matrix).max() > 0.1
    with pytest.raises(ValueError):
        t_infinity(constant(1), 0)


def test_spread_monotone():
    x = B((1, 3), (2, 3, 1))
    mats = {i: limit_matrix(i, exact=False) for i in (1, 2, 3)}
    T = mats[x.letter(0)]
    prev = spread(T)
    for k in range(1, 30):
        T = mats[x.letter(k)] @ T
        assert spread(T) <= prev + 1e-15
        prev = spread(T)


def test_t_finite_approaches_t_infinity():
    x = B((1,), (2, 3))
    fp = ChainParams(0.3)
    target = t_infinity(x).matrix
    gaps = [np.abs(t_finite(x, n, fp) - target).max() for n in (10, 40, 120)]
    assert gaps[2] < gaps[0] and gaps[2] < 1e-6


def test_rho_boundary():
    assert rho_boundary_exact(constant(3)).tolist() == [0, 0, 1]
    assert rho_boundary_exact(B((1,), (2,))).tolist() == rho_boundary_exact(B((2,), (1,))).tolist()
    v = rho_boundary_exact(B((), (1, 2)))
    assert all(0 < c < 1 for c in v)
    for w in (B((), (1, 2)), B((3, 1), (2,)), B((2,), (1, 3, 3))):
        assert np.abs(rho_boundary(w) - rho_boundary_exact(w).astype(float)).max() < 1e-11


def test_rho_boundary_monte_carlo():
    # Monte Carlo from a level-6 prefix of (12)^inf, and the prefixes converging to the limit row
    x = B((), (1, 2))
    params = ChainParams(F(1, 3))
    est = estimate_hitting(params, x.head(6), 6, 100000, seed=4)
    ref = rho_finite(x.head(6), params).astype(float)
    assert np.all(np.abs(est.estimates - ref) <= 4 * est.stderr)
    fp = ChainParams(1 / 3)
    lim = rho_boundary_exact(x).astype(float)
    gaps = [np.abs(rho_finite(x.head(n), fp) - lim).max() for n in (6, 20, 60)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-8


def test_cut_matrix_rows_are_exit_distributions(third):
    # rho(x) factors through the cut at level m
    x = (1, 2, 3, 1)
    for m in (1, 2, 3, 4):
        Q = cut_matrix(x, m, third)
        assert all(sum(r) == 1 for r in Q)
        assert (Q[x[-1] - 1] @ np.eye(3, dtype=int)).tolist() == \
            (np.array(rho_finite(x, third)).tolist() if m == 1 else Q[x[-1] - 1].tolist())
