from fractions import Fraction

import numpy as np
import pytest

from gasket_martin.graph import all_words, corner_index, word_index
from gasket_martin.kernel import ChainParams, estimate_word_hit, transition
from gasket_martin.matrices import cut_matrix, rho_finite, rho_level
from gasket_martin.potential import (EXACT_MAX_LEVEL, bound_inverse, exit_distribution, green,
                                     green_boundary_limit, green_corner_values, green_finite,
                                     hitting_probability, kernel_at_boundary, level_system,
                                     level_transfer, martin_kernel, return_probability,
                                     root_hitting_level)
from gasket_martin.words import BoundaryWord, constant

F = Fraction
B = BoundaryWord.make


def dense_green(params, n):
    """(I - P)^{-1} over all words of length <= n; leaving level n is absorption."""
    words = [w for k in range(n + 1) for w in all_words(k)]
    pos = {w: k for k, w in enumerate(words)}
    P = np.zeros((len(words), len(words)))
    for u in words:
        for v, pr in transition(params, u).targets:
            if v in pos:
                P[pos[u], pos[v]] = float(pr)
    return pos, np.linalg.inv(np.eye(len(words)) - P)


@pytest.mark.parametrize("p", [F(1, 4), F(1, 3)])
def test_green_and_hitting_against_dense_inverse(p):
    params = ChainParams(p)
    pos, G = dense_green(params, 3)
    for x in pos:
        for y in pos:
            g = G[pos[x], pos[y]]
            assert abs(float(green(params, x, y).value) - g) < 1e-12
            assert abs(float(hitting_probability(params, x, y)) - g / G[pos[y], pos[y]]) < 1e-12


def test_hitting_examples(third):
    for i in (1, 2, 3):
        assert hitting_probability(third, (), (i,)) == F(1, 3)
    assert hitting_probability(third, (1, 2), (2, 2)) == F(1, 4)
    lhs = hitting_probability(third, (1,), (1, 2))
    rhs = F(1, 3) * (1 + hitting_probability(third, (1, 1), (1, 2))
                     + hitting_probability(third, (1, 3), (1, 2)))
    assert lhs == rhs
    est = estimate_word_hit(third, (1,), (1, 2), 200000, seed=8)
    assert abs(est.estimates[0] - float(lhs)) <= 4 * est.stderr[0]


def test_green_examples(third, quarter):
    assert green(third, (), ()).value == 1
    for params in (third, quarter):
        for n in (2, 3, 4):
            rho = rho_level(n, params)
            for x in all_words(n):
                for j in (1, 2, 3):
                    assert green(params, x, (j,) * n).value == rho[word_index(x), j - 1]


def test_three_p_identity_at_one_third(third):
    p = third.p
    for n in (2, 3, 4):
        for x in all_words(n):
            if len(set(x)) == 1:
                continue
            for i in (1, 2, 3):
                assert 3 * p * green(third, (i,) * (n - 1), x).value == green(third, x, (i,) * n).value


def test_green_finite_matches_green(quarter):
    for x in all_words(2):
        for y in all_words(2):
            if len(set(y)) > 1:
                assert green_finite(quarter, x, y) == green(quarter, x, y).value


def test_return_probability(quarter):
    assert return_probability(quarter, ()) == 0
    assert return_probability(quarter, (2, 2)) == 0
    r = return_probability(quarter, (1, 2, 3))
    assert 0 < r < 1


def test_martin_kernel_examples(third):
    for y in ((1,), (1, 2), (2, 3, 1)):
        assert martin_kernel(third, (), y).value == 1
    for x in ((1, 2), (3, 1, 2)):
        kv = martin_kernel(third, x, x)
        assert kv.value == kv.bound == 1 / bound_inverse(third, x)
    kv = martin_kernel(third, (1, 2), (2, 2))
    assert kv.value == hitting_probability(third, (1, 2), (2, 2)) / hitting_probability(third, (), (2, 2))
    assert kv.value == kv.other


def test_kernel_bounded_by_c(quarter):
    for x in all_words(2):
        for y in all_words(3):
            kv = martin_kernel(quarter, x, y)
            assert kv.value <= kv.bound


def test_root_hitting_level(quarter):
    fp = quarter.as_float()
    for n in (2, 3):
        r = root_hitting_level(quarter, n)
        for z in all_words(n):
            assert r[word_index(z)] == hitting_probability(quarter, (), z)
        assert np.allclose(root_hitting_level(fp, n).astype(float), r.astype(float), atol=1e-14)


def test_exit_distribution_through_cut(quarter):
    # the cut matrix row of the last letter is rho of the tail; deeper exits go through M_m
    x = (1, 3, 2, 2)
    n = len(x)
    for m in (1, 2, 3):
        Q = cut_matrix(x, m, quarter)
        assert (Q[x[-1] - 1]).tolist() == rho_finite(x[m - 1:], quarter).tolist()
    assert exit_distribution(quarter, x, n).tolist() == rho_finite(x, quarter).tolist()
    v = exit_distribution(quarter, x, n + 2)
    w = rho_finite(x, quarter) @ level_transfer(n + 1, quarter) @ level_transfer(n + 2, quarter)
    assert v.tolist() == w.tolist()
    assert sum(v) == 1


def test_level_caps():
    with pytest.raises(ValueError):
        level_system(ChainParams(F(1, 3)), EXACT_MAX_LEVEL + 1)


def test_green_boundary_limit_examples():
    x = B((2,), (3,))
    for p in (F(1, 3), F(1, 10)):
        params = ChainParams(p)
        c = 1 / (15 * p)
        vals = [green_boundary_limit(params, j, x).value for j in (1, 2, 3)]
        assert vals == [c, 2 * c, 2 * c]
    lim = green_boundary_limit(ChainParams(F(1, 3)), 1, constant(1))
    assert lim.degenerate and lim.value == 1


def test_green_corner_values_converge_at_one_third():
    params = ChainParams(1 / 3)
    x = B((2,), (3,))
    target = np.array([float(green_boundary_limit(params, j, x).value) for j in (1, 2, 3)])
    gaps = [np.abs(green_corner_values(params, x, n) - target).max() for n in range(4, 13)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


def test_kernel_at_boundary_examples():
    params = ChainParams(0.3)
    x, y = B((1,), (2,)), B((2,), (1,))
    assert kernel_at_boundary(params, (), x) == 1.0
    for n in range(1, 5):
        for z in all_words(n):
            kx = kernel_at_boundary(params, z, x)
            assert abs(kx - kernel_at_boundary(params, z, y)) < 1e-9
            assert kx <= 1 / float(bound_inverse(params, z)) * (1 + 1e-9)


def test_kernel_at_boundary_is_limit_of_finite_kernels():
    params = ChainParams(0.3)
    x = B((1, 3), (2,))
    z = (2, 1)
    target = kernel_at_boundary(params, z, x, 1e-12)
    gaps = []
    for M in (4, 6, 8, 10):
        y = x.head(M)
        k = float(hitting_probability(params, z, y)) / float(hitting_probability(params, (), y))
        gaps.append(abs(k - target))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.02


def test_corner_green_diagonal():
    params = ChainParams(F(1, 4))
    sysm = level_system(params, 2)
    d = sysm.green_diagonal()
    for u in all_words(2):
        assert d[word_index(u)] == sysm.green_column(word_index(u))[word_index(u)]
    assert d[corner_index(1, 2)] == 1
