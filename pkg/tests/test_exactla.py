"""Exact linear algebra: Smith form, integer solvers, quotient lattices."""

import itertools
import random
from fractions import Fraction

import pytest

from arrlie import exactla


def rand_mat(rng, m, n, lo=-5, hi=5):
    return [[rng.randint(lo, hi) for _ in range(n)] for _ in range(m)]


def det_brute(mat):
    n = len(mat)
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = sign
        for i in range(n):
            term *= mat[i][perm[i]]
        total += term
    return total


def test_det_matches_permanent_expansion():
    rng = random.Random(5)
    for n in range(5):
        for _ in range(6):
            a = rand_mat(rng, n, n)
            assert exactla.det_int(a) == det_brute(a)
    assert exactla.det_int([]) == 1


def test_smith_normal_form_properties():
    rng = random.Random(6)
    for _ in range(15):
        m, n = rng.randint(1, 5), rng.randint(1, 5)
        a = rand_mat(rng, m, n)
        divisors, u, uinv, v, vinv = exactla.smith_normal_form(a)
        assert abs(exactla.det_int(u)) == 1
        assert abs(exactla.det_int(v)) == 1
        assert exactla.mat_mul(u, uinv) == exactla.identity(m)
        assert exactla.mat_mul(v, vinv) == exactla.identity(n)
        d = exactla.mat_mul(exactla.mat_mul(u, a), v)
        for i in range(m):
            for j in range(n):
                if i == j and i < len(divisors):
                    assert d[i][j] == divisors[i]
                else:
                    assert d[i][j] == 0
        assert all(dv > 0 for dv in divisors)
        for x, y in zip(divisors, divisors[1:]):
            assert y % x == 0


def test_kernel_is_saturated_and_annihilates():
    rng = random.Random(8)
    for _ in range(10):
        m, n = rng.randint(1, 4), rng.randint(1, 5)
        a = rand_mat(rng, m, n)
        kern = exactla.kernel_int(a)
        rank = exactla.rank_dense(a)
        assert len(kern) == n - rank
        for v in kern:
            assert all(sum(a[i][j] * v[j] for j in range(n)) == 0 for i in range(m))
        if kern:
            # saturated: the kernel basis extends to a basis of Z^n
            divisors, *_ = exactla.smith_normal_form(
                [[v[i] for v in kern] for i in range(n)])
            assert all(d == 1 for d in divisors)


def test_solve_int_and_right_inverse():
    rng = random.Random(9)
    for _ in range(10):
        m, n = rng.randint(1, 4), rng.randint(1, 4)
        a = rand_mat(rng, m, n)
        xs = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(2)]
        bs = [exactla.mat_vec(a, x) for x in xs]
        sol = exactla.solve_int(a, bs)
        assert sol is not None
        for x, b in zip(sol, bs):
            assert exactla.mat_vec(a, x) == b
    assert exactla.solve_int([[2]], [[1]]) is None
    assert exactla.right_inverse_int([[2, 0], [0, 1]]) is None
    r = exactla.right_inverse_int([[1, 2, 0], [0, 3, 1]])
    assert exactla.mat_mul([[1, 2, 0], [0, 3, 1]], r) == exactla.identity(2)


def test_inverse_field():
    a = [[1, 2], [3, 4]]
    inv = exactla.inverse_field(a)
    assert exactla.mat_mul(inv, a) == [[Fraction(1), Fraction(0)],
                                       [Fraction(0), Fraction(1)]]
    assert exactla.inverse_field([[1, 2], [2, 4]]) is None
    inv2 = exactla.inverse_field([[1, 1], [0, 1]], p=5)
    assert exactla.mat_mod(exactla.mat_mul(inv2, [[1, 1], [0, 1]]), 5) == \
        exactla.identity(2)
    assert exactla.inverse_field([[2]], p=2) is None
    with pytest.raises(ValueError, match="square"):
        exactla.inverse_field([[1, 2]])


def test_ranks_agree_between_backends():
    rng = random.Random(10)
    for _ in range(10):
        m, n = rng.randint(1, 5), rng.randint(1, 5)
        a = rand_mat(rng, m, n)
        rows = [{j: v for j, v in enumerate(row) if v} for row in a]
        rd = exactla.rank_dense(a)
        assert exactla.rank_sparse(rows) == rd
        divisors, *_ = exactla.smith_normal_form(a)
        assert len(divisors) == rd
        r2 = exactla.rank_sparse(rows, p=2)
        assert r2 <= rd


def test_image_basis_spans_the_column_lattice():
    cols = [[2, 0, 4], [0, 0, 0], [1, 1, 2]]
    bas = exactla.image_basis(cols, 3)
    assert len(bas) == 2
    mat = [[b[i] for b in bas] for i in range(3)]
    assert exactla.solve_int(mat, [c for c in cols if any(c)]) is not None


def test_empty_matrix_conventions():
    assert exactla.mat_mul([], []) == []
    assert exactla.mat_mul([[], []], []) == [[], []]
    assert exactla.transpose([[1, 2], [3, 4]]) == [[1, 3], [2, 4]]
    assert exactla.identity(0) == []
    assert exactla.zeros(2, 1) == [[0], [0]]
    assert exactla.is_zero([[0, 0]]) and not exactla.is_zero([[0, 1]])


def test_quotient_lattice_with_torsion():
    q = exactla.QuotientLattice(3, [[2, 0, 0]])
    assert (q.rank, q.torsion, q.dim) == (2, (2,), 3)
    v = q.project([1, 0, 0])
    assert q.add(v, v) == q.zero()
    for x in ([1, 2, 3], [0, -1, 4]):
        c = q.project(x)
        assert q.project(q.lift(c)) == q.reduce(c)
    assert q.scale(2, q.project([1, 0, 0])) == q.zero()
    assert q.project([0, 1, 0]) != q.zero()


def test_quotient_lattice_rank_over():
    q = exactla.QuotientLattice(2, [[0, 2]])
    rows = [[1, 0], [0, 1]]
    assert q.rank_over(rows) == 1          # torsion dies over Q
    assert q.rank_over(rows, p=3) == 1
