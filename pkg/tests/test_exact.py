import random

import pytest

from subapprox.exact import (
    IntMat,
    clear_denominators,
    complete_to_unimodular,
    det_int,
    gram_det_sq,
    hnf_rows,
    kernel_int,
    laplace_sign,
    lattice_contains,
    normalize_plucker,
    saturate,
    subsets,
    wedge_plucker,
)


def cols(*vectors):
    return IntMat.from_columns(vectors)


def test_gram_det_orthonormal_columns():
    assert gram_det_sq(cols((1, 0, 0, 0), (0, 1, 0, 0))) == 1


def test_gram_det_single_column_is_squared_norm():
    assert gram_det_sq(cols((3, 4))) == 25


def test_gram_det_hand_2x2():
    # Gram [[2,0],[0,2]] -> 4, worked by hand
    assert gram_det_sq(cols((1, 0, 1, 0), (0, 1, 0, 1))) == 4


def test_gram_det_dimension_mismatch():
    with pytest.raises(ValueError):
        gram_det_sq(cols((1, 0), (0, 1), (1, 1)))


def test_wedge_identity_minors():
    assert wedge_plucker(cols((1, 0, 0, 0), (0, 1, 0, 0))) == (1, 0, 0, 0, 0, 0)


def test_wedge_hand_example():
    # (e1+e3) wedge (e2+e4), worked by hand over the lex pairs
    assert wedge_plucker(cols((1, 0, 1, 0), (0, 1, 0, 1))) == (1, 0, 1, -1, 0, 1)


def test_wedge_dependent_columns_rejected():
    with pytest.raises(ValueError):
        wedge_plucker(cols((1, 2, 3), (2, 4, 6)))


def test_cauchy_binet_random():
    rng = random.Random(41)
    for _ in range(60):
        n = rng.randint(2, 6)
        e = rng.randint(1, min(3, n))
        m = cols(*[tuple(rng.randint(-9, 9) for _ in range(n)) for _ in range(e)])
        try:
            w = wedge_plucker(m)
        except ValueError:
            continue
        assert sum(x * x for x in w) == gram_det_sq(m)


def test_normalize_plucker_gcd_and_sign():
    assert normalize_plucker((2, 0, 4, -2, 0, 2), 4, 2).coords == (1, 0, 2, -1, 0, 1)
    assert normalize_plucker((-1, 0, 0, 0, 0, 0), 4, 2).coords == (1, 0, 0, 0, 0, 0)
    assert normalize_plucker((1, 0, 1, -1, 0, 1), 4, 2).coords == (1, 0, 1, -1, 0, 1)


def test_normalize_plucker_zero_rejected():
    with pytest.raises(ValueError):
        normalize_plucker((0, 0, 0, 0, 0, 0), 4, 2)


def test_saturate_gcd_division():
    assert saturate([(2, 0)]).columns == ((1, 0),)


def test_saturate_contains_expected_vector():
    # span{(1,0,0),(0,2,2)} meets Z^3 in Z(1,0,0)+Z(0,1,1); worked via Smith form
    got = saturate([(1, 0, 0), (0, 2, 2)]).columns
    assert (0, 1, 1) in got
    assert len(got) == 2


def test_saturate_index_two_sublattice():
    # (1,1),(1,-1) has determinant 2; saturation is all of Z^2
    got = saturate([(1, 1), (1, -1)])
    assert sorted(got.columns) == [(0, 1), (1, 0)]


def test_saturate_dependent_rejected():
    with pytest.raises(ValueError):
        saturate([(1, 2), (2, 4)])


def test_saturate_idempotent_and_basis_invariant():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(2, 5)
        e = rng.randint(1, min(3, n - 1))
        gens = [tuple(rng.randint(-8, 8) for _ in range(n)) for _ in range(e)]
        try:
            b1 = saturate(gens)
        except ValueError:
            continue
        b2 = saturate(list(b1.columns))
        assert hnf_rows(b1.columns) == hnf_rows(b2.columns)
        w1 = normalize_plucker(wedge_plucker(b1), n, e)
        w2 = normalize_plucker(wedge_plucker(b2), n, e)
        assert w1.coords == w2.coords
        # mixing generators (unimodular combinations) changes nothing
        if e == 2:
            u, v = b1.columns
            mixed = saturate([tuple(3 * a + b for a, b in zip(u, v)), v])
            assert hnf_rows(mixed.columns) == hnf_rows(b1.columns)


def test_kernel_int_simple():
    assert kernel_int([(1, 0, 0)], width=3) == [(0, 1, 0), (0, 0, 1)]
    assert kernel_int([(1, 1, 1)], width=3) == [(1, 0, -1), (0, 1, -1)]


def test_kernel_int_is_saturated():
    # kernel of (2, -4): contains (2,1), saturated basis must be (2,1) itself
    assert kernel_int([(2, -4)], width=2) == [(2, 1)]


def test_laplace_expansion_identity():
    # det M = sum_S sign(S) * minor(first e cols, S) * minor(rest, S complement)
    rng = random.Random(99)
    for _ in range(50):
        n = rng.randint(2, 6)
        e = rng.randint(1, n - 1)
        m = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(n)]
        left = IntMat.from_columns([tuple(r[j] for r in m) for j in range(e)])
        right = IntMat.from_columns([tuple(r[j] for r in m) for j in range(e, n)])
        subs_e = subsets(n, e)
        total = 0
        for s in subs_e:
            comp = tuple(i for i in range(n) if i not in s)
            m1 = det_int([left.entries[i] for i in s])
            m2 = det_int([right.entries[i] for i in comp])
            total += laplace_sign(s) * m1 * m2
        assert total == det_int(m)


def test_laplace_pairing_reverses_lex_order():
    # complement of the i-th e-subset is the (N+1-i)-th (n-e)-subset in lex order
    for n, e in ((4, 2), (5, 2), (5, 3), (6, 3)):
        subs_e = subsets(n, e)
        subs_c = subsets(n, n - e)
        big = len(subs_e)
        for i, s in enumerate(subs_e):
            comp = tuple(x for x in range(n) if x not in s)
            assert subs_c[big - 1 - i] == comp


def test_complete_to_unimodular():
    rng = random.Random(5)
    for _ in range(30):
        n = rng.randint(2, 5)
        e = rng.randint(1, n - 1)
        try:
            basis = saturate([tuple(rng.randint(-6, 6) for _ in range(n)) for _ in range(e)])
        except ValueError:
            continue
        extra = complete_to_unimodular(basis)
        full = [list(c) for c in basis.columns] + [list(u) for u in extra]
        assert abs(det_int([[full[j][i] for j in range(n)] for i in range(n)])) == 1


def test_lattice_contains():
    basis = saturate([(1, 0, 1, 0), (0, 1, 0, 1)])
    assert lattice_contains(basis, (1, 1, 1, 1))
    assert lattice_contains(basis, (2, -3, 2, -3))
    assert not lattice_contains(basis, (1, 0, 0, 0))


def test_clear_denominators():
    from fractions import Fraction

    assert clear_denominators([Fraction(1, 2), Fraction(0), Fraction(3)]) == (1, 0, 6)
    assert clear_denominators([1, 2]) == (1, 2)
