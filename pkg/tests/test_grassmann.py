import random
from fractions import Fraction

import pytest

from subapprox.exact import PluckerVec, gram_det_sq
from subapprox.grassmann import (
    from_generators,
    from_plucker,
    parse_key,
    plucker_relations,
    plucker_relations_check,
    real_view,
)
from subapprox.angles import canonical_angles


def test_from_generators_basics():
    assert from_generators([(1, 0)]).height_sq == 1
    b = from_generators([(1, 0, 1, 0), (0, 1, 0, 1)])
    assert b.height_sq == 4
    assert b.plucker.coords == (1, 0, 1, -1, 0, 1)


def test_from_generators_full_space_via_fractions():
    b = from_generators([(Fraction(1, 2), 0), (0, 3)])
    assert b.height_sq == 1
    assert b.plucker.coords == (1,)


def test_from_generators_dependent_rejected():
    with pytest.raises(ValueError):
        from_generators([(1, 2, 3), (2, 4, 6)])


def test_basis_independence():
    rng = random.Random(11)
    for _ in range(50):
        n = rng.randint(2, 6)
        e = rng.randint(1, min(3, n))
        gens = [tuple(rng.randint(-7, 7) for _ in range(n)) for _ in range(e)]
        try:
            b1 = from_generators(gens)
        except ValueError:
            continue
        # rescale and recombine the generators; the subspace is unchanged
        gens2 = [tuple(Fraction(x, 3) for x in gens[0])] + [
            tuple(a + 2 * b for a, b in zip(g, gens[0])) for g in gens[1:]
        ]
        b2 = from_generators(gens2)
        assert b1.plucker == b2.plucker
        assert b1.lattice_basis == b2.lattice_basis


def test_height_identity_random():
    rng = random.Random(23)
    done = 0
    while done < 80:
        n = rng.randint(2, 6)
        e = rng.randint(1, min(3, n))
        gens = [tuple(rng.randint(-20, 20) for _ in range(n)) for _ in range(e)]
        try:
            b = from_generators(gens)
        except ValueError:
            continue
        assert b.height_sq == gram_det_sq(b.lattice_basis)
        assert b.height_sq == b.plucker.norm_sq
        done += 1


def test_relations_42_explicit_form():
    rels = plucker_relations(4, 2)
    assert len(rels) == 1
    # p1*p6 - p2*p5 + p3*p4 = 0 up to overall sign, in 0-based indices
    (rel,) = rels
    assert sorted((i, j) for _, i, j in rel) == [(0, 5), (1, 4), (2, 3)]
    coeff = {(i, j): c for c, i, j in rel}
    s = coeff[(0, 5)]
    assert coeff[(1, 4)] == -s and coeff[(2, 3)] == s


def test_relations_53_match_known_system():
    # the five quadrics for 3-subspaces of R^5, 0-based index pairs
    expected = {
        ((0, 5, -1), (1, 4, 1), (2, 3, -1)),
        ((0, 8, -1), (1, 7, 1), (2, 6, -1)),
        ((0, 9, -1), (3, 7, 1), (4, 6, -1)),
        ((1, 9, -1), (3, 8, 1), (5, 6, -1)),
        ((2, 9, -1), (4, 8, 1), (5, 7, -1)),
    }
    got = set()
    for rel in plucker_relations(5, 3):
        canon = tuple(sorted((i, j, c) for c, i, j in rel))
        lead = canon[0][2]
        if lead > 0:
            canon = tuple((i, j, -c) for i, j, c in canon)
        got.add(canon)
    assert got == expected


def test_relations_check_examples():
    assert plucker_relations_check((1, 0, 0, 0, 0, 0), 4, 2)
    assert plucker_relations_check((1, 0, 1, -1, 0, 1), 4, 2)
    assert not plucker_relations_check((1, 0, 0, 0, 0, 1), 4, 2)
    with pytest.raises(ValueError):
        plucker_relations_check((1, 0), 4, 2)


def test_relations_hold_for_random_wedges():
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randint(4, 6)
        e = rng.randint(2, n - 2)
        gens = [tuple(rng.randint(-6, 6) for _ in range(n)) for _ in range(e)]
        try:
            b = from_generators(gens)
        except ValueError:
            continue
        assert plucker_relations_check(b.plucker.coords, n, e)


def test_from_plucker_examples():
    b = from_plucker(PluckerVec(4, 2, (1, 0, 0, 0, 0, 0)))
    assert sorted(b.basis_vectors()) == [(0, 1, 0, 0), (1, 0, 0, 0)]
    b = from_plucker(PluckerVec(4, 2, (1, 0, 1, -1, 0, 1)))
    assert sorted(b.basis_vectors()) == [(0, 1, 0, 1), (1, 0, 1, 0)]
    with pytest.raises(ValueError):
        from_plucker(PluckerVec(4, 2, (1, 0, 0, 0, 0, 1)))


def test_from_plucker_round_trip():
    rng = random.Random(17)
    done = 0
    while done < 60:
        n = rng.randint(2, 6)
        e = rng.randint(1, min(3, n))
        gens = [tuple(rng.randint(-9, 9) for _ in range(n)) for _ in range(e)]
        try:
            b = from_generators(gens)
        except ValueError:
            continue
        b2 = from_plucker(b.plucker)
        assert b2.plucker == b.plucker
        assert b2.lattice_basis == b.lattice_basis
        done += 1


def test_real_view_self_angle():
    b = from_generators([(1, 1)])
    rv = real_view(b, 128)
    x = rv.basis[0]
    assert abs(float(x[0]) - 0.7071067811865476) < 1e-15
    prof = canonical_angles(rv, rv)
    assert all(float(s) < 1e-30 for s in prof.sines)


def test_real_view_coordinate_plane():
    b = from_generators([(1, 0, 0, 0), (0, 1, 0, 0)])
    rv = real_view(b, 128)
    prof = canonical_angles(rv, rv)
    assert all(float(s) < 1e-30 for s in prof.sines)


def test_key_round_trip():
    b = from_generators([(1, 0, 1, 0), (0, 1, 0, 1)])
    assert b.key == "4 2 : 1 0 1 -1 0 1"
    v = parse_key(b.key)
    assert v == b.plucker
    with pytest.raises(ValueError):
        parse_key("nonsense")
