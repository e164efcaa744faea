import random
from itertools import product
from math import comb

import pytest

from exceptions import InvalidQueryError, LevelOverflowError, TwistMismatchError
from forms import fiber_volume
from gen_fractions import GenFraction, residue_of_fraction
from projective import (
    CechCochain,
    add_cochains,
    class_is_zero,
    coboundary,
    cohomology_dim,
    cohomology_representative,
    fraction_to_cech_class,
    local_cohomology_dims,
    pn_integral,
    scale_cochain,
    solve_coboundary,
)
from residue import make_denoms
from ring import CoeffField, RingContext, constant_value


QQ = CoeffField()
K = QQ.domain


def _mu(r):
    return fraction_to_cech_class(r, (1,) * r)


def _random_cochain(rng, r, twist, level):
    entries = {}
    for S in product(range(r + 1), repeat=level + 1):
        if list(S) != sorted(set(S)):
            continue
        terms = {}
        for _ in range(3):
            a = [rng.randint(-2, 0) if i in S else 0 for i in range(r + 1)]
            # put the leftover degree on an index of S
            a[S[0]] += twist - sum(a)
            terms[tuple(a)] = K(rng.randint(-3, 3))
        entries[S] = terms
    return CechCochain(r, twist, level, QQ, entries)


def test_coboundary_examples():
    constant = CechCochain(1, 0, 0, QQ, {(0,): {(0, 0): K.one}, (1,): {(0, 0): K.one}})
    assert coboundary(constant).is_zero()

    c = CechCochain(1, 0, 0, QQ, {(0,): {(-1, 1): K.one}})
    assert coboundary(c) == CechCochain(1, 0, 1, QQ, {(0, 1): {(-1, 1): -K.one}})


def test_coboundary_squares_to_zero():
    rng = random.Random(11)
    for r in (2, 3):
        for level in range(r - 1):
            c = _random_cochain(rng, r, rng.randint(-3, 2), level)
            assert coboundary(coboundary(c)).is_zero()


def test_coboundary_level_overflow():
    with pytest.raises(LevelOverflowError):
        coboundary(_mu(2))


def test_cochain_validation():
    with pytest.raises(TwistMismatchError):
        CechCochain(1, 0, 0, QQ, {(0,): {(1, 1): K.one}})
    with pytest.raises(InvalidQueryError):
        CechCochain(1, 0, 0, QQ, {(1,): {(-1, 1): K.one}})
    with pytest.raises(InvalidQueryError):
        CechCochain(1, 0, 2, QQ)


def test_cohomology_dim_examples():
    assert cohomology_dim(1, -2, 1) == 1
    assert cohomology_dim(2, 0, 0) == 1
    assert cohomology_dim(2, -3, 2) == 1
    assert cohomology_dim(1, -1, 1) == 0


def test_cohomology_dim_matches_binomials():
    for r in range(1, 4):
        for d in range(-6, 7):
            for q in range(r + 1):
                if q == 0 and d >= 0:
                    expected = comb(d + r, r)
                elif q == r and d <= -r - 1:
                    expected = comb(-d - 1, r)
                else:
                    expected = 0
                assert cohomology_dim(r, d, q) == expected, (r, d, q)


def test_fraction_to_cech_class_examples():
    assert _mu(2).entries == {(0, 1, 2): {(-1, -1, -1): K.one}}
    assert fraction_to_cech_class(2, (2, 1)).entries == {(0, 1, 2): {(0, -2, -1): K.one}}
    assert fraction_to_cech_class(1, (1,)).entries == {(0, 1): {(-1, -1): K.one}}


def test_class_is_zero_examples():
    zero, witness = class_is_zero(fraction_to_cech_class(2, (2, 1)))
    assert zero
    assert coboundary(witness) == fraction_to_cech_class(2, (2, 1))

    zero, witness = class_is_zero(_mu(2))
    assert not zero
    assert witness is None

    zero, _ = class_is_zero(CechCochain(2, -3, 2, QQ))
    assert zero


def test_pn_integral_examples():
    assert pn_integral(_mu(2)) == K.one
    assert pn_integral(fraction_to_cech_class(2, (2, 1))) == K.zero
    assert pn_integral(scale_cochain(_mu(2), K(5))) == K(5)
    with pytest.raises(TwistMismatchError):
        pn_integral(CechCochain(2, 0, 2, QQ))


def test_pn_integral_ignores_coboundaries():
    rng = random.Random(5)
    for r in (1, 2):
        mu = scale_cochain(_mu(r), K(3))
        for _ in range(5):
            x = _random_cochain(rng, r, -r - 1, r - 1)
            assert pn_integral(add_cochains(mu, coboundary(x))) == K(3)


def test_integral_agrees_with_affine_residue():
    for r in (1, 2):
        ctx = RingContext(QQ, ("x", "y")[:r])
        d = make_denoms(ctx, [ctx.variable(name) for name in ctx.vars])
        for alpha in product(range(1, 4), repeat=r):
            residue = residue_of_fraction(GenFraction(fiber_volume(ctx), d, alpha))
            assert pn_integral(fraction_to_cech_class(r, alpha)) == constant_value(residue)


def test_local_cohomology_dims():
    assert local_cohomology_dims(2, frozenset()) == [1, 0, 0]
    assert local_cohomology_dims(2, frozenset({0, 1, 2})) == [0, 0, 1]
    assert local_cohomology_dims(1, frozenset({0})) == [0, 0]


def test_solve_coboundary():
    c = CechCochain(1, 0, 0, QQ, {(0,): {(-1, 1): K.one}})
    target = coboundary(c)
    witness = solve_coboundary(target)
    assert witness is not None
    assert coboundary(witness) == target
    assert solve_coboundary(_mu(1)) is None
    assert solve_coboundary(c) is None


def test_cohomology_representative_drops_the_coboundary_part():
    c = CechCochain(1, -2, 1, QQ, {(0, 1): {(-1, -1): K.one, (1, -3): K(2)}})
    representative, witness = cohomology_representative(c)
    assert representative.entries == {(0, 1): {(-1, -1): K.one}}
    assert coboundary(witness) == add_cochains(c, scale_cochain(representative, -K.one))

    representative, witness = cohomology_representative(_mu(1))
    assert representative == _mu(1)
    assert witness is None
    with pytest.raises(InvalidQueryError):
        cohomology_representative(CechCochain(1, -2, 0, QQ))
