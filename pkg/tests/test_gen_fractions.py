import pytest

from exceptions import DegreeMismatchError, InvalidQueryError, NoCommonRefinementError, NotDominatingError
from forms import basis_form, differential, fiber_volume, function_form
from gen_fractions import (
    GenFraction,
    d_fraction,
    decompose_fraction,
    fraction_equal,
    fraction_is_zero,
    fraction_rescale,
    residue_of_fraction,
    residue_of_sum,
    thom_class,
)
from residue import make_denoms
from ring import CoeffField, RingContext


XY = RingContext(CoeffField(), ("x", "y"))
LINE = RingContext(CoeffField(), ("x",))


def _xy():
    return XY.variable("x"), XY.variable("y")


def _point():
    x, y = _xy()
    return make_denoms(XY, [x, y])


def test_fraction_is_zero_examples():
    x, y = _xy()
    assert fraction_is_zero(GenFraction(fiber_volume(XY, y), _point(), (1, 1)))
    assert not fraction_is_zero(GenFraction(fiber_volume(XY), _point(), (1, 1)))
    assert GenFraction(fiber_volume(XY), _point(), (1, 1)).regularity_certified
    xl = LINE.variable("x")
    assert fraction_is_zero(GenFraction(basis_form(LINE, (0,), xl ** 2), make_denoms(LINE, [xl]), (2,)))


def test_fraction_equal_examples():
    x, y = _xy()
    rotated = make_denoms(XY, [x + y, x - y])
    assert fraction_equal(
        GenFraction(fiber_volume(XY, XY.constant(-2)), rotated, (1, 1)),
        GenFraction(fiber_volume(XY), _point(), (1, 1)),
    )
    assert fraction_equal(
        GenFraction(fiber_volume(XY), _point(), (1, 1)),
        GenFraction(fiber_volume(XY, x), _point(), (2, 1)),
    )
    assert not fraction_equal(
        GenFraction(fiber_volume(XY), _point(), (1, 1)),
        GenFraction(fiber_volume(XY), _point(), (2, 1)),
    )


def test_fraction_equal_is_symmetric_across_denominators():
    x, y = _xy()
    rotated = make_denoms(XY, [x + y, x - y])
    a = GenFraction(fiber_volume(XY, XY.constant(-2)), rotated, (1, 1))
    b = GenFraction(fiber_volume(XY), _point(), (1, 1))
    assert fraction_equal(b, a)


def test_fraction_equal_needs_the_same_ideal():
    x, y = _xy()
    with pytest.raises(NoCommonRefinementError):
        fraction_equal(
            GenFraction(fiber_volume(XY), _point(), (1, 1)),
            GenFraction(fiber_volume(XY), make_denoms(XY, [x - 1, y]), (1, 1)),
        )


def test_fraction_rescale_examples():
    xl = LINE.variable("x")
    rescaled = fraction_rescale(GenFraction(differential(LINE, "x"), make_denoms(LINE, [xl]), (1,)), (2,))
    assert rescaled.numerator == basis_form(LINE, (0,), xl)
    assert rescaled.exponents == (2,)

    x, y = _xy()
    rescaled = fraction_rescale(GenFraction(fiber_volume(XY), _point(), (1, 1)), (1, 2))
    assert rescaled.numerator == fiber_volume(XY, y)
    assert rescaled.exponents == (1, 2)


def test_fraction_rescale_keeps_residue():
    x, y = _xy()
    d = make_denoms(XY, [x ** 2 - y, y ** 2 - 3])
    fr = GenFraction(fiber_volume(XY, x * y + 2 * x), d, (1, 2))
    assert residue_of_fraction(fraction_rescale(fr, (3, 2))) == residue_of_fraction(fr)
    with pytest.raises(NotDominatingError):
        fraction_rescale(fr, (1, 1))


def test_d_fraction_examples():
    xl = LINE.variable("x")
    d = make_denoms(LINE, [xl])

    (term,) = d_fraction(GenFraction(function_form(LINE, LINE.one), d, (1,))).terms
    assert term.numerator == basis_form(LINE, (0,), -LINE.one)
    assert term.exponents == (2,)

    assert d_fraction(GenFraction(function_form(LINE, LINE.zero), d, (1,))).is_empty()

    first, second = d_fraction(GenFraction(function_form(LINE, xl), d, (2,))).terms
    assert first.numerator == differential(LINE, "x")
    assert first.exponents == (2,)
    assert second.numerator == basis_form(LINE, (0,), -2 * xl)
    assert second.exponents == (3,)


def test_d_fraction_has_no_residue():
    x, y = _xy()
    d = make_denoms(XY, [x ** 2 - 1, y - x])
    eta = basis_form(XY, (0,), x * y ** 2)
    total = d_fraction(GenFraction(eta, d, (2, 1)))
    assert residue_of_sum(total, XY) == 0


def test_residue_of_fraction_examples():
    assert residue_of_fraction(GenFraction(fiber_volume(XY), _point(), (1, 1))) == 1
    xl = LINE.variable("x")
    d = make_denoms(LINE, [xl])
    assert residue_of_fraction(GenFraction(differential(LINE, "x"), d, (2,))) == 0
    assert residue_of_fraction(GenFraction(basis_form(LINE, (0,), xl), d, (2,))) == 1


def test_thom_class_and_decomposition():
    x, y = _xy()
    d = make_denoms(XY, [x + y, x - y])
    theta = thom_class(d)
    assert theta.exponents == (1, 1)
    assert residue_of_fraction(theta) == 1

    fr = GenFraction(fiber_volume(XY, (3 * x + 5) * y), make_denoms(XY, [x, y ** 2 - 1]), (2, 1))
    assert residue_of_fraction(fr) == 3
    c, kernel = decompose_fraction(fr)
    # the Thom class of (x, y^2 - 1) has residue 2
    assert c == XY.constant(3, 2)
    assert residue_of_fraction(kernel) == 0


def test_fraction_validation():
    with pytest.raises(InvalidQueryError):
        GenFraction(fiber_volume(XY), _point(), (1,))
    with pytest.raises(InvalidQueryError):
        GenFraction(fiber_volume(XY), _point(), (0, 1))
    with pytest.raises(DegreeMismatchError):
        GenFraction(function_form(XY, XY.one), _point(), (1, 1))
    with pytest.raises(DegreeMismatchError):
        d_fraction(GenFraction(fiber_volume(XY), _point(), (1, 1)))
