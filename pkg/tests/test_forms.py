import pytest

from exceptions import BlockViolationError, DegreeMismatchError, ImageContextError, RingMismatchError
from forms import (
    DiffForm,
    add,
    basis_form,
    d_function,
    differential,
    exterior_derivative,
    fiber_volume,
    function_form,
    pullback,
    top_fiber_coefficient,
    transitivity_wedge,
    wedge,
)
from ring import CoeffField, RingContext


XY = RingContext(CoeffField(), ("x", "y"))


def test_wedge_examples():
    dx, dy = differential(XY, "x"), differential(XY, "y")
    assert wedge(dx, dy).components == {(0, 1): XY.one}
    assert wedge(dy, dx).components == {(0, 1): -XY.one}
    assert wedge(dx, dx).is_zero()
    assert wedge(dx, dx).degree == 2


def test_wedge_is_graded_commutative():
    x, y = XY.variable("x"), XY.variable("y")
    a = add(basis_form(XY, (0,), x), basis_form(XY, (1,), y ** 2))
    b = add(basis_form(XY, (0,), XY.one), basis_form(XY, (1,), x * y))
    assert wedge(a, b) == -wedge(b, a)
    f = function_form(XY, x + 1)
    assert wedge(f, a) == wedge(a, f)


def test_exterior_derivative_examples():
    x, y = XY.variable("x"), XY.variable("y")
    assert d_function(XY, x ** 2) == basis_form(XY, (0,), 2 * x)
    assert exterior_derivative(basis_form(XY, (1,), x)) == basis_form(XY, (0, 1))
    closed = add(basis_form(XY, (1,), x), basis_form(XY, (0,), y))
    assert exterior_derivative(closed).is_zero()


def test_d_squared_vanishes():
    ctx = RingContext(CoeffField(), ("x", "y", "z"))
    x, y, z = (ctx.variable(n) for n in ctx.vars)
    a = add(basis_form(ctx, (0,), x * y * z ** 2), basis_form(ctx, (2,), x ** 3 - y))
    assert exterior_derivative(exterior_derivative(a)).is_zero()
    assert exterior_derivative(d_function(ctx, x * y ** 2 + z)).is_zero()


def test_relative_derivative_skips_base_directions():
    rel = RingContext(CoeffField(), ("u", "T"), 1)
    u, T = rel.variable("u"), rel.variable("T")
    assert d_function(rel, u * T ** 2, relative=True) == basis_form(rel, (1,), 2 * u * T)
    assert d_function(rel, u ** 3, relative=True).is_zero()


def test_pullback_examples():
    line = RingContext(CoeffField(), ("x",))
    x = line.variable("x")
    dy = differential(XY, "y")
    assert pullback(dy, {"y": x ** 2}, line) == basis_form(line, (0,), 2 * x)

    uv = RingContext(CoeffField(), ("u", "v"))
    volume = wedge(differential(XY, "x"), differential(XY, "y"))
    images = {"x": uv.variable("u"), "y": uv.variable("v")}
    assert pullback(volume, images, uv) == basis_form(uv, (0, 1))

    assert pullback(dy, {"y": line.one}, line).is_zero()


def test_pullback_commutes_with_d():
    uv = RingContext(CoeffField(), ("u", "v"))
    u, v = uv.variable("u"), uv.variable("v")
    x, y = XY.variable("x"), XY.variable("y")
    images = {"x": u * v, "y": u + v ** 2}
    a = basis_form(XY, (1,), x ** 2 * y)
    assert pullback(exterior_derivative(a), images, uv) == exterior_derivative(pullback(a, images, uv))


def test_pullback_needs_images_in_target():
    line = RingContext(CoeffField(), ("x",))
    with pytest.raises(ImageContextError):
        pullback(differential(XY, "y"), {}, line)


def test_transitivity_wedge_examples():
    rel = RingContext(CoeffField(), ("u", "T"), 1)
    du, dT = differential(rel, "u"), differential(rel, "T")
    assert transitivity_wedge(du, dT) == wedge(dT, du)
    assert transitivity_wedge(du, dT).components == {(0, 1): -rel.one}

    rel2 = RingContext(CoeffField(), ("u1", "u2", "T"), 2)
    nu = basis_form(rel2, (0, 1))
    mu = differential(rel2, "T")
    # dT ^ du1 ^ du2 = du1 ^ du2 ^ dT
    assert transitivity_wedge(nu, mu) == basis_form(rel2, (0, 1, 2))

    one = function_form(rel, rel.one)
    assert transitivity_wedge(one, dT) == dT


def test_transitivity_wedge_block_checks():
    rel = RingContext(CoeffField(), ("u", "T"), 1)
    du, dT = differential(rel, "u"), differential(rel, "T")
    with pytest.raises(BlockViolationError):
        transitivity_wedge(dT, dT)
    with pytest.raises(BlockViolationError):
        transitivity_wedge(du, du)


def test_form_validation():
    with pytest.raises(DegreeMismatchError):
        add(differential(XY, "x"), function_form(XY, XY.one))
    other = RingContext(CoeffField(), ("s",))
    with pytest.raises(RingMismatchError):
        wedge(differential(XY, "x"), differential(other, "s"))
    with pytest.raises(DegreeMismatchError):
        DiffForm(XY, -1)


def test_top_fiber_coefficient():
    x = XY.variable("x")
    assert top_fiber_coefficient(fiber_volume(XY, x)) == x
    with pytest.raises(DegreeMismatchError):
        top_fiber_coefficient(differential(XY, "x"))


def test_str_uses_wedge_notation():
    x = XY.variable("x")
    assert str(basis_form(XY, (0, 1), x)) == "(x)*d(x)/\\d(y)"
    assert str(DiffForm(XY, 1)) == "0"
