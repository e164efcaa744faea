"""Differential forms over a polynomial ring.

A form of degree p is stored on the sorted basis dx_{i1}^...^dx_{ip} with
i1 < ... < ip; wedge products resolve to that basis with the sign of the
sorting permutation.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from exceptions import (
    BlockViolationError,
    DegreeMismatchError,
    ImageContextError,
    InvalidQueryError,
    RingMismatchError,
    UnknownVariableError,
)
from ring import Poly, RingContext, substitute

logger = logging.getLogger(__name__)

Indices = Tuple[int, ...]


def _sort_sign(indices: Sequence[int]) -> int:
    """Sign of the permutation sorting ``indices``; 0 on a repeated index."""
    if len(set(indices)) != len(indices):
        return 0
    inversions = sum(1 for a in range(len(indices)) for b in range(a + 1, len(indices)) if indices[a] > indices[b])
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class DiffForm:
    ctx: RingContext
    degree: int
    components: Dict[Indices, Poly] = field(default_factory=dict)

    def __post_init__(self):
        # a form past the top degree can only be zero
        if self.degree < 0 or (self.degree > self.ctx.nvars and any(self.components.values())):
            raise DegreeMismatchError(f"degree {self.degree} impossible with {self.ctx.nvars} variables")
        clean = {}
        for key, coeff in self.components.items():
            key = tuple(key)
            if len(key) != self.degree or list(key) != sorted(set(key)):
                raise InvalidQueryError(f"component {key} is not a sorted index tuple of length {self.degree}")
            if key and not (0 <= key[0] and key[-1] < self.ctx.nvars):
                raise InvalidQueryError(f"component {key} out of range")
            if coeff.ring != self.ctx.ring:
                raise RingMismatchError(f"coefficient {coeff.as_expr()} is not in {self.ctx}")
            if coeff:
                clean[key] = coeff
        object.__setattr__(self, "components", clean)

    def is_zero(self) -> bool:
        return not self.components

    def coefficient(self, indices: Indices) -> Poly:
        return self.components.get(tuple(indices), self.ctx.zero)

    def __add__(self, other: "DiffForm") -> "DiffForm":
        return add(self, other)

    def __neg__(self) -> "DiffForm":
        return scale(self, -self.ctx.one)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return add(self, -other)

    def __str__(self) -> str:
        if not self.components:
            return "0"
        parts = []
        for key in sorted(self.components):
            basis = "/\\".join(f"d({self.ctx.vars[i]})" for i in key)
            coeff = self.components[key].as_expr()
            parts.append(f"({coeff})*{basis}" if basis else f"{coeff}")
        return " + ".join(parts)


def function_form(ctx: RingContext, g: Poly) -> DiffForm:
    return DiffForm(ctx, 0, {(): g})


def basis_form(ctx: RingContext, indices: Sequence[int], coeff: Optional[Poly] = None) -> DiffForm:
    """``coeff * dx_{i1}^...`` for indices in any order (the sorting sign is applied)."""
    coeff = ctx.one if coeff is None else coeff
    sign = _sort_sign(indices)
    if not sign:
        return DiffForm(ctx, len(indices))
    return DiffForm(ctx, len(indices), {tuple(sorted(indices)): coeff if sign > 0 else -coeff})


def differential(ctx: RingContext, name: str) -> DiffForm:
    return basis_form(ctx, (ctx.index(name),))


def fiber_volume(ctx: RingContext, coeff: Optional[Poly] = None) -> DiffForm:
    """``coeff * dT_1^...^dT_r`` over the fiber block."""
    return basis_form(ctx, tuple(ctx.fiber_indices), coeff)


def add(a: DiffForm, b: DiffForm) -> DiffForm:
    if a.ctx != b.ctx:
        raise RingMismatchError(f"forms live in {a.ctx} and {b.ctx}")
    if a.degree != b.degree:
        raise DegreeMismatchError(f"cannot add forms of degree {a.degree} and {b.degree}")
    out = dict(a.components)
    for key, coeff in b.components.items():
        out[key] = out.get(key, a.ctx.zero) + coeff
    return DiffForm(a.ctx, a.degree, out)


def scale(a: DiffForm, g: Poly) -> DiffForm:
    return DiffForm(a.ctx, a.degree, {key: g * coeff for key, coeff in a.components.items()})


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    if a.ctx != b.ctx:
        raise RingMismatchError(f"forms live in {a.ctx} and {b.ctx}")
    degree = a.degree + b.degree
    out: Dict[Indices, Poly] = {}
    for I, f in a.components.items():
        for J, g in b.components.items():
            sign = _sort_sign(I + J)
            if not sign:
                continue
            key = tuple(sorted(I + J))
            term = f * g
            out[key] = out.get(key, a.ctx.zero) + (term if sign > 0 else -term)
    return DiffForm(a.ctx, degree, out)


def wedge_all(forms: Iterable[DiffForm], ctx: RingContext) -> DiffForm:
    result = function_form(ctx, ctx.one)
    for form in forms:
        result = wedge(result, form)
    return result


def exterior_derivative(a: DiffForm, relative: bool = False) -> DiffForm:
    """d over the coefficient field, or over the base block when ``relative``."""
    ctx = a.ctx
    gens = ctx.ring.gens
    variables = ctx.fiber_indices if relative else range(ctx.nvars)
    out: Dict[Indices, Poly] = {}
    for I, g in a.components.items():
        for k in variables:
            if k in I:
                continue
            partial = g.diff(gens[k])
            if not partial:
                continue
            before = sum(1 for i in I if i < k)
            key = tuple(sorted(I + (k,)))
            out[key] = out.get(key, ctx.zero) + (-partial if before % 2 else partial)
    return DiffForm(ctx, a.degree + 1, out)


def d_function(ctx: RingContext, g: Poly, relative: bool = False) -> DiffForm:
    return exterior_derivative(function_form(ctx, g), relative)


def pullback(a: DiffForm, assignment: Mapping[str, Poly], target: RingContext) -> DiffForm:
    """Image of ``a`` under the ring map sending each variable to its assigned image."""
    images = []
    for name in a.ctx.vars:
        if name in assignment:
            image = assignment[name]
            if image.ring != target.ring:
                raise ImageContextError(f"image of {name} is not in {target}")
        else:
            try:
                image = target.variable(name)
            except UnknownVariableError:
                raise ImageContextError(f"variable {name} has no image in {target}")
        images.append(image)
    differentials = [d_function(target, image) for image in images]
    result = DiffForm(target, a.degree)
    for I, g in a.components.items():
        term = function_form(target, substitute(g, assignment, target))
        for i in I:
            term = wedge(term, differentials[i])
        result = add(result, term)
    return result


def transitivity_wedge(nu: DiffForm, mu: DiffForm) -> DiffForm:
    """``mu ^ nu`` for a base form ``nu`` and a fiber form ``mu`` (fiber form first)."""
    ctx = nu.ctx
    if mu.ctx != ctx:
        raise RingMismatchError(f"forms live in {ctx} and {mu.ctx}")
    b = ctx.base_block
    if any(i >= b for key in nu.components for i in key):
        raise BlockViolationError("the base form involves fiber differentials")
    if any(i < b for key in mu.components for i in key):
        raise BlockViolationError("the fiber form involves base differentials")
    return wedge(mu, nu)


def top_fiber_coefficient(a: DiffForm) -> Poly:
    """g for a form g * dT_1^...^dT_r of top fiber degree."""
    ctx = a.ctx
    top = tuple(ctx.fiber_indices)
    if a.degree != len(top):
        raise DegreeMismatchError(f"expected a form of degree {len(top)}, got degree {a.degree}")
    extra = [key for key in a.components if key != top]
    if extra:
        raise DegreeMismatchError(f"form has components off the fiber volume: {extra}")
    return a.coefficient(top)
