"""Residue symbols, the transformation law and Tate's trace construction.

Every residue is computed the same way: rewrite the denominators as monic
eliminants p_i(T_i) through Groebner cofactors, multiply the numerator by the
determinant of the transition matrix, then peel off one fiber variable at a
time (last variable first) by monic division and coefficient extraction.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.ntheory.multinomial import multinomial_coefficients
from sympy.polys.matrices import DomainMatrix

from exceptions import (
    DegreeMismatchError,
    IdentityCheckError,
    InvalidQueryError,
    NoCommonRefinementError,
    NotZeroDimensionalError,
    RingMismatchError,
)
from forms import DiffForm, fiber_volume, top_fiber_coefficient
from groebner import (
    GroebnerBasis,
    QuotientAlgebra,
    buchberger,
    certify_zero_dimensional,
    coordinates,
    divide,
    monic_eliminant,
    normal_form,
    own,
    quotient_algebra,
)
from ring import Poly, RingContext, base_coefficients, constant_value, substitute

logger = logging.getLogger(__name__)

# A residue is a polynomial in the base variables (a constant when there are none).
ResidueValue = Poly
Matrix = Tuple[Tuple[Poly, ...], ...]


@dataclass(frozen=True)
class DenomTuple:
    ctx: RingContext
    denoms: Tuple[Poly, ...]
    # (base tuple, exponents) when this tuple is a power t^b of a certified tuple
    origin: Optional[Tuple["DenomTuple", Tuple[int, ...]]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "denoms", tuple(own(self.ctx, f) for f in self.denoms))
        r = len(self.ctx.fiber_vars)
        if len(self.denoms) != r:
            raise DegreeMismatchError(f"expected {r} denominators, got {len(self.denoms)}")

    @property
    def r(self) -> int:
        return len(self.denoms)

    @cached_property
    def gb(self) -> GroebnerBasis:
        return buchberger(self.ctx, self.denoms)

    @cached_property
    def quotient(self) -> QuotientAlgebra:
        return quotient_algebra(self.gb)

    def certify(self) -> "DenomTuple":
        if self.origin is not None:
            self.origin[0].certify()
            return self
        if certify_zero_dimensional(self.gb) is None:
            raise NotZeroDimensionalError(
                f"({', '.join(str(f.as_expr()) for f in self.denoms)}) is not zero-dimensional"
            )
        return self

    @cached_property
    def pure_powers(self) -> "TransformWitness":
        """Witness rewriting the tuple as monic eliminants p_i(T_i)."""
        if self.origin is not None:
            base, exponents = self.origin
            return _raised_witness(base.certify().pure_powers, self, exponents)
        return _eliminant_witness(self.certify())

    @cached_property
    def _powers(self) -> Dict[Tuple[int, ...], "DenomTuple"]:
        return {}

    def power(self, exponents: Sequence[int]) -> "DenomTuple":
        """The tuple t_1^b_1, ..., t_r^b_r, shared between calls with the same exponents."""
        exponents = tuple(exponents)
        if len(exponents) != self.r or any(b < 1 for b in exponents):
            raise InvalidQueryError(f"exponents {exponents} must be {self.r} positive integers")
        if all(b == 1 for b in exponents):
            return self
        if exponents not in self._powers:
            powered = tuple(t ** b for t, b in zip(self.denoms, exponents))
            self._powers[exponents] = DenomTuple(self.ctx, powered, (self, exponents))
        return self._powers[exponents]

    def __str__(self) -> str:
        return ", ".join(str(f.as_expr()) for f in self.denoms)


def make_denoms(ctx: RingContext, denoms: Sequence[Poly]) -> DenomTuple:
    return DenomTuple(ctx, tuple(denoms)).certify()


def matrix_determinant(ctx: RingContext, rows: Sequence[Sequence[Poly]]) -> Poly:
    n = len(rows)
    if n == 0:
        return ctx.one
    return DomainMatrix([list(row) for row in rows], (n, n), ctx.ring.to_domain()).det()


@dataclass(frozen=True)
class TransformWitness:
    u: Matrix
    det_u: Poly
    source: DenomTuple
    target: DenomTuple

    def check(self) -> "TransformWitness":
        ring = self.source.ctx.ring
        for i, t in enumerate(self.target.denoms):
            total = ring.zero
            for j, s in enumerate(self.source.denoms):
                total += self.u[i][j] * s
            if total != t:
                raise IdentityCheckError(f"row {i} of the transition matrix does not produce {t.as_expr()}")
        if matrix_determinant(self.source.ctx, self.u) != self.det_u:
            raise IdentityCheckError("stored determinant differs from det(u)")
        return self


def express_in_terms_of(source: DenomTuple, target: Sequence[Poly]) -> TransformWitness:
    """Witness ``target_i = sum_j u_ij source_j``, from the cofactors of the source basis."""
    ctx = source.ctx
    rows = []
    for t in target:
        remainder, witness = normal_form(t, source.gb)
        if remainder:
            raise NoCommonRefinementError(f"{t.as_expr()} is not in the ideal ({source})")
        rows.append(witness.cofactors)
    u = tuple(tuple(row) for row in rows)
    target_tuple = DenomTuple(ctx, tuple(own(ctx, t) for t in target))
    return TransformWitness(u, matrix_determinant(ctx, u), source, target_tuple).check()


def _eliminant_witness(d: DenomTuple) -> TransformWitness:
    eliminants = [monic_eliminant(d.quotient, name) for name in d.ctx.fiber_vars]
    witness = express_in_terms_of(d, eliminants)
    logger.debug(f"Eliminants of ({d}): {[p.as_expr() for p in eliminants]}, det(u) = {witness.det_u.as_expr()}")
    return witness


def _raised_witness(base: TransformWitness, d: DenomTuple, exponents: Tuple[int, ...]) -> TransformWitness:
    """From p = u t, write p_i^N over t^b with N = sum(b - 1) + 1 by expanding (sum_j u_ij t_j)^N."""
    ctx = d.ctx
    r = d.r
    N = sum(b - 1 for b in exponents) + 1
    t = base.source.denoms
    expansion = multinomial_coefficients(r, N)
    rows = []
    for i in range(r):
        powers = [[ctx.one] for _ in range(r)]
        for j in range(r):
            a = base.u[i][j] * t[j]
            for _ in range(N):
                powers[j].append(powers[j][-1] * a)
        row = [ctx.zero] * r
        for k, c in expansion.items():
            # some k_j >= b_j since sum(k) = N exceeds sum(b - 1)
            j = next(j for j in range(r) if k[j] >= exponents[j])
            term = ctx.constant(c) * base.u[i][j] ** exponents[j] * powers[j][k[j] - exponents[j]]
            for l in range(r):
                if l != j:
                    term *= powers[l][k[l]]
            row[j] += term
        rows.append(tuple(row))
    u = tuple(rows)
    target = DenomTuple(ctx, tuple(p ** N for p in base.target.denoms))
    logger.debug(f"Raised eliminants of ({base.source}) to the power {N} over exponents {exponents}")
    return TransformWitness(u, matrix_determinant(ctx, u), d, target).check()


def to_pure_powers(d: DenomTuple) -> TransformWitness:
    """Rewrite ``d`` as monic eliminants p_i(T_i), which are the pure powers T_i^e_i at the origin."""
    return d.certify().pure_powers


def _check_monic(p: Poly, k: int, b: int) -> int:
    e = p.degree(k)
    for monom, coeff in p.iterterms():
        if any(monom[i] for i in range(b, len(monom)) if i != k):
            raise IdentityCheckError(f"eliminant {p.as_expr()} involves other fiber variables")
        if monom[k] == e and (any(monom[:b]) or coeff != p.ring.domain.one):
            raise IdentityCheckError(f"eliminant {p.as_expr()} is not monic")
    return e


def _reduce_monic(h: Poly, p: Poly, k: int, e: int) -> Poly:
    """Remainder of ``h`` modulo ``p``, monic of degree ``e`` in variable ``k``."""
    ring = h.ring
    tail = ring.term_new(tuple(e if i == k else 0 for i in range(ring.ngens)), ring.domain.one) - p
    while True:
        high = {m: c for m, c in h.iterterms() if m[k] >= e}
        if not high:
            return h
        low = h - ring.from_dict(high)
        shifted = ring.from_dict({tuple(x - e if i == k else x for i, x in enumerate(m)): c for m, c in high.items()})
        h = low + shifted * tail


def _extract(h: Poly, k: int, exponent: int) -> Poly:
    """Terms of ``h`` with T_k^exponent, with that variable removed."""
    ring = h.ring
    return ring.from_dict({
        tuple(0 if i == k else x for i, x in enumerate(m)): c
        for m, c in h.iterterms() if m[k] == exponent
    })


def residue_monomial(omega: DiffForm, alpha: Sequence[int]) -> ResidueValue:
    """Residue of ``omega`` over T_1^a_1, ..., T_r^a_r: the coefficient of T^(alpha - 1)."""
    ctx = omega.ctx
    g = top_fiber_coefficient(omega)
    fiber = list(ctx.fiber_indices)
    if len(alpha) != len(fiber) or any(a < 1 for a in alpha):
        raise InvalidQueryError(f"exponents {tuple(alpha)} must be {len(fiber)} positive integers")
    for k, a in zip(fiber, alpha):
        g = _extract(g, k, a - 1)
    return g


def residue_symbol(omega: DiffForm, d: DenomTuple) -> ResidueValue:
    """Res[omega; d] for a top fiber form over a zero-dimensional denominator tuple."""
    if omega.ctx != d.ctx:
        raise RingMismatchError(f"form lives in {omega.ctx}, denominators in {d.ctx}")
    g = top_fiber_coefficient(omega)
    witness = to_pure_powers(d)
    h = witness.det_u * g
    ctx = d.ctx
    for k, p in reversed(list(zip(ctx.fiber_indices, witness.target.denoms))):
        e = _check_monic(p, k, ctx.base_block)
        if e == 0:
            return ctx.zero
        h = _extract(_reduce_monic(h, p, k, e), k, e - 1)
    if not ctx.is_base_element(h):
        raise IdentityCheckError(f"residue {h.as_expr()} still involves fiber variables")
    return h


def jacobian_determinant(ctx: RingContext, fs: Sequence[Poly]) -> Poly:
    """det(df_i/dT_j) over the fiber variables."""
    gens = ctx.ring.gens
    rows = [[f.diff(gens[j]) for j in ctx.fiber_indices] for f in fs]
    return matrix_determinant(ctx, rows)


def residue_pairing_gram(d: DenomTuple) -> Tuple[Matrix, Poly]:
    """Gram matrix of the residue pairing on the standard monomials, with its determinant."""
    q = d.certify().quotient
    basis = [q.basis_element(k) for k in range(q.rank)]
    rows = tuple(
        tuple(residue_symbol(fiber_volume(d.ctx, bi * bj), d) for bj in basis)
        for bi in basis
    )
    return rows, matrix_determinant(d.ctx, rows)


def dual_basis(d: DenomTuple) -> List[Poly]:
    """Elements b*_i with Res[b*_i b_j dT; d] = 1 if i = j, else 0 (coefficient field only)."""
    if d.ctx.is_relative:
        raise InvalidQueryError("the dual basis is only computed over the coefficient field")
    q = d.quotient
    gram, det = residue_pairing_gram(d)
    if not det:
        raise IdentityCheckError(f"residue pairing of ({d}) is degenerate")
    K = d.ctx.domain
    G = DomainMatrix([[constant_value(x) for x in row] for row in gram], (q.rank, q.rank), K)
    inverse = G.inv()
    dual = []
    for i in range(q.rank):
        element = d.ctx.zero
        for k in range(q.rank):
            element += d.ctx.ring.ground_new(inverse[i, k].element) * q.basis_element(k)
        dual.append(element)
    return dual


@dataclass(frozen=True)
class TatePresentation:
    source: DenomTuple
    doubled: RingContext
    substitution_order: Tuple[int, ...]
    h: Matrix
    delta: Poly
    delta_bar: Poly
    D: Matrix
    jac_class: Poly
    lambda_values: Tuple[Poly, ...]

    @property
    def quotient(self) -> QuotientAlgebra:
        return self.source.quotient


def doubled_context(ctx: RingContext) -> Tuple[RingContext, Dict[str, str]]:
    """Base variables, fiber variables as X, then a second copy Y of the fiber variables."""
    copies = {}
    for name in ctx.fiber_vars:
        copy = f"{name}_Y"
        while copy in ctx.vars or copy in copies.values():
            copy += "_"
        copies[name] = copy
    return RingContext(ctx.coeff, ctx.vars + tuple(copies.values()), ctx.base_block), copies


def _exact_quotient(p: Poly, divisor: Poly) -> Poly:
    quotients, remainder = divide(p, [divisor])
    if remainder:
        raise IdentityCheckError(f"{divisor.as_expr()} does not divide the divided difference")
    return quotients[0]


def _solve_lambda(ctx: RingContext, D: Matrix) -> Tuple[Poly, ...]:
    """First column of D^-1 by Cayley-Hamilton; det(D) must be a unit."""
    n = len(D)
    coefficients = DomainMatrix([list(row) for row in D], (n, n), ctx.ring.to_domain()).charpoly()
    try:
        c_n = constant_value(coefficients[-1])
    except InvalidQueryError:
        raise IdentityCheckError("Tate matrix has a non-unit determinant over the base")
    if not c_n:
        raise IdentityCheckError("Tate matrix is singular")
    e0 = [ctx.one] + [ctx.zero] * (n - 1)
    w = list(e0)
    for k in range(1, n):
        w = [sum((D[i][j] * w[j] for j in range(n)), ctx.zero) + coefficients[k] * e0[i] for i in range(n)]
    scale = ctx.ring.ground_new(ctx.domain.quo(-ctx.domain.one, c_n))
    ell = tuple(scale * x for x in w)
    for i in range(n):
        value = sum((D[i][j] * ell[j] for j in range(n)), ctx.zero)
        if value != e0[i]:
            raise IdentityCheckError("lambda does not solve the Tate system")
    return ell


def tate_presentation(d: DenomTuple, substitution_order: Optional[Sequence[int]] = None) -> TatePresentation:
    """Divided differences, Delta and its reduced class for a zero-dimensional presentation."""
    ctx = d.ctx
    q = d.certify().quotient
    r = d.r
    order = tuple(range(r)) if substitution_order is None else tuple(substitution_order)
    if sorted(order) != list(range(r)):
        raise InvalidQueryError(f"substitution order {order} is not a permutation of 0..{r - 1}")
    doubled, copies = doubled_context(ctx)
    fiber_names = ctx.fiber_vars
    X = [doubled.variable(name) for name in fiber_names]
    Y = [doubled.variable(copies[name]) for name in fiber_names]

    h_rows = []
    for f in d.denoms:
        current = doubled.convert(f)
        row = [doubled.zero] * r
        for j in order:
            following = substitute(current, {fiber_names[j]: Y[j]}, doubled)
            row[j] = _exact_quotient(current - following, X[j] - Y[j])
            current = following
        total = sum((row[j] * (X[j] - Y[j]) for j in range(r)), doubled.zero)
        to_y = {name: Y[k] for k, name in enumerate(fiber_names)}
        if total != doubled.convert(f) - substitute(doubled.convert(f), to_y, doubled):
            raise IdentityCheckError("divided differences do not telescope")
        h_rows.append(tuple(row))
    h = tuple(h_rows)
    delta = matrix_determinant(doubled, h)

    to_y = {name: Y[k] for k, name in enumerate(fiber_names)}
    reducers = [doubled.convert(g) for g in d.gb.basis] + \
        [substitute(doubled.convert(g), to_y, doubled) for g in d.gb.basis]
    _, delta_bar = divide(delta, reducers)

    n = q.rank
    b = ctx.base_block
    D_rows = [[ctx.zero] * n for _ in range(n)]
    for fiber, coeff in base_coefficients(doubled, delta_bar).items():
        left = (0,) * b + fiber[:r]
        right = (0,) * b + fiber[r:]
        if left not in q.position or right not in q.position:
            raise IdentityCheckError(f"reduced Delta leaves the standard basis at {fiber}")
        D_rows[q.position[left]][q.position[right]] = ctx.convert(coeff)
    D = tuple(tuple(row) for row in D_rows)

    jac_class, _ = normal_form(jacobian_determinant(ctx, d.denoms), d.gb)
    to_x = {copies[name]: X[k] for k, name in enumerate(fiber_names)}
    collapsed, _ = normal_form(ctx.convert(substitute(delta_bar, to_x, doubled)), d.gb)
    if collapsed != jac_class:
        raise IdentityCheckError("m(reduced Delta) differs from the Jacobian class")

    lambda_values = _solve_lambda(ctx, D) if n else ()
    logger.debug(f"Tate presentation of ({d}): rank {n}, lambda = {[x.as_expr() for x in lambda_values]}")
    return TatePresentation(d, doubled, order, h, delta, delta_bar, D, jac_class, lambda_values)


def diagonal_image(pres: TatePresentation) -> Poly:
    """m(reduced Delta) as an element of C."""
    ctx = pres.source.ctx
    copies = doubled_context(ctx)[1]
    to_x = {copies[name]: pres.doubled.variable(name) for name in ctx.fiber_vars}
    image = ctx.convert(substitute(pres.delta_bar, to_x, pres.doubled))
    return normal_form(image, pres.source.gb)[0]


def tate_lambda(pres: TatePresentation, c: Poly) -> ResidueValue:
    coords = coordinates(pres.quotient, c)
    return sum((x * ell for x, ell in zip(coords, pres.lambda_values)), pres.source.ctx.zero)


def trace_via_tate(pres: TatePresentation, c: Poly) -> ResidueValue:
    """tr(c) = lambda(m(reduced Delta) * c)."""
    return tate_lambda(pres, diagonal_image(pres) * own(pres.source.ctx, c))
