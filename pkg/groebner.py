"""Buchberger bases with transition data, quotient algebras and traces."""
import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.matrices import DomainMatrix

from exceptions import (
    IdentityCheckError,
    InvalidQueryError,
    NotCertifiedFreeError,
    NotZeroDimensionalError,
    RingMismatchError,
)
from ring import Monomial, MonomialOrder, Poly, RingContext, base_coefficients, constant_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CofactorWitness:
    target: Poly
    cofactors: Tuple[Poly, ...]

    def check(self, gens: Sequence[Poly]) -> "CofactorWitness":
        total = self.target.ring.zero
        for c, f in zip(self.cofactors, gens):
            total += c * f
        if total != self.target:
            raise IdentityCheckError(f"cofactor witness does not reproduce {self.target.as_expr()}")
        return self


@dataclass(frozen=True)
class GroebnerBasis:
    ctx: RingContext
    gens: Tuple[Poly, ...]
    basis: Tuple[Poly, ...]
    transition: Tuple[Tuple[Poly, ...], ...]

    @property
    def order(self) -> MonomialOrder:
        return self.ctx.order

    @property
    def leading_monomials(self) -> List[Monomial]:
        return [g.LM for g in self.basis]

    @property
    def is_unit(self) -> bool:
        return any(not any(g.LM) for g in self.basis)


def own(ctx: RingContext, p: Poly) -> Poly:
    """``p`` as an element of ``ctx``; only a change of monomial order is tolerated."""
    if p.ring == ctx.ring:
        return p
    if tuple(str(s) for s in p.ring.symbols) == ctx.vars and p.ring.domain == ctx.domain:
        return ctx.convert(p)
    raise RingMismatchError(f"{p.as_expr()} is not an element of {ctx}")


def divide(p: Poly, divisors: Sequence[Poly]) -> Tuple[List[Poly], Poly]:
    """Multivariate division: ``p = sum(q_i * divisors[i]) + remainder``."""
    quotients = [p.ring.zero for _ in divisors]
    live = [k for k, g in enumerate(divisors) if g]
    if not p or not live:
        return quotients, p
    found, remainder = p.div([divisors[k] for k in live])
    for k, q in zip(live, found):
        quotients[k] = q
    return quotients, remainder


def _combine(ring, vectors: Sequence[Tuple[Poly, Sequence[Poly]]]) -> Tuple[Poly, ...]:
    """Sum of ``scalar * vector`` over the given pairs."""
    size = len(vectors[0][1])
    out = [ring.zero] * size
    for scalar, vec in vectors:
        if not scalar:
            continue
        for j in range(size):
            if vec[j]:
                out[j] += scalar * vec[j]
    return tuple(out)


def buchberger(ctx: RingContext, gens: Sequence[Poly], order: Optional[MonomialOrder] = None) -> GroebnerBasis:
    """Reduced Groebner basis of ``gens`` with a verified cofactor vector per element."""
    if order is not None and order != ctx.order:
        ctx = ctx.with_order(order)
    if not gens:
        raise InvalidQueryError("a Groebner basis needs at least one generator")
    ring = ctx.ring
    K = ring.domain
    gens = tuple(own(ctx, f) for f in gens)
    s = len(gens)

    G: List[Poly] = []
    C: List[Tuple[Poly, ...]] = []
    for k, f in enumerate(gens):
        if not f:
            continue
        inv = K.quo(K.one, f.LC)
        G.append(f.mul_ground(inv))
        C.append(tuple(ring.ground_new(inv) if j == k else ring.zero for j in range(s)))

    pairs = [(i, j) for j in range(len(G)) for i in range(j)]
    while pairs:
        # normal strategy: smallest lcm first
        pair = min(pairs, key=lambda ij: ring.order(ring.monomial_lcm(G[ij[0]].LM, G[ij[1]].LM)))
        pairs.remove(pair)
        i, j = pair
        gi, gj = G[i], G[j]
        if not any(ring.monomial_gcd(gi.LM, gj.LM)):
            continue
        lcm = ring.monomial_lcm(gi.LM, gj.LM)
        ti = ring.term_new(ring.monomial_div(lcm, gi.LM), K.one)
        tj = ring.term_new(ring.monomial_div(lcm, gj.LM), K.one)
        spoly = gi * ti - gj * tj
        quotients, r = divide(spoly, G)
        if not r:
            continue
        cof = _combine(ring, [(ti, C[i]), (-tj, C[j])] + [(-q, C[k]) for k, q in enumerate(quotients)])
        inv = K.quo(K.one, r.LC)
        G.append(r.mul_ground(inv))
        C.append(tuple(c.mul_ground(inv) for c in cof))
        n = len(G) - 1
        pairs.extend((k, n) for k in range(n))
    logger.debug(f"Buchberger finished with {len(G)} elements before reduction")

    # minimalize: drop elements whose leading monomial is a multiple of another
    ranked = sorted(range(len(G)), key=lambda k: ring.order(G[k].LM))
    kept: List[int] = []
    for k in ranked:
        if not any(ring.monomial_div(G[k].LM, G[h].LM) is not None for h in kept):
            kept.append(k)
    G = [G[k] for k in kept]
    C = [C[k] for k in kept]

    # interreduce; leading monomials are fixed so one pass suffices
    for k in range(len(G)):
        others = G[:k] + G[k + 1:]
        quotients, r = divide(G[k], others)
        other_cofs = C[:k] + C[k + 1:]
        C[k] = _combine(ring, [(ring.one, C[k])] + [(-q, other_cofs[h]) for h, q in enumerate(quotients)])
        G[k] = r

    basis = tuple(G)
    transition = tuple(C)
    for g, cof in zip(basis, transition):
        CofactorWitness(g, cof).check(gens)
    logger.debug(f"Reduced basis of size {len(basis)} in {ctx}")
    return GroebnerBasis(ctx, gens, basis, transition)


def normal_form(p: Poly, gb: GroebnerBasis) -> Tuple[Poly, CofactorWitness]:
    """Fully reduced remainder and a witness for ``p - remainder`` over the original generators."""
    p = own(gb.ctx, p)
    ring = gb.ctx.ring
    quotients, remainder = divide(p, gb.basis)
    cofactors = _combine(ring, [(q, gb.transition[k]) for k, q in enumerate(quotients)]) \
        if gb.basis else tuple(ring.zero for _ in gb.gens)
    witness = CofactorWitness(p - remainder, cofactors).check(gb.gens)
    return remainder, witness


def reduce(p: Poly, gb: GroebnerBasis) -> Poly:
    """Remainder of ``p`` modulo the basis, without cofactors."""
    return divide(own(gb.ctx, p), gb.basis)[1]


def ideal_contains(gb: GroebnerBasis, p: Poly) -> bool:
    return not reduce(p, gb)


def same_ideal(a: GroebnerBasis, b: GroebnerBasis) -> bool:
    if a.ctx != b.ctx:
        return False
    return a.basis == b.basis


def certify_zero_dimensional(gb: GroebnerBasis) -> Optional[Dict[str, int]]:
    """Minimal pure-power exponent per fiber variable, or None when one is missing."""
    ctx = gb.ctx
    if gb.is_unit:
        return {name: 0 for name in ctx.fiber_vars}
    exponents: Dict[str, int] = {}
    for i in ctx.fiber_indices:
        best = None
        for lm in gb.leading_monomials:
            if lm[i] and not any(e for k, e in enumerate(lm) if k != i):
                best = lm[i] if best is None else min(best, lm[i])
        if best is None:
            return None
        exponents[ctx.vars[i]] = best
    return exponents


@dataclass(frozen=True)
class QuotientAlgebra:
    gb: GroebnerBasis
    std_monomials: Tuple[Monomial, ...]
    mult_matrices: Dict[str, DomainMatrix]

    @property
    def ctx(self) -> RingContext:
        return self.gb.ctx

    @property
    def rank(self) -> int:
        return len(self.std_monomials)

    @cached_property
    def position(self) -> Dict[Monomial, int]:
        return {m: k for k, m in enumerate(self.std_monomials)}

    def basis_element(self, k: int) -> Poly:
        return self.ctx.monomial(self.std_monomials[k])


def coordinates(q: QuotientAlgebra, p: Poly) -> List[Poly]:
    """Base-ring coordinates of the class of ``p`` on the standard monomials."""
    remainder = reduce(p, q.gb)
    coords = [q.ctx.zero] * q.rank
    for fiber, coeff in base_coefficients(q.ctx, remainder).items():
        full = (0,) * q.ctx.base_block + fiber
        if full not in q.position:
            raise IdentityCheckError(f"normal form leaves the standard basis at {full}")
        coords[q.position[full]] = coeff
    return coords


def multiplication_matrix(q: QuotientAlgebra, c: Poly) -> DomainMatrix:
    columns = [coordinates(q, c * q.basis_element(j)) for j in range(q.rank)]
    rows = [[columns[j][i] for j in range(q.rank)] for i in range(q.rank)]
    return DomainMatrix(rows, (q.rank, q.rank), q.ctx.ring.to_domain())


def quotient_algebra(gb: GroebnerBasis) -> QuotientAlgebra:
    ctx = gb.ctx
    exponents = certify_zero_dimensional(gb)
    if exponents is None:
        raise NotZeroDimensionalError(f"ideal is not zero-dimensional over the fiber variables of {ctx}")
    if ctx.is_relative:
        for lm in gb.leading_monomials:
            if any(lm[:ctx.base_block]):
                raise NotCertifiedFreeError(f"leading monomial {lm} involves base variables")
    ring = ctx.ring
    box = [range(exponents[name]) for name in ctx.fiber_vars]
    std = []
    for fiber in product(*box):
        monom = (0,) * ctx.base_block + tuple(fiber)
        if all(ring.monomial_div(monom, lm) is None for lm in gb.leading_monomials):
            std.append(monom)
    std.sort(key=ring.order)

    draft = QuotientAlgebra(gb, tuple(std), {})
    matrices = {name: multiplication_matrix(draft, ctx.variable(name)) for name in ctx.fiber_vars}
    names = list(matrices)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            A, B = matrices[names[a]], matrices[names[b]]
            if A * B != B * A:
                raise IdentityCheckError(f"multiplication by {names[a]} and {names[b]} do not commute")
    logger.debug(f"Quotient of {ctx} has rank {len(std)}")
    return QuotientAlgebra(gb, tuple(std), matrices)


def canonical_trace(q: QuotientAlgebra, c: Poly) -> Poly:
    """Trace of multiplication by ``c``; a polynomial in the base variables."""
    total = q.ctx.zero
    for j in range(q.rank):
        total += coordinates(q, c * q.basis_element(j))[j]
    return total


def monic_eliminant(q: QuotientAlgebra, var: str) -> Poly:
    """A monic polynomial in ``var`` (base coefficients) lying in the ideal."""
    ctx = q.ctx
    x = ctx.variable(var)
    if ctx.index(var) < ctx.base_block:
        raise InvalidQueryError(f"{var} is a base variable")
    if q.rank == 0:
        return ctx.one
    if not ctx.is_relative:
        K = ctx.domain
        n = q.rank
        M = q.mult_matrices[var]
        M = DomainMatrix([[constant_value(M[i, j].element) for j in range(n)] for i in range(n)], (n, n), K)
        vector = DomainMatrix([[constant_value(c)] for c in coordinates(q, ctx.one)], (n, 1), K)
        columns = []
        for _ in range(n + 1):
            columns.append([vector[i, 0].element for i in range(n)])
            vector = M * vector
        rows = [[columns[k][i] for k in range(n + 1)] for i in range(n)]
        reduced, pivots = DomainMatrix(rows, (n, n + 1), K).rref()
        degree = next(k for k in range(n + 1) if k not in pivots)
        eliminant = x ** degree
        for row, col in enumerate(pivots[:degree]):
            eliminant -= ctx.ring.ground_new(reduced[row, degree].element) * x ** col
    else:
        coefficients = q.mult_matrices[var].charpoly()
        n = len(coefficients) - 1
        eliminant = ctx.zero
        for k, c in enumerate(coefficients):
            eliminant += c * x ** (n - k)
    if not ideal_contains(q.gb, eliminant):
        raise IdentityCheckError(f"eliminant of {var} is not in the ideal")
    logger.debug(f"Eliminant of {var}: {eliminant.as_expr()}")
    return eliminant
