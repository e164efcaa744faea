"""Trace of top forms along a finite flat map given by a complete-intersection presentation."""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Mapping, Sequence, Tuple

from exceptions import DegreeMismatchError, InvalidQueryError
from forms import DiffForm, d_function, fiber_volume, wedge, wedge_all
from groebner import QuotientAlgebra, canonical_trace
from residue import DenomTuple, make_denoms, residue_symbol, tate_lambda, tate_presentation, TatePresentation
from ring import CoeffField, Poly, RingContext, substitute

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinitePresentation:
    """S = k[u][T] / (f_1, ..., f_d), finite free over R = k[u]."""

    relations: DenomTuple

    @property
    def ctx(self) -> RingContext:
        return self.relations.ctx

    @property
    def base(self) -> RingContext:
        return self.ctx.base_context()

    @cached_property
    def quotient(self) -> QuotientAlgebra:
        return self.relations.quotient

    @cached_property
    def tate(self) -> TatePresentation:
        return tate_presentation(self.relations)

    def __str__(self) -> str:
        return f"{self.ctx}/({self.relations})"


def make_presentation(ctx: RingContext, relations: Sequence[Poly]) -> FinitePresentation:
    pres = FinitePresentation(make_denoms(ctx, relations))
    logger.debug(f"Presentation {pres} has rank {pres.quotient.rank}")
    return pres


def _to_base(pres: FinitePresentation, p: Poly) -> Poly:
    return pres.base.convert(p) if pres.ctx.base_block else p


def klt_coefficients(pres: FinitePresentation, eta: DiffForm) -> Dict[Tuple[int, ...], Poly]:
    """x_K with df_1 ^ ... ^ df_d ^ eta = sum_K x_K dT ^ du_K (components lacking the full dT block dropped)."""
    ctx = pres.ctx
    n, d = ctx.base_block, len(ctx.fiber_vars)
    if eta.ctx != ctx:
        raise InvalidQueryError(f"form lives in {eta.ctx}, presentation in {ctx}")
    if eta.degree != n:
        raise DegreeMismatchError(f"expected a form of degree {n}, got {eta.degree}")
    product = wedge(wedge_all([d_function(ctx, f) for f in pres.relations.denoms], ctx), eta)
    fiber = set(ctx.fiber_indices)
    coefficients: Dict[Tuple[int, ...], Poly] = {}
    for key, coeff in product.components.items():
        if not fiber.issubset(key):
            continue
        K = tuple(i for i in key if i < n)
        # stored as du_K ^ dT; dT ^ du_K differs by (-1)^(|K| d)
        coefficients[K] = -coeff if (len(K) * d) % 2 else coeff
    return coefficients


def _assemble(pres: FinitePresentation, values: Mapping[Tuple[int, ...], Poly]) -> DiffForm:
    base = pres.base if pres.ctx.base_block else pres.ctx
    degree = pres.ctx.base_block
    return DiffForm(base, degree, {K: _to_base(pres, v) for K, v in values.items()})


def klt_trace(pres: FinitePresentation, eta: DiffForm) -> DiffForm:
    """sum_K Res[x_K dT; f] du_K, an n-form on the base."""
    values = {
        K: residue_symbol(fiber_volume(pres.ctx, x), pres.relations)
        for K, x in klt_coefficients(pres, eta).items()
    }
    return _assemble(pres, values)


def klt_trace_via_tate(pres: FinitePresentation, eta: DiffForm) -> DiffForm:
    """Same trace with each residue replaced by the Tate functional lambda."""
    values = {K: tate_lambda(pres.tate, x) for K, x in klt_coefficients(pres, eta).items()}
    return _assemble(pres, values)


def trace_function(pres: FinitePresentation, s: Poly) -> Poly:
    """tr_{S/R}(s) as a polynomial in the base variables."""
    return _to_base(pres, canonical_trace(pres.quotient, s))


def specialize(pres: FinitePresentation, point: Mapping[str, int]) -> FinitePresentation:
    """Base change along u_i -> a_i for the assigned base variables; the others stay in the base."""
    ctx = pres.ctx
    unknown = [name for name in point if name not in ctx.base_vars]
    if unknown:
        raise InvalidQueryError(f"{unknown} are not base variables of {ctx}")
    kept = tuple(name for name in ctx.base_vars if name not in point)
    target = RingContext(ctx.coeff, kept + ctx.fiber_vars, len(kept))
    assignment = {name: target.constant(value) for name, value in point.items()}
    relations = [substitute(f, assignment, target) for f in pres.relations.denoms]
    return make_presentation(target, relations)


def kunz_family(k: int, coeff: CoeffField = None) -> FinitePresentation:
    """The presentation k[y][T]/(T^k - y) of y = x^k."""
    if k < 1:
        raise InvalidQueryError(f"exponent {k} must be positive")
    ctx = RingContext(coeff or CoeffField(), ("y", "T"), 1)
    return make_presentation(ctx, [ctx.variable("T") ** k - ctx.variable("y")])
