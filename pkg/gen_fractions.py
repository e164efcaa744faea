"""Generalized fractions [nu; t_1^b_1, ..., t_r^b_r] as local cohomology classes."""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

from exceptions import (
    DegreeMismatchError,
    IdentityCheckError,
    InvalidQueryError,
    NoCommonRefinementError,
    NotDominatingError,
    RingMismatchError,
)
from forms import DiffForm, add, d_function, exterior_derivative, scale, wedge, wedge_all
from groebner import certify_zero_dimensional, ideal_contains, same_ideal
from residue import DenomTuple, ResidueValue, express_in_terms_of, residue_symbol
from ring import Poly, constant_value

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenFraction:
    numerator: DiffForm
    denoms: DenomTuple
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(self.exponents))
        r = self.denoms.r
        if self.numerator.ctx != self.denoms.ctx:
            raise RingMismatchError(f"numerator lives in {self.numerator.ctx}, denominators in {self.denoms.ctx}")
        if len(self.exponents) != r or any(b < 1 for b in self.exponents):
            raise InvalidQueryError(f"exponents {self.exponents} must be {r} positive integers")
        if self.numerator.degree not in (r, r - 1):
            raise DegreeMismatchError(f"numerator degree must be {r} or {r - 1}, got {self.numerator.degree}")

    @property
    def ctx(self):
        return self.denoms.ctx

    @property
    def r(self) -> int:
        return self.denoms.r

    @property
    def powered(self) -> DenomTuple:
        """The tuple t_1^b_1, ..., t_r^b_r."""
        return self.denoms.power(self.exponents)

    @cached_property
    def regularity_certified(self) -> bool:
        # r elements cutting out a finite locus in a polynomial ring form a regular sequence
        return certify_zero_dimensional(self.denoms.gb) is not None

    def __str__(self) -> str:
        powers = ", ".join(f"({t.as_expr()})^{b}" if b > 1 else f"{t.as_expr()}"
                           for t, b in zip(self.denoms.denoms, self.exponents))
        return f"[{self.numerator}; {powers}]"


@dataclass(frozen=True)
class FractionSum:
    terms: Tuple[GenFraction, ...] = ()

    def is_empty(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        return " + ".join(str(t) for t in self.terms) if self.terms else "0"


def scale_fraction(fr: GenFraction, g: Poly) -> GenFraction:
    return GenFraction(scale(fr.numerator, g), fr.denoms, fr.exponents)


def fraction_is_zero(fr: GenFraction) -> bool:
    """Zero iff every numerator coefficient lies in (t^b)."""
    if fr.numerator.degree != fr.r:
        raise DegreeMismatchError(f"zero test needs a numerator of degree {fr.r}")
    if not fr.regularity_certified:
        logger.warning(f"Regularity not certified for {fr}")
    gb = fr.powered.gb
    return all(ideal_contains(gb, coeff) for coeff in fr.numerator.components.values())


def fraction_rescale(fr: GenFraction, gamma: Sequence[int]) -> GenFraction:
    """Same class over t^gamma: the numerator picks up prod t_i^(gamma_i - b_i)."""
    gamma = tuple(gamma)
    if len(gamma) != fr.r or any(g < b for g, b in zip(gamma, fr.exponents)):
        raise NotDominatingError(f"{gamma} does not dominate {fr.exponents}")
    factor = fr.ctx.one
    for t, g, b in zip(fr.denoms.denoms, gamma, fr.exponents):
        factor *= t ** (g - b)
    return GenFraction(scale(fr.numerator, factor), fr.denoms, gamma)


def _difference_is_zero(a: GenFraction, b_numerator: DiffForm) -> bool:
    return fraction_is_zero(GenFraction(add(a.numerator, -b_numerator), a.denoms, a.exponents))


def fraction_equal(a: GenFraction, b: GenFraction) -> bool:
    if a.ctx != b.ctx:
        raise RingMismatchError(f"fractions live in {a.ctx} and {b.ctx}")
    if a.numerator.degree != b.numerator.degree:
        raise DegreeMismatchError("fractions with numerators of different degree")
    if a.denoms.denoms == b.denoms.denoms:
        common = tuple(max(x, y) for x, y in zip(a.exponents, b.exponents))
        return _difference_is_zero(fraction_rescale(a, common), fraction_rescale(b, common).numerator)
    if not same_ideal(a.denoms.gb, b.denoms.gb):
        raise NoCommonRefinementError(f"({a.denoms}) and ({b.denoms}) generate different ideals")
    # (s)^(sum(g - 1) + 1) lies in (s^g), so t_i^M is a combination of the powers of b
    M = max(sum(g - 1 for g in b.exponents) + 1, max(a.exponents))
    witness = express_in_terms_of(b.powered, [t ** M for t in a.denoms.denoms])
    rewritten = scale(b.numerator, witness.det_u)
    target = tuple([M] * a.r)
    logger.debug(f"Rewriting {b} over ({a.denoms}) at exponent {M}")
    return _difference_is_zero(fraction_rescale(a, target), rewritten)


def d_fraction(fr: GenFraction) -> FractionSum:
    """[d eta; t^k] - sum_j k_j [dt_j ^ eta; t^(k + e_j)] for an (r-1)-form numerator."""
    if fr.numerator.degree != fr.r - 1:
        raise DegreeMismatchError(f"d acts on numerators of degree {fr.r - 1}, got {fr.numerator.degree}")
    ctx = fr.ctx
    terms: List[GenFraction] = []
    first = exterior_derivative(fr.numerator, relative=True)
    if not first.is_zero():
        terms.append(GenFraction(first, fr.denoms, fr.exponents))
    for j, (t, k) in enumerate(zip(fr.denoms.denoms, fr.exponents)):
        numerator = scale(wedge(d_function(ctx, t, relative=True), fr.numerator), ctx.constant(-k))
        if numerator.is_zero():
            continue
        bumped = tuple(e + 1 if i == j else e for i, e in enumerate(fr.exponents))
        terms.append(GenFraction(numerator, fr.denoms, bumped))
    return FractionSum(tuple(terms))


def residue_of_fraction(fr: GenFraction) -> ResidueValue:
    if fr.numerator.degree != fr.r:
        raise DegreeMismatchError(f"residue needs a numerator of degree {fr.r}")
    return residue_symbol(fr.numerator, fr.powered)


def residue_of_sum(total: FractionSum, ctx) -> ResidueValue:
    value = ctx.zero
    for term in total.terms:
        value += residue_of_fraction(term)
    return value


def thom_class(denoms: DenomTuple) -> GenFraction:
    """[dt_1 ^ ... ^ dt_r; t_1, ..., t_r]."""
    ctx = denoms.ctx
    volume = wedge_all([d_function(ctx, t, relative=True) for t in denoms.denoms], ctx)
    return GenFraction(volume, denoms, (1,) * denoms.r)


def decompose_fraction(fr: GenFraction) -> Tuple[ResidueValue, GenFraction]:
    """Split ``fr`` as c * [dt; t] plus a fraction with zero residue."""
    theta = thom_class(fr.denoms)
    rho = residue_of_fraction(theta)
    try:
        rho_value = constant_value(rho)
    except InvalidQueryError:
        raise IdentityCheckError(f"residue of [dt; t] is {rho.as_expr()}, not a field element")
    if not rho_value:
        raise IdentityCheckError(f"residue of [dt; t] vanishes for ({fr.denoms})")
    ctx = fr.ctx
    c = residue_of_fraction(fr) * ctx.ring.ground_new(ctx.domain.quo(ctx.domain.one, rho_value))
    lifted = fraction_rescale(theta, fr.exponents)
    kernel = GenFraction(add(fr.numerator, scale(lifted.numerator, -c)), fr.denoms, fr.exponents)
    if residue_of_fraction(kernel):
        raise IdentityCheckError("kernel part of the decomposition has a nonzero residue")
    return c, kernel
