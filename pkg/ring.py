"""Exact coefficient fields, ring contexts and sparse polynomial plumbing.

Polynomials are sympy ``PolyElement`` values: a dict from exponent tuples to
nonzero domain elements, which is already the canonical sparse form the rest
of the engine relies on. A ``RingContext`` owns the sympy ``PolyRing`` and the
split of its variables into a base block (u) and a fiber block (T).
"""
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from operator import itemgetter
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from sympy import GF, QQ, isprime
from sympy.polys.orderings import ProductOrder, grevlex, lex
from sympy.polys.rings import PolyElement, PolyRing

from exceptions import (
    ImageContextError,
    InvalidQueryError,
    NotPrimeError,
    RingMismatchError,
    UnknownVariableError,
)

logger = logging.getLogger(__name__)

Poly = PolyElement
Monomial = Tuple[int, ...]


@dataclass(frozen=True)
class CoeffField:
    kind: str = "QQ"  # "QQ" or "Fp"
    p: Optional[int] = None

    def __post_init__(self):
        if self.kind == "QQ":
            if self.p is not None:
                raise InvalidQueryError("the rational field takes no characteristic")
        elif self.kind == "Fp":
            if self.p is None or not isprime(self.p):
                raise NotPrimeError(f"Fp needs a prime characteristic, got {self.p}")
        else:
            raise InvalidQueryError(f"unknown coefficient field kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "CoeffField":
        """Parse ``QQ``, ``Fp:<p>`` or ``GF(<p>)``."""
        text = text.strip()
        if text == "QQ":
            return cls()
        for prefix, suffix in (("Fp:", ""), ("GF(", ")")):
            if text.startswith(prefix) and text.endswith(suffix):
                digits = text[len(prefix):len(text) - len(suffix)]
                if digits.isdigit():
                    return cls("Fp", int(digits))
        raise InvalidQueryError(f"cannot read coefficient field {text!r}")

    @cached_property
    def domain(self):
        if self.kind == "QQ":
            return QQ
        return GF(self.p, symmetric=False)

    @property
    def characteristic(self) -> int:
        return 0 if self.kind == "QQ" else self.p

    def element(self, numerator: int, denominator: int = 1):
        K = self.domain
        den = K.convert(denominator)
        if not den:
            raise ZeroDivisionError(f"{denominator} is zero in {self}")
        return K.quo(K.convert(numerator), den)

    def to_string(self, c) -> str:
        """Exact text of a field element: ``p/q`` over QQ, ``0..p-1`` over Fp."""
        return str(self.domain.to_sympy(c))

    def __str__(self) -> str:
        return "QQ" if self.kind == "QQ" else f"Fp:{self.p}"


@lru_cache(maxsize=None)
def _sympy_order(kind: str, split: int):
    if kind == "degrevlex":
        return grevlex
    if kind == "lex":
        return lex
    # Fiber block (variables from ``split`` on) dominates; ties broken on the base block.
    return ProductOrder(
        (grevlex, itemgetter(slice(split, None))),
        (grevlex, itemgetter(slice(0, split))),
    )


@dataclass(frozen=True)
class MonomialOrder:
    kind: str = "degrevlex"  # degrevlex | lex | block
    split: int = 0

    def __post_init__(self):
        if self.kind not in ("degrevlex", "lex", "block"):
            raise InvalidQueryError(f"unknown monomial order {self.kind!r}")

    @property
    def key(self):
        return _sympy_order(self.kind, self.split if self.kind == "block" else 0)

    @classmethod
    def block(cls, split: int) -> "MonomialOrder":
        return cls("block", split)


@dataclass(frozen=True)
class RingContext:
    coeff: CoeffField
    vars: Tuple[str, ...]
    base_block: int = 0
    order: Optional[MonomialOrder] = None

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if not self.vars:
            raise InvalidQueryError("a ring needs at least one variable")
        if len(set(self.vars)) != len(self.vars):
            raise InvalidQueryError(f"variable names must be distinct: {self.vars}")
        if not 0 <= self.base_block <= len(self.vars):
            raise InvalidQueryError(f"base block {self.base_block} out of range")
        if self.order is None:
            default = MonomialOrder() if self.base_block == 0 else MonomialOrder.block(self.base_block)
            object.__setattr__(self, "order", default)

    @cached_property
    def ring(self) -> PolyRing:
        return PolyRing(self.vars, self.coeff.domain, self.order.key)

    @property
    def domain(self):
        return self.coeff.domain

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def base_vars(self) -> Tuple[str, ...]:
        return self.vars[:self.base_block]

    @property
    def fiber_vars(self) -> Tuple[str, ...]:
        return self.vars[self.base_block:]

    @property
    def base_indices(self) -> range:
        return range(self.base_block)

    @property
    def fiber_indices(self) -> range:
        return range(self.base_block, self.nvars)

    @property
    def is_relative(self) -> bool:
        return self.base_block > 0

    @property
    def zero(self) -> Poly:
        return self.ring.zero

    @property
    def one(self) -> Poly:
        return self.ring.one

    def index(self, name: str) -> int:
        try:
            return self.vars.index(name)
        except ValueError:
            raise UnknownVariableError(f"unknown variable {name!r}; ring has {', '.join(self.vars)}")

    def variable(self, name: str) -> Poly:
        return self.ring.gens[self.index(name)]

    def constant(self, numerator: int, denominator: int = 1) -> Poly:
        return self.ring.ground_new(self.coeff.element(numerator, denominator))

    def monomial(self, exponents: Sequence[int], coeff=None) -> Poly:
        if coeff is None:
            coeff = self.domain.one
        return self.ring.term_new(tuple(exponents), coeff)

    def from_terms(self, terms: Mapping[Monomial, object]) -> Poly:
        return self.ring.from_dict(dict(terms))

    def split_monomial(self, monom: Monomial) -> Tuple[Monomial, Monomial]:
        b = self.base_block
        return monom[:b], monom[b:]

    def base_monomial(self, monom: Monomial) -> Monomial:
        """Keep the base exponents of ``monom`` and zero the fiber ones."""
        b = self.base_block
        return monom[:b] + (0,) * (self.nvars - b)

    def is_base_element(self, p: Poly) -> bool:
        return all(not any(m[self.base_block:]) for m in p.itermonoms())

    def with_order(self, order: MonomialOrder) -> "RingContext":
        return RingContext(self.coeff, self.vars, self.base_block, order)

    def with_block(self, base_block: int) -> "RingContext":
        return RingContext(self.coeff, self.vars, base_block)

    def absolute(self) -> "RingContext":
        """Same variables, all of them fiber variables, default order."""
        return RingContext(self.coeff, self.vars)

    def base_context(self) -> "RingContext":
        """The polynomial ring k[u] of the base block on its own."""
        return RingContext(self.coeff, self.base_vars)

    def fiber_context(self) -> "RingContext":
        return RingContext(self.coeff, self.fiber_vars)

    def convert(self, p: Poly) -> Poly:
        """Move ``p`` into this context by variable name."""
        source = p.ring
        if source == self.ring:
            return p
        names = [str(s) for s in source.symbols]
        positions = [self.vars.index(name) if name in self.vars else None for name in names]
        K = self.domain
        terms: Dict[Monomial, object] = {}
        for monom, coeff in p.iterterms():
            target = [0] * self.nvars
            for i, e in enumerate(monom):
                if not e:
                    continue
                if positions[i] is None:
                    raise ImageContextError(f"variable {names[i]} does not exist in {self.vars}")
                target[positions[i]] = e
            terms[tuple(target)] = coeff if source.domain == K else K.convert_from(coeff, source.domain)
        return self.ring.from_dict(terms)

    def __str__(self) -> str:
        if self.base_block:
            return f"{self.coeff}[{','.join(self.base_vars)}][{','.join(self.fiber_vars)}]"
        return f"{self.coeff}[{','.join(self.vars)}]"


def context_of(p: Poly, contexts: Iterable[RingContext]) -> Optional[RingContext]:
    for ctx in contexts:
        if ctx.ring == p.ring:
            return ctx
    return None


def arithmetic(a: Poly, b: Poly, op: str) -> Poly:
    """Add, subtract or multiply two polynomials of one context."""
    if a.ring != b.ring:
        raise RingMismatchError(f"operands live in {a.ring} and {b.ring}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise InvalidQueryError(f"unknown arithmetic operation {op!r}")


def substitute(p: Poly, assignment: Mapping[str, Poly], target: RingContext,
               source: Optional[RingContext] = None) -> Poly:
    """Ring-homomorphism image of ``p``; unassigned variables map to themselves by name."""
    for name, image in assignment.items():
        if image.ring != target.ring:
            raise ImageContextError(f"image of {name} is not in {target}")
    names = [str(s) for s in p.ring.symbols]
    if source is not None and source.ring != p.ring:
        raise RingMismatchError(f"{p} is not an element of {source}")
    images = []
    for name in names:
        if name in assignment:
            images.append(assignment[name])
        elif name in target.vars:
            images.append(target.variable(name))
        else:
            images.append(None)

    K, K_source = target.domain, p.ring.domain
    powers: Dict[Tuple[int, int], Poly] = {}

    def power(i: int, e: int) -> Poly:
        if (i, e) not in powers:
            powers[(i, e)] = images[i] ** e
        return powers[(i, e)]

    result = target.zero
    for monom, coeff in p.iterterms():
        c = coeff if K_source == K else K.convert_from(coeff, K_source)
        term = target.ring.ground_new(c)
        for i, e in enumerate(monom):
            if not e:
                continue
            if images[i] is None:
                raise ImageContextError(f"variable {names[i]} has no image in {target}")
            term = term * power(i, e)
        result = result + term
    return result


def coefficient_of(p: Poly, exponents: Sequence[int]):
    """The exact coefficient of the monomial with the given exponent vector."""
    if len(exponents) != p.ring.ngens:
        raise InvalidQueryError(f"exponent vector {tuple(exponents)} has the wrong length for {p.ring.ngens} variables")
    return p.get(tuple(exponents), p.ring.domain.zero)


def base_coefficients(ctx: RingContext, p: Poly) -> Dict[Monomial, Poly]:
    """Group ``p`` by fiber monomial; each value is a polynomial in the base block."""
    grouped: Dict[Monomial, Dict[Monomial, object]] = {}
    for monom, coeff in p.iterterms():
        _, fiber = ctx.split_monomial(monom)
        grouped.setdefault(fiber, {})[ctx.base_monomial(monom)] = coeff
    return {fiber: ctx.ring.from_dict(terms) for fiber, terms in grouped.items()}


def constant_value(p: Poly):
    """The field element of a constant polynomial (zero for the zero polynomial)."""
    ring = p.ring
    if any(any(m) for m in p.itermonoms()):
        raise InvalidQueryError(f"{p.as_expr()} is not a constant")
    return p.get(ring.zero_monom, ring.domain.zero)
