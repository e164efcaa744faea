"""Cech cohomology of O(d) on projective r-space over a field.

The ordered Cech complex of the standard cover U_i = {T_i != 0} splits over
Laurent exponent vectors: a monomial with negative exponents at the indices N
lives on U_S exactly when N is contained in S. Each summand is a finite
complex that only depends on N, so every computation below is a finite exact
linear solve.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Tuple

from sympy.polys.matrices import DomainMatrix

from exceptions import (
    IdentityCheckError,
    InvalidQueryError,
    LevelOverflowError,
    TwistMismatchError,
)
from ring import CoeffField

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]
Exponent = Tuple[int, ...]


@dataclass(frozen=True)
class CechCochain:
    r: int
    twist: int
    level: int
    coeff: CoeffField = CoeffField()
    entries: Dict[Subset, Dict[Exponent, object]] = field(default_factory=dict)

    def __post_init__(self):
        if self.r < 0 or not 0 <= self.level <= self.r:
            raise InvalidQueryError(f"level {self.level} invalid on P^{self.r}")
        clean = {}
        for S, terms in self.entries.items():
            S = tuple(S)
            if len(S) != self.level + 1 or list(S) != sorted(set(S)) or S[0] < 0 or S[-1] > self.r:
                raise InvalidQueryError(f"{S} is not an open set of level {self.level} on P^{self.r}")
            kept = {}
            for a, c in terms.items():
                a = tuple(a)
                if len(a) != self.r + 1:
                    raise InvalidQueryError(f"exponent {a} needs {self.r + 1} entries")
                if sum(a) != self.twist:
                    raise TwistMismatchError(f"monomial {a} is not of degree {self.twist}")
                if any(e < 0 and i not in S for i, e in enumerate(a)):
                    raise InvalidQueryError(f"monomial {a} is not a section over U_{S}")
                if c:
                    kept[a] = c
            if kept:
                clean[S] = kept
        object.__setattr__(self, "entries", clean)

    def is_zero(self) -> bool:
        return not self.entries

    def exponents(self) -> List[Exponent]:
        return sorted({a for terms in self.entries.values() for a in terms})

    def __str__(self) -> str:
        if not self.entries:
            return "0"
        parts = []
        for S in sorted(self.entries):
            terms = self.entries[S]
            body = " + ".join(
                f"{self.coeff.to_string(terms[a])}*" + "*".join(f"T{i}^{e}" for i, e in enumerate(a) if e)
                for a in sorted(terms)
            )
            parts.append(f"U{''.join(map(str, S))}: {body}")
        return "; ".join(parts)


def _subsets(r: int, level: int, containing: frozenset = frozenset()) -> List[Subset]:
    return [S for S in combinations(range(r + 1), level + 1) if containing.issubset(S)]


def _negative_set(a: Exponent) -> frozenset:
    return frozenset(i for i, e in enumerate(a) if e < 0)


def add_cochains(a: CechCochain, b: CechCochain) -> CechCochain:
    if (a.r, a.twist, a.level, a.coeff) != (b.r, b.twist, b.level, b.coeff):
        raise InvalidQueryError("cochains live in different groups")
    K = a.coeff.domain
    out = {S: dict(terms) for S, terms in a.entries.items()}
    for S, terms in b.entries.items():
        target = out.setdefault(S, {})
        for e, c in terms.items():
            target[e] = target.get(e, K.zero) + c
    return CechCochain(a.r, a.twist, a.level, a.coeff, out)


def scale_cochain(a: CechCochain, c) -> CechCochain:
    return CechCochain(a.r, a.twist, a.level, a.coeff,
                       {S: {e: c * x for e, x in terms.items()} for S, terms in a.entries.items()})


def coboundary(c: CechCochain) -> CechCochain:
    """(dc)_{S'} = sum_k (-1)^k c_{S' minus its k-th index}."""
    if c.level >= c.r:
        raise LevelOverflowError(f"no coboundary out of level {c.level} on P^{c.r}")
    K = c.coeff.domain
    out: Dict[Subset, Dict[Exponent, object]] = {}
    for S_next in _subsets(c.r, c.level + 1):
        terms: Dict[Exponent, object] = {}
        for k in range(len(S_next)):
            face = S_next[:k] + S_next[k + 1:]
            for a, x in c.entries.get(face, {}).items():
                terms[a] = terms.get(a, K.zero) + (-x if k % 2 else x)
        out[S_next] = terms
    return CechCochain(c.r, c.twist, c.level + 1, c.coeff, out)


def _local_matrix(r: int, level: int, negative: frozenset, K) -> Tuple[DomainMatrix, List[Subset], List[Subset]]:
    """Matrix of d from level to level + 1 on the summand with negative set ``negative``."""
    cols = _subsets(r, level, negative)
    rows = _subsets(r, level + 1, negative)
    index = {S: j for j, S in enumerate(cols)}
    entries = [[K.zero] * len(cols) for _ in rows]
    for i, S_next in enumerate(rows):
        for k in range(len(S_next)):
            face = S_next[:k] + S_next[k + 1:]
            if face in index:
                entries[i][index[face]] = -K.one if k % 2 else K.one
    return DomainMatrix(entries, (len(rows), len(cols)), K), rows, cols


def _rank(M: DomainMatrix) -> int:
    rows, cols = M.shape
    if not rows or not cols:
        return 0
    return M.rank()


def local_cohomology_dims(r: int, negative: frozenset, coeff: CoeffField = CoeffField()) -> List[int]:
    """Cohomology of the finite summand attached to a negative set, level by level."""
    K = coeff.domain
    ranks = [_rank(_local_matrix(r, q, negative, K)[0]) for q in range(r)]
    dims = []
    for q in range(r + 1):
        size = len(_subsets(r, q, negative))
        outgoing = ranks[q] if q < r else 0
        incoming = ranks[q - 1] if q > 0 else 0
        dims.append(size - outgoing - incoming)
    return dims


def _pattern_count(r: int, d: int, negative: frozenset) -> Optional[int]:
    """Number of exponent vectors of degree d with the given negative set; None when infinite."""
    j = len(negative)
    if j == 0:
        return comb(d + r, r) if d >= 0 else 0
    if j == r + 1:
        return comb(-d - 1, r) if -d - 1 >= r else 0
    return None


def cohomology_dim(r: int, d: int, q: int, coeff: CoeffField = CoeffField()) -> int:
    if not 0 <= q <= r:
        raise InvalidQueryError(f"cohomological degree {q} out of range for P^{r}")
    total = 0
    for j in range(r + 2):
        for negative in combinations(range(r + 1), j):
            negative = frozenset(negative)
            dims = local_cohomology_dims(r, negative, coeff)
            count = _pattern_count(r, d, negative)
            if count is None:
                if any(dims):
                    raise IdentityCheckError(f"summand with negative set {sorted(negative)} is not acyclic")
                continue
            total += count * dims[q]
    logger.debug(f"h^{q}(P^{r}, O({d})) = {total}")
    return total


def fraction_to_cech_class(r: int, alpha: Tuple[int, ...], coeff: CoeffField = CoeffField()) -> CechCochain:
    """Image of [dt_1 ^ ... ^ dt_r; t^alpha] in the chart t_i = T_i/T_0, as a top cochain of twist -r-1."""
    alpha = tuple(alpha)
    if len(alpha) != r or any(a < 1 for a in alpha):
        raise InvalidQueryError(f"alpha {alpha} must be {r} positive integers")
    exponent = (sum(alpha) - r - 1,) + tuple(-a for a in alpha)
    return CechCochain(r, -r - 1, r, coeff, {tuple(range(r + 1)): {exponent: coeff.domain.one}})


def solve_coboundary(c: CechCochain) -> Optional[CechCochain]:
    """Some x with dx = c, or None when c is not a coboundary."""
    if c.level == 0:
        # nothing maps into level 0
        return None
    K = c.coeff.domain
    solution: Dict[Subset, Dict[Exponent, object]] = {}
    for a in c.exponents():
        negative = _negative_set(a)
        M, rows, cols = _local_matrix(c.r, c.level - 1, negative, K)
        rhs = [c.entries.get(S, {}).get(a, K.zero) for S in rows]
        augmented = [[M[i, j].element for j in range(len(cols))] + [rhs[i]] for i in range(len(rows))]
        reduced, pivots = DomainMatrix(augmented, (len(rows), len(cols) + 1), K).rref()
        if len(cols) in pivots:
            return None
        for row, col in enumerate(pivots):
            value = reduced[row, len(cols)].element
            if value:
                solution.setdefault(cols[col], {})[a] = value
    x = CechCochain(c.r, c.twist, c.level - 1, c.coeff, solution)
    if coboundary(x) != c:
        raise IdentityCheckError("coboundary witness does not reproduce the cochain")
    return x


def class_is_zero(c: CechCochain) -> Tuple[bool, Optional[CechCochain]]:
    """Whether the top cochain ``c`` is a coboundary, with a verified witness when it is."""
    if c.level != c.r:
        raise InvalidQueryError(f"class test needs a top-level cochain, got level {c.level}")
    if c.is_zero():
        return True, CechCochain(c.r, c.twist, c.level - 1, c.coeff) if c.r else None
    if c.r == 0:
        return False, None
    witness = solve_coboundary(c)
    return witness is not None, witness


def cohomology_representative(c: CechCochain) -> Tuple[CechCochain, Optional[CechCochain]]:
    """The all-negative part of a top cochain, with a witness that the rest is a coboundary."""
    if c.level != c.r:
        raise InvalidQueryError(f"representatives are taken at the top level, got level {c.level}")
    full = tuple(range(c.r + 1))
    kept = {a: x for a, x in c.entries.get(full, {}).items() if all(e < 0 for e in a)}
    representative = CechCochain(c.r, c.twist, c.level, c.coeff, {full: kept})
    rest = add_cochains(c, scale_cochain(representative, -c.coeff.domain.one))
    if rest.is_zero():
        return representative, None
    witness = solve_coboundary(rest) if c.r else None
    if witness is None:
        raise IdentityCheckError("non-negative part of a top cochain is not a coboundary")
    return representative, witness


def pn_integral(c: CechCochain):
    """Coefficient of 1/(T_0 ... T_r) in a top cochain of twist -r-1."""
    if c.twist != -c.r - 1:
        raise TwistMismatchError(f"the integral needs twist {-c.r - 1}, got {c.twist}")
    if c.level != c.r:
        raise InvalidQueryError(f"the integral needs a top-level cochain, got level {c.level}")
    representative, _ = cohomology_representative(c)
    full = tuple(range(c.r + 1))
    return representative.entries.get(full, {}).get((-1,) * (c.r + 1), c.coeff.domain.zero)
