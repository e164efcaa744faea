"""Randomized conformance suites for the residue laws.

Every trial draws its instance from ``random.Random(f"{seed}/{rule}/{trial}")``
so a report is reproducible trial by trial, whatever the thread scheduling.
"""
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from math import comb
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from exceptions import NotCertifiedFreeError, NotZeroDimensionalError, ResidueEngineError
from finite_trace import klt_trace, kunz_family, make_presentation, specialize, trace_function
from forms import (
    DiffForm,
    add,
    basis_form,
    d_function,
    exterior_derivative,
    fiber_volume,
    function_form,
    scale,
    transitivity_wedge,
    wedge,
    wedge_all,
)
from gen_fractions import (
    GenFraction,
    decompose_fraction,
    d_fraction,
    fraction_equal,
    fraction_rescale,
    residue_of_fraction,
    residue_of_sum,
    thom_class,
)
from groebner import canonical_trace, certify_zero_dimensional
from models import FailureRecord, InstanceSpec, RuleId, TrialOutcome, TrialStatus, VerifyReport
from projective import class_is_zero, cohomology_dim, fraction_to_cech_class, pn_integral
from residue import (
    DenomTuple,
    dual_basis,
    jacobian_determinant,
    make_denoms,
    matrix_determinant,
    residue_pairing_gram,
    residue_symbol,
    tate_lambda,
    tate_presentation,
    trace_via_tate,
)
from ring import CoeffField, Poly, RingContext, constant_value, substitute

logger = logging.getLogger(__name__)

FIBER_NAMES = ("x", "y", "z")
BASE_NAMES = ("u", "v")
SPECIALIZATION_POINTS = (0, 1, -1, 2)


class TrialSkipped(Exception):
    """The drawn instance falls outside the rule's hypotheses."""


class Trial:
    """Per-trial state: the random source and the instance record being built."""

    def __init__(self, spec: InstanceSpec, rule: RuleId, index: int):
        self.spec = spec
        self.rule = rule
        self.index = index
        self.rng = random.Random(f"{spec.seed}/{rule.value}/{index}")
        self.coeff = CoeffField.parse(spec.field)
        self.instance: Dict[str, Any] = {"rule": rule.value, "trial": index, "seed": spec.seed, "field": spec.field}

    def record(self, **values):
        self.instance.update({key: show(value) for key, value in values.items()})

    def constant(self, ctx: RingContext, nonzero: bool = False) -> Poly:
        while True:
            c = self.rng.randint(-3, 3)
            if (c or not nonzero) and (not nonzero or ctx.coeff.element(c)):
                return ctx.constant(c)

    def poly(self, ctx: RingContext, indices: Sequence[int], max_degree: int, terms: int = 3,
             base_degree: int = 0) -> Poly:
        """Sparse random polynomial in the given variables, coefficients in [-3, 3]."""
        p = ctx.zero
        for _ in range(self.rng.randint(1, terms)):
            exps = [0] * ctx.nvars
            if indices:
                for _ in range(self.rng.randint(0, max_degree)):
                    exps[self.rng.choice(indices)] += 1
            if base_degree and ctx.base_block and self.rng.random() < 0.5:
                exps[self.rng.randrange(ctx.base_block)] += 1
            p += ctx.monomial(exps) * self.constant(ctx)
        return p

    def complete_intersection(self, ctx: RingContext, degree: Optional[int] = None) -> List[Poly]:
        """f_i = T_i^d_i + g_i with 2 <= d_i <= D and deg g_i < d_i (fiber degree in the relative case)."""
        top = degree or self.spec.degree
        fiber = list(ctx.fiber_indices)
        out = []
        for i in fiber:
            d_i = self.rng.randint(2, max(2, top))
            lead = ctx.monomial([d_i if k == i else 0 for k in range(ctx.nvars)])
            out.append(lead + self.poly(ctx, fiber, d_i - 1, base_degree=1 if ctx.is_relative else 0))
        return out


def show(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [show(v) for v in value]
    if isinstance(value, Poly):
        return str(value.as_expr())
    if isinstance(value, (DiffForm, DenomTuple, GenFraction, RingContext)):
        return str(value)
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    return str(value)


def absolute_context(trial: Trial, n: Optional[int] = None) -> RingContext:
    n = trial.spec.n if n is None else n
    return RingContext(trial.coeff, FIBER_NAMES[:n])


def relative_context(trial: Trial, n: Optional[int] = None, m: Optional[int] = None) -> RingContext:
    n = trial.spec.n if n is None else n
    m = max(1, trial.spec.m) if m is None else m
    return RingContext(trial.coeff, BASE_NAMES[:m] + FIBER_NAMES[:n], m)


def reframe(form: DiffForm, ctx: RingContext) -> DiffForm:
    """The same form viewed in a context with the same variables in the same order."""
    return DiffForm(ctx, form.degree, {key: ctx.convert(v) for key, v in form.components.items()})


def gen_zero_dim_ci(spec: InstanceSpec, rng: Optional[random.Random] = None, relative: bool = False) -> DenomTuple:
    """A certified zero-dimensional complete intersection drawn from ``spec``."""
    trial = Trial(spec, RuleId.R6, 0)
    if rng is not None:
        trial.rng = rng
    ctx = relative_context(trial) if relative else absolute_context(trial)
    return make_denoms(ctx, trial.complete_intersection(ctx))


def cross_oracle_residue(d: DenomTuple, phi: Poly) -> bool:
    """Transformation law, Tate lambda and the trace matrix agree on phi * det(df/dT) dT."""
    ctx = d.ctx
    b = phi * jacobian_determinant(ctx, d.denoms)
    by_law = residue_symbol(fiber_volume(ctx, b), d)
    by_tate = tate_lambda(tate_presentation(d), b)
    by_trace = canonical_trace(d.quotient, phi)
    return by_law == by_tate == by_trace


def _alternation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
    return -1 if inversions % 2 else 1


def _top_form(trial: Trial, ctx: RingContext, degree: int = 2) -> DiffForm:
    return fiber_volume(ctx, trial.poly(ctx, list(ctx.fiber_indices), degree))


def rule_r1(trial: Trial):
    ctx = absolute_context(trial)
    n = ctx.nvars
    t = make_denoms(ctx, trial.complete_intersection(ctx))
    omega = _top_form(trial, ctx)
    fiber = list(ctx.fiber_indices)
    if trial.rng.random() < 0.5:
        # triangular with polynomial entries and a constant diagonal
        u = [[trial.constant(ctx, nonzero=True) if i == j else (trial.poly(ctx, fiber, 1) if j < i else ctx.zero)
              for j in range(n)] for i in range(n)]
    else:
        u = [[trial.poly(ctx, fiber, 1, terms=2) for _ in range(n)] for _ in range(n)]
    s_polys = [sum((u[i][j] * t.denoms[j] for j in range(n)), ctx.zero) for i in range(n)]
    s = DenomTuple(ctx, tuple(s_polys))
    if certify_zero_dimensional(s.gb) is None:
        raise TrialSkipped("transformed tuple is not zero-dimensional")
    det_u = matrix_determinant(ctx, u)
    perm = list(range(n))
    trial.rng.shuffle(perm)
    permuted = make_denoms(ctx, [t.denoms[k] for k in perm])
    trial.record(denoms=list(t.denoms), form=omega, u=[list(row) for row in u], permutation=perm)
    base = residue_symbol(omega, t)
    lhs = [base, base * ctx.constant(_alternation_sign(perm))]
    rhs = [residue_symbol(scale(omega, det_u), s),
           residue_symbol(omega, permuted)]
    return lhs, rhs


def rule_alternation(trial: Trial):
    ctx = absolute_context(trial)
    t = make_denoms(ctx, trial.complete_intersection(ctx))
    omega = _top_form(trial, ctx)
    perm = list(range(ctx.nvars))
    trial.rng.shuffle(perm)
    trial.record(denoms=list(t.denoms), form=omega, permutation=perm)
    permuted = make_denoms(ctx, [t.denoms[k] for k in perm])
    return residue_symbol(omega, permuted), residue_symbol(omega, t) * ctx.constant(_alternation_sign(perm))


def rule_r2(trial: Trial):
    """Split cover of rank k: Res[dq ^ omega; q, t] = k Res[omega; t] with q(w) = prod (w - c_i)."""
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    omega = _top_form(trial, ctx)
    k = trial.rng.randint(1, 3)
    roots = trial.rng.sample(range(-3, 4), k)
    cover = RingContext(ctx.coeff, ctx.vars + ("w",))
    w = cover.variable("w")
    q = cover.one
    for c in roots:
        q *= w - cover.constant(c)
    if any(not ctx.coeff.element(a - b) for a in roots for b in roots if a != b):
        raise TrialSkipped("roots collide in this characteristic")
    lifted = wedge(d_function(cover, q), reframe_into(omega, cover))
    trial.record(denoms=list(t.denoms), form=omega, cover=q)
    lhs = residue_symbol(lifted, make_denoms(cover, [q] + [cover.convert(f) for f in t.denoms]))
    rhs = cover.convert(residue_symbol(omega, t)) * cover.constant(k)
    return lhs, rhs


def reframe_into(form: DiffForm, ctx: RingContext) -> DiffForm:
    """A form moved into a context that contains its variables (indices remapped by name)."""
    out = DiffForm(ctx, form.degree)
    for key, coeff in form.components.items():
        indices = [ctx.index(form.ctx.vars[i]) for i in key]
        out = add(out, basis_form(ctx, indices, ctx.convert(coeff)))
    return out


def rule_r3(trial: Trial):
    """Graph immersion w = h(x): Res[ds ^ omega; s, t + c s] = Res[omega|; t] with s = w - h."""
    small = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(small, trial.complete_intersection(small, min(trial.spec.degree, 3)))
    big = RingContext(small.coeff, small.vars + ("w",))
    h = trial.poly(big, list(range(small.nvars)), 2)
    w = big.variable("w")
    s = w - h
    g = trial.poly(big, list(range(big.nvars)), 2)
    omega_big = basis_form(big, list(range(small.nvars)), g)
    shifted = [big.convert(f) + trial.poly(big, list(range(big.nvars)), 1, terms=2) * s for f in t.denoms]
    trial.record(denoms=list(t.denoms), graph=h, numerator=g, shifted=shifted)
    lhs = residue_symbol(wedge(d_function(big, s), omega_big), make_denoms(big, [s] + shifted))
    restricted = substitute(g, {"w": h}, big)
    rhs = residue_symbol(fiber_volume(small, small.convert(restricted)), t)
    return lhs, big.convert(rhs)


def rule_r4(trial: Trial):
    """Tower over k[u]: iterated residue equals the residue of mu ^ nu over (t, s)."""
    rel = relative_context(trial, min(trial.spec.n, 2), 1)
    t = make_denoms(rel, trial.complete_intersection(rel, min(trial.spec.degree, 3)))
    u = rel.variable("u")
    s = u ** trial.rng.randint(1, 2) + trial.poly(rel, [0], 0, terms=1)
    g = trial.poly(rel, list(range(rel.nvars)), 2)
    a = trial.poly(rel, [0], 1)
    trial.record(denoms=list(t.denoms), base_denom=s, numerator=g, base_numerator=a)

    inner = residue_symbol(fiber_volume(rel, g), t)
    base = rel.base_context()
    outer = residue_symbol(fiber_volume(base, base.convert(a * inner)), make_denoms(base, [base.convert(s)]))

    glued = transitivity_wedge(basis_form(rel, (0,), a), fiber_volume(rel, g))
    flat = rel.absolute()
    joint = residue_symbol(reframe(glued, flat), make_denoms(flat, [flat.convert(f) for f in t.denoms] + [flat.convert(s)]))
    return base.convert(outer), base.convert(joint)


def rule_r5(trial: Trial):
    """Specialization u -> a commutes with the relative residue."""
    rel = relative_context(trial, min(trial.spec.n, 2))
    t = make_denoms(rel, trial.complete_intersection(rel, min(trial.spec.degree, 3)))
    g = trial.poly(rel, list(range(rel.nvars)), 2)
    value = residue_symbol(fiber_volume(rel, g), t)
    fiber_ctx = rel.fiber_context()
    points = list(product(SPECIALIZATION_POINTS, repeat=rel.base_block))
    trial.rng.shuffle(points)
    lhs, rhs, used = [], [], []
    for point in points[:max(4, len(SPECIALIZATION_POINTS))]:
        assignment = {name: fiber_ctx.constant(a) for name, a in zip(rel.base_vars, point)}
        special = DenomTuple(fiber_ctx, tuple(substitute(f, assignment, fiber_ctx) for f in t.denoms))
        if certify_zero_dimensional(special.gb) is None:
            continue
        used.append(point)
        lhs.append(substitute(value, assignment, fiber_ctx))
        rhs.append(residue_symbol(fiber_volume(fiber_ctx, substitute(g, assignment, fiber_ctx)), special))
    trial.record(denoms=list(t.denoms), numerator=g, points=[list(p) for p in used])
    if len(used) < 3:
        raise TrialSkipped(f"only {len(used)} specialization points kept the certificate")
    return lhs, rhs


def rule_r6(trial: Trial):
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx))
    phi = trial.poly(ctx, list(ctx.fiber_indices), 3)
    trial.record(denoms=list(t.denoms), phi=phi)
    volume = wedge_all([d_function(ctx, f) for f in t.denoms], ctx)
    return residue_symbol(scale(volume, phi), t), canonical_trace(t.quotient, phi)


def _r7_cases(spec: InstanceSpec) -> List[Tuple[int, ...]]:
    return [alpha for n in range(1, min(spec.n, 3) + 1) for alpha in product((1, 2, 3), repeat=n)]


def rule_r7(trial: Trial):
    """Res[dt; t^k] vanishes unless every k_i is 1."""
    cases = _r7_cases(trial.spec)
    if trial.index < len(cases):
        alpha = cases[trial.index]
        ctx = absolute_context(trial, len(alpha))
        t = make_denoms(ctx, [ctx.variable(name) for name in ctx.vars])
        expected = ctx.one
    else:
        ctx = absolute_context(trial, min(trial.spec.n, 2))
        alpha = tuple(trial.rng.randint(1, 2) for _ in range(ctx.nvars))
        t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
        expected = ctx.constant(t.quotient.rank)
    trial.record(denoms=list(t.denoms), exponents=list(alpha))
    value = residue_of_fraction(GenFraction(thom_class(t).numerator, t, alpha))
    return value, expected if all(a == 1 for a in alpha) else ctx.zero


def rule_r8(trial: Trial):
    """Numerators in (f) have zero residue; the residue pairing is nondegenerate."""
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    fiber = list(ctx.fiber_indices)
    member = sum((trial.poly(ctx, fiber, 2) * f for f in t.denoms), ctx.zero)
    trial.record(denoms=list(t.denoms), numerator=member)
    _, det = residue_pairing_gram(t)
    return [residue_symbol(fiber_volume(ctx, member), t), bool(det)], [ctx.zero, True]


def rule_r9(trial: Trial):
    """Res[d eta; t^k] = sum_i k_i Res[dt_i ^ eta; t^(k + e_i)], and d_fraction has zero residue."""
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    r = ctx.nvars
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    k = tuple(trial.rng.randint(1, 3) for _ in range(r))
    eta = function_form(ctx, trial.poly(ctx, list(range(r)), 2)) if r == 1 else DiffForm(ctx, r - 1)
    for skip in range(r if r > 1 else 0):
        key = tuple(j for j in range(r) if j != skip)
        eta = add(eta, basis_form(ctx, key, trial.poly(ctx, list(range(r)), 2)))
    fr = GenFraction(eta, t, k)
    trial.record(denoms=list(t.denoms), eta=eta, exponents=list(k))
    lhs = residue_of_fraction(GenFraction(exterior_derivative(eta, relative=True), t, k))
    rhs = ctx.zero
    for i, f in enumerate(t.denoms):
        bumped = tuple(e + 1 if j == i else e for j, e in enumerate(k))
        rhs += ctx.constant(k[i]) * residue_of_fraction(GenFraction(wedge(d_function(ctx, f), eta), t, bumped))
    return [lhs, residue_of_sum(d_fraction(fr), ctx)], [rhs, ctx.zero]


def rule_r10(trial: Trial):
    """Res over the cover of df ^ eta against (f, t) equals Res over the base of klt(eta) against t."""
    rel = relative_context(trial, min(trial.spec.n, 2), 1 if trial.spec.m <= 1 else 2)
    pres = make_presentation(rel, trial.complete_intersection(rel, min(trial.spec.degree, 3)))
    base = rel.base_context()
    base_t = make_denoms(base, trial.complete_intersection(base, 2))
    m = rel.base_block
    eta = DiffForm(rel, m)
    for _ in range(2):
        key = sorted(trial.rng.sample(range(rel.nvars), m))
        eta = add(eta, basis_form(rel, key, trial.poly(rel, list(range(rel.nvars)), 2)))
    trial.record(relations=list(pres.relations.denoms), base_denoms=list(base_t.denoms), eta=eta)
    flat = rel.absolute()
    upstairs = wedge(wedge_all([d_function(rel, f) for f in pres.relations.denoms], rel), eta)
    denoms = [flat.convert(f) for f in pres.relations.denoms] + [flat.convert(f) for f in base_t.denoms]
    lhs = residue_symbol(reframe(upstairs, flat), make_denoms(flat, denoms))
    rhs = residue_symbol(klt_trace(pres, eta), base_t)
    return base.convert(lhs), rhs


def rule_kunz(trial: Trial):
    """y = x^k: klt(T^j dT) = tr(T^(j-k+1)) / k dy for j >= k - 1, zero below."""
    k = trial.rng.randint(1, 4)
    j = trial.rng.randint(0, 7)
    pres = kunz_family(k, trial.coeff)
    if not trial.coeff.element(k):
        raise TrialSkipped(f"{k} is zero in {trial.coeff}")
    rel = pres.ctx
    T = rel.variable("T")
    eta = basis_form(rel, (1,), T ** j)
    trial.record(k=k, j=j)
    value = klt_trace(pres, eta)
    base = pres.base
    expected = base.zero
    if j >= k - 1:
        expected = trace_function(pres, T ** (j - k + 1)) * base.constant(1, k)
    return value.coefficient((0,)), expected


def rule_basechange(trial: Trial):
    """Specializing the base commutes with the finite trace."""
    rel = relative_context(trial, min(trial.spec.n, 2), 1)
    pres = make_presentation(rel, trial.complete_intersection(rel, min(trial.spec.degree, 3)))
    g = trial.poly(rel, list(range(rel.nvars)), 2)
    eta = basis_form(rel, (0,), g)
    trace = klt_trace(pres, eta).coefficient((0,))
    trial.record(relations=list(pres.relations.denoms), numerator=g)
    lhs, rhs = [], []
    for a in SPECIALIZATION_POINTS:
        try:
            special = specialize(pres, {"u": a})
        except (NotZeroDimensionalError, NotCertifiedFreeError):
            continue
        target = special.ctx
        assignment = {"u": target.constant(a)}
        lhs.append(substitute(trace, {"u": pres.base.constant(a)}, pres.base))
        value = klt_trace(special, function_form(target, substitute(g, assignment, target)))
        rhs.append(pres.base.ring.ground_new(constant_value(value.coefficient(()))))
    if len(lhs) < 3:
        raise TrialSkipped("too few specialization points")
    return lhs, rhs


def rule_jacobian(trial: Trial):
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx))
    trial.record(denoms=list(t.denoms))
    J = jacobian_determinant(ctx, t.denoms)
    return residue_symbol(fiber_volume(ctx, J), t), ctx.constant(t.quotient.rank)


def rule_tate(trial: Trial):
    """Tate lambda against the residue, the trace identity, and independence of the splitting."""
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    c = trial.poly(ctx, list(ctx.fiber_indices), 3)
    pres = tate_presentation(t)
    order = list(range(ctx.nvars))
    trial.rng.shuffle(order)
    other = tate_presentation(t, order)
    trial.record(denoms=list(t.denoms), element=c, substitution_order=order)
    lhs = [tate_lambda(pres, c), trace_via_tate(pres, c), other.delta_bar]
    rhs = [residue_symbol(fiber_volume(ctx, c), t), canonical_trace(t.quotient, c), pres.delta_bar]
    return lhs, rhs


def rule_pairing(trial: Trial):
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    trial.record(denoms=list(t.denoms))
    dual = dual_basis(t)
    q = t.quotient
    values, expected = [], []
    for i, b_star in enumerate(dual):
        for j in range(q.rank):
            values.append(residue_symbol(fiber_volume(ctx, b_star * q.basis_element(j)), t))
            expected.append(ctx.one if i == j else ctx.zero)
    return values, expected


def rule_sum(trial: Trial):
    """Univariate additivity: Res[g dT; prod (T - a_i)] = sum of residues at the translated roots."""
    ctx = RingContext(trial.coeff, ("x",))
    x = ctx.variable("x")
    roots = trial.rng.sample(range(-3, 4), trial.rng.randint(1, 4))
    if any(not trial.coeff.element(a - b) for a in roots for b in roots if a != b):
        raise TrialSkipped("roots collide in this characteristic")
    f = ctx.one
    for a in roots:
        f *= x - ctx.constant(a)
    g = trial.poly(ctx, [0], 5)
    trial.record(roots=roots, numerator=g)
    total = residue_symbol(fiber_volume(ctx, g), make_denoms(ctx, [f]))
    local_sum = ctx.zero
    origin = make_denoms(ctx, [x])
    K = ctx.domain
    for a in roots:
        shift = {"x": x + ctx.constant(a)}
        translated = substitute(f, shift, ctx)
        # translated = x * q(x); the local residue is Res[g(x + a) dx; x] / q(0)
        q0 = translated.get((1,), K.zero)
        local = residue_symbol(fiber_volume(ctx, substitute(g, shift, ctx)), origin)
        local_sum += local * ctx.ring.ground_new(K.quo(K.one, q0))
    return total, local_sum


def rule_independence(trial: Trial):
    """Res[ds; s] = Res[dt; t] and [ds; s] = [dt; t] when s generates the same ideal as t."""
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    n = ctx.nvars
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    fiber = list(ctx.fiber_indices)
    u = [[trial.constant(ctx, nonzero=True) if i == j else (trial.poly(ctx, fiber, 1) if j > i else ctx.zero)
          for j in range(n)] for i in range(n)]
    s = make_denoms(ctx, [sum((u[i][j] * t.denoms[j] for j in range(n)), ctx.zero) for i in range(n)])
    trial.record(denoms=list(t.denoms), changed=list(s.denoms))
    theta_t, theta_s = thom_class(t), thom_class(s)
    return [residue_of_fraction(theta_s), fraction_equal(theta_s, theta_t)], [residue_of_fraction(theta_t), True]


def rule_decomposition(trial: Trial):
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    if not ctx.coeff.element(t.quotient.rank):
        raise TrialSkipped("rank vanishes in this characteristic")
    beta = tuple(trial.rng.randint(1, 2) for _ in range(ctx.nvars))
    fr = GenFraction(_top_form(trial, ctx), t, beta)
    trial.record(fraction=fr)
    c, kernel = decompose_fraction(fr)
    theta = fraction_rescale(thom_class(t), beta)
    return residue_of_fraction(fr), c * residue_of_fraction(theta)


def rule_cech(trial: Trial):
    """Integral of the Cech image of [dt; t^alpha] against the affine residue, and binomial dimensions."""
    r = trial.rng.randint(1, min(2, trial.spec.n))
    alpha = tuple(trial.rng.randint(1, 3) for _ in range(r))
    chart = RingContext(trial.coeff, tuple(f"t{i}" for i in range(1, r + 1)))
    t = make_denoms(chart, [chart.variable(name) for name in chart.vars])
    residue = constant_value(residue_of_fraction(GenFraction(thom_class(t).numerator, t, alpha)))
    cochain = fraction_to_cech_class(r, alpha, trial.coeff)
    zero, _ = class_is_zero(cochain)
    rr = trial.rng.randint(1, 3)
    d = trial.rng.randint(-6, 6)
    q = trial.rng.randint(0, rr)
    expected_dim = 0
    if q == 0 and d >= 0:
        expected_dim = comb(d + rr, rr)
    elif q == rr and d <= -rr - 1:
        expected_dim = comb(-d - 1, rr)
    trial.record(alpha=list(alpha), dimension_query=[rr, d, q])
    lhs = [trial.coeff.to_string(pn_integral(cochain)), zero, cohomology_dim(rr, d, q, trial.coeff)]
    rhs = [trial.coeff.to_string(residue), not residue, expected_dim]
    return lhs, rhs


def rule_oracle(trial: Trial):
    ctx = absolute_context(trial, min(trial.spec.n, 2))
    t = make_denoms(ctx, trial.complete_intersection(ctx, min(trial.spec.degree, 3)))
    phi = trial.poly(ctx, list(ctx.fiber_indices), 3)
    trial.record(denoms=list(t.denoms), phi=phi)
    return cross_oracle_residue(t, phi), True


RULES: Dict[RuleId, Callable[[Trial], Tuple[Any, Any]]] = {
    RuleId.R1: rule_r1,
    RuleId.R2: rule_r2,
    RuleId.R3: rule_r3,
    RuleId.R4: rule_r4,
    RuleId.R5: rule_r5,
    RuleId.R6: rule_r6,
    RuleId.R7: rule_r7,
    RuleId.R8: rule_r8,
    RuleId.R9: rule_r9,
    RuleId.R10: rule_r10,
    RuleId.JACOBIAN: rule_jacobian,
    RuleId.TATE: rule_tate,
    RuleId.PAIRING: rule_pairing,
    RuleId.SUM: rule_sum,
    RuleId.CECH: rule_cech,
    RuleId.ORACLE: rule_oracle,
    RuleId.INDEPENDENCE: rule_independence,
    RuleId.ALTERNATION: rule_alternation,
    RuleId.KUNZ: rule_kunz,
    RuleId.BASECHANGE: rule_basechange,
    RuleId.DECOMPOSITION: rule_decomposition,
}


def replay_trial(rule: RuleId, spec: InstanceSpec, index: int) -> TrialOutcome:
    """Run one trial on its own; identical to the same trial inside ``run_rule``."""
    trial = Trial(spec, rule, index)
    try:
        lhs, rhs = RULES[rule](trial)
    except TrialSkipped as e:
        return TrialOutcome(trial=index, status=TrialStatus.SKIPPED, instance=trial.instance, note=str(e))
    except (NotZeroDimensionalError, NotCertifiedFreeError) as e:
        return TrialOutcome(trial=index, status=TrialStatus.SKIPPED, instance=trial.instance, note=e.message)
    except ResidueEngineError as e:
        logger.warning(f"{rule.value} trial {index} raised {e.code}: {e.message}")
        return TrialOutcome(trial=index, status=TrialStatus.FAILED, instance=trial.instance,
                            lhs="error", rhs="", note=f"{e.code}: {e.message}")
    status = TrialStatus.PASSED if lhs == rhs else TrialStatus.FAILED
    if status is TrialStatus.FAILED:
        logger.warning(f"{rule.value} trial {index} failed: {show(lhs)} != {show(rhs)}")
    return TrialOutcome(trial=index, status=status, instance=trial.instance,
                        lhs=str(show(lhs)), rhs=str(show(rhs)))


def trial_count(rule: RuleId, trials: int, spec: InstanceSpec) -> int:
    """R7 runs its exhaustive monomial cases ahead of the random trials."""
    if rule is RuleId.R7:
        return len(_r7_cases(spec)) + trials
    return trials


def run_rule(rule: RuleId, trials: int, spec: InstanceSpec, workers: int = 1) -> VerifyReport:
    rule = RuleId(rule)
    started = time.perf_counter()
    indices = range(trial_count(rule, trials, spec))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda i: replay_trial(rule, spec, i), indices))
    else:
        outcomes = [replay_trial(rule, spec, i) for i in indices]

    failures = [
        FailureRecord(trial=o.trial, instance=o.instance, lhs=o.lhs, rhs=o.rhs, note=o.note)
        for o in outcomes if o.status is TrialStatus.FAILED
    ]
    passed = sum(1 for o in outcomes if o.status is TrialStatus.PASSED)
    skipped = sum(1 for o in outcomes if o.status is TrialStatus.SKIPPED)
    report = VerifyReport(
        rule=rule,
        spec=spec,
        attempted=passed + len(failures),
        passed=passed,
        failed=len(failures),
        skipped=skipped,
        failures=failures,
        wall_time=time.perf_counter() - started,
    )
    logger.info(f"{rule.value}: {report.passed}/{report.attempted} passed, {report.skipped} skipped "
                f"in {report.wall_time:.2f}s")
    return report
