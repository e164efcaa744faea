#!/usr/bin/env python3
"""
Residue engine - command line surface

Single queries come from flags, batches from a JSON job file. Records go to
stdout (NDJSON or text), logs to stderr.
"""
import argparse
import asyncio
import json
import logging
import re
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError
from pydantic import ValidationError

from exceptions import (
    USAGE_ERROR_CODES,
    DegreeMismatchError,
    ExpressionSyntaxError,
    InvalidQueryError,
    MixedDegreeError,
    ResidueEngineError,
)
from finite_trace import klt_trace, make_presentation
from forms import DiffForm, add, differential, function_form, scale, wedge
from gen_fractions import (
    GenFraction,
    decompose_fraction,
    d_fraction,
    fraction_equal,
    fraction_is_zero,
    fraction_rescale,
    residue_of_fraction,
)
from groebner import buchberger, canonical_trace
from models import CommandKind, InstanceSpec, JobFile, OutputRecord, Query, RingDeclaration, RuleId
from projective import class_is_zero, cohomology_dim, fraction_to_cech_class, pn_integral
from residue import make_denoms, residue_symbol, tate_lambda, tate_presentation
from ring import CoeffField, MonomialOrder, Poly, RingContext, constant_value
from verify import run_rule

logger = logging.getLogger(__name__)

Value = Union[Poly, DiffForm]

expression_grammar = r"""
    ?start: sum

    ?sum: wedge
        | sum "+" wedge -> add
        | sum "-" wedge -> sub

    ?wedge: product
        | wedge WEDGE product -> wedge

    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div

    ?unary: power
        | "-" unary -> neg
        | "+" unary

    ?power: atom
        | atom "^" INT -> pow

    ?atom: INT -> integer
        | DIFF NAME ")" -> diff
        | NAME -> var
        | "(" sum ")"

    WEDGE: "/\\"
    DIFF.2: "d("
    NAME: /[a-zA-Z_][a-zA-Z0-9_]*/

    %import common.INT
    %import common.WS
    %ignore WS
"""

expression_parser = Lark(expression_grammar, parser="lalr")


@v_args(inline=True)
class ExpressionBuilder(Transformer):
    """Folds the parse tree into a Poly or a DiffForm of one homogeneous degree."""

    def __init__(self, ctx: RingContext):
        super().__init__()
        self.ctx = ctx

    def _form(self, a: Value) -> DiffForm:
        return a if isinstance(a, DiffForm) else function_form(self.ctx, a)

    def integer(self, token):
        return self.ctx.constant(int(token))

    def var(self, token):
        return self.ctx.variable(str(token))

    def diff(self, _, token):
        return differential(self.ctx, str(token))

    def add(self, a, b):
        if isinstance(a, Poly) and isinstance(b, Poly):
            return a + b
        try:
            return add(self._form(a), self._form(b))
        except DegreeMismatchError:
            raise MixedDegreeError(f"cannot add forms of degree {self._form(a).degree} and {self._form(b).degree}")

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def neg(self, a):
        return -a

    def mul(self, a, b):
        if isinstance(a, Poly) and isinstance(b, Poly):
            return a * b
        if isinstance(a, Poly):
            return scale(b, a)
        if isinstance(b, Poly):
            return scale(a, b)
        return wedge(a, b)

    def wedge(self, a, _, b):
        return wedge(self._form(a), self._form(b))

    def div(self, a, b):
        if not isinstance(b, Poly) or not b.is_ground or not b:
            raise InvalidQueryError("division is only by nonzero constants")
        inverse = self.ctx.ring.ground_new(self.ctx.domain.quo(self.ctx.domain.one, constant_value(b)))
        return self.mul(a, inverse)

    def pow(self, a, exponent):
        if not isinstance(a, Poly):
            raise InvalidQueryError("only polynomials can be raised to a power")
        return a ** int(exponent)


def parse_expression(text: str, ctx: RingContext) -> Value:
    try:
        tree = expression_parser.parse(text)
    except UnexpectedInput as e:
        raise ExpressionSyntaxError(f"unexpected input in {text!r}", e.line, e.column)
    try:
        return ExpressionBuilder(ctx).transform(tree)
    except VisitError as e:
        raise e.orig_exc


def parse_poly(text: str, ctx: RingContext) -> Poly:
    value = parse_expression(text, ctx)
    if isinstance(value, DiffForm):
        if value.degree == 0:
            return value.coefficient(())
        raise MixedDegreeError(f"expected a polynomial, got a {value.degree}-form in {text!r}")
    return value


def parse_form(text: str, ctx: RingContext, degree: int) -> DiffForm:
    value = parse_expression(text, ctx)
    form = value if isinstance(value, DiffForm) else function_form(ctx, value)
    if form.is_zero():
        return DiffForm(ctx, degree)
    if form.degree != degree:
        raise DegreeMismatchError(f"expected a {degree}-form, got degree {form.degree} in {text!r}")
    return form


_RING = re.compile(r"^\s*(?P<field>[^\[\]]+?)\s*\[(?P<first>[^\[\]]*)\](?:\s*\[(?P<second>[^\[\]]*)\])?\s*$")


def _names(text: str) -> List[str]:
    return [name.strip() for name in text.split(",") if name.strip()]


def parse_ring(text: str, field: Optional[str] = None) -> RingContext:
    """``QQ[x,y]`` (absolute) or ``QQ[y][T]`` (base block, fiber block); ``field`` overrides the prefix."""
    match = _RING.match(text)
    if not match:
        raise InvalidQueryError(f"cannot read ring {text!r}")
    coeff = CoeffField.parse(field or match.group("field"))
    first = _names(match.group("first"))
    if match.group("second") is None:
        return RingContext(coeff, tuple(first))
    return RingContext(coeff, tuple(first + _names(match.group("second"))), len(first))


def ring_from_declaration(decl: RingDeclaration) -> RingContext:
    return RingContext(CoeffField.parse(decl.field), tuple(decl.base + decl.fiber), len(decl.base))


def poly_text(p: Poly, ctx: RingContext) -> str:
    if not p:
        return "0"
    parts = []
    for monom, c in p.terms():
        body = "*".join(name if e == 1 else f"{name}^{e}" for name, e in zip(ctx.vars, monom) if e)
        c_text = ctx.coeff.to_string(c)
        if not body:
            parts.append(c_text)
        elif c_text == "1":
            parts.append(body)
        elif c_text == "-1":
            parts.append(f"-{body}")
        else:
            parts.append(f"{c_text}*{body}")
    out = parts[0]
    for part in parts[1:]:
        out += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
    return out


def poly_json(p: Poly, ctx: RingContext) -> Any:
    """A constant as ``p/q``; otherwise the term list in descending monomial order."""
    if p.is_ground:
        return ctx.coeff.to_string(constant_value(p))
    return [[list(monom), ctx.coeff.to_string(c)] for monom, c in p.terms()]


def form_text(form: DiffForm) -> str:
    if form.is_zero():
        return "0"
    parts = []
    for key in sorted(form.components):
        coeff = poly_text(form.components[key], form.ctx)
        if not key:
            parts.append(coeff)
            continue
        basis = "/\\".join(f"d({form.ctx.vars[i]})" for i in key)
        parts.append(basis if coeff == "1" else f"({coeff})*{basis}")
    return " + ".join(parts)


def form_json(form: DiffForm) -> Any:
    return [
        {"basis": [form.ctx.vars[i] for i in key], "coeff": poly_json(form.components[key], form.ctx)}
        for key in sorted(form.components)
    ]


def fraction_text(fr: GenFraction) -> str:
    powers = ", ".join(poly_text(t, fr.ctx) if b == 1 else f"({poly_text(t, fr.ctx)})^{b}"
                       for t, b in zip(fr.denoms.denoms, fr.exponents))
    return f"[{form_text(fr.numerator)}; {powers}]"


def fraction_json(fr: GenFraction) -> Any:
    return {
        "numerator": form_json(fr.numerator),
        "denoms": [poly_json(t, fr.ctx) for t in fr.denoms.denoms],
        "exponents": list(fr.exponents),
    }


Rendered = Tuple[Any, str]


def _render_poly(p: Poly, ctx: RingContext) -> Rendered:
    return poly_json(p, ctx), poly_text(p, ctx)


def _require(value, name: str, cmd: CommandKind):
    if value is None:
        raise InvalidQueryError(f"{cmd.value} needs {name}")
    return value


def _denoms(query: Query, ctx: RingContext, texts: Optional[Sequence[str]] = None):
    return make_denoms(ctx, [parse_poly(t, ctx) for t in (query.denoms if texts is None else texts)])


def _fraction(query: Query, ctx: RingContext, form: Optional[str], denoms: Sequence[str],
              exponents: Optional[Sequence[int]]) -> GenFraction:
    d = _denoms(query, ctx, denoms)
    value = parse_expression(_require(form, "a numerator form", query.cmd), ctx)
    numerator = value if isinstance(value, DiffForm) else function_form(ctx, value)
    if numerator.is_zero():
        numerator = DiffForm(ctx, d.r)
    return GenFraction(numerator, d, tuple(exponents or (1,) * d.r))


def _residue(query: Query, ctx: RingContext) -> Rendered:
    form = parse_form(_require(query.form, "a form", query.cmd), ctx, len(ctx.fiber_vars))
    value = residue_symbol(form, _denoms(query, ctx))
    return _render_poly(value, ctx)


def _residue_rel(query: Query, ctx: RingContext) -> Rendered:
    if not ctx.is_relative:
        raise InvalidQueryError("residue-rel needs a ring with a base block, e.g. QQ[y][T]")
    return _residue(query, ctx)


def _trace(query: Query, ctx: RingContext) -> Rendered:
    c = parse_poly(_require(query.element, "an element", query.cmd), ctx)
    return _render_poly(canonical_trace(_denoms(query, ctx).quotient, c), ctx)


def _tate_lambda(query: Query, ctx: RingContext) -> Rendered:
    c = parse_poly(_require(query.element, "an element", query.cmd), ctx)
    return _render_poly(tate_lambda(tate_presentation(_denoms(query, ctx)), c), ctx)


def _klt(query: Query, ctx: RingContext) -> Rendered:
    if not ctx.is_relative:
        raise InvalidQueryError("klt needs a ring with a base block, e.g. QQ[y][T]")
    pres = make_presentation(ctx, [parse_poly(t, ctx) for t in query.denoms])
    eta = parse_form(_require(query.form, "a form", query.cmd), ctx, ctx.base_block)
    result = klt_trace(pres, eta)
    return form_json(result), form_text(result)


def _groebner(query: Query, ctx: RingContext) -> Rendered:
    gens = [parse_poly(t, ctx) for t in query.denoms]
    order = MonomialOrder(query.order, ctx.base_block) if query.order else None
    gb = buchberger(ctx, gens, order)
    return [poly_json(g, ctx) for g in gb.basis], ", ".join(poly_text(g, ctx) for g in gb.basis)


def _quotient(query: Query, ctx: RingContext) -> Rendered:
    q = _denoms(query, ctx).quotient
    basis = [q.basis_element(k) for k in range(q.rank)]
    text = f"rank {q.rank}: " + ", ".join(poly_text(b, ctx) for b in basis)
    return {"rank": q.rank, "basis": [poly_json(b, ctx) for b in basis]}, text


def _fraction_command(query: Query, ctx: RingContext) -> Rendered:
    action = query.action or "residue"
    fr = _fraction(query, ctx, query.form, query.denoms, query.exponents)
    if action == "residue":
        return _render_poly(residue_of_fraction(fr), ctx)
    if action == "is-zero":
        zero = fraction_is_zero(fr)
        return zero, str(zero).lower()
    if action == "d":
        terms = d_fraction(fr).terms
        text = " + ".join(fraction_text(t) for t in terms) if terms else "0"
        return [fraction_json(t) for t in terms], text
    if action == "rescale":
        rescaled = fraction_rescale(fr, _require(query.gamma, "gamma", query.cmd))
        return fraction_json(rescaled), fraction_text(rescaled)
    if action == "equal":
        other = _fraction(query, ctx, query.other_form, query.other_denoms or query.denoms, query.other_exponents)
        equal = fraction_equal(fr, other)
        return equal, str(equal).lower()
    if action == "decompose":
        c, kernel = decompose_fraction(fr)
        value = {"coefficient": poly_json(c, ctx), "kernel": fraction_json(kernel)}
        return value, f"{poly_text(c, ctx)}; {fraction_text(kernel)}"
    raise InvalidQueryError(f"unknown fraction action {action!r}")


def _cech(query: Query, coeff: CoeffField) -> Rendered:
    action = query.action or "dim"
    r = _require(query.r, "r", query.cmd)
    if action == "dim":
        dim = cohomology_dim(r, _require(query.twist, "twist", query.cmd), _require(query.q, "q", query.cmd), coeff)
        return dim, str(dim)
    cochain = fraction_to_cech_class(r, _require(query.alpha, "alpha", query.cmd), coeff)
    if action == "class":
        return str(cochain), str(cochain)
    if action == "is-zero":
        zero, witness = class_is_zero(cochain)
        return {"zero": zero, "witness": str(witness) if witness is not None else None}, str(zero).lower()
    if action == "integral":
        value = coeff.to_string(pn_integral(cochain))
        return value, value
    raise InvalidQueryError(f"unknown cech action {action!r}")


def _verify(query: Query, coeff: CoeffField, workers: int = 1) -> Rendered:
    spec_fields = {k: v for k, v in {"n": query.n, "m": query.m, "degree": query.degree}.items() if v is not None}
    spec = InstanceSpec(field=str(coeff), seed=query.seed or 0, **spec_fields)
    report = run_rule(_require(query.rule, "a rule", query.cmd),
                      25 if query.trials is None else query.trials, spec, workers)
    lines = [f"{report.rule.value}: {report.passed}/{report.attempted} passed, "
             f"{report.failed} failed, {report.skipped} skipped"]
    lines += [f"  trial {f.trial}: {f.lhs} != {f.rhs}" + (f" ({f.note})" if f.note else "") for f in report.failures]
    return report.model_dump(mode="json"), "\n".join(lines)


HANDLERS: Dict[CommandKind, Callable[[Query, RingContext], Rendered]] = {
    CommandKind.RESIDUE: _residue,
    CommandKind.RESIDUE_REL: _residue_rel,
    CommandKind.TRACE: _trace,
    CommandKind.TATE_LAMBDA: _tate_lambda,
    CommandKind.KLT: _klt,
    CommandKind.GROEBNER: _groebner,
    CommandKind.QUOTIENT: _quotient,
    CommandKind.FRACTION: _fraction_command,
}

RINGLESS = {CommandKind.CECH, CommandKind.VERIFY}


def execute(query: Query, ctx: Optional[RingContext], workers: int = 1,
            coeff: Optional[CoeffField] = None) -> OutputRecord:
    """Run one query; engine errors come back as error records, never as exceptions."""
    echo = query.model_dump(mode="json", exclude_defaults=True)
    started = time.perf_counter()
    try:
        if ctx is None and query.cmd not in RINGLESS:
            raise InvalidQueryError(f"{query.cmd.value} needs a ring declaration")
        coeff = ctx.coeff if ctx else coeff or CoeffField()
        if query.cmd is CommandKind.VERIFY:
            value, text = _verify(query, coeff, workers)
        elif query.cmd is CommandKind.CECH:
            value, text = _cech(query, coeff)
        else:
            value, text = HANDLERS[query.cmd](query, ctx)
        record = OutputRecord(query=echo, status="ok", value=value, text=text)
    except ResidueEngineError as e:
        logger.error(f"{query.cmd.value} failed with {e.code}: {e.message}")
        record = OutputRecord(query=echo, status="error", code=e.code, message=e.message)
    except (ZeroDivisionError, ValidationError) as e:
        record = OutputRecord(query=echo, status="error", code=InvalidQueryError.code, message=str(e))
    except Exception as e:
        logger.exception(f"Unexpected error while running {query.cmd.value}")
        record = OutputRecord(query=echo, status="error", code="INTERNAL_ERROR", message=str(e))
    record.timing = time.perf_counter() - started
    logger.debug(f"{query.cmd.value} finished in {record.timing:.3f}s")
    return record


def format_output(record: OutputRecord, mode: str = "json") -> str:
    if mode == "text":
        if record.status == "ok":
            return f"{record.text if record.text is not None else record.value}\n"
        return f"error {record.code}: {record.message}\n"
    if record.status == "ok":
        payload = {"status": "ok", "value": record.value, "query": record.query}
    else:
        payload = {"status": "error", "code": record.code, "message": record.message, "query": record.query}
    return json.dumps(payload, separators=(",", ":")) + "\n"


def exit_code(records: Sequence[OutputRecord]) -> int:
    """0 when everything succeeded, 2 for malformed input, 1 for computation failures."""
    if any(r.status == "error" and r.code in USAGE_ERROR_CODES for r in records):
        return 2
    if any(r.status == "error" for r in records):
        return 1
    if any(isinstance(r.value, dict) and r.value.get("failed") for r in records if r.query.get("cmd") == "verify"):
        return 1
    return 0


async def run_queries(queries: Sequence[Query], ctx: Optional[RingContext], workers: int = 1,
                      coeff: Optional[CoeffField] = None) -> List[OutputRecord]:
    """Fan queries out to worker threads; records come back in input order."""
    semaphore = asyncio.Semaphore(max(1, workers))

    async def run_one(query: Query) -> OutputRecord:
        async with semaphore:
            return await asyncio.to_thread(execute, query, ctx, 1, coeff)

    return await asyncio.gather(*(run_one(q) for q in queries))


def _int_list(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    return [int(part) for part in text.split(",") if part.strip()]


def _str_list(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Exact residue symbols, traces and Cech classes")
    parser.add_argument("cmd", nargs="?", choices=[c.value for c in CommandKind], help="command to run")
    parser.add_argument("--ring", help='polynomial ring, e.g. "QQ[x,y]" or "QQ[y][T]"')
    parser.add_argument("--field", help="coefficient field: QQ or Fp:<p>")
    parser.add_argument("--job", type=Path, help="JSON job file")
    parser.add_argument("--output", choices=["text", "json"], default="json")
    parser.add_argument("--form")
    parser.add_argument("--denoms", help="comma-separated polynomials")
    parser.add_argument("--element")
    parser.add_argument("--exponents")
    parser.add_argument("--gamma")
    parser.add_argument("--other-form")
    parser.add_argument("--other-denoms")
    parser.add_argument("--other-exponents")
    parser.add_argument("--action")
    parser.add_argument("--order", choices=["degrevlex", "lex", "block"])
    parser.add_argument("--r", type=int)
    parser.add_argument("--twist", type=int)
    parser.add_argument("--q", type=int)
    parser.add_argument("--alpha")
    parser.add_argument("--rule", choices=[r.value for r in RuleId])
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--degree", type=int)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true")
    return parser


def query_from_args(args: argparse.Namespace) -> Query:
    fields = {
        "cmd": args.cmd,
        "form": args.form,
        "denoms": _str_list(args.denoms) or [],
        "element": args.element,
        "exponents": _int_list(args.exponents),
        "gamma": _int_list(args.gamma),
        "other_form": args.other_form,
        "other_denoms": _str_list(args.other_denoms),
        "other_exponents": _int_list(args.other_exponents),
        "action": args.action,
        "order": args.order,
        "r": args.r,
        "twist": args.twist,
        "q": args.q,
        "alpha": _int_list(args.alpha),
        "rule": args.rule,
        "trials": args.trials,
        "seed": args.seed,
        "n": args.n,
        "m": args.m,
        "degree": args.degree,
    }
    return Query(**{k: v for k, v in fields.items() if v is not None})


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    try:
        if args.job:
            job = JobFile.model_validate_json(args.job.read_text())
            decl = job.ring
            if args.field:
                decl = decl.model_copy(update={"field": args.field})
            ctx = ring_from_declaration(decl) if decl.fiber or decl.base else None
            coeff = CoeffField.parse(decl.field)
            queries = job.queries
        else:
            if not args.cmd:
                raise InvalidQueryError("give a command or --job")
            ctx = parse_ring(args.ring, args.field) if args.ring else None
            coeff = CoeffField.parse(args.field) if args.field else None
            queries = [query_from_args(args)]
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid input: {e}")
        return 2
    except ResidueEngineError as e:
        logger.error(f"{e.code}: {e.message}")
        return 2

    logger.info(f"Running {len(queries)} quer{'y' if len(queries) == 1 else 'ies'}")
    if len(queries) > 1:
        records = asyncio.run(run_queries(queries, ctx, args.workers, coeff))
    else:
        records = [execute(q, ctx, args.workers, coeff) for q in queries]
    for record in records:
        sys.stdout.write(format_output(record, args.output))
    sys.stdout.flush()
    return exit_code(records)


if __name__ == "__main__":
    sys.exit(main())
