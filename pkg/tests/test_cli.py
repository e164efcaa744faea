import json

import pytest

from cli import (
    HANDLERS,
    RINGLESS,
    exit_code,
    execute,
    form_json,
    form_text,
    format_output,
    fraction_json,
    main,
    parse_expression,
    parse_form,
    parse_poly,
    parse_ring,
    poly_json,
    poly_text,
)
from exceptions import (
    DegreeMismatchError,
    ExpressionSyntaxError,
    InvalidQueryError,
    MixedDegreeError,
    UnknownVariableError,
)
from forms import basis_form
from gen_fractions import GenFraction
from models import CommandKind, OutputRecord, Query, RuleId
from residue import make_denoms
from ring import CoeffField, RingContext, coefficient_of


XY = RingContext(CoeffField(), ("x", "y"))
LINE = RingContext(CoeffField(), ("T",))


def test_parse_expression_examples():
    p = parse_poly("x^2*y - 1/2", XY)
    assert coefficient_of(p, (2, 1)) == 1
    assert coefficient_of(p, (0, 0)) == CoeffField().element(-1, 2)
    assert len(p.terms()) == 2

    x = XY.variable("x")
    assert parse_expression("x*d(x)/\\d(y)", XY) == basis_form(XY, (0, 1), x)
    assert parse_expression("d(y) /\\ d(x)", XY) == basis_form(XY, (0, 1), -XY.one)
    assert parse_expression("(x + 1)^2", XY) == x ** 2 + 2 * x + 1


def test_parse_expression_errors():
    with pytest.raises(MixedDegreeError):
        parse_expression("d(x) + 1", XY)
    with pytest.raises(UnknownVariableError):
        parse_expression("z + 1", XY)
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("x +* y", XY)
    assert info.value.line == 1
    assert info.value.column == 4
    with pytest.raises(InvalidQueryError):
        parse_expression("x / y", XY)
    with pytest.raises(MixedDegreeError):
        parse_poly("d(x)", XY)


def test_parse_form_checks_degree():
    assert parse_form("0", XY, 2).degree == 2
    with pytest.raises(DegreeMismatchError):
        parse_form("d(x)", XY, 2)


def test_parse_ring():
    assert parse_ring("QQ[x,y]") == XY
    rel = parse_ring("QQ[y][T]")
    assert rel.base_vars == ("y",)
    assert rel.fiber_vars == ("T",)
    assert parse_ring("QQ[x]", "Fp:7").coeff == CoeffField("Fp", 7)
    with pytest.raises(InvalidQueryError):
        parse_ring("x,y")


def test_rendering_round_trips_through_the_parser():
    x, y = XY.variable("x"), XY.variable("y")
    for p in (x ** 2 * y - XY.constant(1, 2), -x + 3 * y ** 3, XY.zero, XY.constant(-7, 3)):
        assert parse_poly(poly_text(p, XY), XY) == p
    form = basis_form(XY, (0, 1), 2 * x - y)
    assert parse_expression(form_text(form), XY) == form
    assert poly_json(XY.constant(-1, 2), XY) == "-1/2"
    assert poly_json(x - 1, XY) == [[[1, 0], "1"], [[0, 0], "-1"]]


def test_execute_examples():
    record = execute(Query(cmd="residue", form="d(x)/\\d(y)", denoms=["x", "y"]), XY)
    assert record.status == "ok"
    assert record.value == "1"

    record = execute(Query(cmd="residue", form="d(T)", denoms=["T^2-1"]), LINE)
    assert record.value == "0"

    record = execute(Query(cmd="residue", form="d(x)/\\d(y)", denoms=["x+y", "x-y"]), XY)
    assert record.value == "-1/2"

    record = execute(Query(cmd="verify", rule=RuleId.R6, trials=25, seed=7), None)
    assert record.status == "ok"
    assert record.value["failed"] == 0


def test_execute_other_commands():
    rel = parse_ring("QQ[y][T]")
    assert execute(Query(cmd="residue-rel", form="T*d(T)", denoms=["T^2-y"]), rel).value == "1"
    assert execute(Query(cmd="trace", element="T^2", denoms=["T^2-y"]), rel).text == "2*y"
    assert execute(Query(cmd="tate-lambda", element="T", denoms=["T^2-1"]), LINE).value == "1"
    assert execute(Query(cmd="klt", form="T*d(T)", denoms=["T^2-y"]), rel).text == "d(y)"
    assert execute(Query(cmd="quotient", denoms=["x^2", "y"]), XY).value["rank"] == 2
    assert execute(Query(cmd="groebner", denoms=["x^2+y", "y"]), XY).status == "ok"
    fraction = Query(cmd="fraction", action="residue", form="x*d(x)/\\d(y)", denoms=["x", "y"], exponents=[2, 1])
    assert execute(fraction, XY).value == "1"
    equal = Query(cmd="fraction", action="equal", form="d(x)/\\d(y)", denoms=["x", "y"],
                  other_form="x*d(x)/\\d(y)", other_exponents=[2, 1])
    assert execute(equal, XY).value is True
    assert execute(Query(cmd="cech", r=2, twist=-3, q=2), None).value == 1
    assert execute(Query(cmd="cech", action="integral", r=2, alpha=[1, 1]), None).value == "1"
    assert execute(Query(cmd="cech", action="is-zero", r=2, alpha=[2, 1]), None).value["zero"] is True


def test_execute_reports_errors_as_records():
    record = execute(Query(cmd="residue", form="d(x)/\\d(y)", denoms=["x*y", "x*y"]), XY)
    assert record.status == "error"
    assert record.code == "NOT_ZERO_DIMENSIONAL"
    assert execute(Query(cmd="residue", form="d(x)", denoms=["x"]), None).code == "INVALID_QUERY"
    assert execute(Query(cmd="residue", form="d(x) + 1", denoms=["x", "y"]), XY).code == "MIXED_DEGREE"


def test_format_output_examples():
    ok = OutputRecord(query={"cmd": "residue"}, status="ok", value="1", text="1")
    assert format_output(ok, "text") == "1\n"
    assert format_output(ok, "json") == '{"status":"ok","value":"1","query":{"cmd":"residue"}}\n'

    error = OutputRecord(query={"cmd": "residue"}, status="error", code="NOT_ZERO_DIMENSIONAL", message="no")
    payload = json.loads(format_output(error, "json"))
    assert payload["status"] == "error"
    assert payload["code"] == "NOT_ZERO_DIMENSIONAL"
    assert format_output(error, "text") == "error NOT_ZERO_DIMENSIONAL: no\n"


def test_exit_codes():
    ok = OutputRecord(query={"cmd": "residue"}, status="ok", value="1")
    usage = OutputRecord(query={"cmd": "residue"}, status="error", code="SYNTAX_ERROR", message="")
    failure = OutputRecord(query={"cmd": "residue"}, status="error", code="NOT_ZERO_DIMENSIONAL", message="")
    failed_verify = OutputRecord(query={"cmd": "verify"}, status="ok", value={"failed": 2})
    assert exit_code([ok]) == 0
    assert exit_code([ok, failure]) == 1
    assert exit_code([failure, usage]) == 2
    assert exit_code([failed_verify]) == 1


def _job(tmp_path):
    job = {
        "ring": {"field": "QQ", "base": [], "fiber": ["x", "y"]},
        "queries": [
            {"cmd": "residue", "form": "d(x)/\\d(y)", "denoms": ["x", "y"]},
            {"cmd": "residue", "form": "(x+y)*d(x)/\\d(y)", "denoms": ["x^2-1", "y^2-2"]},
            {"cmd": "trace", "element": "x*y", "denoms": ["x^2-1", "y-x"]},
        ],
    }
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    return path


def test_main_runs_a_job_file(tmp_path, capsys):
    path = _job(tmp_path)
    assert main(["--job", str(path), "--workers", "2"]) == 0
    first = capsys.readouterr().out
    lines = first.splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["value"] == "1"
    assert json.loads(lines[2])["value"] == "2"

    assert main(["--job", str(path)]) == 0
    assert capsys.readouterr().out == first


def test_main_single_query(capsys):
    assert main(["residue", "--ring", "QQ[T]", "--form", "d(T)", "--denoms", "T^2-1", "--output", "text"]) == 0
    assert capsys.readouterr().out == "0\n"
    assert main(["residue", "--ring", "QQ[x]", "--form", "d(x", "--denoms", "x"]) == 2
    assert main(["residue", "--ring", "QQ[x,y]", "--form", "d(x)/\\d(y)", "--denoms", "x*y,x*y"]) == 1


def test_main_rejects_bad_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"queries": [{"cmd": "nope"}]}')
    assert main(["--job", str(bad)]) == 2
    assert main(["--job", str(tmp_path / "missing.json")]) == 2
    assert main([]) == 2


def test_command_kinds_are_all_dispatched():
    assert set(HANDLERS) | RINGLESS == set(CommandKind)


def test_fraction_outputs_round_trip_through_the_parser():
    line = parse_ring("QQ[x]")
    x = line.variable("x")
    record = execute(Query(cmd="fraction", action="rescale", form="d(x)", denoms=["x"], gamma=[3]), line)
    assert record.text == "[(x^2)*d(x); (x)^3]"
    assert record.value == {
        "numerator": form_json(basis_form(line, (0,), x ** 2)),
        "denoms": [[[[1], "1"]]],
        "exponents": [3],
    }
    numerator = parse_expression("(x^2)*d(x)", line)
    assert form_text(numerator) == "(x^2)*d(x)"
    again = execute(
        Query(cmd="fraction", action="rescale", form=form_text(numerator), denoms=["x"], exponents=[3], gamma=[3]),
        line,
    )
    assert again.value == record.value
    assert again.text == record.text


def test_fraction_derivative_output_is_structured():
    x, y = XY.variable("x"), XY.variable("y")
    record = execute(Query(cmd="fraction", action="d", form="x*d(y)", denoms=["x", "y"]), XY)
    assert record.status == "ok"
    point = make_denoms(XY, [x, y])
    assert record.value == [
        fraction_json(GenFraction(basis_form(XY, (0, 1)), point, (1, 1))),
        fraction_json(GenFraction(basis_form(XY, (0, 1), -x), point, (2, 1))),
    ]
    assert record.text == "[d(x)/\\d(y); x, y] + [(-x)*d(x)/\\d(y); (x)^2, y]"
