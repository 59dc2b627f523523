"""Tokenizer, parser and evaluator tests, including the golden table."""

from __future__ import annotations

import math

import pytest

from deltamax.errors import LexError, NonFinite, ParseError, UnboundVariable
from deltamax.expr import (
    Binary,
    Call,
    Const,
    Unary,
    Var,
    eval_ast,
    free_vars,
    parse,
    parse_source,
    to_source,
    tokenize,
)


class TestTokenize:
    def test_power_expression(self):
        kinds = [(t.kind, t.lexeme) for t in tokenize("x^2")]
        assert kinds == [("identifier", "x"), ("operator", "^"), ("number", "2")]

    def test_call_with_exponent_literal(self):
        kinds = [(t.kind, t.lexeme) for t in tokenize("ln(r)+1e-3")]
        assert kinds == [
            ("identifier", "ln"), ("lparen", "("), ("identifier", "r"),
            ("rparen", ")"), ("operator", "+"), ("number", "1e-3"),
        ]

    def test_lex_error_position(self):
        with pytest.raises(LexError) as err:
            tokenize("x$2")
        assert err.value.position == 1

    def test_spans_cover_non_whitespace(self):
        src = " 3.5 * sin( x1 ) - 7e2 "
        toks = tokenize(src)
        covered = set()
        for t in toks:
            span = range(*t.span)
            assert not covered & set(span), "overlapping spans"
            covered |= set(span)
        non_ws = {i for i, c in enumerate(src) if not c.isspace()}
        assert covered == non_ws

    def test_number_forms(self):
        for text, val in [("2", 2.0), ("2.5", 2.5), (".5", 0.5), ("2.", 2.0),
                          ("1e3", 1e3), ("1.5E-7", 1.5e-7), ("3e+2", 300.0)]:
            (tok,) = tokenize(text)
            assert tok.kind == "number"
            assert float(tok.lexeme) == val


class TestParse:
    def test_call(self):
        assert parse_source("exp(r)") == Call("exp", (Var("r"),))

    def test_unary_minus_binds_below_power(self):
        assert parse_source("-x^2") == Unary("neg", Binary("^", Var("x"), Const(2.0)))

    def test_power_right_associative(self):
        assert parse_source("x^2^3") == Binary(
            "^", Var("x"), Binary("^", Const(2.0), Const(3.0)))

    def test_signed_exponent(self):
        assert parse_source("x^-2") == Binary("^", Var("x"), Unary("neg", Const(2.0)))

    def test_precedence_chain(self):
        assert parse_source("1+2*3") == Binary(
            "+", Const(1.0), Binary("*", Const(2.0), Const(3.0)))
        assert parse_source("(1+2)*3") == Binary(
            "*", Binary("+", Const(1.0), Const(2.0)), Const(3.0))

    def test_subtraction_left_associative(self):
        assert parse_source("1-2-3") == Binary(
            "-", Binary("-", Const(1.0), Const(2.0)), Const(3.0))

    def test_truncated_call(self):
        with pytest.raises(ParseError):
            parse_source("min(x,")

    def test_no_implicit_multiplication(self):
        with pytest.raises(ParseError):
            parse_source("2x")

    def test_unknown_variable(self):
        with pytest.raises(ParseError, match="unknown variable"):
            parse_source("y+1")

    def test_unknown_function(self):
        with pytest.raises(ParseError, match="unknown function"):
            parse_source("tanh(x)")

    def test_arity_mismatch(self):
        with pytest.raises(ParseError, match="argument"):
            parse_source("min(x)")
        with pytest.raises(ParseError, match="argument"):
            parse_source("sin(x, x)")

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse(tokenize(""))

    def test_leftover_tokens(self):
        with pytest.raises(ParseError):
            parse_source("1 2")


# 50 hand-checked (expression, env, expected) triples; the expected side is
# written directly against math.* so it never touches the evaluator code.
_E = math.e
GOLDEN = [
    ("1+2", {}, 3.0),
    ("2*3+4", {}, 10.0),
    ("2+3*4", {}, 14.0),
    ("2-3-4", {}, -5.0),
    ("12/4/3", {}, 1.0),
    ("2^3", {}, 8.0),
    ("2^3^2", {}, 512.0),
    ("(2^3)^2", {}, 64.0),
    ("-2^2", {}, -4.0),
    ("(-2)^2", {}, 4.0),
    ("2^-2", {}, 0.25),
    ("--3", {}, 3.0),
    ("-(2+3)", {}, -5.0),
    ("1/3", {}, 1.0 / 3.0),
    (".5*4", {}, 2.0),
    ("1e-3+1", {}, 1.001),
    ("2.5e2", {}, 250.0),
    ("x^2", {"x": 3.0}, 9.0),
    ("x^2", {"x": -3.0}, 9.0),
    ("x^3", {"x": -2.0}, -8.0),
    ("x*x-x", {"x": 7.0}, 42.0),
    ("ln(r)", {"r": 1.0}, 0.0),
    ("ln(r)", {"r": _E}, 1.0),
    ("ln(x)", {"x": 10.0}, math.log(10.0)),
    ("exp(x)", {"x": 0.0}, 1.0),
    ("exp(x)-x", {"x": 0.0}, 1.0),
    ("exp(x)", {"x": 2.5}, math.exp(2.5)),
    ("exp(ln(x))", {"x": 5.5}, 5.5),
    ("sqrt(x)", {"x": 2.0}, math.sqrt(2.0)),
    ("sqrt(x^2+1)", {"x": 3.0}, math.sqrt(10.0)),
    ("abs(-x)", {"x": 4.5}, 4.5),
    ("abs(x-5)", {"x": 2.0}, 3.0),
    ("sin(x)", {"x": 0.5}, math.sin(0.5)),
    ("cos(x)", {"x": 0.5}, math.cos(0.5)),
    ("sin(x)^2+cos(x)^2", {"x": 0.7}, math.sin(0.7) ** 2 + math.cos(0.7) ** 2),
    ("sin(cos(x))", {"x": 1.2}, math.sin(math.cos(1.2))),
    ("min(x, 2)", {"x": 3.0}, 2.0),
    ("min(-x, x)", {"x": 1.5}, -1.5),
    ("max(x, x^2)", {"x": 0.5}, 0.5),
    ("max(2, 3)", {}, 3.0),
    ("pow(x, 3)", {"x": 2.0}, 8.0),
    ("pow(2, 0.5)", {}, math.pow(2.0, 0.5)),
    ("x1+2*x2", {"x1": 1.0, "x2": 2.0}, 5.0),
    ("x1^2+x2^2", {"x1": 3.0, "x2": 4.0}, 25.0),
    ("sqrt(x1^2+x2^2)", {"x1": 3.0, "x2": 4.0}, 5.0),
    ("x3*x8", {"x3": 2.0, "x8": 3.5}, 7.0),
    ("exp(r)+ln(r)", {"r": 2.0}, math.exp(2.0) + math.log(2.0)),
    ("1/(1+x^2)", {"x": 2.0}, 0.2),
    ("(x-1)*(x+1)", {"x": 4.0}, 15.0),
    ("2*3.141592653589793*x", {"x": 1.0}, 2.0 * math.pi),
]


def test_golden_table_has_50_cases():
    assert len(GOLDEN) == 50


@pytest.mark.parametrize("src,env,expected", GOLDEN,
                         ids=[g[0] for g in GOLDEN])
def test_golden_table(src, env, expected):
    got = eval_ast(parse_source(src), env)
    if expected == 0.0:
        assert abs(got) <= 1e-15
    else:
        assert abs(got - expected) <= 1e-15 * abs(expected)


class TestEvalErrors:
    def test_sqrt_negative(self):
        with pytest.raises(NonFinite):
            eval_ast(parse_source("sqrt(x)"), {"x": -1.0})

    def test_ln_negative(self):
        with pytest.raises(NonFinite):
            eval_ast(parse_source("ln(x)"), {"x": -1.0})

    def test_division_by_zero(self):
        with pytest.raises(NonFinite):
            eval_ast(parse_source("1/x"), {"x": 0.0})

    def test_overflow(self):
        with pytest.raises(NonFinite):
            eval_ast(parse_source("exp(x)"), {"x": 1e6})

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariable):
            eval_ast(parse_source("x+1"), {})


class TestFreeVars:
    def test_single(self):
        assert free_vars(parse_source("x^2")) == {"x"}

    def test_radial(self):
        assert free_vars(parse_source("exp(r)")) == {"r"}

    def test_constant(self):
        assert free_vars(parse_source("3.14")) == set()

    def test_many(self):
        assert free_vars(parse_source("x1*x2+min(x3, x1)")) == {"x1", "x2", "x3"}


class TestPrinter:
    @pytest.mark.parametrize("src", [
        "x^2", "-x^2", "(-x)^2", "x^2^3", "(x^2)^3", "1-2-3", "1-(2-3)",
        "x*(x+1)", "min(x, max(x1, x2))", "x^-2",
        "-(x+1)", "--x", "sin(cos(x))", "1/(x*x)",
    ])
    def test_round_trip(self, src):
        ast = parse_source(src)
        assert parse_source(to_source(ast)) == ast
