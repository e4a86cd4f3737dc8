import pytest
from hypothesis import given, strategies as st

from qualfsub.diagnostics import read_source
from qualfsub.errors import ParseError, PragmaError
from qualfsub.oracle.generate import CALCULI, AstGen, GenConfig, gen_ast, rng_for
from qualfsub.quals import BOT, Join, QVar
from qualfsub.syntax import parse_qtype, parse_qual, parse_term, pretty_print
from qualfsub.terms import App, QApp, TApp, TopType, UnitVal, Var, alpha_equiv


@pytest.mark.parametrize("calculus", CALCULI)
def test_round_trip_trees(calculus):
    cfg = GenConfig(seed=21, term_depth=5)
    for i in range(300):
        t = gen_ast(cfg, calculus, i)
        assert alpha_equiv(parse_term(pretty_print(t), calculus), t), pretty_print(t)


@pytest.mark.parametrize("calculus", CALCULI)
def test_round_trip_types(calculus):
    cfg = GenConfig(seed=22)
    for i in range(200):
        T = AstGen(calculus, rng_for(cfg, i)).qtype(3)
        assert parse_qtype(pretty_print(T), calculus) == T


@given(st.integers(0, 1_000_000), st.sampled_from(CALCULI))
def test_printing_is_a_fixed_point(index, calculus):
    text = pretty_print(gen_ast(GenConfig(seed=23), calculus, index))
    assert pretty_print(parse_term(text, calculus)) == text


def test_bare_unit_before_brackets():
    t = TApp(UnitVal(), TopType())
    assert pretty_print(t) == "unit[bot] [Top]"
    assert parse_term(pretty_print(t)) == t


def test_qualifier_application_as_argument_in_fc():
    t = App(App(Var("g"), QApp(Var("f"), BOT)), Var("h"))
    text = pretty_print(t)
    assert alpha_equiv(parse_term(text, "fc"), t)


def test_alpha_equivalence():
    a = parse_term("fn[bot](x: {bot} Top) => x")
    b = parse_term("fn[bot](y: {bot} Top) => y")
    c = parse_term("fn[bot](y: {bot} Top) => x")
    assert alpha_equiv(a, b) and not alpha_equiv(a, c)
    assert alpha_equiv(parse_term("qfn[bot](Y <: top) => unit[Y]"), parse_term("qfn[bot](Z <: top) => unit[Z]"))


def test_qualifier_syntax():
    assert parse_qual("X \\/ Y /\\ top") == Join(QVar("X"), parse_qual("Y /\\ top"))
    with pytest.raises(ParseError):
        parse_qual("X \\/")


def test_calculus_specific_forms():
    with pytest.raises(ParseError):
        parse_term("ref[bot] unit", "fq")
    with pytest.raises(ParseError):
        parse_term("fn[bot](x <: top : Top) => x", "fq")
    assert parse_term("ref[bot] unit", "fm")


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_term("fn[bot](x {bot} Top) => x")
    assert info.value.code == "E-SYNTAX"
    assert (info.value.line, info.value.column) == (1, 11)


def test_pragmas():
    src = read_source("#calculus fm\n-- comment\n\n#default-tag top\nref[bot] unit\n")
    assert src.calculus == "fm" and src.body_line == 5
    with pytest.raises(PragmaError):
        read_source("#calculus fz\nunit\n")
    with pytest.raises(PragmaError):
        read_source("#calculus fq\n#calculus fm\nunit\n")
