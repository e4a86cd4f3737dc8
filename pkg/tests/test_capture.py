import pytest

from qualfsub.capture import CaptureChecker, bind_term_var, capture_prediction_check, subqual_fc, type_of_fc
from qualfsub.errors import CaptureNotCovered, IllFormed
from qualfsub.kernel import EMPTY_ENV, eval_fuel
from qualfsub.quals import BOT, TOP, Join, QVar
from qualfsub.syntax import parse_qtype, parse_term, pretty_print
from qualfsub.terms import UNIT_TYPE, QType, UnitVal, alpha_equiv

ID = "fn[bot](x <: top : Top) => x"


def term(src):
    return parse_term(src, "fc")


def ring_env():
    env = bind_term_var(EMPTY_ENV, "one_ring", QType(TOP, UNIT_TYPE))
    return bind_term_var(env, "fifty_fifty", QType(QVar("one_ring"), UNIT_TYPE))


def test_fifty_fifty_derivation():
    d = subqual_fc(ring_env(), QVar("fifty_fifty"), QVar("one_ring"))
    assert d is not None
    assert d.render() == "fifty_fifty <: one_ring  [sq-tvar]\n  one_ring <: one_ring  [sq-refl-tvar]"


def test_term_variable_reflexive():
    env = bind_term_var(EMPTY_ENV, "x", QType(TOP, UNIT_TYPE))
    assert subqual_fc(env, QVar("x"), QVar("x")).rule == "sq-refl-tvar"


def test_unrelated_term_variables():
    env = bind_term_var(bind_term_var(EMPTY_ENV, "x", QType(BOT, UNIT_TYPE)), "y", QType(TOP, UNIT_TYPE))
    assert subqual_fc(env, QVar("y"), QVar("x")) is None


def test_identity_type():
    assert pretty_print(type_of_fc(EMPTY_ENV, term(ID))) == "{bot} ((x <: top : Top) -> {x} Top)"


def test_capture_must_be_covered():
    env = bind_term_var(EMPTY_ENV, "y", QType(TOP, UNIT_TYPE))
    with pytest.raises(CaptureNotCovered) as info:
        type_of_fc(env, term("fn[bot](x <: top : Top) => y"))
    assert info.value.code == "E-CAPTURE"
    T = type_of_fc(env, term("fn[y](x <: top : Top) => y"))
    assert T.qual == QVar("y")


def test_unit_literal_mentioning_a_variable_is_a_capture():
    env = bind_term_var(EMPTY_ENV, "y", QType(TOP, UNIT_TYPE))
    with pytest.raises(CaptureNotCovered):
        type_of_fc(env, term("fn[bot](x <: top : Top) => unit[y /\\ bot]"))


def test_capture_application():
    prog = term(f"({ID}) [{{bot}}] unit")
    assert pretty_print(type_of_fc(EMPTY_ENV, prog)) == "{bot} Top"
    out = eval_fuel(prog, 10)
    assert out.is_value and alpha_equiv(out.term, UnitVal())


def test_nested_capture_application():
    prog = term(f"({ID}) [{{bot}}] (({ID}) [{{bot}}] unit)")
    out = eval_fuel(prog, 10, trace=True)
    assert out.is_value and out.steps == 2
    # the argument is reduced first
    assert alpha_equiv(out.trace[1], term(f"({ID}) [{{bot}}] unit"))


def test_plain_arrows_are_not_fc():
    with pytest.raises(IllFormed):
        CaptureChecker().type_of(EMPTY_ENV, parse_term("fn[bot](x: {bot} Top) => x", "fq"))


def test_capture_prediction():
    assert capture_prediction_check(EMPTY_ENV, term(ID))
    env = bind_term_var(bind_term_var(EMPTY_ENV, "y", QType(TOP, UNIT_TYPE)), "z", QType(TOP, UNIT_TYPE))
    v = term("fn[y \\/ z](x <: top : Top) => y")
    assert capture_prediction_check(env, v)
    assert capture_prediction_check(env, v, T=QType(Join(QVar("y"), QVar("z")), UNIT_TYPE))
    assert not capture_prediction_check(env, v, T=QType(BOT, UNIT_TYPE))


def test_dependent_arrow_subtyping():
    checker = CaptureChecker()
    narrow = parse_qtype("{bot} ((x <: top : Top) -> {x} Top)")
    wide = parse_qtype("{bot} ((x <: top : Top) -> {top} Top)")
    assert checker.subtype(EMPTY_ENV, narrow, wide) is not None
    assert checker.subtype(EMPTY_ENV, wide, narrow) is None
