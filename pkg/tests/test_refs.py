import pytest

from qualfsub.errors import SealedWrite, WriteToReadonly
from qualfsub.kernel import EMPTY_ENV
from qualfsub.quals import TOP, eval_ground
from qualfsub.lattice import TWO_POINT
from qualfsub.refs import RefChecker, Store, run_fm, step_fm, type_of_fm
from qualfsub.syntax import parse_term, pretty_print
from qualfsub.terms import Loc, UnitVal, tag_of

ID = "fn[bot](x: {bot} Top) => x"


def term(src):
    return parse_term(src, "fm")


def show_type(src):
    return pretty_print(type_of_fm(EMPTY_ENV, {}, term(src)))


def test_ref_type():
    assert show_type(f"ref[bot] ({ID})") == "{bot} Box {bot} ({bot} Top -> {bot} Top)"


def test_deref_through_top_is_top():
    T = type_of_fm(EMPTY_ENV, {}, term(f"!(ref[top] ({ID}))"))
    assert eval_ground(TWO_POINT, T.qual) == "1"


def test_write_through_readonly_box_is_rejected():
    with pytest.raises(WriteToReadonly) as info:
        type_of_fm(EMPTY_ENV, {}, term("(ref[top] unit) := unit"))
    assert info.value.code == "E-READONLY"


def test_allocate_write_read():
    prog = term("(fn[bot](r: {bot} Box {bot} Unit) => (fn[bot](u: {bot} Unit) => !r) (r := unit)) (ref[bot] unit[bot])")
    # the read joins the box qualifier with the content qualifier, textually
    assert show_type(pretty_print(prog)) == "{bot \\/ bot} Unit"
    out = run_fm(prog, 100)
    assert out.is_value and out.term == UnitVal()
    assert out.store.render() == "store:\n  #0 [bot] = unit"


def test_deref_retags_with_the_join():
    store, loc = Store().alloc(TOP, term(ID))
    t, _ = step_fm(term(f"!#{loc}[top]"), store)
    assert eval_ground(TWO_POINT, tag_of(t)) == "1"


def test_sealed_write_is_stuck():
    store, loc = Store().alloc(TOP, UnitVal())
    with pytest.raises(SealedWrite) as info:
        step_fm(term(f"#{loc}[top] := unit"), store)
    assert info.value.code == "E-SEALED"


def test_allocation_ids_increase():
    out = run_fm(term("(fn[bot](a: {bot} Box {bot} Unit) => ref[bot] unit) (ref[bot] unit)"), 50)
    assert isinstance(out.term, Loc) and out.term.id == 1
    assert sorted(out.store.cells) == [0, 1]


def test_upqual_freezes_a_location():
    prog = term("(upqual top (ref[bot] unit)) := unit")
    with pytest.raises(WriteToReadonly):
        RefChecker().type_of(EMPTY_ENV, prog)
    out = run_fm(prog, 10)
    assert out.status == "stuck" and isinstance(out.error, SealedWrite)


# hand-written writes through readonly boxes: every one must be rejected statically
_VALUES = ["unit", "unit[bot]", "unit[top]", "upqual top unit", "(fn[bot](u: {bot} Unit) => u) unit"]
_BOXES = [
    "ref[top] unit",
    "ref[top : {bot} Unit] unit",
    "upqual top (ref[bot] unit)",
    "(fn[bot](r: {top} Box {bot} Unit) => r) (ref[bot] unit)",
    "(qfn[bot](Y <: top) => upqual top (ref[Y] unit)) [{bot}]",
    "(fn[bot](r: {top} Box {top} Unit) => r) (ref[top] unit[top])",
    "assert top (ref[top] unit)",
    "(tfn[bot](S <: Top) => ref[top] unit) [Top]",
    "upqual (top \\/ bot) (ref[bot] unit)",
    "(fn[top](r: {bot} Box {bot} Unit) => upqual top r) (ref[bot] unit)",
]
NEGATIVE = [f"({box}) := {val}" for box in _BOXES for val in _VALUES]


def test_there_are_fifty_negative_programs():
    assert len(NEGATIVE) == 50 == len(set(NEGATIVE))


@pytest.mark.parametrize("src", NEGATIVE)
def test_negative_write(src):
    with pytest.raises(WriteToReadonly):
        RefChecker().type_of(EMPTY_ENV, term(src))
