import pytest
from hypothesis import given, strategies as st

from qualfsub.errors import IllFormed
from qualfsub.lattice import TWO_POINT, catalog_small_lattices, chain, diamond_m3
from qualfsub.oracle.instances import Counterexample, enumerate_instantiations, extensions_of, oracle_leq
from qualfsub.quals import (
    BOT, TOP, Const, HasVariables, Join, Meet, QualEnv, QVar, check_derivation, eval_ground, is_subqual,
    normalize, qual_equiv, show_qual, subqual, subst_qual, well_formed_qual,
)
from qualfsub.syntax import parse_qual

A, B, C, X, Y = (QVar(n) for n in "ABCXY")
JOIN_ENV = QualEnv.of(("A", TOP), ("B", TOP), ("X", A), ("Y", B))


def test_printing_respects_precedence():
    assert show_qual(Join(A, Meet(B, C))) == "A \\/ B /\\ C"
    assert show_qual(Meet(Join(A, B), C)) == "(A \\/ B) /\\ C"
    assert parse_qual("A \\/ B /\\ C") == Join(A, Meet(B, C))


def test_well_formedness():
    assert well_formed_qual(QualEnv.of(("X", TOP)), Join(X, BOT))
    assert not well_formed_qual(QualEnv(), X)
    with pytest.raises(IllFormed):
        QualEnv.of(("X", A))


def test_eval_ground():
    assert eval_ground(TWO_POINT, Join(BOT, TOP)) == "1"
    assert eval_ground(diamond_m3(), Meet(Join(Const("a"), Const("b")), Const("c"))) == "c"
    with pytest.raises(HasVariables):
        eval_ground(TWO_POINT, Join(X, BOT))


def test_normalize():
    assert normalize(TWO_POINT, Join(BOT, TOP)) == TOP
    assert normalize(diamond_m3(), Meet(Join(Const("a"), Const("b")), X)) == Meet(TOP, X)
    assert normalize(TWO_POINT, Join(X, Y)) == Join(X, Y)


def test_subst():
    assert subst_qual(Join(X, Y), "X", BOT) == Join(BOT, Y)
    assert subst_qual(X, "X", Meet(A, B)) == Meet(A, B)
    assert subst_qual(Meet(X, X), "X", Y) == Meet(Y, Y)


def test_join_derivation_tree():
    d = subqual(JOIN_ENV, Join(X, Y), Join(A, B))
    assert d is not None
    assert d.rule == "sq-join-elim"
    assert [p.rule for p in d.premises] == ["sq-join-intro-1", "sq-join-intro-2"]
    assert [p.premises[0].rule for p in d.premises] == ["sq-var", "sq-var"]
    assert check_derivation(JOIN_ENV, d)


def test_bot_below_and_reflexive():
    env = QualEnv.of(("X", TOP))
    for q in (X, Join(X, TOP), Meet(X, BOT), TOP):
        assert subqual(env, BOT, q).rule in ("sq-bot", "sq-top")
        assert is_subqual(env, q, q)


def test_top_below_variable_is_refuted():
    env = QualEnv.of(("X", TOP))
    assert subqual(env, TOP, X) is None
    found = oracle_leq(env, TOP, X, extensions_of(TWO_POINT))
    assert isinstance(found, Counterexample)
    assert found.lattice == "2-chain"
    assert found.assignment == {"X": "0"}


def test_textual_constant():
    d = subqual(QualEnv(), Const("1"), Join(BOT, TOP), TWO_POINT)
    assert d is not None and check_derivation(QualEnv(), d, TWO_POINT)


def test_qual_equiv():
    env = QualEnv.of(("X", TOP), ("Y", TOP))
    assert qual_equiv(env, Meet(X, X), X)
    assert not qual_equiv(env, X, Y)


@pytest.mark.parametrize("L", catalog_small_lattices(), ids=lambda L: L.name)
def test_textual_join_meet_is_actual(L):
    from qualfsub.quals import atom_of
    for a in L.elements:
        for b in L.elements:
            qa, qb = atom_of(L, a), atom_of(L, b)
            assert qual_equiv(QualEnv(), Join(qa, qb), atom_of(L, L.join(a, b)), L)
            assert qual_equiv(QualEnv(), Meet(qa, qb), atom_of(L, L.meet(a, b)), L)


def test_enumeration():
    two = list(enumerate_instantiations(QualEnv.of(("X", TOP)), TWO_POINT))
    assert two == [{"X": "0"}, {"X": "1"}]
    assert list(enumerate_instantiations(QualEnv.of(("X", BOT)), TWO_POINT)) == [{"X": "0"}]
    env = QualEnv.of(("A", TOP), ("X", A))
    # A:0 -> X:0; A:m -> X:0,m; A:1 -> X:0,m,1
    assert len(list(enumerate_instantiations(env, chain(3)))) == 6


def test_oracle_on_join_example():
    assert oracle_leq(JOIN_ENV, Join(X, Y), Join(A, B), extensions_of(TWO_POINT))
    refuted = oracle_leq(JOIN_ENV, Join(A, B), Join(X, Y), extensions_of(TWO_POINT))
    assert not refuted and "left side" in refuted.describe()


def test_extension_family_sizes():
    sizes = {L.name: len(extensions_of(L)) for L in catalog_small_lattices()}
    assert sizes == {"2-chain": 6, "3-chain": 20, "4-chain": 20, "2x2": 27, "M3": 27, "N5": 25}
    for L in catalog_small_lattices():
        exts = extensions_of(L)
        assert exts[0].lattice is L
        assert len({e.name for e in exts}) == len(exts)


# --- properties ------------------------------------------------------------

ENV = QualEnv.of(("A", TOP), ("B", TOP), ("X", A), ("Y", Meet(B, X)))
LEAVES = st.sampled_from([TOP, BOT, A, B, X, Y])
FORMULAS = st.recursive(
    LEAVES,
    lambda sub: st.builds(Join, sub, sub) | st.builds(Meet, sub, sub),
    max_leaves=12,
)
EXTS = extensions_of(TWO_POINT)


@given(FORMULAS)
def test_reflexive(q):
    assert is_subqual(ENV, q, q)


@given(FORMULAS, FORMULAS)
def test_join_and_meet_bounds(q, r):
    assert is_subqual(ENV, q, Join(q, r)) and is_subqual(ENV, r, Join(q, r))
    assert is_subqual(ENV, Meet(q, r), q) and is_subqual(ENV, Meet(q, r), r)


@given(FORMULAS, FORMULAS, FORMULAS)
def test_least_and_greatest(q, r, u):
    if is_subqual(ENV, q, u) and is_subqual(ENV, r, u):
        assert is_subqual(ENV, Join(q, r), u)
    if is_subqual(ENV, u, q) and is_subqual(ENV, u, r):
        assert is_subqual(ENV, u, Meet(q, r))


@given(FORMULAS, FORMULAS, FORMULAS)
def test_transitive(q, r, u):
    if is_subqual(ENV, q, r) and is_subqual(ENV, r, u):
        assert is_subqual(ENV, q, u)


@given(FORMULAS, FORMULAS)
def test_sound_against_instantiation(q, r):
    d = subqual(ENV, q, r)
    if d is not None:
        assert check_derivation(ENV, d)
        assert oracle_leq(ENV, q, r, EXTS)


@given(FORMULAS)
def test_normalization_is_sound(q):
    assert qual_equiv(ENV, q, normalize(TWO_POINT, q))


M3_LEAVES = st.sampled_from([TOP, BOT, Const("a"), Const("b"), Const("c"), X, Y])
M3_FORMULAS = st.recursive(M3_LEAVES, lambda s: st.builds(Join, s, s) | st.builds(Meet, s, s), max_leaves=8)
M3_ENV = QualEnv.of(("X", TOP), ("Y", Const("a")))


@given(M3_FORMULAS, M3_FORMULAS)
def test_sound_over_m3(q, r):
    L = diamond_m3()
    assert qual_equiv(M3_ENV, q, normalize(L, q), L)
    d = subqual(M3_ENV, q, r, L)
    if d is not None:
        assert check_derivation(M3_ENV, d, L)
        assert oracle_leq(M3_ENV, q, r, extensions_of(L))
