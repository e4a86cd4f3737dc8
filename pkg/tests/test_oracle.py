import json

import pytest

from qualfsub.capture import CaptureChecker
from qualfsub.colours import ColourChecker
from qualfsub.errors import GenerationExhausted
from qualfsub.kernel import Checker
from qualfsub.lattice import catalog_small_lattices
from qualfsub.oracle.generate import (
    CALCULI, GenConfig, checker_for, gen_env, gen_formula, gen_well_typed_term, initial_env, rng_for,
)
from qualfsub.oracle.suite import (
    run_join_meet_suite, run_laws_suite, run_soundness_suite, run_subqual_soundness, write_report,
)
from qualfsub.quals import well_formed_qual
from qualfsub.refs import RefChecker
from qualfsub.syntax import pretty_print
from qualfsub.terms import QType, UnitType
from qualfsub.quals import BOT


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(noise=2.0)
    with pytest.raises(ValueError):
        GenConfig(term_depth=0)


def test_formulas_are_well_formed_and_seeded():
    cfg = GenConfig(seed=7)
    for i in range(50):
        env = gen_env(cfg, rng_for(cfg, i))
        q = gen_formula(cfg, env, rng_for(cfg, i, 1))
        assert well_formed_qual(env, q)
        assert q == gen_formula(cfg, env, rng_for(cfg, i, 1))


@pytest.mark.parametrize("calculus", CALCULI)
def test_generated_programs_are_well_typed_and_reproducible(calculus):
    cfg = GenConfig(seed=8, term_depth=4)
    checker = checker_for(calculus)
    for i in range(25):
        g = gen_well_typed_term(cfg, calculus, i)
        T = checker.type_of(initial_env(calculus), g.term)
        assert pretty_print(T) == pretty_print(g.type)
        assert pretty_print(gen_well_typed_term(cfg, calculus, i).term) == pretty_print(g.term)


def test_fq_over_other_lattices():
    cfg = GenConfig(seed=8, lattices=("M3",))
    g = gen_well_typed_term(cfg, "fq", 0)
    assert g.type is not None


def test_exhaustion_is_reported():
    class Nothing(Checker):
        def type_of(self, env, t):
            from qualfsub.errors import TypeMismatch
            raise TypeMismatch("no")

    with pytest.raises(GenerationExhausted) as info:
        gen_well_typed_term(GenConfig(attempts=3), "fq", 0, checker=Nothing())
    assert info.value.code == "E-GENERATE"


def test_laws_suite():
    rep = run_laws_suite(GenConfig(seed=1), samples=150)
    assert rep.ok and rep.counts["samples"] == 150


def test_join_meet_suite():
    rep = run_join_meet_suite()
    assert rep.ok and rep.counts["checks"] == 190


def test_subqual_soundness_writes_corpus(tmp_path):
    corpus = tmp_path / "misses.json"
    rep = run_subqual_soundness(GenConfig(seed=2), samples=60, bases=catalog_small_lattices()[:2], corpus=corpus)
    assert rep.ok
    assert rep.counts["derivable"] + rep.counts["not-derivable"] == 120
    assert isinstance(json.loads(corpus.read_text()), list)


def test_report_serialisation(tmp_path):
    rep = run_join_meet_suite()
    write_report([rep], tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data[0]["suite"] == "join-meet" and data[0]["ok"]
    assert "join-meet: ok" in rep.to_text()


@pytest.mark.parametrize("calculus", CALCULI)
def test_real_checkers_pass_with_noise(calculus):
    rep = run_soundness_suite(GenConfig(seed=5, count=60, noise=0.15), calculus)
    assert rep.ok, rep.to_text()


# broken checkers: each drops one side condition

class BadAssert(Checker):
    def assert_result(self, env, T, q, at=None):
        return T

    def upqual_result(self, env, T, q, at=None):
        return QType(q, T.shape)


class BadRef(RefChecker):
    def _t_Assign(self, env, t):
        inner = self._boxed(env, self.type_of(env, t.ref), "assignment", t.span).inner
        self.require_subtype(env, self.type_of(env, t.value), inner, "assigned value", t.span)
        return QType(BOT, UnitType())


class BadColour(ColourChecker):
    def check_call_colour(self, env, fn_type, at):
        return None


class BadCapture(CaptureChecker):
    def check_abs_capture(self, env, t):
        return None


@pytest.mark.parametrize("calculus,broken,kinds", [
    ("fq", BadAssert, {"stuck"}),
    ("fm", BadRef, {"sealed-write"}),
    ("fa", BadColour, {"barrier"}),
    ("fc", BadCapture, {"capture"}),
], ids=["fq-assert", "fm-write", "fa-colour", "fc-capture"])
def test_mutations_are_caught(calculus, broken, kinds):
    rep = run_soundness_suite(GenConfig(seed=42, count=200, noise=0.15), calculus,
                              checker_factory=lambda L: broken(L))
    assert not rep.ok
    assert kinds & {f.kind for f in rep.failures}
