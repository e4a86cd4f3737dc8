import pytest

from qualfsub.colours import (
    Barrier, ColourChecker, Final, MachineConfig, barrier_compatible, machine_step, run_machine, type_of_fa,
)
from qualfsub.errors import BarrierViolation, ColourViolation
from qualfsub.kernel import EMPTY_ENV
from qualfsub.quals import BOT, TOP, QVar
from qualfsub.syntax import parse_term, pretty_print
from qualfsub.terms import UnitVal, alpha_equiv

SYNC_ID = "fn[bot](x: {bot} Top) => x"
ASYNC_ID = "fn[top](y: {bot} Top) => y"
# a synchronous function handed an asynchronous one calls it
ASYNC_UNDER_SYNC = (
    "(fn[bot](f: {top} ({bot} Top -> {bot} Top)) => f (fn[bot](z: {bot} Top) => z)) "
    "(fn[top](y: {bot} Top) => y)"
)


def term(src):
    return parse_term(src, "fa")


def test_barrier_compatible():
    assert barrier_compatible((), "1") and barrier_compatible((), "0")
    assert not barrier_compatible((Barrier("0"),), "1")
    assert barrier_compatible((Barrier("1"),), "0")


def test_identity_runs_to_final():
    out = run_machine(term(f"({SYNC_ID}) unit"), 100)
    assert out.status == "value" and out.value == UnitVal()


def test_async_outer_sync_inner():
    prog = term(f"(fn[top](g: {{bot}} ({{bot}} Top -> {{bot}} Top)) => g unit) ({SYNC_ID})")
    assert type_of_fa(EMPTY_ENV, TOP, prog)
    assert run_machine(prog, 100).status == "value"


def test_sync_outer_async_inner_is_rejected_statically():
    with pytest.raises(ColourViolation) as info:
        ColourChecker().type_of(EMPTY_ENV, term(ASYNC_UNDER_SYNC))
    assert info.value.code == "E-COLOUR"


def test_sync_outer_async_inner_gets_stuck():
    out = run_machine(term(ASYNC_UNDER_SYNC), 100)
    assert out.status == "stuck"
    assert isinstance(out.error, BarrierViolation)
    assert out.steps == 5  # the sixth transition is the forbidden call
    assert Barrier("0") in out.config.stack


def test_calls_push_and_returns_pop_barriers():
    cfg = MachineConfig(term(f"({SYNC_ID}) unit"))
    seen = []
    while not isinstance(cfg, Final):
        cfg = machine_step(cfg)
        if not isinstance(cfg, Final):
            seen.append(sum(isinstance(f, Barrier) for f in cfg.stack))
    assert max(seen) == 1 and seen[-1] == 0


def test_colour_contexts():
    async_call = term(f"({ASYNC_ID}) unit")
    assert type_of_fa(EMPTY_ENV, TOP, async_call)
    with pytest.raises(ColourViolation):
        type_of_fa(EMPTY_ENV, BOT, async_call)


def test_variable_colour_context():
    from qualfsub.syntax import parse_qtype
    env = EMPTY_ENV.with_qual("Y", TOP).with_term("f", parse_qtype("{Y} ({bot} Top -> {bot} Top)", "fa"))
    T = type_of_fa(env, QVar("Y"), term("f unit"))
    assert pretty_print(T) == "{bot} Top"


def test_initial_colour_installs_a_barrier():
    out = run_machine(term(f"({ASYNC_ID}) unit"), 100, colour="0")
    assert isinstance(out.error, BarrierViolation)
    assert run_machine(term(f"({ASYNC_ID}) unit"), 100, colour="1").status == "value"


def test_config_typing_is_preserved():
    checker = ColourChecker()
    prog = term(f"(fn[top](g: {{bot}} ({{bot}} Top -> {{bot}} Top)) => g unit) ({SYNC_ID})")
    T0 = checker.type_of(EMPTY_ENV, prog)
    cfg = MachineConfig(prog)
    while not isinstance(cfg, Final):
        cfg = machine_step(cfg)
        T = checker.type_config(EMPTY_ENV, cfg)
        assert checker.subtype(EMPTY_ENV, T, T0) is not None
    assert alpha_equiv(cfg.value, UnitVal())
