"""F_a: function colours checked by a CK machine with barrier frames.

Colours are base-lattice elements; with the two-point lattice bottom is
``sync`` and top is ``async``.  Calling a function pushes a barrier with its
colour, and a call is allowed only when the callee's colour is below every
barrier on the stack.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BarrierViolation, ColourViolation, Stuck, StuckIllFormed
from .kernel import Checker, Reducer, TypeEnv, ground_value
from .lattice import TWO_POINT, FiniteLattice
from .quals import TOP, Meet, Qual, atom_of, show_qual
from .syntax.printer import stype as show_stype
from .terms import (
    Abs, App, Assert, QAbs, QApp, QType, TAbs, TApp, Upqual, Var, is_value, subst_term,
    subst_term_quals, subst_term_types,
)


# --- frames ----------------------------------------------------------------

@dataclass(frozen=True)
class AppFn:
    arg: object


@dataclass(frozen=True)
class AppArg:
    fn: object


@dataclass(frozen=True)
class TAppF:
    type_arg: object


@dataclass(frozen=True)
class QAppF:
    qual: Qual


@dataclass(frozen=True)
class UpqualF:
    qual: Qual


@dataclass(frozen=True)
class AssertF:
    qual: Qual


@dataclass(frozen=True)
class Barrier:
    colour: str


@dataclass(frozen=True)
class MachineConfig:
    control: object
    stack: tuple = ()


@dataclass(frozen=True)
class Final:
    value: object


def barrier_compatible(stack, colour: str, lattice: FiniteLattice = TWO_POINT) -> bool:
    return all(lattice.leq(colour, f.colour) for f in stack if isinstance(f, Barrier))


def show_frame(f, lattice: FiniteLattice = TWO_POINT) -> str:
    from .syntax.printer import POSTFIX, term

    if isinstance(f, Barrier):
        return f"|{show_qual(atom_of(lattice, f.colour))}|"
    if isinstance(f, AppFn):
        return f"[] {term(f.arg, POSTFIX)}"
    if isinstance(f, AppArg):
        return f"{term(f.fn, POSTFIX)} []"
    if isinstance(f, TAppF):
        return f"[] [{show_stype(f.type_arg)}]"
    if isinstance(f, QAppF):
        return f"[] [{{{show_qual(f.qual)}}}]"
    if isinstance(f, UpqualF):
        return f"upqual {show_qual(f.qual)} []"
    if isinstance(f, AssertF):
        return f"assert {show_qual(f.qual)} []"
    raise TypeError(f)


def show_config(cfg, lattice: FiniteLattice = TWO_POINT) -> str:
    if isinstance(cfg, Final):
        return f"final {cfg.value}"
    stack = ", ".join(show_frame(f, lattice) for f in cfg.stack)
    return f"<{cfg.control} ; {stack or 'empty'}>"


# --- the machine -----------------------------------------------------------

class Machine:
    def __init__(self, lattice: FiniteLattice = TWO_POINT):
        self.lattice = lattice
        self._tags = Reducer(lattice)

    def colour_of(self, f, redex) -> str:
        return ground_value(self.lattice, f.tag, "call", redex)

    def call(self, f, stack: tuple, body, redex) -> MachineConfig:
        colour = self.colour_of(f, redex)
        if not barrier_compatible(stack, colour, self.lattice):
            blocking = [b.colour for b in stack if isinstance(b, Barrier) and not self.lattice.leq(colour, b.colour)]
            show = lambda c: show_qual(atom_of(self.lattice, c))  # noqa: E731
            raise BarrierViolation(
                f"call of a function coloured {show(colour)} under a barrier coloured {show(blocking[-1])}", redex
            )
        return MachineConfig(body, stack + (Barrier(colour),))

    def step(self, cfg: MachineConfig):
        c, stack = cfg.control, cfg.stack
        if not is_value(c):
            if isinstance(c, App):
                return MachineConfig(c.fn, stack + (AppFn(c.arg),))
            if isinstance(c, TApp):
                return MachineConfig(c.fn, stack + (TAppF(c.type_arg),))
            if isinstance(c, QApp):
                return MachineConfig(c.fn, stack + (QAppF(c.qual_arg),))
            if isinstance(c, Upqual):
                return MachineConfig(c.body, stack + (UpqualF(c.qual),))
            if isinstance(c, Assert):
                return MachineConfig(c.body, stack + (AssertF(c.qual),))
            if isinstance(c, Var):
                raise StuckIllFormed(f"free variable {c.name}", c)
            raise StuckIllFormed(f"{type(c).__name__} is not part of fa", c)
        if not stack:
            return Final(c)
        frame, rest = stack[-1], stack[:-1]
        if isinstance(frame, Barrier):
            return MachineConfig(c, rest)
        if isinstance(frame, AppFn):
            return MachineConfig(frame.arg, rest + (AppArg(c),))
        if isinstance(frame, AppArg):
            f = frame.fn
            if not isinstance(f, Abs):
                raise StuckIllFormed("applying a value that is not a function", App(f, c))
            return self.call(f, rest, subst_term(f.body, f.param, c), App(f, c))
        if isinstance(frame, TAppF):
            if not isinstance(c, TAbs):
                raise StuckIllFormed("type-applying a value that is not a type abstraction", TApp(c, frame.type_arg))
            return self.call(c, rest, subst_term_types(c.body, {c.var: frame.type_arg}), TApp(c, frame.type_arg))
        if isinstance(frame, QAppF):
            if not isinstance(c, QAbs):
                raise StuckIllFormed("qualifier-applying a value that is not a qualifier abstraction", QApp(c, frame.qual))
            return self.call(c, rest, subst_term_quals(c.body, {c.var: frame.qual}), QApp(c, frame.qual))
        if isinstance(frame, UpqualF):
            return MachineConfig(self._tags.upqual(frame.qual, c, Upqual(frame.qual, c)), rest)
        if isinstance(frame, AssertF):
            return MachineConfig(self._tags.assert_(frame.qual, c, Assert(frame.qual, c)), rest)
        raise StuckIllFormed(f"unknown frame {frame!r}", c)


def machine_step(cfg: MachineConfig, lattice: FiniteLattice = TWO_POINT):
    return Machine(lattice).step(cfg)


def initial_config(t, colour: str | None = None) -> MachineConfig:
    """Start ``t``; a non-top ``colour`` installs a barrier for the surrounding context."""
    return MachineConfig(t, () if colour is None else (Barrier(colour),))


@dataclass
class MachineOutcome:
    status: str  # value, stuck, out-of-fuel
    config: object
    steps: int
    error: Exception | None = None
    trace: list = field(default_factory=list)

    @property
    def value(self):
        return self.config.value if isinstance(self.config, Final) else None


def run_machine(t, fuel: int, lattice: FiniteLattice = TWO_POINT, colour: str | None = None,
                trace: bool = False, observer=None) -> MachineOutcome:
    """Run to a final state.

    ``steps`` counts the transitions taken; when stuck, the failing transition
    is number ``steps + 1``.
    """
    m = Machine(lattice)
    cfg = initial_config(t, None if colour in (None, lattice.top) else colour)
    seen = [cfg] if trace else []
    for n in range(fuel + 1):
        if n == fuel:
            break
        try:
            nxt = m.step(cfg)
        except Stuck as exc:
            return MachineOutcome("stuck", cfg, n, exc, seen)
        if observer is not None:
            observer(cfg, nxt)
        if trace:
            seen.append(nxt)
        if isinstance(nxt, Final):
            return MachineOutcome("value", nxt, n + 1, trace=seen)
        cfg = nxt
    return MachineOutcome("out-of-fuel", cfg, fuel, trace=seen)


# --- typing ----------------------------------------------------------------

class ColourChecker(Checker):
    """Typing under a colour context: calls need the callee's qualifier below it."""

    calculus = "fa"

    def _body_env(self, env, tag):
        return env.with_colour(tag)

    def check_call_colour(self, env, fn_type: QType, at):
        R = TOP if env.colour is None else env.colour
        self.require_subqual(
            env, fn_type.qual, R, ColourViolation,
            f"callee coloured {show_qual(fn_type.qual)} is not allowed in colour context {show_qual(R)}", at,
        )

    def type_config(self, env: TypeEnv, cfg, context: Qual = TOP) -> QType:
        """Type a machine configuration.

        Frames between two barriers are typed under the meet of the context and
        every barrier beneath them; the control under the meet of all barriers.
        """
        if isinstance(cfg, Final):
            return self.type_of(env.with_colour(context), cfg.value)
        contexts = []
        R = context
        for f in cfg.stack:
            contexts.append(R)
            if isinstance(f, Barrier):
                R = Meet(R, atom_of(self.lattice, f.colour))
        T = self.type_of(env.with_colour(R), cfg.control)
        for f, R_f in zip(reversed(cfg.stack), reversed(contexts)):
            if isinstance(f, Barrier):
                continue
            T = self.frame_type(env.with_colour(R_f), f, T)
        return T

    def frame_type(self, env, f, T: QType) -> QType:
        if isinstance(f, AppFn):
            return self.app_result(env, T, lambda: self.type_of(env, f.arg))
        if isinstance(f, AppArg):
            return self.app_result(env, self.type_of(env, f.fn), T)
        if isinstance(f, TAppF):
            return self.tapp_result(env, T, f.type_arg)
        if isinstance(f, QAppF):
            return self.qapp_result(env, T, f.qual)
        if isinstance(f, UpqualF):
            return self.upqual_result(env, T, f.qual)
        if isinstance(f, AssertF):
            return self.assert_result(env, T, f.qual)
        raise TypeError(f)


def type_of_fa(env: TypeEnv, R: Qual, t, lattice: FiniteLattice = TWO_POINT) -> QType:
    return ColourChecker(lattice).type_of(env.with_colour(R), t)

