"""F_c: capture tracking, where every term binder also binds a qualifier variable."""
from __future__ import annotations

from .errors import BoundViolation, CaptureNotCovered, IllFormed, TypeMismatch
from .kernel import Checker, TypeEnv
from .lattice import TWO_POINT, FiniteLattice
from .quals import Derivation, QVar, Qual, join_all, show_qual
from .terms import (
    DepArrow, QType, Var, all_names, captured_term_vars, fresh_name, subst_term, subst_type_quals,
)


def bind_term_var(env: TypeEnv, name: str, T: QType) -> TypeEnv:
    """``x : {Q} S`` also declares the qualifier variable ``x <: Q``."""
    return env.with_qual(name, T.qual, term=True).with_term(name, T)


class CaptureChecker(Checker):
    calculus = "fc"

    def __init__(self, lattice: FiniteLattice = TWO_POINT, value_hook=None):
        super().__init__(lattice)
        self.value_hook = value_hook

    def on_value(self, env, v, T):
        if self.value_hook is not None:
            self.value_hook(env, v, T)

    # types

    def _open_dep(self, env, var: str, result: QType):
        if var not in env.names():
            return var, result
        new = fresh_name(var, env.names() | all_names(result))
        return new, subst_type_quals(result, {var: QVar(new)})

    def check_extra_stype(self, env, S, at):
        if isinstance(S, DepArrow):
            self.check_qtype(env, S.param, at)
            var, result = self._open_dep(env, S.var, S.result)
            self.check_qtype(bind_term_var(env, var, S.param), result, at)
            return
        super().check_extra_stype(env, S, at)

    def subtype_extra(self, env, S1, S2) -> Derivation | None:
        if not (isinstance(S1, DepArrow) and isinstance(S2, DepArrow)):
            return None
        q1, q2 = S1.param.qual, S2.param.qual
        up, down = self.subqual(env, q1, q2), self.subqual(env, q2, q1)
        if up is None or down is None:
            return None
        shape = self.subtype_simple(env, S2.param.shape, S1.param.shape)
        if shape is None:
            return None
        var, r1 = self._open_dep(env, S1.var, S1.result)
        r2 = S2.result if S2.var == var else subst_type_quals(S2.result, {S2.var: QVar(var)})
        inner = bind_term_var(env, var, QType(q1, S2.param.shape))
        d = self.subtype(inner, r1, r2)
        return None if d is None else Derivation("sub-dep-arrow", S1, S2, (up, down, shape, d))

    # terms

    def _t_Var(self, env, t):
        T = super()._t_Var(env, t)
        if t.name in env.quals:
            return QType(QVar(t.name), T.shape)
        return T

    def _t_UnitVal(self, env, t):
        # a tag naming a term variable counts as capturing it, as for functions
        T = super()._t_UnitVal(env, t)
        self.check_abs_capture(env, t)
        return T

    def _t_Abs(self, env, t):
        raise IllFormed("fc functions bind a qualifier too: write fn[P](x <: Q : S) => t", t.span)

    def _t_App(self, env, t):
        raise IllFormed("fc application takes a qualifier argument: write f [{Q}] t", t.span)

    def check_abs_capture(self, env, t):
        captured = captured_term_vars(t, env.term_names())
        covered = join_all(QVar(n) for n in captured)
        if self.subqual(env, covered, t.tag) is None:
            raise CaptureNotCovered(
                f"tag {show_qual(t.tag)} does not cover captured variables {{{', '.join(captured)}}}", t.span
            )

    def _t_CAbs(self, env, t):
        self.check_qual(env, t.tag, t.span)
        self.check_qual(env, t.qual_bound, t.span)
        self.check_stype(env, t.shape, t.span)
        self.check_abs_capture(env, t)
        x, body = t.param, t.body
        if x in env.names():
            x = fresh_name(x, env.names() | all_names(body))
            body = subst_term(body, t.param, Var(x), qual=QVar(x))
        param = QType(t.qual_bound, t.shape)
        Tb = self.type_of(bind_term_var(self._body_env(env, t.tag), x, param), body)
        return QType(t.tag, DepArrow(x, param, Tb))

    def _t_CApp(self, env, t):
        Tf = self.type_of(env, t.fn)
        shape = self.expose(env, Tf.shape)
        if not isinstance(shape, DepArrow):
            raise TypeMismatch(f"applied term is not a function: it has type {Tf}", t.span)
        self.check_qual(env, t.qual_arg, t.span)
        self.check_call_colour(env, Tf, t.span)
        self.require_subqual(
            env, t.qual_arg, shape.param.qual, BoundViolation, "qualifier argument exceeds bound", t.span
        )
        Ta = self.type_of(env, t.arg)
        self.require_subtype(env, Ta, QType(t.qual_arg, shape.param.shape), "argument", t.span)
        return subst_type_quals(shape.result, {shape.var: t.qual_arg})


def subqual_fc(env: TypeEnv, q: Qual, r: Qual, lattice: FiniteLattice = TWO_POINT):
    return CaptureChecker(lattice).subqual(env, q, r)


def type_of_fc(env: TypeEnv, t, lattice: FiniteLattice = TWO_POINT) -> QType:
    return CaptureChecker(lattice).type_of(env, t)


def capture_prediction_check(env: TypeEnv, v, lattice: FiniteLattice = TWO_POINT, checker=None,
                             T: QType | None = None) -> bool:
    """The join of the term variables a value captures is below its static qualifier ``T``."""
    checker = checker or CaptureChecker(lattice)
    if T is None:
        T = checker.type_of(env, v)
    captured = captured_term_vars(v, env.term_names())
    return checker.subqual(env, join_all(QVar(n) for n in captured), T.qual) is not None
