"""F_q: well-formedness, subtyping, algorithmic typing and small-step evaluation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

from .terms import (
    Abs, App, Arrow, Assert, CAbs, CApp, ForallQ, ForallT, QAbs, QApp, QType, TAbs, TApp, TopType,
    TVar, UnitType, Upqual, Var,
    all_names, fresh_name, is_value, retag, subst_term, subst_term_quals, subst_term_types,
    subst_type_quals, subst_type_types,
)
from .errors import (
    Stuck, AssertFailed, BoundViolation, IllFormed, NonGroundTag, QualifierNotSubqualified,
    StuckIllFormed, TypeMismatch, UnboundVariable, UpqualFailed,
)
from .lattice import TWO_POINT, FiniteLattice
from .quals import (
    Derivation, HasVariables, Qual, QualEnv, QVar, Subqual,
    eval_ground, qual_consts, qual_vars, show_qual,
)


# --- environments ----------------------------------------------------------

@dataclass(frozen=True)
class TypeEnv:
    """Qualifier, type-variable and term-variable bindings, plus per-calculus context.

    ``colour`` is the colour context of F_a (None elsewhere) and ``store`` the
    store typing of F_m.
    """

    quals: QualEnv = QualEnv()
    tvars: tuple[tuple[str, object], ...] = ()
    terms: tuple[tuple[str, QType], ...] = ()
    colour: Qual | None = None
    store: Mapping[int, QType] = field(default_factory=dict, compare=False, hash=False)

    def tvar_bound(self, name: str):
        for n, b in reversed(self.tvars):
            if n == name:
                return b
        return None

    def term_type(self, name: str) -> QType | None:
        for n, T in reversed(self.terms):
            if n == name:
                return T
        return None

    def term_names(self) -> set[str]:
        return {n for n, _ in self.terms}

    def names(self) -> set[str]:
        return set(self.quals.names()) | {n for n, _ in self.tvars} | self.term_names()

    def with_qual(self, name: str, bound: Qual, term: bool = False) -> "TypeEnv":
        return replace(self, quals=self.quals.extend(name, bound, term))

    def with_tvar(self, name: str, bound) -> "TypeEnv":
        return replace(self, tvars=self.tvars + ((name, bound),))

    def with_term(self, name: str, T: QType) -> "TypeEnv":
        return replace(self, terms=self.terms + ((name, T),))

    def with_colour(self, colour: Qual | None) -> "TypeEnv":
        return replace(self, colour=colour)

    def with_store(self, store: Mapping[int, QType]) -> "TypeEnv":
        return replace(self, store=dict(store))


EMPTY_ENV = TypeEnv()


# --- the checker -----------------------------------------------------------

class Checker:
    """Algorithmic typing for F_q; subclasses add the forms of each variant."""

    calculus = "fq"

    def __init__(self, lattice: FiniteLattice = TWO_POINT):
        self.lattice = lattice

    # qualifiers

    def subqual(self, env: TypeEnv, q: Qual, r: Qual) -> Derivation | None:
        return Subqual(env.quals, self.lattice).derive(q, r)

    def require_subqual(self, env, q, r, error=QualifierNotSubqualified, what="", at=None):
        d = self.subqual(env, q, r)
        if d is None:
            prefix = f"{what}: " if what else ""
            raise error(f"{prefix}{show_qual(q)} is not a subqualifier of {show_qual(r)}", at)
        return d

    def qual_equiv(self, env, q, r) -> bool:
        engine = Subqual(env.quals, self.lattice)
        return engine.holds(q, r) and engine.holds(r, q)

    # well-formedness

    def check_qual(self, env: TypeEnv, q: Qual, at=None):
        for v in qual_vars(q):
            if v not in env.quals:
                raise UnboundVariable(f"unbound qualifier variable {v}", at)
        for c in qual_consts(q):
            if c not in self.lattice:
                raise IllFormed(f"`{c} is not an element of the base lattice {self.lattice.name}", at)

    def check_qtype(self, env: TypeEnv, T: QType, at=None):
        self.check_qual(env, T.qual, at)
        self.check_stype(env, T.shape, at)

    def check_stype(self, env: TypeEnv, S, at=None):
        if isinstance(S, (TopType, UnitType)):
            return
        if isinstance(S, TVar):
            if env.tvar_bound(S.name) is None:
                raise UnboundVariable(f"unbound type variable {S.name}", at)
        elif isinstance(S, Arrow):
            self.check_qtype(env, S.param, at)
            self.check_qtype(env, S.result, at)
        elif isinstance(S, ForallT):
            self.check_stype(env, S.bound, at)
            var, body = self._open_tbinder(env, S.var, S.body)
            self.check_qtype(env.with_tvar(var, S.bound), body, at)
        elif isinstance(S, ForallQ):
            self.check_qual(env, S.bound, at)
            var, body = self._open_qbinder(env, S.var, S.body)
            self.check_qtype(env.with_qual(var, S.bound), body, at)
        else:
            self.check_extra_stype(env, S, at)

    def check_extra_stype(self, env, S, at):
        raise IllFormed(f"type form {type(S).__name__} is not part of {self.calculus}", at)

    def wf_type(self, env: TypeEnv, T) -> bool:
        try:
            if isinstance(T, QType):
                self.check_qtype(env, T)
            else:
                self.check_stype(env, T)
        except (IllFormed, UnboundVariable):
            return False
        return True

    # binder renaming keeps environment names unique

    def _open_qbinder(self, env: TypeEnv, var: str, body_type):
        if var not in env.names():
            return var, body_type
        new = fresh_name(var, env.names() | all_names(body_type))
        return new, subst_type_quals(body_type, {var: QVar(new)})

    def _open_tbinder(self, env: TypeEnv, var: str, body_type):
        if var not in env.names():
            return var, body_type
        new = fresh_name(var, env.names() | all_names(body_type))
        return new, subst_type_types(body_type, {var: TVar(new)})

    # subtyping

    def expose(self, env: TypeEnv, S):
        seen = set()
        while isinstance(S, TVar):
            if S.name in seen:
                break
            seen.add(S.name)
            bound = env.tvar_bound(S.name)
            if bound is None:
                raise UnboundVariable(f"unbound type variable {S.name}")
            S = bound
        return S

    def subtype(self, env: TypeEnv, T1: QType, T2: QType) -> Derivation | None:
        dq = self.subqual(env, T1.qual, T2.qual)
        if dq is None:
            return None
        ds = self.subtype_simple(env, T1.shape, T2.shape)
        if ds is None:
            return None
        return Derivation("sub-qtype", T1, T2, (dq, ds))

    def subtype_simple(self, env: TypeEnv, S1, S2) -> Derivation | None:
        if isinstance(S2, TopType):
            return Derivation("sub-top", S1, S2)
        if isinstance(S1, TVar) and isinstance(S2, TVar) and S1.name == S2.name:
            return Derivation("sub-refl-tvar", S1, S2)
        if isinstance(S1, UnitType) and isinstance(S2, UnitType):
            return Derivation("sub-unit", S1, S2)
        if isinstance(S1, TVar):
            bound = env.tvar_bound(S1.name)
            if bound is None:
                return None
            d = self.subtype_simple(env, bound, S2)
            return None if d is None else Derivation("sub-tvar", S1, S2, (d,))
        if isinstance(S1, Arrow) and isinstance(S2, Arrow):
            d1 = self.subtype(env, S2.param, S1.param)
            if d1 is None:
                return None
            d2 = self.subtype(env, S1.result, S2.result)
            if d2 is None:
                return None
            return Derivation("sub-arrow", S1, S2, (d1, d2))
        if isinstance(S1, ForallT) and isinstance(S2, ForallT):
            up = self.subtype_simple(env, S1.bound, S2.bound)
            down = self.subtype_simple(env, S2.bound, S1.bound)
            if up is None or down is None:
                return None
            var, b1 = self._open_tbinder(env, S1.var, S1.body)
            b2 = subst_type_types(S2.body, {S2.var: TVar(var)}) if S2.var != var else S2.body
            d = self.subtype(env.with_tvar(var, S1.bound), b1, b2)
            return None if d is None else Derivation("sub-all", S1, S2, (up, down, d))
        if isinstance(S1, ForallQ) and isinstance(S2, ForallQ):
            up = self.subqual(env, S1.bound, S2.bound)
            down = self.subqual(env, S2.bound, S1.bound)
            if up is None or down is None:
                return None
            var, b1 = self._open_qbinder(env, S1.var, S1.body)
            b2 = subst_type_quals(S2.body, {S2.var: QVar(var)}) if S2.var != var else S2.body
            d = self.subtype(env.with_qual(var, S1.bound), b1, b2)
            return None if d is None else Derivation("sub-qall", S1, S2, (up, down, d))
        return self.subtype_extra(env, S1, S2)

    def subtype_extra(self, env, S1, S2) -> Derivation | None:
        return None

    def is_subtype(self, env, T1, T2) -> bool:
        return self.subtype(env, T1, T2) is not None

    def require_subtype(self, env, found: QType, expected: QType, what: str, at=None):
        if self.subtype(env, found, expected) is None:
            raise TypeMismatch(f"{what}: expected {expected}, found {found}", at)

    # typing

    def type_of(self, env: TypeEnv, t) -> QType:
        method = getattr(self, "_t_" + type(t).__name__, None)
        if method is None:
            raise IllFormed(f"term form {type(t).__name__} is not part of {self.calculus}", _span(t))
        T = method(env, t)
        if is_value(t):
            self.on_value(env, t, T)
        return T

    def on_value(self, env, v, T):
        """Hook called with every value subterm and its type."""

    def _t_Var(self, env, t):
        T = env.term_type(t.name)
        if T is None:
            raise UnboundVariable(f"unbound variable {t.name}", t.span)
        return T

    def _t_UnitVal(self, env, t):
        self.check_qual(env, t.tag, t.span)
        return QType(t.tag, UnitType())

    def _bind_term(self, env: TypeEnv, name: str, body):
        if name not in env.names():
            return name, body
        new = fresh_name(name, env.names() | all_names(body))
        return new, subst_term(body, name, Var(new))

    def _body_env(self, env: TypeEnv, tag: Qual) -> TypeEnv:
        return env

    def _t_Abs(self, env, t):
        self.check_qual(env, t.tag, t.span)
        self.check_qtype(env, t.param_type, t.span)
        x, body = self._bind_term(env, t.param, t.body)
        inner = self._body_env(env, t.tag).with_term(x, t.param_type)
        Tb = self.type_of(inner, body)
        self.check_abs_capture(env, t)
        return QType(t.tag, Arrow(t.param_type, Tb))

    def _t_TAbs(self, env, t):
        self.check_qual(env, t.tag, t.span)
        self.check_stype(env, t.bound, t.span)
        var, body = t.var, t.body
        if var in env.names():
            var = fresh_name(var, env.names() | all_names(body))
            body = subst_term_types(body, {t.var: TVar(var)})
        Tb = self.type_of(self._body_env(env, t.tag).with_tvar(var, t.bound), body)
        self.check_abs_capture(env, t)
        return QType(t.tag, ForallT(var, t.bound, Tb))

    def _t_QAbs(self, env, t):
        self.check_qual(env, t.tag, t.span)
        self.check_qual(env, t.bound, t.span)
        var, body = t.var, t.body
        if var in env.names():
            var = fresh_name(var, env.names() | all_names(body))
            body = subst_term_quals(body, {t.var: QVar(var)})
        Tb = self.type_of(self._body_env(env, t.tag).with_qual(var, t.bound), body)
        self.check_abs_capture(env, t)
        return QType(t.tag, ForallQ(var, t.bound, Tb))

    def check_abs_capture(self, env, t):
        pass

    def check_call_colour(self, env, fn_type: QType, at):
        pass

    def _t_App(self, env, t):
        Tf = self.type_of(env, t.fn)
        return self.app_result(env, Tf, lambda: self.type_of(env, t.arg), t.span)

    def _t_TApp(self, env, t):
        return self.tapp_result(env, self.type_of(env, t.fn), t.type_arg, t.span)

    def _t_QApp(self, env, t):
        return self.qapp_result(env, self.type_of(env, t.fn), t.qual_arg, t.span)

    def _t_Upqual(self, env, t):
        self.check_qual(env, t.qual, t.span)
        return self.upqual_result(env, self.type_of(env, t.body), t.qual, t.span)

    def _t_Assert(self, env, t):
        self.check_qual(env, t.qual, t.span)
        return self.assert_result(env, self.type_of(env, t.body), t.qual, t.span)

    # elimination rules, shared with the machine-configuration typing of F_a

    def app_result(self, env, Tf: QType, arg_type, at=None) -> QType:
        shape = self.expose(env, Tf.shape)
        if not isinstance(shape, Arrow):
            raise TypeMismatch(f"applied term is not a function: it has type {Tf}", at)
        self.check_call_colour(env, Tf, at)
        Ta = arg_type() if callable(arg_type) else arg_type
        self.require_subtype(env, Ta, shape.param, "argument", at)
        return shape.result

    def tapp_result(self, env, Tf: QType, S, at=None) -> QType:
        shape = self.expose(env, Tf.shape)
        if not isinstance(shape, ForallT):
            raise TypeMismatch(f"type-applied term is not a type abstraction: it has type {Tf}", at)
        self.check_stype(env, S, at)
        self.check_call_colour(env, Tf, at)
        if self.subtype_simple(env, S, shape.bound) is None:
            raise BoundViolation(f"type argument {S} exceeds bound {shape.bound}", at)
        return subst_type_types(shape.body, {shape.var: S})

    def qapp_result(self, env, Tf: QType, q, at=None) -> QType:
        shape = self.expose(env, Tf.shape)
        if not isinstance(shape, ForallQ):
            raise TypeMismatch(f"qualifier-applied term is not a qualifier abstraction: it has type {Tf}", at)
        self.check_qual(env, q, at)
        self.check_call_colour(env, Tf, at)
        self.require_subqual(env, q, shape.bound, BoundViolation, "qualifier argument exceeds bound", at)
        return subst_type_quals(shape.body, {shape.var: q})

    def upqual_result(self, env, T: QType, q, at=None) -> QType:
        self.require_subqual(env, T.qual, q, QualifierNotSubqualified, "upqual", at)
        return QType(q, T.shape)

    def assert_result(self, env, T: QType, q, at=None) -> QType:
        self.require_subqual(env, T.qual, q, QualifierNotSubqualified, "assert", at)
        return T

    def check_closed(self, t, env: TypeEnv = EMPTY_ENV) -> QType:
        return self.type_of(env, t)


def _span(t):
    return getattr(t, "span", None)


def type_of(env: TypeEnv, t, lattice: FiniteLattice = TWO_POINT) -> QType:
    return Checker(lattice).type_of(env, t)


def subtype(env: TypeEnv, T1, T2, lattice: FiniteLattice = TWO_POINT) -> Derivation | None:
    checker = Checker(lattice)
    if isinstance(T1, QType):
        return checker.subtype(env, T1, T2)
    return checker.subtype_simple(env, T1, T2)


def wf_type(env: TypeEnv, T, lattice: FiniteLattice = TWO_POINT) -> bool:
    return Checker(lattice).wf_type(env, T)


def wf_env(env: TypeEnv, lattice: FiniteLattice = TWO_POINT) -> bool:
    checker = Checker(lattice)
    partial = TypeEnv(quals=QualEnv())
    try:
        for b in env.quals:
            checker.check_qual(partial, b.bound)
            partial = partial.with_qual(b.name, b.bound, b.term)
        for name, bound in env.tvars:
            checker.check_stype(partial, bound)
            partial = partial.with_tvar(name, bound)
        for name, T in env.terms:
            checker.check_qtype(partial, T)
            partial = partial.with_term(name, T)
    except (IllFormed, UnboundVariable):
        return False
    return True


# --- evaluation ------------------------------------------------------------

def ground_value(L: FiniteLattice, q: Qual, where: str, term=None) -> str:
    try:
        return eval_ground(L, q)
    except HasVariables as exc:
        raise NonGroundTag(f"{where}: qualifier {show_qual(q)} mentions variable {exc}", term) from None


class Reducer:
    """One small step of call-by-value, left-to-right reduction.

    ``step`` returns the reduct, or None when the term is a value.  Store
    operations are delegated to :meth:`reduce_store_form`, which F_m overrides.
    """

    def __init__(self, lattice: FiniteLattice = TWO_POINT):
        self.lattice = lattice

    def tag_leq(self, tag: Qual, q: Qual, where: str, term) -> bool:
        L = self.lattice
        return L.leq(ground_value(L, tag, where, term), ground_value(L, q, where, term))

    def step(self, t):
        if is_value(t):
            return None
        return self.reduce(t)

    def reduce(self, t):
        if isinstance(t, App):
            if not is_value(t.fn):
                return replace(t, fn=self.reduce(t.fn))
            if not is_value(t.arg):
                return replace(t, arg=self.reduce(t.arg))
            return self.apply(t.fn, t.arg, t)
        if isinstance(t, TApp):
            if not is_value(t.fn):
                return replace(t, fn=self.reduce(t.fn))
            return self.apply_type(t.fn, t.type_arg, t)
        if isinstance(t, QApp):
            if not is_value(t.fn):
                return replace(t, fn=self.reduce(t.fn))
            return self.apply_qual(t.fn, t.qual_arg, t)
        if isinstance(t, CApp):
            if not is_value(t.fn):
                return replace(t, fn=self.reduce(t.fn))
            if not is_value(t.arg):
                return replace(t, arg=self.reduce(t.arg))
            return self.apply_capture(t.fn, t.qual_arg, t.arg, t)
        if isinstance(t, Upqual):
            if not is_value(t.body):
                return replace(t, body=self.reduce(t.body))
            return self.upqual(t.qual, t.body, t)
        if isinstance(t, Assert):
            if not is_value(t.body):
                return replace(t, body=self.reduce(t.body))
            return self.assert_(t.qual, t.body, t)
        if isinstance(t, Var):
            raise StuckIllFormed(f"free variable {t.name}", t)
        return self.reduce_store_form(t)

    def reduce_store_form(self, t):
        raise StuckIllFormed(f"{type(t).__name__} cannot be reduced without a store", t)

    def apply(self, f, v, redex):
        if not isinstance(f, Abs):
            raise StuckIllFormed("applying a value that is not a function", redex)
        return subst_term(f.body, f.param, v)

    def apply_type(self, f, S, redex):
        if not isinstance(f, TAbs):
            raise StuckIllFormed("type-applying a value that is not a type abstraction", redex)
        return subst_term_types(f.body, {f.var: S})

    def apply_qual(self, f, q, redex):
        if not isinstance(f, QAbs):
            raise StuckIllFormed("qualifier-applying a value that is not a qualifier abstraction", redex)
        return subst_term_quals(f.body, {f.var: q})

    def apply_capture(self, f, q, v, redex):
        if not isinstance(f, CAbs):
            raise StuckIllFormed("applying a value that is not a capture-tracked function", redex)
        return subst_term(f.body, f.param, v, qual=q)

    def upqual(self, q, v, redex):
        if not self.tag_leq(v.tag, q, "upqual", redex):
            raise UpqualFailed(f"upqual: tag {show_qual(v.tag)} is not below {show_qual(q)}", redex)
        return retag(v, q)

    def assert_(self, q, v, redex):
        if not self.tag_leq(v.tag, q, "assert", redex):
            raise AssertFailed(f"assert: tag {show_qual(v.tag)} is not below {show_qual(q)}", redex)
        return v


def step(t, lattice: FiniteLattice = TWO_POINT):
    """One reduction step: the reduct, or None if ``t`` is a value. Raises Stuck."""
    return Reducer(lattice).step(t)


@dataclass
class Outcome:
    """Result of running with fuel: ``status`` is value, stuck or out-of-fuel."""

    status: str
    term: object
    steps: int
    error: Exception | None = None
    trace: list = field(default_factory=list)

    @property
    def is_value(self) -> bool:
        return self.status == "value"


def eval_fuel(
    t,
    fuel: int,
    lattice: FiniteLattice = TWO_POINT,
    trace: bool = False,
    stepper: Callable | None = None,
):
    stepper = stepper or Reducer(lattice).step

    seen = [t] if trace else []
    for n in range(fuel + 1):
        if is_value(t):
            return Outcome("value", t, n, trace=seen)
        if n == fuel:
            break
        try:
            t = stepper(t)
        except Stuck as exc:
            return Outcome("stuck", t, n, exc, trace=seen)
        if trace:
            seen.append(t)
    return Outcome("out-of-fuel", t, fuel, trace=seen)

