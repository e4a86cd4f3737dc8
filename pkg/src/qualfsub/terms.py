"""Types and terms for F_q and its variants, plus substitution and alpha-equivalence.

Every calculus shares one AST; checkers reject the forms that do not belong to
them.  Term nodes carry an optional source ``span`` that is ignored by
equality.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Union

from .quals import BOT, Qual, QVar, Join, Meet, qual_vars, subst_quals

Span = "tuple[int, int] | None"


def _show(node) -> str:
    from .syntax.printer import pretty_print

    return pretty_print(node)


class _Printable:
    def __str__(self):
        return _show(self)


# --- types -----------------------------------------------------------------

@dataclass(frozen=True)
class QType(_Printable):
    qual: Qual
    shape: "SType"


@dataclass(frozen=True)
class TopType(_Printable):
    pass


@dataclass(frozen=True)
class TVar(_Printable):
    name: str


@dataclass(frozen=True)
class Arrow(_Printable):
    param: QType
    result: QType


@dataclass(frozen=True)
class ForallT(_Printable):
    var: str
    bound: "SType"
    body: QType


@dataclass(frozen=True)
class ForallQ(_Printable):
    var: str
    bound: Qual
    body: QType


@dataclass(frozen=True)
class Boxed(_Printable):
    inner: QType


@dataclass(frozen=True)
class UnitType(_Printable):
    pass


@dataclass(frozen=True)
class DepArrow(_Printable):
    """``(x <: Q : S) -> T``; ``var`` may occur in the qualifiers of ``result``."""

    var: str
    param: QType
    result: QType


SType = Union[TopType, TVar, Arrow, ForallT, ForallQ, Boxed, UnitType, DepArrow]
TOP_TYPE = TopType()
UNIT_TYPE = UnitType()


# --- terms -----------------------------------------------------------------

def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(_Printable):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Abs(_Printable):
    tag: Qual
    param: str
    param_type: QType
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class App(_Printable):
    fn: "Term"
    arg: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class TAbs(_Printable):
    tag: Qual
    var: str
    bound: SType
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class TApp(_Printable):
    fn: "Term"
    type_arg: SType
    span: Span = _span()


@dataclass(frozen=True)
class QAbs(_Printable):
    tag: Qual
    var: str
    bound: Qual
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class QApp(_Printable):
    fn: "Term"
    qual_arg: Qual
    span: Span = _span()


@dataclass(frozen=True)
class Upqual(_Printable):
    qual: Qual
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class Assert(_Printable):
    qual: Qual
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class Ref(_Printable):
    """``ref[P] t`` or ``ref[P : T] t`` with a declared content type."""

    tag: Qual
    init: "Term"
    content: QType | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Deref(_Printable):
    ref: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class Assign(_Printable):
    ref: "Term"
    value: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class Loc(_Printable):
    id: int
    tag: Qual
    span: Span = _span()


@dataclass(frozen=True)
class UnitVal(_Printable):
    tag: Qual = BOT
    span: Span = _span()


@dataclass(frozen=True)
class CAbs(_Printable):
    """``fn[P](x <: Q : S) => t``; ``x`` is bound as a term and as a qualifier."""

    tag: Qual
    param: str
    qual_bound: Qual
    shape: SType
    body: "Term"
    span: Span = _span()


@dataclass(frozen=True)
class CApp(_Printable):
    fn: "Term"
    qual_arg: Qual
    arg: "Term"
    span: Span = _span()


Term = Union[Var, Abs, App, TAbs, TApp, QAbs, QApp, Upqual, Assert, Ref, Deref, Assign, Loc, UnitVal, CAbs, CApp]

VALUE_TYPES = (Abs, TAbs, QAbs, CAbs, Loc, UnitVal)
TYPE_NODES = (QType, TopType, TVar, Arrow, ForallT, ForallQ, Boxed, UnitType, DepArrow)


def is_value(t) -> bool:
    return isinstance(t, VALUE_TYPES)


def tag_of(v) -> Qual:
    return v.tag


def retag(v, q: Qual):
    return replace(v, tag=q)


# --- fresh names -----------------------------------------------------------

_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_name(base: str, avoid) -> str:
    root = _TRAILING_DIGITS.sub("", base) or base
    n = 1
    while f"{root}{n}" in avoid:
        n += 1
    return f"{root}{n}"


def all_names(node) -> set[str]:
    """Every identifier occurring anywhere in ``node``, bound or free."""
    out: set[str] = set()
    _collect_names(node, out)
    return out


def _collect_names(node, out: set[str]):
    if node is None or isinstance(node, (str, int)):
        return
    if isinstance(node, QVar):
        out.add(node.name)
        return
    if isinstance(node, (Join, Meet)):
        _collect_names(node.left, out)
        _collect_names(node.right, out)
        return
    for name in getattr(node, "__dataclass_fields__", ()):
        if name == "span":
            continue
        value = getattr(node, name)
        if isinstance(value, str) and name in ("name", "param", "var"):
            out.add(value)
        else:
            _collect_names(value, out)


# --- free variables --------------------------------------------------------

@dataclass
class FreeNames:
    terms: set = field(default_factory=set)
    types: set = field(default_factory=set)
    quals: set = field(default_factory=set)


def free_names(node) -> FreeNames:
    fn = FreeNames()
    _free(node, fn, frozenset(), frozenset(), frozenset())
    return fn


def _free_q(q, fn: FreeNames, bq):
    for v in qual_vars(q):
        if v not in bq:
            fn.quals.add(v)


def _free(n, fn, bt, bs, bq):
    """bt/bs/bq: bound term, type and qualifier names."""
    if isinstance(n, QType):
        _free_q(n.qual, fn, bq)
        _free(n.shape, fn, bt, bs, bq)
    elif isinstance(n, (TopType, UnitType)):
        pass
    elif isinstance(n, TVar):
        if n.name not in bs:
            fn.types.add(n.name)
    elif isinstance(n, Arrow):
        _free(n.param, fn, bt, bs, bq)
        _free(n.result, fn, bt, bs, bq)
    elif isinstance(n, ForallT):
        _free(n.bound, fn, bt, bs, bq)
        _free(n.body, fn, bt, bs | {n.var}, bq)
    elif isinstance(n, ForallQ):
        _free_q(n.bound, fn, bq)
        _free(n.body, fn, bt, bs, bq | {n.var})
    elif isinstance(n, Boxed):
        _free(n.inner, fn, bt, bs, bq)
    elif isinstance(n, DepArrow):
        _free(n.param, fn, bt, bs, bq)
        _free(n.result, fn, bt, bs, bq | {n.var})
    elif isinstance(n, Var):
        if n.name not in bt:
            fn.terms.add(n.name)
    elif isinstance(n, Abs):
        _free_q(n.tag, fn, bq)
        _free(n.param_type, fn, bt, bs, bq)
        _free(n.body, fn, bt | {n.param}, bs, bq)
    elif isinstance(n, App):
        _free(n.fn, fn, bt, bs, bq)
        _free(n.arg, fn, bt, bs, bq)
    elif isinstance(n, TAbs):
        _free_q(n.tag, fn, bq)
        _free(n.bound, fn, bt, bs, bq)
        _free(n.body, fn, bt, bs | {n.var}, bq)
    elif isinstance(n, TApp):
        _free(n.fn, fn, bt, bs, bq)
        _free(n.type_arg, fn, bt, bs, bq)
    elif isinstance(n, QAbs):
        _free_q(n.tag, fn, bq)
        _free_q(n.bound, fn, bq)
        _free(n.body, fn, bt, bs, bq | {n.var})
    elif isinstance(n, QApp):
        _free(n.fn, fn, bt, bs, bq)
        _free_q(n.qual_arg, fn, bq)
    elif isinstance(n, (Upqual, Assert)):
        _free_q(n.qual, fn, bq)
        _free(n.body, fn, bt, bs, bq)
    elif isinstance(n, Ref):
        _free_q(n.tag, fn, bq)
        _free(n.init, fn, bt, bs, bq)
        if n.content is not None:
            _free(n.content, fn, bt, bs, bq)
    elif isinstance(n, Deref):
        _free(n.ref, fn, bt, bs, bq)
    elif isinstance(n, Assign):
        _free(n.ref, fn, bt, bs, bq)
        _free(n.value, fn, bt, bs, bq)
    elif isinstance(n, (Loc, UnitVal)):
        _free_q(n.tag, fn, bq)
    elif isinstance(n, CAbs):
        _free_q(n.tag, fn, bq)
        _free_q(n.qual_bound, fn, bq)
        _free(n.shape, fn, bt, bs, bq)
        _free(n.body, fn, bt | {n.param}, bs, bq | {n.param})
    elif isinstance(n, CApp):
        _free(n.fn, fn, bt, bs, bq)
        _free_q(n.qual_arg, fn, bq)
        _free(n.arg, fn, bt, bs, bq)
    else:
        _free_q(n, fn, bq)


def captured_term_vars(v, term_names) -> list[str]:
    """Free names of ``v`` that denote term variables, in term or qualifier position."""
    fn = free_names(v)
    return sorted(n for n in (fn.terms | fn.quals) if n in term_names)


# --- substitution on types (capture-avoiding) ------------------------------

def subst_type_quals(T, mapping: Mapping[str, Qual]):
    """Replace qualifier variables in a type, renaming binders that would capture."""
    if not mapping:
        return T
    if isinstance(T, QType):
        return QType(subst_quals(T.qual, mapping), subst_type_quals(T.shape, mapping))
    if isinstance(T, (TopType, TVar, UnitType)):
        return T
    if isinstance(T, Arrow):
        return Arrow(subst_type_quals(T.param, mapping), subst_type_quals(T.result, mapping))
    if isinstance(T, ForallT):
        return ForallT(T.var, subst_type_quals(T.bound, mapping), subst_type_quals(T.body, mapping))
    if isinstance(T, Boxed):
        return Boxed(subst_type_quals(T.inner, mapping))
    if isinstance(T, ForallQ):
        var, body, inner = _enter_qual_binder(T.var, T.body, mapping)
        return ForallQ(var, subst_quals(T.bound, mapping), subst_type_quals(body, inner))
    if isinstance(T, DepArrow):
        var, result, inner = _enter_qual_binder(T.var, T.result, mapping)
        return DepArrow(var, subst_type_quals(T.param, mapping), subst_type_quals(result, inner))
    raise TypeError(f"not a type: {T!r}")


def _enter_qual_binder(var: str, body, mapping: Mapping[str, Qual]):
    inner = {k: v for k, v in mapping.items() if k != var}
    incoming = set()
    for q in inner.values():
        incoming.update(qual_vars(q))
    if var in incoming:
        new = fresh_name(var, incoming | all_names(body) | set(inner))
        body = subst_type_quals(body, {var: QVar(new)})
        var = new
    return var, body, inner


def subst_type_types(T, mapping: Mapping[str, SType]):
    """Replace type variables in a type, renaming binders that would capture."""
    if not mapping:
        return T
    if isinstance(T, QType):
        return QType(T.qual, subst_type_types(T.shape, mapping))
    if isinstance(T, TVar):
        return mapping.get(T.name, T)
    if isinstance(T, (TopType, UnitType)):
        return T
    if isinstance(T, Arrow):
        return Arrow(subst_type_types(T.param, mapping), subst_type_types(T.result, mapping))
    if isinstance(T, ForallQ):
        return ForallQ(T.var, T.bound, subst_type_types(T.body, mapping))
    if isinstance(T, Boxed):
        return Boxed(subst_type_types(T.inner, mapping))
    if isinstance(T, DepArrow):
        return DepArrow(T.var, subst_type_types(T.param, mapping), subst_type_types(T.result, mapping))
    if isinstance(T, ForallT):
        inner = {k: v for k, v in mapping.items() if k != T.var}
        incoming = set()
        for s in inner.values():
            incoming |= free_names(s).types
        var, body = T.var, T.body
        if var in incoming:
            new = fresh_name(var, incoming | all_names(body) | set(inner))
            body = subst_type_types(body, {var: TVar(new)})
            var = new
        return ForallT(var, subst_type_types(T.bound, mapping), subst_type_types(body, inner))
    raise TypeError(f"not a type: {T!r}")


# --- substitution on terms -------------------------------------------------
#
# Callers substitute closed values, ground qualifiers and closed types at run
# time, or names fresh for the whole term when renaming binders, so these
# functions do not rename.

def subst_term(t, name: str, value, qual: Qual | None = None):
    """``t[name := value]``; with ``qual`` also replaces ``name`` in qualifier positions."""
    qmap = {name: qual} if qual is not None else {}
    return _st(t, name, value, qmap)


def _st(t, x, v, qmap):
    sq = (lambda q: subst_quals(q, qmap)) if qmap else (lambda q: q)
    st = (lambda T: subst_type_quals(T, qmap)) if qmap else (lambda T: T)
    if isinstance(t, Var):
        return v if t.name == x else t
    if isinstance(t, Abs):
        body = t.body if t.param == x else _st(t.body, x, v, qmap)
        return replace(t, tag=sq(t.tag), param_type=st(t.param_type), body=body)
    if isinstance(t, CAbs):
        body = t.body if t.param == x else _st(t.body, x, v, qmap)
        return replace(t, tag=sq(t.tag), qual_bound=sq(t.qual_bound), shape=st(t.shape), body=body)
    if isinstance(t, App):
        return replace(t, fn=_st(t.fn, x, v, qmap), arg=_st(t.arg, x, v, qmap))
    if isinstance(t, CApp):
        return replace(t, fn=_st(t.fn, x, v, qmap), qual_arg=sq(t.qual_arg), arg=_st(t.arg, x, v, qmap))
    if isinstance(t, TAbs):
        return replace(t, tag=sq(t.tag), bound=st(t.bound), body=_st(t.body, x, v, qmap))
    if isinstance(t, TApp):
        return replace(t, fn=_st(t.fn, x, v, qmap), type_arg=st(t.type_arg))
    if isinstance(t, QAbs):
        inner = {k: q for k, q in qmap.items() if k != t.var}
        return replace(t, tag=sq(t.tag), bound=sq(t.bound), body=_st(t.body, x, v, inner))
    if isinstance(t, QApp):
        return replace(t, fn=_st(t.fn, x, v, qmap), qual_arg=sq(t.qual_arg))
    if isinstance(t, (Upqual, Assert)):
        return replace(t, qual=sq(t.qual), body=_st(t.body, x, v, qmap))
    if isinstance(t, Ref):
        content = None if t.content is None else st(t.content)
        return replace(t, tag=sq(t.tag), init=_st(t.init, x, v, qmap), content=content)
    if isinstance(t, Deref):
        return replace(t, ref=_st(t.ref, x, v, qmap))
    if isinstance(t, Assign):
        return replace(t, ref=_st(t.ref, x, v, qmap), value=_st(t.value, x, v, qmap))
    if isinstance(t, (Loc, UnitVal)):
        return replace(t, tag=sq(t.tag))
    raise TypeError(f"not a term: {t!r}")


def subst_term_quals(t, mapping: Mapping[str, Qual]):
    """Replace qualifier variables throughout a term (tags, annotations, arguments)."""
    if not mapping:
        return t
    sq = lambda q: subst_quals(q, mapping)  # noqa: E731
    st = lambda T: subst_type_quals(T, mapping)  # noqa: E731
    if isinstance(t, Var):
        return t
    if isinstance(t, Abs):
        return replace(t, tag=sq(t.tag), param_type=st(t.param_type), body=subst_term_quals(t.body, mapping))
    if isinstance(t, CAbs):
        inner = {k: q for k, q in mapping.items() if k != t.param}
        return replace(
            t, tag=sq(t.tag), qual_bound=sq(t.qual_bound), shape=st(t.shape),
            body=subst_term_quals(t.body, inner),
        )
    if isinstance(t, App):
        return replace(t, fn=subst_term_quals(t.fn, mapping), arg=subst_term_quals(t.arg, mapping))
    if isinstance(t, CApp):
        return replace(
            t, fn=subst_term_quals(t.fn, mapping), qual_arg=sq(t.qual_arg), arg=subst_term_quals(t.arg, mapping)
        )
    if isinstance(t, TAbs):
        return replace(t, tag=sq(t.tag), bound=st(t.bound), body=subst_term_quals(t.body, mapping))
    if isinstance(t, TApp):
        return replace(t, fn=subst_term_quals(t.fn, mapping), type_arg=st(t.type_arg))
    if isinstance(t, QAbs):
        inner = {k: q for k, q in mapping.items() if k != t.var}
        return replace(t, tag=sq(t.tag), bound=sq(t.bound), body=subst_term_quals(t.body, inner))
    if isinstance(t, QApp):
        return replace(t, fn=subst_term_quals(t.fn, mapping), qual_arg=sq(t.qual_arg))
    if isinstance(t, (Upqual, Assert)):
        return replace(t, qual=sq(t.qual), body=subst_term_quals(t.body, mapping))
    if isinstance(t, Ref):
        content = None if t.content is None else st(t.content)
        return replace(t, tag=sq(t.tag), init=subst_term_quals(t.init, mapping), content=content)
    if isinstance(t, Deref):
        return replace(t, ref=subst_term_quals(t.ref, mapping))
    if isinstance(t, Assign):
        return replace(t, ref=subst_term_quals(t.ref, mapping), value=subst_term_quals(t.value, mapping))
    if isinstance(t, (Loc, UnitVal)):
        return replace(t, tag=sq(t.tag))
    raise TypeError(f"not a term: {t!r}")


def subst_term_types(t, mapping: Mapping[str, SType]):
    """Replace type variables throughout a term's annotations."""
    if not mapping:
        return t
    st = lambda T: subst_type_types(T, mapping)  # noqa: E731
    rec = lambda s: subst_term_types(s, mapping)  # noqa: E731
    if isinstance(t, (Var, Loc, UnitVal)):
        return t
    if isinstance(t, Abs):
        return replace(t, param_type=st(t.param_type), body=rec(t.body))
    if isinstance(t, CAbs):
        return replace(t, shape=st(t.shape), body=rec(t.body))
    if isinstance(t, App):
        return replace(t, fn=rec(t.fn), arg=rec(t.arg))
    if isinstance(t, CApp):
        return replace(t, fn=rec(t.fn), arg=rec(t.arg))
    if isinstance(t, TAbs):
        inner = {k: s for k, s in mapping.items() if k != t.var}
        return replace(t, bound=st(t.bound), body=subst_term_types(t.body, inner))
    if isinstance(t, TApp):
        return replace(t, fn=rec(t.fn), type_arg=st(t.type_arg))
    if isinstance(t, QAbs):
        return replace(t, body=rec(t.body))
    if isinstance(t, QApp):
        return replace(t, fn=rec(t.fn))
    if isinstance(t, (Upqual, Assert)):
        return replace(t, body=rec(t.body))
    if isinstance(t, Ref):
        content = None if t.content is None else st(t.content)
        return replace(t, init=rec(t.init), content=content)
    if isinstance(t, Deref):
        return replace(t, ref=rec(t.ref))
    if isinstance(t, Assign):
        return replace(t, ref=rec(t.ref), value=rec(t.value))
    raise TypeError(f"not a term: {t!r}")


# --- alpha-equivalence -----------------------------------------------------

def canonical(node):
    """Rename every binder to a position-derived name so alpha-equivalent nodes are equal."""
    return _canon(node, {}, {}, {}, [0])


def alpha_equiv(a, b) -> bool:
    return canonical(a) == canonical(b)


def _cq(q, rq):
    return subst_quals(q, {k: QVar(v) for k, v in rq.items()}) if rq else q


def _canon(n, rt, rs, rq, counter):
    def fresh():
        counter[0] += 1
        return f"%{counter[0]}"

    c = lambda m: _canon(m, rt, rs, rq, counter)  # noqa: E731
    if isinstance(n, QType):
        return QType(_cq(n.qual, rq), c(n.shape))
    if isinstance(n, (TopType, UnitType)):
        return n
    if isinstance(n, TVar):
        return TVar(rs.get(n.name, n.name))
    if isinstance(n, Arrow):
        return Arrow(c(n.param), c(n.result))
    if isinstance(n, ForallT):
        v = fresh()
        return ForallT(v, c(n.bound), _canon(n.body, rt, {**rs, n.var: v}, rq, counter))
    if isinstance(n, ForallQ):
        v = fresh()
        return ForallQ(v, _cq(n.bound, rq), _canon(n.body, rt, rs, {**rq, n.var: v}, counter))
    if isinstance(n, Boxed):
        return Boxed(c(n.inner))
    if isinstance(n, DepArrow):
        v = fresh()
        return DepArrow(v, c(n.param), _canon(n.result, rt, rs, {**rq, n.var: v}, counter))
    if isinstance(n, Var):
        return Var(rt.get(n.name, n.name))
    if isinstance(n, Abs):
        v = fresh()
        return Abs(_cq(n.tag, rq), v, c(n.param_type), _canon(n.body, {**rt, n.param: v}, rs, rq, counter))
    if isinstance(n, CAbs):
        v = fresh()
        return CAbs(
            _cq(n.tag, rq), v, _cq(n.qual_bound, rq), c(n.shape),
            _canon(n.body, {**rt, n.param: v}, rs, {**rq, n.param: v}, counter),
        )
    if isinstance(n, App):
        return App(c(n.fn), c(n.arg))
    if isinstance(n, CApp):
        return CApp(c(n.fn), _cq(n.qual_arg, rq), c(n.arg))
    if isinstance(n, TAbs):
        v = fresh()
        return TAbs(_cq(n.tag, rq), v, c(n.bound), _canon(n.body, rt, {**rs, n.var: v}, rq, counter))
    if isinstance(n, TApp):
        return TApp(c(n.fn), c(n.type_arg))
    if isinstance(n, QAbs):
        v = fresh()
        return QAbs(_cq(n.tag, rq), v, _cq(n.bound, rq), _canon(n.body, rt, rs, {**rq, n.var: v}, counter))
    if isinstance(n, QApp):
        return QApp(c(n.fn), _cq(n.qual_arg, rq))
    if isinstance(n, Upqual):
        return Upqual(_cq(n.qual, rq), c(n.body))
    if isinstance(n, Assert):
        return Assert(_cq(n.qual, rq), c(n.body))
    if isinstance(n, Ref):
        return Ref(_cq(n.tag, rq), c(n.init), None if n.content is None else c(n.content))
    if isinstance(n, Deref):
        return Deref(c(n.ref))
    if isinstance(n, Assign):
        return Assign(c(n.ref), c(n.value))
    if isinstance(n, Loc):
        return Loc(n.id, _cq(n.tag, rq))
    if isinstance(n, UnitVal):
        return UnitVal(_cq(n.tag, rq))
    return _cq(n, rq)


def term_size(t) -> int:
    if t is None or isinstance(t, (str, int)):
        return 0
    total = 1
    for name in getattr(t, "__dataclass_fields__", ()):
        if name != "span":
            value = getattr(t, name)
            if is_value(value) or isinstance(value, (Var, App, TApp, QApp, Upqual, Assert, Ref, Deref, Assign, CApp)):
                total += term_size(value)
    return total
