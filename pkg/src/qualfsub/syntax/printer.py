"""Deterministic printer producing text the parser reads back."""
from __future__ import annotations

import re

from ..quals import BOT, Bot, Const, Join, Meet, QVar, Top, show_qual
from ..terms import (
    Abs, App, Arrow, Assert, Assign, Boxed, CAbs, CApp, DepArrow, Deref, ForallQ, ForallT, Loc,
    QAbs, QApp, QType, Ref, TAbs, TApp, TopType, TVar, UnitType, UnitVal, Upqual, Var,
)

_QUALS = (Top, Bot, Const, QVar, Join, Meet)

_BARE_UNIT = re.compile(r"(?<![\w'])unit$")

# term precedence levels
BINDER, APP, POSTFIX, ATOM = 0, 1, 2, 3


def pretty_print(node) -> str:
    if isinstance(node, _QUALS):
        return show_qual(node)
    if isinstance(node, QType):
        return qtype(node)
    if isinstance(node, (TopType, TVar, Arrow, ForallT, ForallQ, Boxed, UnitType, DepArrow)):
        return stype(node)
    return term(node, BINDER)


def qtype(T: QType) -> str:
    return "{" + show_qual(T.qual) + "} " + satom(T.shape)


def satom(S) -> str:
    if isinstance(S, (TopType, UnitType, TVar, Boxed)):
        return stype(S)
    return "(" + stype(S) + ")"


def stype(S) -> str:
    if isinstance(S, TopType):
        return "Top"
    if isinstance(S, UnitType):
        return "Unit"
    if isinstance(S, TVar):
        return S.name
    if isinstance(S, Boxed):
        return "Box " + qtype(S.inner)
    if isinstance(S, Arrow):
        return f"{qtype(S.param)} -> {qtype(S.result)}"
    if isinstance(S, ForallT):
        return f"all ({S.var} <: {stype(S.bound)}) . {qtype(S.body)}"
    if isinstance(S, ForallQ):
        return f"qall ({S.var} <: {show_qual(S.bound)}) . {qtype(S.body)}"
    if isinstance(S, DepArrow):
        p = S.param
        return f"({S.var} <: {show_qual(p.qual)} : {stype(p.shape)}) -> {qtype(S.result)}"
    raise TypeError(f"not a type: {S!r}")


def _level(t) -> int:
    if isinstance(t, (Var, UnitVal, Loc, Deref)):
        return ATOM
    if isinstance(t, (TApp, QApp, CApp)):
        return POSTFIX
    if isinstance(t, App):
        return APP
    return BINDER


def term(t, level: int = BINDER) -> str:
    text = _term(t)
    return f"({text})" if _level(t) < level else text


def _term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, UnitVal):
        return "unit" if t.tag == BOT else f"unit[{show_qual(t.tag)}]"
    if isinstance(t, Loc):
        return f"#{t.id}[{show_qual(t.tag)}]"
    if isinstance(t, Deref):
        return "!" + term(t.ref, ATOM)
    if isinstance(t, App):
        fn = f"({_term(t.fn)})" if isinstance(t.fn, QApp) else term(t.fn, APP)
        # in fc `f a [{Q}] b` is a capture application, so guard qualifier arguments
        arg = f"({_term(t.arg)})" if isinstance(t.arg, QApp) else term(t.arg, POSTFIX)
        return f"{fn} {arg}"
    if isinstance(t, TApp):
        return f"{_head(t.fn)} [{stype(t.type_arg)}]"
    if isinstance(t, QApp):
        return f"{_head(t.fn)} [{{{show_qual(t.qual_arg)}}}]"
    if isinstance(t, CApp):
        return f"{_head(t.fn)} [{{{show_qual(t.qual_arg)}}}] {term(t.arg, ATOM)}"
    if isinstance(t, Abs):
        return f"fn[{show_qual(t.tag)}]({t.param}: {qtype(t.param_type)}) => {term(t.body)}"
    if isinstance(t, CAbs):
        return (
            f"fn[{show_qual(t.tag)}]({t.param} <: {show_qual(t.qual_bound)} : {stype(t.shape)})"
            f" => {term(t.body)}"
        )
    if isinstance(t, TAbs):
        return f"tfn[{show_qual(t.tag)}]({t.var} <: {stype(t.bound)}) => {term(t.body)}"
    if isinstance(t, QAbs):
        return f"qfn[{show_qual(t.tag)}]({t.var} <: {show_qual(t.bound)}) => {term(t.body)}"
    if isinstance(t, Upqual):
        return f"upqual {_qual_arg(t.qual)} {term(t.body)}"
    if isinstance(t, Assert):
        return f"assert {_qual_arg(t.qual)} {term(t.body)}"
    if isinstance(t, Ref):
        head = show_qual(t.tag) if t.content is None else f"{show_qual(t.tag)} : {qtype(t.content)}"
        return f"ref[{head}] {term(t.init)}"
    if isinstance(t, Assign):
        return f"{term(t.ref, APP)} := {term(t.value)}"
    raise TypeError(f"not a term: {t!r}")


def _head(fn) -> str:
    # a bare `unit` right before `[` would read the bracket as its tag
    text = term(fn, POSTFIX)
    return text + "[bot]" if _BARE_UNIT.search(text) else text


def _qual_arg(q) -> str:
    # a parenthesised qualifier keeps the following term from being read as part of it
    text = show_qual(q)
    return text if isinstance(q, (Top, Bot, Const, QVar)) else f"({text})"
