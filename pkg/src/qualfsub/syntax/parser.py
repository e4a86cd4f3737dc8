"""Lexer and recursive-descent parser for the surface language.

Grammar summary (``/\\`` binds tighter than ``\\/``)::

    qual   ::= qual '\\/' qual | qual '/\\' qual | 'top' | 'bot' | IDENT | '`' LABEL | '(' qual ')'
    qtype  ::= '{' qual '}' satom
    satom  ::= 'Top' | 'Unit' | IDENT | 'Box' qtype | '(' stype ')'
    stype  ::= satom | qtype '->' qtype | 'all' '(' IDENT '<:' stype ')' '.' qtype
             | 'qall' '(' IDENT '<:' qual ')' '.' qtype | '(' IDENT '<:' qual ':' stype ')' '->' qtype
    term   ::= 'fn' '[' qual ']' '(' IDENT ':' qtype ')' '=>' term
             | 'fn' '[' qual ']' '(' IDENT '<:' qual ':' stype ')' '=>' term
             | 'tfn' '[' qual ']' '(' IDENT '<:' stype ')' '=>' term
             | 'qfn' '[' qual ']' '(' IDENT '<:' qual ')' '=>' term
             | 'upqual' qual term | 'assert' qual term | 'ref' '[' qual [':' qtype] ']' term
             | app [':=' term]
    app    ::= postfix postfix*
    postfix::= atom ('[' stype ']' | '[' '{' qual '}' ']' [atom])*
    atom   ::= IDENT | 'unit' ['[' qual ']'] | '#' NUM '[' qual ']' | '!' atom | '(' term ')'
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError
from ..quals import BOT, TOP, Const, Join, Meet, QVar
from ..terms import (
    Abs, App, Arrow, Assert, Assign, Boxed, CAbs, CApp, DepArrow, Deref, ForallQ, ForallT, Loc,
    QAbs, QApp, QType, Ref, TAbs, TApp, TopType, TVar, UnitType, UnitVal, Upqual, Var,
)

CALCULI = ("fq", "fm", "fa", "fc")

KEYWORDS = {
    "fn", "tfn", "qfn", "all", "qall", "ref", "Top", "Box", "Unit",
    "top", "bot", "upqual", "assert", "unit",
}
FM_ONLY = {"ref", "Box"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<const>`(?:\([^()\s]*\)|[A-Za-z0-9_']+))
  | (?P<loc>\#[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>\\/|/\\|->|:=|<:|=>|[!\[\]{}().:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, const, loc, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1) -> list[Token]:
    tokens: list[Token] = []
    pos, col = 0, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        elif kind not in ("ws", "comment"):
            if kind == "ident" and value in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, value, line, col))
            col += len(value)
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    def __init__(self, text: str, calculus: str = "fq", default_tag=None, first_line: int = 1):
        if calculus not in CALCULI:
            raise ValueError(f"unknown calculus {calculus!r}")
        self.tokens = tokenize(text, first_line)
        self.i = 0
        self.calculus = calculus
        self.default_tag = default_tag

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{message} at {where}", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "ident":
            raise self.error("expected an identifier")
        return self.advance().text

    def done(self):
        if self.tok.kind != "eof":
            raise self.error("unexpected input")

    def need(self, calculi: str, what: str, tok: Token):
        if self.calculus not in calculi.split():
            raise self.error(f"{what} is not available in {self.calculus}", tok)

    # qualifiers

    def qual(self):
        q = self.qual_meet()
        while self.at("\\/"):
            self.advance()
            q = Join(q, self.qual_meet())
        return q

    def qual_meet(self):
        q = self.qual_atom()
        while self.at("/\\"):
            self.advance()
            q = Meet(q, self.qual_atom())
        return q

    def qual_atom(self):
        t = self.tok
        if t.kind == "kw" and t.text == "top":
            self.advance()
            return TOP
        if t.kind == "kw" and t.text == "bot":
            self.advance()
            return BOT
        if t.kind == "ident":
            self.advance()
            return QVar(t.text)
        if t.kind == "const":
            self.advance()
            return Const(t.text[1:])
        if self.at("("):
            self.advance()
            q = self.qual()
            self.expect(")")
            return q
        raise self.error("expected a qualifier")

    # types

    def qtype(self) -> QType:
        self.expect("{")
        q = self.qual()
        self.expect("}")
        return QType(q, self.satom())

    def satom(self):
        t = self.tok
        if t.kind == "kw" and t.text == "Top":
            self.advance()
            return TopType()
        if t.kind == "kw" and t.text == "Unit":
            self.advance()
            return UnitType()
        if t.kind == "kw" and t.text == "Box":
            self.need("fm", "Box", t)
            self.advance()
            return Boxed(self.qtype())
        if t.kind == "ident":
            self.advance()
            return TVar(t.text)
        if self.at("("):
            if self.peek().kind == "ident" and self.peek(2).text == "<:":
                return self.dep_arrow_in_parens()
            self.advance()
            s = self.stype()
            self.expect(")")
            return s
        raise self.error("expected a type")

    def dep_arrow_in_parens(self):
        # '(' IDENT '<:' ... is a dependent arrow used where an atom is expected
        s = self.stype()
        return s

    def stype(self):
        t = self.tok
        if t.kind == "kw" and t.text == "all":
            self.advance()
            self.expect("(")
            var = self.ident()
            self.expect("<:")
            bound = self.stype()
            self.expect(")")
            self.expect(".")
            return ForallT(var, bound, self.qtype())
        if t.kind == "kw" and t.text == "qall":
            self.advance()
            self.expect("(")
            var = self.ident()
            self.expect("<:")
            bound = self.qual()
            self.expect(")")
            self.expect(".")
            return ForallQ(var, bound, self.qtype())
        if self.at("(") and self.peek().kind == "ident" and self.peek(2).text == "<:":
            self.need("fc", "dependent arrow", t)
            self.advance()
            var = self.ident()
            self.expect("<:")
            q = self.qual()
            self.expect(":")
            s = self.stype()
            self.expect(")")
            self.expect("->")
            return DepArrow(var, QType(q, s), self.qtype())
        if self.at("{"):
            param = self.qtype()
            self.expect("->")
            return Arrow(param, self.qtype())
        return self.satom()

    # terms

    def span(self, tok: Token):
        return (tok.line, tok.col)

    def tag(self):
        if self.at("["):
            self.advance()
            q = self.qual()
            self.expect("]")
            return q
        if self.default_tag is not None:
            return self.default_tag
        raise self.error("expected '[' and a tag (no default tag is set)")

    def term(self):
        t = self.tok
        if t.kind == "kw":
            if t.text == "fn":
                return self.abstraction()
            if t.text == "tfn":
                self.advance()
                tag = self.tag()
                self.expect("(")
                var = self.ident()
                self.expect("<:")
                bound = self.stype()
                self.expect(")")
                self.expect("=>")
                return TAbs(tag, var, bound, self.term(), span=self.span(t))
            if t.text == "qfn":
                self.advance()
                tag = self.tag()
                self.expect("(")
                var = self.ident()
                self.expect("<:")
                bound = self.qual()
                self.expect(")")
                self.expect("=>")
                return QAbs(tag, var, bound, self.term(), span=self.span(t))
            if t.text in ("upqual", "assert"):
                self.advance()
                q = self.qual()
                body = self.term()
                cls = Upqual if t.text == "upqual" else Assert
                return cls(q, body, span=self.span(t))
            if t.text == "ref":
                self.need("fm", "ref", t)
                self.advance()
                self.expect("[")
                q = self.qual()
                content = None
                if self.at(":"):
                    self.advance()
                    content = self.qtype()
                self.expect("]")
                return Ref(q, self.term(), content, span=self.span(t))
        lhs = self.app()
        if self.at(":="):
            op = self.advance()
            self.need("fm", "assignment", op)
            return Assign(lhs, self.term(), span=self.span(op))
        return lhs

    def abstraction(self):
        start = self.advance()
        tag = self.tag()
        self.expect("(")
        x = self.ident()
        if self.at("<:"):
            self.need("fc", "capture-tracked binder", self.tok)
            self.advance()
            qb = self.qual()
            self.expect(":")
            shape = self.stype()
            self.expect(")")
            self.expect("=>")
            return CAbs(tag, x, qb, shape, self.term(), span=self.span(start))
        self.expect(":")
        T = self.qtype()
        self.expect(")")
        self.expect("=>")
        body = self.term()
        if self.calculus == "fc":
            return CAbs(tag, x, T.qual, T.shape, body, span=self.span(start))
        return Abs(tag, x, T, body, span=self.span(start))

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "loc"):
            return True
        if t.kind == "kw" and t.text == "unit":
            return True
        return t.kind == "sym" and t.text in ("(", "!")

    def app(self):
        start = self.tok
        f = self.postfix()
        while self.starts_atom():
            f = App(f, self.postfix(), span=self.span(start))
        return f

    def postfix(self):
        start = self.tok
        t = self.atom()
        while self.at("["):
            self.advance()
            if self.at("{"):
                save = self.i
                self.advance()
                q = self.qual()
                self.expect("}")
                if self.at("]"):
                    self.advance()
                    if self.calculus == "fc" and self.starts_atom():
                        t = CApp(t, q, self.atom(), span=self.span(start))
                    else:
                        t = QApp(t, q, span=self.span(start))
                    continue
                self.i = save
            s = self.stype()
            self.expect("]")
            t = TApp(t, s, span=self.span(start))
        return t

    def atom(self):
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return Var(t.text, span=self.span(t))
        if t.kind == "kw" and t.text == "unit":
            self.advance()
            tag = BOT
            if self.at("["):
                self.advance()
                tag = self.qual()
                self.expect("]")
            return UnitVal(tag, span=self.span(t))
        if t.kind == "loc":
            self.need("fm", "location", t)
            self.advance()
            self.expect("[")
            q = self.qual()
            self.expect("]")
            return Loc(int(t.text[1:]), q, span=self.span(t))
        if self.at("!"):
            self.need("fm", "dereference", t)
            self.advance()
            return Deref(self.atom(), span=self.span(t))
        if self.at("("):
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        raise self.error("expected a term")


def parse_term(text: str, calculus: str = "fq", default_tag=None, first_line: int = 1):
    p = Parser(text, calculus, default_tag, first_line)
    t = p.term()
    p.done()
    return t


def parse_qual(text: str):
    p = Parser(text)
    q = p.qual()
    p.done()
    return q


def parse_qtype(text: str, calculus: str = "fc"):
    p = Parser(text, calculus)
    T = p.qtype()
    p.done()
    return T


def parse_stype(text: str, calculus: str = "fc"):
    p = Parser(text, calculus)
    S = p.stype()
    p.done()
    return S


@dataclass(frozen=True)
class EnvEntry:
    kind: str  # qual, type, term
    name: str
    bound: object


def parse_env(text: str, calculus: str = "fc") -> list[EnvEntry]:
    """``A<:top, X<:A, T<:Top, x:{Q} S``.

    A bound is a qualifier when it parses as one whose variables are all
    qualifier (or term) names declared earlier; otherwise it is a type.
    """
    entries: list[EnvEntry] = []
    qual_names: set[str] = set()
    if not text.strip():
        return entries
    p = Parser(text, calculus)
    while True:
        name = p.ident()
        if p.at(":"):
            p.advance()
            entries.append(EnvEntry("term", name, p.qtype()))
            qual_names.add(name)
        else:
            p.expect("<:")
            save = p.i
            bound = None
            try:
                q = p.qual()
                if p.at(",") or p.tok.kind == "eof":
                    from ..quals import qual_vars

                    if all(v in qual_names for v in qual_vars(q)):
                        bound = q
            except ParseError:
                pass
            if bound is not None:
                entries.append(EnvEntry("qual", name, bound))
                qual_names.add(name)
            else:
                p.i = save
                entries.append(EnvEntry("type", name, p.stype()))
        if p.at(","):
            p.advance()
            continue
        p.done()
        return entries
