"""Qualifier formulas and the subqualification judgment.

Formulas are terms of the free bounded lattice generated by qualifier
variables and the elements of a finite base lattice.  ``Subqual`` decides
``env |- Q <: R`` by backtracking proof search and returns a derivation tree
whose nodes are named after the subqualification rules.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from .errors import IllFormed
from .lattice import TWO_POINT, FiniteLattice


# --- formulas --------------------------------------------------------------

@dataclass(frozen=True)
class Top:
    def __str__(self):
        return show_qual(self)


@dataclass(frozen=True)
class Bot:
    def __str__(self):
        return show_qual(self)


@dataclass(frozen=True)
class Const:
    label: str

    def __str__(self):
        return show_qual(self)


@dataclass(frozen=True)
class QVar:
    name: str

    def __str__(self):
        return show_qual(self)


@dataclass(frozen=True)
class Join:
    left: "Qual"
    right: "Qual"

    def __str__(self):
        return show_qual(self)


@dataclass(frozen=True)
class Meet:
    left: "Qual"
    right: "Qual"

    def __str__(self):
        return show_qual(self)


Qual = Union[Top, Bot, Const, QVar, Join, Meet]
TOP = Top()
BOT = Bot()


class HasVariables(ValueError):
    pass


def join_all(quals: Iterable[Qual]) -> Qual:
    """Left-nested join of ``quals``; ``BOT`` when empty."""
    acc = None
    for q in quals:
        acc = q if acc is None else Join(acc, q)
    return BOT if acc is None else acc


def meet_all(quals: Iterable[Qual]) -> Qual:
    acc = None
    for q in quals:
        acc = q if acc is None else Meet(acc, q)
    return TOP if acc is None else acc


def is_atom(q: Qual) -> bool:
    return isinstance(q, (Top, Bot, Const))


def is_ground(q: Qual) -> bool:
    if isinstance(q, QVar):
        return False
    if isinstance(q, (Join, Meet)):
        return is_ground(q.left) and is_ground(q.right)
    return True


def qual_vars(q: Qual) -> list[str]:
    """Variables of ``q`` in first-occurrence order."""
    out: list[str] = []

    def walk(f):
        if isinstance(f, QVar):
            if f.name not in out:
                out.append(f.name)
        elif isinstance(f, (Join, Meet)):
            walk(f.left)
            walk(f.right)

    walk(q)
    return out


def qual_consts(q: Qual) -> list[str]:
    out: list[str] = []

    def walk(f):
        if isinstance(f, Const):
            if f.label not in out:
                out.append(f.label)
        elif isinstance(f, (Join, Meet)):
            walk(f.left)
            walk(f.right)

    walk(q)
    return out


def qual_size(q: Qual) -> int:
    if isinstance(q, (Join, Meet)):
        return 1 + qual_size(q.left) + qual_size(q.right)
    return 1


def subst_qual(q: Qual, name: str, replacement: Qual) -> Qual:
    return subst_quals(q, {name: replacement})


def subst_quals(q: Qual, mapping: Mapping[str, Qual]) -> Qual:
    if not mapping:
        return q
    if isinstance(q, QVar):
        return mapping.get(q.name, q)
    if isinstance(q, Join):
        return Join(subst_quals(q.left, mapping), subst_quals(q.right, mapping))
    if isinstance(q, Meet):
        return Meet(subst_quals(q.left, mapping), subst_quals(q.right, mapping))
    return q


# --- printing --------------------------------------------------------------

def show_qual(q: Qual) -> str:
    return _show(q, 0)


def _show(q: Qual, prec: int) -> str:
    # prec: 0 = join context, 1 = meet context, 2 = atom context
    if isinstance(q, Top):
        return "top"
    if isinstance(q, Bot):
        return "bot"
    if isinstance(q, Const):
        return f"`{q.label}"
    if isinstance(q, QVar):
        return q.name
    if isinstance(q, Join):
        text = f"{_show(q.left, 0)} \\/ {_show(q.right, 1)}"
        return f"({text})" if prec > 0 else text
    if isinstance(q, Meet):
        text = f"{_show(q.left, 1)} /\\ {_show(q.right, 2)}"
        return f"({text})" if prec > 1 else text
    raise TypeError(f"not a qualifier: {q!r}")


# --- evaluation in a lattice ----------------------------------------------

def atom_of(L: FiniteLattice, label: str) -> Qual:
    """The canonical ground formula for a lattice element."""
    if label == L.top:
        return TOP
    if label == L.bottom:
        return BOT
    return Const(label)


def atom_value(L: FiniteLattice, q: Qual) -> str:
    if isinstance(q, Top):
        return L.top
    if isinstance(q, Bot):
        return L.bottom
    if isinstance(q, Const):
        if q.label not in L:
            from .errors import UnknownElement
            raise UnknownElement(q.label, L.name)
        return q.label
    raise TypeError(f"not an atom: {q!r}")


def eval_ground(L: FiniteLattice, q: Qual) -> str:
    """Interpret a variable-free formula in ``L``."""
    if isinstance(q, QVar):
        raise HasVariables(q.name)
    if isinstance(q, Join):
        return L.join(eval_ground(L, q.left), eval_ground(L, q.right))
    if isinstance(q, Meet):
        return L.meet(eval_ground(L, q.left), eval_ground(L, q.right))
    return atom_value(L, q)


def eval_under(
    L: FiniteLattice,
    q: Qual,
    assignment: Mapping[str, str],
    embed: Mapping[str, str] | None = None,
) -> str:
    """Interpret ``q`` with variables assigned and base constants mapped by ``embed``."""
    if isinstance(q, QVar):
        try:
            return assignment[q.name]
        except KeyError:
            raise HasVariables(q.name) from None
    if isinstance(q, Join):
        return L.join(eval_under(L, q.left, assignment, embed), eval_under(L, q.right, assignment, embed))
    if isinstance(q, Meet):
        return L.meet(eval_under(L, q.left, assignment, embed), eval_under(L, q.right, assignment, embed))
    if isinstance(q, Top):
        return L.top
    if isinstance(q, Bot):
        return L.bottom
    if embed is not None:
        return embed[q.label]
    return atom_value(L, q)


def normalize(L: FiniteLattice, q: Qual) -> Qual:
    """Collapse every maximal variable-free subterm to its value."""
    if is_ground(q):
        return atom_of(L, eval_ground(L, q))
    if isinstance(q, Join):
        return Join(normalize(L, q.left), normalize(L, q.right))
    if isinstance(q, Meet):
        return Meet(normalize(L, q.left), normalize(L, q.right))
    return q


# --- environments ----------------------------------------------------------

@dataclass(frozen=True)
class QualBinding:
    name: str
    bound: Qual
    # bound introduced by a term binder (capture tracking)
    term: bool = False


@dataclass(frozen=True)
class QualEnv:
    """Ordered qualifier-variable bindings; each bound mentions only earlier names."""

    entries: tuple[QualBinding, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        index = {}
        for i, b in enumerate(self.entries):
            if b.name in index:
                raise IllFormed(f"qualifier variable {b.name} bound twice")
            for v in qual_vars(b.bound):
                if v not in index:
                    raise IllFormed(f"bound of {b.name} mentions {v}, which is not bound before it")
            index[b.name] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, *pairs) -> "QualEnv":
        """``QualEnv.of(("X", TOP), ("Y", QVar("X")))``"""
        entries = []
        for p in pairs:
            entries.append(p if isinstance(p, QualBinding) else QualBinding(p[0], p[1]))
        return cls(tuple(entries))

    def __contains__(self, name) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[QualBinding]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def binding(self, name: str) -> QualBinding:
        return self.entries[self._index[name]]

    def bound(self, name: str) -> Qual:
        return self.binding(name).bound

    def names(self) -> list[str]:
        return [b.name for b in self.entries]

    def extend(self, name: str, bound: Qual, term: bool = False) -> "QualEnv":
        return QualEnv(self.entries + (QualBinding(name, bound, term),))

    def __str__(self):
        return ", ".join(f"{b.name} <: {show_qual(b.bound)}" for b in self.entries)


EMPTY_QUAL_ENV = QualEnv()


def well_formed_qual(env: QualEnv, q: Qual, L: FiniteLattice | None = TWO_POINT) -> bool:
    for v in qual_vars(q):
        if v not in env:
            return False
    if L is not None:
        for c in qual_consts(q):
            if c not in L:
                return False
    return True


# --- derivations -----------------------------------------------------------

SUBQUAL_RULES = (
    "sq-top", "sq-bot", "sq-refl-var", "sq-var", "sq-refl-tvar", "sq-tvar",
    "sq-join-intro-1", "sq-join-intro-2", "sq-join-elim",
    "sq-meet-intro", "sq-meet-elim-1", "sq-meet-elim-2",
    "sq-lift", "sq-eval-elim", "sq-eval-intro",
)


@dataclass(frozen=True)
class Derivation:
    """One rule application concluding ``left <: right``.

    For the evaluation rules ``witness`` is the ground formula passed through
    and ``value`` its lattice value.
    """

    rule: str
    left: object
    right: object
    premises: tuple["Derivation", ...] = ()
    witness: object = None
    value: str | None = None
    note: str = ""

    def rules(self) -> list[str]:
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return out

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def render(self, show=None, indent: str = "  ") -> str:
        show = show or _default_show
        lines: list[str] = []

        def walk(d: Derivation, depth: int):
            extra = ""
            if d.witness is not None:
                extra = f"  (eval {show(d.witness)} = {d.value})"
            elif d.note:
                extra = f"  ({d.note})"
            lines.append(f"{indent * depth}{show(d.left)} <: {show(d.right)}  [{d.rule}]{extra}")
            for p in d.premises:
                walk(p, depth + 1)

        walk(self, 0)
        return "\n".join(lines)


def _default_show(x) -> str:
    try:
        return show_qual(x)
    except TypeError:
        return str(x)


# --- proof search ----------------------------------------------------------

class Subqual:
    """Decides ``env |- Q <: R`` over a base lattice.

    Rule order: sq-top, sq-bot, reflexivity, sq-lift, the invertible rules
    (sq-join-elim, sq-meet-intro), sq-join-intro-1/2, sq-meet-elim-1/2, sq-var,
    then a cut through base-lattice constants expressed with the evaluation
    rules.  Every rule except sq-var shrinks a side; sq-var replaces a variable
    by a bound over strictly earlier variables, so the search terminates and
    needs no cycle check.
    """

    def __init__(self, env: QualEnv, lattice: FiniteLattice = TWO_POINT):
        self.env = env
        self.L = lattice
        self._memo: dict[tuple, Derivation | None] = {}
        self._upper: dict[Qual, str] = {}
        self._lower: dict[Qual, str] = {}
        for b in env:
            self._check_wf(b.bound, f"bound of {b.name}")

    def _check_wf(self, q: Qual, what: str = "qualifier"):
        for v in qual_vars(q):
            if v not in self.env:
                raise IllFormed(f"{what} mentions unbound qualifier variable {v}")
        for c in qual_consts(q):
            if c not in self.L:
                raise IllFormed(f"{what} mentions {c!r}, which is not an element of {self.L.name}")

    def derive(self, q: Qual, r: Qual) -> Derivation | None:
        self._check_wf(q)
        self._check_wf(r)
        return self._prove(q, r)

    def holds(self, q: Qual, r: Qual) -> bool:
        return self.derive(q, r) is not None

    # constant bounds: the least base element above q and the greatest below r
    def upper(self, q: Qual) -> str:
        hit = self._upper.get(q)
        if hit is not None:
            return hit
        L = self.L
        if isinstance(q, QVar):
            v = self.upper(self.env.bound(q.name))
        elif isinstance(q, Join):
            v = L.join(self.upper(q.left), self.upper(q.right))
        elif isinstance(q, Meet):
            v = L.meet(self.upper(q.left), self.upper(q.right))
        else:
            v = atom_value(L, q)
        self._upper[q] = v
        return v

    def lower(self, r: Qual) -> str:
        hit = self._lower.get(r)
        if hit is not None:
            return hit
        L = self.L
        if isinstance(r, QVar):
            v = L.bottom
        elif isinstance(r, Join):
            v = L.join(self.lower(r.left), self.lower(r.right))
        elif isinstance(r, Meet):
            v = L.meet(self.lower(r.left), self.lower(r.right))
        else:
            v = atom_value(L, r)
        self._lower[r] = v
        return v

    def _var_rules(self, name: str) -> tuple[str, str]:
        if self.env.binding(name).term:
            return "sq-refl-tvar", "sq-tvar"
        return "sq-refl-var", "sq-var"

    def _prove(self, q: Qual, r: Qual) -> Derivation | None:
        key = (q, r)
        if key in self._memo:
            return self._memo[key]
        d = self._search(q, r)
        self._memo[key] = d
        return d

    def _search(self, q: Qual, r: Qual) -> Derivation | None:
        if isinstance(r, Top):
            return Derivation("sq-top", q, r)
        if isinstance(q, Bot):
            return Derivation("sq-bot", q, r)
        if isinstance(q, QVar) and isinstance(r, QVar) and q.name == r.name:
            return Derivation(self._var_rules(q.name)[0], q, r)
        if is_atom(q) and is_atom(r):
            if self.L.leq(atom_value(self.L, q), atom_value(self.L, r)):
                return Derivation("sq-lift", q, r)
            return None

        if isinstance(q, Join):
            d1 = self._prove(q.left, r)
            if d1 is None:
                return None
            d2 = self._prove(q.right, r)
            if d2 is None:
                return None
            return Derivation("sq-join-elim", q, r, (d1, d2))
        if isinstance(r, Meet):
            d1 = self._prove(q, r.left)
            if d1 is None:
                return None
            d2 = self._prove(q, r.right)
            if d2 is None:
                return None
            return Derivation("sq-meet-intro", q, r, (d1, d2))

        if isinstance(r, Join):
            d = self._prove(q, r.left)
            if d is not None:
                return Derivation("sq-join-intro-1", q, r, (d,))
            d = self._prove(q, r.right)
            if d is not None:
                return Derivation("sq-join-intro-2", q, r, (d,))
        if isinstance(q, Meet):
            d = self._prove(q.left, r)
            if d is not None:
                return Derivation("sq-meet-elim-1", q, r, (d,))
            d = self._prove(q.right, r)
            if d is not None:
                return Derivation("sq-meet-elim-2", q, r, (d,))
        if isinstance(q, QVar):
            d = self._prove(self.env.bound(q.name), r)
            if d is not None:
                return Derivation(self._var_rules(q.name)[1], q, r, (d,))

        u, lo = self.upper(q), self.lower(r)
        if self.L.leq(u, lo):
            return self._cut(q, r, u, lo)
        return None

    # Derivations for the constant cut are built directly from the rules.

    def _atom_leq(self, a: Qual, b: Qual) -> Derivation:
        if isinstance(b, Top):
            return Derivation("sq-top", a, b)
        if isinstance(a, Bot):
            return Derivation("sq-bot", a, b)
        return Derivation("sq-lift", a, b)

    def _hat(self, q: Qual) -> Qual:
        """``q`` with every variable replaced by its constant upper bound."""
        if isinstance(q, QVar):
            return atom_of(self.L, self.upper(q))
        if isinstance(q, Join):
            return Join(self._hat(q.left), self._hat(q.right))
        if isinstance(q, Meet):
            return Meet(self._hat(q.left), self._hat(q.right))
        return q

    def _check(self, r: Qual) -> Qual:
        """``r`` with every variable replaced by bottom."""
        if isinstance(r, QVar):
            return BOT
        if isinstance(r, Join):
            return Join(self._check(r.left), self._check(r.right))
        if isinstance(r, Meet):
            return Meet(self._check(r.left), self._check(r.right))
        return r

    def _mono_up(self, q: Qual) -> Derivation:
        """Derivation of ``q <: hat(q)``."""
        if is_atom(q):
            return self._atom_leq(q, q)
        if isinstance(q, QVar):
            bound = self.env.bound(q.name)
            return Derivation(self._var_rules(q.name)[1], q, self._hat(q), (self._up_to_const(bound),))
        hq = self._hat(q)
        if isinstance(q, Join):
            return Derivation("sq-join-elim", q, hq, (
                Derivation("sq-join-intro-1", q.left, hq, (self._mono_up(q.left),)),
                Derivation("sq-join-intro-2", q.right, hq, (self._mono_up(q.right),)),
            ))
        return Derivation("sq-meet-intro", q, hq, (
            Derivation("sq-meet-elim-1", q, hq.left, (self._mono_up(q.left),)),
            Derivation("sq-meet-elim-2", q, hq.right, (self._mono_up(q.right),)),
        ))

    def _mono_down(self, r: Qual) -> Derivation:
        """Derivation of ``check(r) <: r``."""
        if is_atom(r):
            return self._atom_leq(r, r)
        if isinstance(r, QVar):
            return Derivation("sq-bot", BOT, r)
        cr = self._check(r)
        if isinstance(r, Join):
            return Derivation("sq-join-elim", cr, r, (
                Derivation("sq-join-intro-1", cr.left, r, (self._mono_down(r.left),)),
                Derivation("sq-join-intro-2", cr.right, r, (self._mono_down(r.right),)),
            ))
        return Derivation("sq-meet-intro", cr, r, (
            Derivation("sq-meet-elim-1", cr, r.left, (self._mono_down(r.left),)),
            Derivation("sq-meet-elim-2", cr, r.right, (self._mono_down(r.right),)),
        ))

    def _up_to_const(self, q: Qual) -> Derivation:
        """Derivation of ``q <: atom(upper(q))``."""
        u = atom_of(self.L, self.upper(q))
        if is_atom(q):
            return self._atom_leq(q, u)
        if isinstance(q, QVar):
            return self._mono_up(q)
        hq = self._hat(q)
        return Derivation(
            "sq-eval-elim", q, u, (self._mono_up(q), self._atom_leq(u, u)), witness=hq, value=self.upper(q)
        )

    def _cut(self, q: Qual, r: Qual, u: str, lo: str) -> Derivation:
        au, alo = atom_of(self.L, u), atom_of(self.L, lo)
        if is_atom(r):
            right = self._atom_leq(au, r)
        elif isinstance(r, QVar):
            right = Derivation("sq-bot", au, r)
        else:
            right = Derivation(
                "sq-eval-intro", au, r, (self._atom_leq(au, alo), self._mono_down(r)),
                witness=self._check(r), value=lo,
            )
        if q == au:
            return right
        if is_atom(q):
            left, w = self._atom_leq(q, q), q
        else:
            left, w = self._mono_up(q), self._hat(q)
        return Derivation("sq-eval-elim", q, r, (left, right), witness=w, value=u)


def subqual(env: QualEnv, q: Qual, r: Qual, lattice: FiniteLattice = TWO_POINT) -> Derivation | None:
    """A derivation of ``env |- q <: r``, or None when none exists."""
    return Subqual(env, lattice).derive(q, r)


def is_subqual(env: QualEnv, q: Qual, r: Qual, lattice: FiniteLattice = TWO_POINT) -> bool:
    return subqual(env, q, r, lattice) is not None


def qual_equiv(env: QualEnv, q: Qual, r: Qual, lattice: FiniteLattice = TWO_POINT) -> bool:
    engine = Subqual(env, lattice)
    return engine.holds(q, r) and engine.holds(r, q)


# --- replay ----------------------------------------------------------------

def check_derivation(env: QualEnv, d: Derivation, lattice: FiniteLattice = TWO_POINT) -> bool:
    """Re-check every node of ``d`` against its rule schema."""
    L = lattice
    q, r, ps = d.left, d.right, d.premises

    def prem(i, left, right) -> bool:
        return ps[i].left == left and ps[i].right == right

    rule = d.rule
    if rule == "sq-top":
        ok = isinstance(r, Top) and not ps
    elif rule == "sq-bot":
        ok = isinstance(q, Bot) and not ps
    elif rule in ("sq-refl-var", "sq-refl-tvar"):
        ok = (
            isinstance(q, QVar) and q == r and q.name in env and not ps
            and env.binding(q.name).term == (rule == "sq-refl-tvar")
        )
    elif rule in ("sq-var", "sq-tvar"):
        ok = (
            isinstance(q, QVar) and q.name in env and len(ps) == 1
            and env.binding(q.name).term == (rule == "sq-tvar")
            and prem(0, env.bound(q.name), r)
        )
    elif rule == "sq-join-elim":
        ok = isinstance(q, Join) and len(ps) == 2 and prem(0, q.left, r) and prem(1, q.right, r)
    elif rule == "sq-meet-intro":
        ok = isinstance(r, Meet) and len(ps) == 2 and prem(0, q, r.left) and prem(1, q, r.right)
    elif rule in ("sq-join-intro-1", "sq-join-intro-2"):
        side = "left" if rule.endswith("1") else "right"
        ok = isinstance(r, Join) and len(ps) == 1 and prem(0, q, getattr(r, side))
    elif rule in ("sq-meet-elim-1", "sq-meet-elim-2"):
        side = "left" if rule.endswith("1") else "right"
        ok = isinstance(q, Meet) and len(ps) == 1 and prem(0, getattr(q, side), r)
    elif rule == "sq-lift":
        ok = is_atom(q) and is_atom(r) and not ps and L.leq(atom_value(L, q), atom_value(L, r))
    elif rule in ("sq-eval-elim", "sq-eval-intro"):
        w, l = d.witness, d.value
        ok = (
            w is not None and l is not None and is_ground(w) and len(ps) == 2
            and l in L and eval_ground(L, w) == l
        )
        if ok and rule == "sq-eval-elim":
            ok = prem(0, q, w) and prem(1, atom_of(L, l), r)
        elif ok:
            ok = prem(0, q, atom_of(L, l)) and prem(1, w, r)
    else:
        ok = False
    return ok and all(check_derivation(env, p, L) for p in ps)
