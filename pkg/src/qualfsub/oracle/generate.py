"""Seeded generators for qualifier formulas, environments and well-typed programs.

Terms are generated type-directed: pick a goal type, then build a term whose
type is a subtype of it.  A small ``noise`` rate deliberately breaks side
conditions so that a faulty checker lets ill-typed programs through, which the
soundness suite then catches at run time.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..capture import CaptureChecker, bind_term_var
from ..colours import ColourChecker
from ..errors import CheckError, GenerationExhausted
from ..kernel import EMPTY_ENV, Checker, TypeEnv
from ..lattice import TWO_POINT, FiniteLattice, catalog_by_name
from ..quals import (
    BOT, TOP, Join, Meet, QualEnv, QVar, Qual, atom_of,
)
from ..refs import RefChecker
from ..terms import (
    Abs, App, Arrow, Assert, Assign, Boxed, CAbs, CApp, DepArrow, Deref, ForallQ, ForallT, QAbs, QApp,
    QType, Ref, TAbs, TApp, TopType, TVar, UnitType, UnitVal, Upqual, Var, captured_term_vars,
    subst_type_quals,
)

CALCULI = ("fq", "fm", "fa", "fc")


@dataclass(frozen=True)
class GenConfig:
    formula_depth: int = 4
    term_depth: int = 4
    n_vars: int = 3
    seed: int = 0
    lattices: tuple[str, ...] = ("2-chain",)
    count: int = 200
    fuel: int = 500
    noise: float = 0.0
    attempts: int = 200

    def __post_init__(self):
        if self.formula_depth < 0 or self.term_depth < 1:
            raise ValueError("depths must be positive")
        if self.n_vars < 0 or self.count < 0 or self.fuel < 1:
            raise ValueError("sizes must be non-negative and fuel positive")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise is a probability")

    def lattice_objects(self) -> list[FiniteLattice]:
        known = catalog_by_name()
        return [known[n] for n in self.lattices]


def rng_for(cfg: GenConfig, index: int, salt: int = 0) -> random.Random:
    return random.Random((cfg.seed * 1_000_003 + index) * 7 + salt)


# --- formulas ----------------------------------------------------------------

QUAL_NAMES = "ABCXYZUVW"


def _leaves(env: QualEnv, L: FiniteLattice) -> list[Qual]:
    return [atom_of(L, e) for e in L.elements] + [QVar(n) for n in env.names()]


def gen_formula(cfg: GenConfig, env: QualEnv | None = None, rng: random.Random | None = None,
                depth: int | None = None, lattice: FiniteLattice = TWO_POINT) -> Qual:
    """A random formula over ``env``'s variables and the lattice's constants.

    Depth 0 gives a leaf; otherwise the depth is an upper bound.
    """
    env = env or QualEnv()
    rng = rng or random.Random(cfg.seed)
    depth = cfg.formula_depth if depth is None else depth
    leaves = _leaves(env, lattice)

    def go(d: int) -> Qual:
        if d == 0 or rng.random() < 0.3:
            return rng.choice(leaves)
        op = Join if rng.random() < 0.5 else Meet
        return op(go(d - 1), go(d - 1))

    return go(depth)


def gen_env(cfg: GenConfig, rng: random.Random | None = None, lattice: FiniteLattice = TWO_POINT) -> QualEnv:
    """``n_vars`` variables, each bounded by a shallow formula over earlier ones."""
    rng = rng or random.Random(cfg.seed)
    env = QualEnv()
    for name in QUAL_NAMES[: cfg.n_vars]:
        bound = TOP if rng.random() < 0.4 else gen_formula(cfg, env, rng, min(cfg.formula_depth, 1), lattice)
        env = env.extend(name, bound)
    return env


# --- terms -------------------------------------------------------------------

class _Fail(Exception):
    pass


def checker_for(calculus: str, lattice: FiniteLattice = TWO_POINT) -> Checker:
    return {"fq": Checker, "fm": RefChecker, "fa": ColourChecker, "fc": CaptureChecker}[calculus](lattice)


def initial_env(calculus: str) -> TypeEnv:
    return EMPTY_ENV.with_colour(TOP) if calculus == "fa" else EMPTY_ENV


class TermGen:
    def __init__(self, calculus: str, lattice: FiniteLattice, rng: random.Random, noise: float = 0.0):
        if calculus not in CALCULI:
            raise ValueError(f"unknown calculus {calculus}")
        self.calculus = calculus
        self.lattice = lattice
        self.rng = rng
        self.noise = noise
        self.ref = checker_for(calculus, lattice)
        self.counter = 0

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def noisy(self) -> bool:
        return self.noise > 0 and self.rng.random() < self.noise

    # qualifiers

    def atoms(self) -> list[Qual]:
        return [atom_of(self.lattice, e) for e in self.lattice.elements]

    def scope_quals(self, env: TypeEnv) -> list[Qual]:
        return self.atoms() + [QVar(n) for n in env.quals.names()]

    def leq(self, env, q, r) -> bool:
        return self.ref.subqual(env, q, r) is not None

    def below(self, env: TypeEnv, q: Qual) -> Qual:
        """Some qualifier provably below ``q``."""
        if self.noisy():
            return self.rng.choice(self.scope_quals(env))
        other = self.rng.choice(self.scope_quals(env))
        options = [BOT, q, q, other, Meet(q, other), Join(BOT, other)]
        picks = [c for c in options if self.leq(env, c, q)]
        return self.rng.choice(picks)

    def call_limit(self, env: TypeEnv) -> Qual:
        if self.calculus == "fa":
            return TOP if env.colour is None else env.colour
        return TOP

    def callee_qual(self, env: TypeEnv) -> Qual:
        if self.calculus == "fa" and self.noisy():
            return TOP
        return self.below(env, self.call_limit(env))

    # types

    def gen_shape(self, env: TypeEnv, depth: int):
        rng = self.rng
        opts = ["unit", "top"]
        if depth > 0:
            opts += ["dep", "dep"] if self.calculus == "fc" else ["arrow", "arrow"]
            opts.append("qall")
            if self.calculus == "fm":
                opts += ["box", "box"]
        if env.tvars:
            opts.append("tvar")
        kind = rng.choice(opts)
        if kind == "unit":
            return UnitType()
        if kind == "top":
            return TopType()
        if kind == "tvar":
            return TVar(rng.choice(env.tvars)[0])
        if kind == "arrow":
            return Arrow(self.gen_qtype(env, depth - 1), self.gen_qtype(env, depth - 1))
        if kind == "box":
            return Boxed(self.gen_qtype(env, depth - 1))
        if kind == "qall":
            Y = self.fresh("Y")
            B = rng.choice(self.scope_quals(env))
            inner = env.with_qual(Y, B)
            body = QType(rng.choice([QVar(Y), rng.choice(self.scope_quals(inner))]), self.gen_shape(inner, depth - 1))
            return ForallQ(Y, B, body)
        x = self.fresh("x")
        param = self.gen_qtype(env, depth - 1)
        inner = bind_term_var(env, x, param)
        result = QType(rng.choice([QVar(x), rng.choice(self.scope_quals(env))]), self.gen_shape(inner, depth - 1))
        return DepArrow(x, param, result)

    def gen_qtype(self, env: TypeEnv, depth: int) -> QType:
        return QType(self.rng.choice(self.scope_quals(env)), self.gen_shape(env, depth))

    # terms

    def bind(self, env: TypeEnv, x: str, T: QType) -> TypeEnv:
        return bind_term_var(env, x, T) if self.calculus == "fc" else env.with_term(x, T)

    def body_env(self, env: TypeEnv, tag: Qual) -> TypeEnv:
        return env.with_colour(tag) if self.calculus == "fa" else env

    def gen(self, env: TypeEnv, goal: QType, depth: int, elim_rate: float = 0.55):
        rng = self.rng
        fits = [n for n, T in env.terms if self.fits(env, Var(n), goal)]
        if fits and rng.random() < 0.35:
            return Var(rng.choice(fits))
        if depth > 0 and rng.random() < elim_rate:
            try:
                return self.elim(env, goal, depth)
            except _Fail:
                pass
        try:
            return self.intro(env, goal, depth)
        except _Fail:
            if fits:
                return Var(rng.choice(fits))
            raise

    def fits(self, env, t, goal) -> bool:
        try:
            return self.ref.subtype(env, self.ref.type_of(env, t), goal) is not None
        except CheckError:
            return False

    def intro(self, env: TypeEnv, goal: QType, depth: int):
        rng = self.rng
        q, S = goal.qual, goal.shape
        if isinstance(S, TVar):
            fits = [n for n, T in env.terms if self.fits(env, Var(n), goal)]
            if fits:
                return Var(rng.choice(fits))
            raise _Fail()
        if isinstance(S, TopType):
            shape = self.gen_shape(env, min(depth, 1))
            if isinstance(shape, (TopType, TVar)):
                shape = UnitType()
            return self.intro(env, QType(q, shape), depth)
        if isinstance(S, UnitType):
            tag = self.below(env, q)
            if self.calculus == "fc" and not self.noisy():
                if not all(self.leq(env, QVar(c), tag) for c in captured_term_vars(UnitVal(tag), env.term_names())):
                    tag = BOT
            return UnitVal(tag)
        d = max(depth - 1, 0)
        if isinstance(S, Arrow):
            if self.calculus == "fc":
                raise _Fail()
            tag = self.below(env, q)
            x = self.fresh("x")
            body = self.gen(self.bind(self.body_env(env, tag), x, S.param), S.result, d)
            return Abs(tag, x, S.param, body)
        if isinstance(S, ForallQ):
            tag = self.below(env, q)
            Y = self.fresh("Y")
            body_t = subst_type_quals(S.body, {S.var: QVar(Y)})
            return QAbs(tag, Y, S.bound, self.gen(self.body_env(env, tag).with_qual(Y, S.bound), body_t, d))
        if isinstance(S, ForallT):
            tag = self.below(env, q)
            return TAbs(tag, S.var, S.bound, self.gen(self.body_env(env, tag).with_tvar(S.var, S.bound), S.body, d))
        if isinstance(S, Boxed):
            return Ref(self.below(env, q), self.gen(env, S.inner, d), S.inner)
        if isinstance(S, DepArrow):
            x = self.fresh("x")
            result = subst_type_quals(S.result, {S.var: QVar(x)})
            body = self.gen(bind_term_var(env, x, S.param), result, d)
            probe = CAbs(BOT, x, S.param.qual, S.param.shape, body)
            captured = captured_term_vars(probe, env.term_names())
            if self.noisy():
                tag = BOT
            else:
                tags = [t for t in (self.below(env, q), q) if all(self.leq(env, QVar(c), t) for c in captured)]
                if not tags:
                    raise _Fail()
                tag = tags[0]
            return CAbs(tag, x, S.param.qual, S.param.shape, body)
        raise _Fail()

    def elim(self, env: TypeEnv, goal: QType, depth: int):
        rng = self.rng
        q, S = goal.qual, goal.shape
        d = depth - 1
        forms = ["upqual", "assert", "qapp"]
        if self.calculus == "fc":
            forms += ["capp", "capp", "capp-const"]
        else:
            forms += ["app", "app", "tapp"]
        if self.calculus == "fm":
            forms += ["deref", "deref"]
            if isinstance(S, (UnitType, TopType)):
                forms += ["assign", "assign"]
        form = rng.choice(forms)

        if form == "upqual":
            if self.noisy():
                body = self.gen(env, QType(rng.choice(self.scope_quals(env)), S), d)
            else:
                body = self.gen(env, QType(self.below(env, q), S), d)
            return Upqual(q, body)
        if form == "assert":
            q2 = self.below(env, q)
            checked = BOT if self.noisy() else rng.choice([q2, q, TOP])
            return Assert(checked, self.gen(env, QType(q2, S), d))
        if form == "qapp":
            Y = self.fresh("Y")
            B = rng.choice([TOP, q])
            arg = self.below(env, q)
            tag = self.callee_qual(env)
            body = self.gen(self.body_env(env, tag).with_qual(Y, B), QType(QVar(Y), S), d)
            return QApp(QAbs(tag, Y, B, body), arg)
        if form == "app":
            A = self.gen_qtype(env, 1)
            if self.calculus == "fm" and rng.random() < 0.5:
                A = QType(rng.choice([BOT, TOP]), Boxed(QType(BOT, rng.choice([UnitType(), TopType()]))))
            fn = self.gen(env, QType(self.callee_qual(env), Arrow(A, goal)), d)
            return App(fn, self.gen(env, A, d))
        if form == "tapp":
            X, x = self.fresh("X"), self.fresh("x")
            q2 = self.below(env, q)
            t1, t2 = self.callee_qual(env), self.callee_qual(env)
            poly = TAbs(t1, X, TopType(), Abs(t2, x, QType(q2, TVar(X)), Var(x)))
            return App(TApp(poly, S), self.gen(env, QType(q2, S), d))
        if form == "deref":
            r, q2 = self.below(env, q), self.below(env, q)
            return Deref(self.gen(env, QType(r, Boxed(QType(q2, S))), d))
        if form == "assign":
            inner = QType(BOT, rng.choice([UnitType(), TopType()]))
            r = TOP if self.noisy() else BOT
            return Assign(self.gen(env, QType(r, Boxed(inner)), d), self.gen(env, inner, d))
        if form == "capp":
            x = self.fresh("x")
            B = rng.choice([TOP, q])
            vars_ = [QVar(n) for n, _ in env.terms if self.leq(env, QVar(n), q) and self.leq(env, QVar(n), B)]
            qa = rng.choice(vars_) if vars_ and rng.random() < 0.6 else self.below(env, Meet(q, B))
            fn_t = QType(self.callee_qual(env), DepArrow(x, QType(B, S), QType(QVar(x), S)))
            return CApp(self.gen(env, fn_t, d), qa, self.gen(env, QType(qa, S), d))
        if form == "capp-const":
            x = self.fresh("x")
            A = self.gen_qtype(env, 1)
            qa = self.below(env, A.qual)
            fn_t = QType(self.callee_qual(env), DepArrow(x, A, goal))
            return CApp(self.gen(env, fn_t, d), qa, self.gen(env, QType(qa, A.shape), d))
        raise _Fail()


@dataclass
class Generated:
    term: object
    type: QType
    index: int
    attempts: int
    rejected: list = field(default_factory=list)


def gen_well_typed_term(cfg: GenConfig, calculus: str, index: int = 0, checker: Checker | None = None,
                        lattice: FiniteLattice | None = None) -> Generated:
    """The ``index``-th program of the seeded stream, accepted by ``checker``.

    Candidates the checker rejects are skipped; with ``noise`` zero they are
    rare and come only from unsatisfiable goals.
    """
    lattice = lattice or (cfg.lattice_objects()[0] if calculus == "fq" else TWO_POINT)
    checker = checker or checker_for(calculus, lattice)
    rng = rng_for(cfg, index, CALCULI.index(calculus))
    env = initial_env(calculus)
    gen = TermGen(calculus, lattice, rng, cfg.noise)
    rejected = []
    for attempt in range(1, cfg.attempts + 1):
        goal = gen.gen_qtype(env, 2)
        try:
            # closed programs should mostly do some work before they are values
            t = gen.gen(env, goal, cfg.term_depth, elim_rate=0.9)
        except _Fail:
            continue
        try:
            T = checker.type_of(env, t)
        except CheckError as exc:
            rejected.append(exc.code)
            continue
        return Generated(t, T, index, attempt, rejected)
    raise GenerationExhausted(f"no well-typed {calculus} program after {cfg.attempts} attempts (index {index})")



# --- untyped syntax trees ------------------------------------------------------

_TERM_NAMES = ("x", "y", "f", "g")
_TYPE_NAMES = ("S", "T")


class AstGen:
    """Arbitrary (not necessarily well-typed) trees of one calculus, for the printer."""

    def __init__(self, calculus: str, rng: random.Random, lattice: FiniteLattice = TWO_POINT):
        self.calculus = calculus
        self.rng = rng
        self.lattice = lattice

    def qual(self, d: int = 2) -> Qual:
        rng = self.rng
        if d == 0 or rng.random() < 0.4:
            pick = rng.random()
            if pick < 0.4:
                return atom_of(self.lattice, rng.choice(self.lattice.elements))
            return QVar(rng.choice(QUAL_NAMES[:4] + "".join(_TERM_NAMES[:2])))
        op = Join if rng.random() < 0.5 else Meet
        return op(self.qual(d - 1), self.qual(d - 1))

    def qtype(self, d: int) -> QType:
        return QType(self.qual(), self.stype(d))

    def stype(self, d: int):
        rng = self.rng
        leaves = [TopType(), UnitType(), TVar(rng.choice(_TYPE_NAMES))]
        if d <= 0 or rng.random() < 0.3:
            return rng.choice(leaves)
        kinds = ["arrow", "all", "qall"]
        if self.calculus == "fm":
            kinds.append("box")
        if self.calculus == "fc":
            kinds[0] = "dep"
        k = rng.choice(kinds)
        if k == "arrow":
            return Arrow(self.qtype(d - 1), self.qtype(d - 1))
        if k == "dep":
            return DepArrow(rng.choice(_TERM_NAMES), self.qtype(d - 1), self.qtype(d - 1))
        if k == "all":
            return ForallT(rng.choice(_TYPE_NAMES), self.stype(d - 1), self.qtype(d - 1))
        if k == "qall":
            return ForallQ(rng.choice(QUAL_NAMES[:3]), self.qual(), self.qtype(d - 1))
        return Boxed(self.qtype(d - 1))

    def term(self, d: int):
        rng = self.rng
        if d <= 0 or rng.random() < 0.2:
            return Var(rng.choice(_TERM_NAMES)) if rng.random() < 0.6 else UnitVal(self.qual(1))
        kinds = ["abs", "app", "tabs", "tapp", "qabs", "qapp", "upqual", "assert"]
        if self.calculus == "fm":
            kinds += ["ref", "deref", "assign"]
        if self.calculus == "fc":
            kinds += ["capp"]
        k = rng.choice(kinds)
        sub = lambda: self.term(d - 1)  # noqa: E731
        x = rng.choice(_TERM_NAMES)
        if k == "abs":
            if self.calculus == "fc":
                return CAbs(self.qual(), x, self.qual(), self.stype(d - 1), sub())
            return Abs(self.qual(), x, self.qtype(d - 1), sub())
        if k == "app":
            return App(sub(), sub())
        if k == "capp":
            return CApp(sub(), self.qual(), sub())
        if k == "tabs":
            return TAbs(self.qual(), rng.choice(_TYPE_NAMES), self.stype(d - 1), sub())
        if k == "tapp":
            return TApp(sub(), self.stype(d - 1))
        if k == "qabs":
            return QAbs(self.qual(), rng.choice(QUAL_NAMES[:3]), self.qual(), sub())
        if k == "qapp":
            return QApp(sub(), self.qual())
        if k == "upqual":
            return Upqual(self.qual(), sub())
        if k == "assert":
            return Assert(self.qual(), sub())
        if k == "ref":
            content = self.qtype(d - 1) if rng.random() < 0.5 else None
            return Ref(self.qual(), sub(), content)
        if k == "deref":
            return Deref(sub())
        return Assign(sub(), sub())


def gen_ast(cfg: GenConfig, calculus: str, index: int = 0):
    """The ``index``-th raw tree of the seeded stream."""
    rng = rng_for(cfg, index, len(CALCULI) + CALCULI.index(calculus))
    return AstGen(calculus, rng).term(cfg.term_depth)
