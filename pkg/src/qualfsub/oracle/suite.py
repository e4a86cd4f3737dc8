"""Property suites: lattice laws, oracle agreement, and progress/preservation runs."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from ..capture import capture_prediction_check
from ..colours import ColourChecker, Final, Machine, initial_config
from ..errors import BarrierViolation, CheckError, SealedWrite, Stuck
from ..kernel import Checker, Reducer
from ..lattice import TWO_POINT, FiniteLattice, catalog_small_lattices
from ..quals import (
    Join, Meet, QualEnv, atom_of, check_derivation, qual_equiv, show_qual, subqual,
)
from ..refs import RefReducer, extend_store_typing, store_well_typed
from ..terms import is_value
from .generate import CALCULI, GenConfig, checker_for, gen_env, gen_formula, gen_well_typed_term, initial_env, rng_for
from .instances import extensions_of, oracle_leq


@dataclass
class Failure:
    kind: str
    index: int
    seed: int
    message: str
    subject: str = ""


@dataclass
class SuiteReport:
    suite: str
    seed: int
    counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def bump(self, key: str, n: int = 1):
        self.counts[key] = self.counts.get(key, 0) + n

    def fail(self, kind: str, index: int, message: str, subject=""):
        self.failures.append(Failure(kind, index, self.seed, message, str(subject)))

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "ok": self.ok,
            "counts": dict(sorted(self.counts.items())),
            "failures": [asdict(f) for f in self.failures],
            "warnings": list(self.warnings),
        }
        if timing:
            out["seconds"] = round(self.seconds, 3)
        return out

    def to_text(self) -> str:
        head = f"{self.suite}: {'ok' if self.ok else 'FAILED'} (seed {self.seed})"
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.counts.items()))
        lines = [head, f"  {counts}"]
        for f in self.failures[:20]:
            lines.append(f"  failure [{f.kind}] #{f.index}: {f.message}")
            if f.subject:
                lines.append(f"    {f.subject}")
        if len(self.failures) > 20:
            lines.append(f"  ... {len(self.failures) - 20} more failures")
        for w in self.warnings[:5]:
            lines.append(f"  warning: {w}")
        if len(self.warnings) > 5:
            lines.append(f"  ... {len(self.warnings) - 5} more warnings")
        return "\n".join(lines)


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        report = fn(*args, **kwargs)
        report.seconds = time.perf_counter() - start
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- qualifier suites --------------------------------------------------------

@_timed
def run_laws_suite(cfg: GenConfig, samples: int = 1000, lattice: FiniteLattice = TWO_POINT) -> SuiteReport:
    """Reflexivity, transitivity and the universal properties of join and meet."""
    rep = SuiteReport("laws", cfg.seed)
    for i in range(samples):
        rng = rng_for(cfg, i, salt=11)
        env = gen_env(cfg, rng, lattice)
        Q, R, U = (gen_formula(cfg, env, rng, lattice=lattice) for _ in range(3))
        if rng.random() < 0.5:
            U = Join(R, U)

        def holds(a, b, law):
            d = subqual(env, a, b, lattice)
            if d is not None and not check_derivation(env, d, lattice):
                rep.fail("bad-derivation", i, f"{law}: derivation of {show_qual(a)} <: {show_qual(b)} does not replay")
            return d is not None

        def expect(a, b, law):
            rep.bump("checks")
            if not holds(a, b, law):
                rep.fail(law, i, f"{show_qual(a)} <: {show_qual(b)} not derivable", env)

        expect(Q, Q, "reflexivity")
        expect(Q, Join(Q, R), "join-upper")
        expect(R, Join(Q, R), "join-upper")
        expect(Meet(Q, R), Q, "meet-lower")
        expect(Meet(Q, R), R, "meet-lower")
        qu, ru = holds(Q, U, "premise"), holds(R, U, "premise")
        if qu and ru:
            rep.bump("join-least")
            expect(Join(Q, R), U, "join-least")
        uq, ur = holds(U, Q, "premise"), holds(U, R, "premise")
        if uq and ur:
            rep.bump("meet-greatest")
            expect(U, Meet(Q, R), "meet-greatest")
        if holds(Q, R, "premise") and ru:
            rep.bump("transitivity")
            expect(Q, U, "transitivity")
        rep.bump("samples")
    return rep


@_timed
def run_subqual_soundness(cfg: GenConfig, samples: int = 1000, bases: list[FiniteLattice] | None = None,
                          corpus: str | Path | None = None) -> SuiteReport:
    """Derivable answers must hold in every extension; unprovable ones should have a counterexample.

    Answers the search cannot prove but the oracle cannot refute are logged as
    completeness misses (warnings) and optionally written to ``corpus``.
    """
    rep = SuiteReport("subqual-oracle", cfg.seed)
    misses = []
    for b, base in enumerate(bases or catalog_small_lattices()):
        exts = extensions_of(base)
        for i in range(samples):
            rng = rng_for(cfg, i, salt=1000 + b)
            env = gen_env(cfg, rng, base)
            Q = gen_formula(cfg, env, rng, lattice=base)
            R = gen_formula(cfg, env, rng, lattice=base)
            if rng.random() < 0.3:
                R = Join(R, Q)
            d = subqual(env, Q, R, base)
            verdict = oracle_leq(env, Q, R, exts)
            key = f"{base.name}/{i}"
            if d is not None:
                rep.bump("derivable")
                if not check_derivation(env, d, base):
                    rep.fail("bad-derivation", i, f"{key}: derivation does not replay", f"{env} |- {Q} <: {R}")
                if not verdict:
                    rep.fail("unsound", i, f"{key}: derivable but {verdict.describe()}", f"{env} |- {Q} <: {R}")
            else:
                rep.bump("not-derivable")
                if verdict:
                    rep.bump("completeness-miss")
                    misses.append({"base": base.name, "index": i, "seed": cfg.seed, "env": str(env),
                                   "lhs": show_qual(Q), "rhs": show_qual(R)})
                    rep.warnings.append(f"{key}: no counterexample found for {show_qual(Q)} <: {show_qual(R)}")
                else:
                    rep.bump("refuted")
    if corpus is not None:
        Path(corpus).write_text(json.dumps(misses, indent=2) + "\n")
    return rep


@_timed
def run_join_meet_suite(lattices: list[FiniteLattice] | None = None) -> SuiteReport:
    """Textual joins and meets of constants agree with the lattice operations."""
    rep = SuiteReport("join-meet", 0)
    env = QualEnv()
    for L in lattices or catalog_small_lattices():
        for a in L.elements:
            for b in L.elements:
                ca, cb = atom_of(L, a), atom_of(L, b)
                for op, fn, name in ((Join, L.join, "join"), (Meet, L.meet, "meet")):
                    rep.bump("checks")
                    if not qual_equiv(env, op(ca, cb), atom_of(L, fn(a, b)), L):
                        rep.fail(name, 0, f"{L.name}: {show_qual(op(ca, cb))} is not equivalent to {fn(a, b)}")
    return rep


# --- program suites ----------------------------------------------------------

def _type_or_none(checker, env, t):
    try:
        return checker.type_of(env, t), None
    except CheckError as exc:
        return None, exc


class _Run:
    """Shared bookkeeping for one program's run."""

    def __init__(self, rep: SuiteReport, index: int, checker: Checker, env, program):
        self.rep, self.index, self.checker, self.env, self.program = rep, index, checker, env, program

    def fail(self, kind, message):
        self.rep.fail(kind, self.index, message, self.program)

    def preserved(self, env, before, after, what) -> bool:
        T, err = _type_or_none(self.checker, env, after)
        if T is None:
            self.fail("preservation", f"step to an ill-typed {what}: {err}")
            return False
        if self.checker.subtype(env, T, before) is None:
            self.fail("preservation", f"type grew from {before} to {T}")
            return False
        return True


def _finish(run: _Run, status: str, steps: int, error=None):
    rep = run.rep
    rep.bump("steps", steps)
    if status == "value":
        rep.bump("values")
    elif status == "out-of-fuel":
        rep.bump("out-of-fuel")
    else:
        rep.bump("stuck")
        kind = {SealedWrite: "sealed-write", BarrierViolation: "barrier"}.get(type(error), "stuck")
        run.fail(kind, f"{error.code}: {error}")


def _run_fq(run: _Run, T, lattice, fuel):
    r = Reducer(lattice)
    t = run.program
    for n in range(fuel):
        if is_value(t):
            return _finish(run, "value", n)
        try:
            t2 = r.step(t)
        except Stuck as exc:
            return _finish(run, "stuck", n, exc)
        if not run.preserved(run.env, T, t2, "term"):
            return
        t, T = t2, run.checker.type_of(run.env, t2)
    _finish(run, "value" if is_value(t) else "out-of-fuel", fuel)


def _run_fm(run: _Run, T, lattice, fuel):
    r = RefReducer(lattice)
    sigma: dict = {}
    t = run.program
    seen = 0
    for n in range(fuel):
        if is_value(t):
            return _finish(run, "value", n)
        try:
            t2 = r.reduce(t)
        except Stuck as exc:
            return _finish(run, "stuck", n, exc)
        for ev in r.events[seen:]:
            run.rep.bump("derefs")
            if ev.ref_tag == lattice.top:
                run.rep.bump("derefs-through-top")
                if ev.result_tag != lattice.top:
                    run.fail("deref-top", f"deref of #{ev.loc} through a top reference produced {ev.result_tag}")
        seen = len(r.events)
        try:
            sigma = extend_store_typing(run.checker, run.env, sigma, r.store)
        except CheckError as exc:
            return run.fail("store-typing", f"new cell is ill-typed: {exc}")
        env = run.env.with_store(sigma)
        if not store_well_typed(run.checker, env, sigma, r.store):
            return run.fail("store-typing", "store does not match its typing")
        if not run.preserved(env, T, t2, "term"):
            return
        t, T = t2, run.checker.type_of(env, t2)
    _finish(run, "value" if is_value(t) else "out-of-fuel", fuel)


def _run_fa(run: _Run, T, lattice, fuel):
    m = Machine(lattice)
    cfg = initial_config(run.program)
    checker: ColourChecker = run.checker
    for n in range(fuel):
        try:
            nxt = m.step(cfg)
        except Stuck as exc:
            return _finish(run, "stuck", n, exc)
        try:
            T2 = checker.type_config(run.env, nxt)
        except CheckError as exc:
            return run.fail("preservation", f"step to an ill-typed configuration: {exc}")
        if checker.subtype(run.env, T2, T) is None:
            return run.fail("preservation", f"configuration type grew from {T} to {T2}")
        if isinstance(nxt, Final):
            return _finish(run, "value", n + 1)
        cfg, T = nxt, T2
    _finish(run, "out-of-fuel", fuel)


def _run_fc(run: _Run, T, lattice, fuel):
    bad = []

    def hook(env, v, T):
        run.rep.bump("capture-checks")
        if not capture_prediction_check(env, v, lattice, run.checker, T):
            bad.append(str(v))

    run.checker.value_hook = hook
    run.checker.type_of(run.env, run.program)
    r = Reducer(lattice)
    t = run.program
    for n in range(fuel):
        if bad:
            return run.fail("capture", f"value does not predict its captures: {bad[0]}")
        if is_value(t):
            return _finish(run, "value", n)
        try:
            t2 = r.step(t)
        except Stuck as exc:
            return _finish(run, "stuck", n, exc)
        if not run.preserved(run.env, T, t2, "term"):
            return
        t, T = t2, run.checker.type_of(run.env, t2)
    _finish(run, "value" if is_value(t) else "out-of-fuel", fuel)


_RUNNERS = {"fq": _run_fq, "fm": _run_fm, "fa": _run_fa, "fc": _run_fc}


@_timed
def run_soundness_suite(cfg: GenConfig, calculus: str = "fq",
                        checker_factory: Callable[[FiniteLattice], Checker] | None = None) -> SuiteReport:
    """Generate ``cfg.count`` programs and run each with fuel, checking progress and preservation.

    ``checker_factory`` replaces the type checker used both to accept programs
    and to type intermediate states; the mutation tests pass a broken one.
    """
    if calculus not in CALCULI:
        raise ValueError(f"unknown calculus {calculus}")
    rep = SuiteReport(f"programs-{calculus}", cfg.seed)
    lattice = cfg.lattice_objects()[0] if calculus == "fq" else TWO_POINT
    factory = checker_factory or (lambda L: checker_for(calculus, L))
    env = initial_env(calculus)
    for i in range(cfg.count):
        checker = factory(lattice)
        g = gen_well_typed_term(cfg, calculus, i, checker=checker, lattice=lattice)
        rep.bump("programs")
        rep.bump("rejected-candidates", len(g.rejected))
        _RUNNERS[calculus](_Run(rep, i, checker, env, g.term), g.type, lattice, cfg.fuel)
    return rep


def write_report(reports: list[SuiteReport], path: str | Path):
    Path(path).write_text(json.dumps([r.to_json() for r in reports], indent=2) + "\n")
