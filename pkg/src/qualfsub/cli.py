"""Command-line driver.

Exit codes: 0 success, 1 diagnostics, 2 usage, 3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .capture import bind_term_var
from .colours import Final, run_machine, show_config
from .diagnostics import Diagnostic, from_error, load_source, resolve_lattice
from .errors import IllFormed, QualError, UsageError
from .kernel import Reducer, TypeEnv, eval_fuel
from .lattice import TWO_POINT, catalog_by_name, catalog_small_lattices, dump_lattice, load_lattice
from .oracle.generate import GenConfig, checker_for, initial_env
from .oracle.instances import extensions_of, oracle_leq
from .oracle.suite import (
    run_join_meet_suite, run_laws_suite, run_soundness_suite, run_subqual_soundness,
)
from .quals import QualEnv, check_derivation, eval_ground, is_ground, show_qual, subqual
from .refs import run_fm
from .terms import TVar
from .syntax import parse_env, parse_qtype, parse_qual, parse_term, pretty_print

SUITES = ("laws", "subqual", "join-meet", "fq", "fm", "fa", "fc")


class Internal(Exception):
    pass


class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: list[str] = []
        self.data: dict = {}

    def say(self, text: str = ""):
        self.lines.append(text)

    def flush(self, stream=None):
        stream = stream or sys.stdout
        if self.as_json:
            stream.write(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        elif self.lines:
            stream.write("\n".join(self.lines) + "\n")


def _diagnose(out: Output, diag: Diagnostic, path=None) -> int:
    out.data.setdefault("diagnostics", []).append(diag.to_json())
    out.say(diag.render(path))
    return 1


# --- check / eval ----------------------------------------------------------

def _colour_context(args, src):
    if getattr(args, "colour_context", None) is None:
        return None
    if src.calculus != "fa":
        raise UsageError("--colour-context only applies to fa programs")
    q = parse_qual(args.colour_context)
    if not is_ground(q):
        raise UsageError("--colour-context must be a ground qualifier")
    return q


def _typecheck(src, term, colour):
    checker = checker_for(src.calculus, src.lattice)
    env = initial_env(src.calculus)
    if colour is not None:
        env = env.with_colour(colour)
    return checker.type_of(env, term)


def _load(path):
    src = load_source(path)
    return src, parse_term(src.body, src.calculus, src.default_tag, src.body_line)


def cmd_check(args, out: Output) -> int:
    src, term = _load(args.file)
    T = _typecheck(src, term, _colour_context(args, src))
    out.data.update({"calculus": src.calculus, "type": pretty_print(T)})
    out.say(pretty_print(T))
    return 0


def _colour_label(src, q):
    return None if q is None else eval_ground(src.lattice, q)


def cmd_eval(args, out: Output) -> int:
    src, term = _load(args.file)
    colour = _colour_context(args, src)
    if args.check:
        _typecheck(src, term, colour)
    L = src.lattice
    out.data["calculus"] = src.calculus
    if src.calculus == "fa":
        res = run_machine(term, args.fuel, L, _colour_label(src, colour), trace=True)
        shown = [show_config(c, L) for c in res.trace]
        out.data["trace"] = shown
        for i, c in enumerate(shown):
            out.say(f"{i}: {c}")
        out.data["steps"] = res.steps
        if res.status == "stuck":
            exc = res.error
            msg = f"{exc} (stuck at transition #{res.steps + 1})"
            return _diagnose(out, Diagnostic("error", exc.code, msg, *_span(exc)), args.file)
        if res.status == "out-of-fuel":
            return _diagnose(out, Diagnostic("error", "E-FUEL", f"no value after {args.fuel} steps"), args.file)
        v = res.config.value if isinstance(res.config, Final) else None
        out.data["value"] = pretty_print(v)
        out.say(f"value: {pretty_print(v)}")
        return 0

    if src.calculus == "fm":
        res = run_fm(term, args.fuel, L, trace=args.trace)
    else:
        res = eval_fuel(term, args.fuel, L, trace=args.trace, stepper=Reducer(L).step)
    if args.trace:
        out.data["trace"] = [pretty_print(t) for t in res.trace]
        for i, t in enumerate(res.trace):
            out.say(f"{i}: {pretty_print(t)}")
    out.data["steps"] = res.steps
    code = 0
    if res.status == "stuck":
        exc = res.error
        msg = f"{exc} (after {res.steps} steps)"
        code = _diagnose(out, Diagnostic("error", exc.code, msg, *_span(exc)), args.file)
    elif res.status == "out-of-fuel":
        code = _diagnose(out, Diagnostic("error", "E-FUEL", f"no value after {args.fuel} steps"), args.file)
    else:
        out.data["value"] = pretty_print(res.term)
        out.say(f"value: {pretty_print(res.term)}")
    if src.calculus == "fm":
        out.data["store"] = {f"#{k}": {"tag": show_qual(c.tag), "value": pretty_print(c.value)}
                             for k, c in sorted(res.store.cells.items())}
        out.say(res.store.render())
    return code


def _span(exc):
    term = getattr(exc, "term", None)
    span = getattr(term, "span", None)
    return span if isinstance(span, tuple) else (None, None)


# --- sub / subtype ---------------------------------------------------------

def _lattice_arg(ref):
    return TWO_POINT if ref is None else resolve_lattice(ref)


def _qual_env(text: str) -> QualEnv:
    env = QualEnv()
    for e in parse_env(text, "fc"):
        if e.kind == "qual":
            env = env.extend(e.name, e.bound)
        elif e.kind == "term":
            env = env.extend(e.name, e.bound.qual, term=True)
        elif isinstance(e.bound, TVar):
            # an undeclared name reads as a type variable; for sub it can only be a qualifier
            raise IllFormed(f"bound of {e.name} mentions {e.bound.name}, which is not bound before it")
        else:
            raise UsageError(f"{e.name} is bound by a type; sub takes qualifier and term bindings only")
    return env


def cmd_sub(args, out: Output) -> int:
    L = _lattice_arg(args.lattice)
    env = _qual_env(args.env)
    Q, R = parse_qual(args.lhs), parse_qual(args.rhs)
    d = subqual(env, Q, R, L)
    out.data.update({"lhs": show_qual(Q), "rhs": show_qual(R), "derivable": d is not None})
    if d is not None:
        if not check_derivation(env, d, L):
            raise Internal("derivation failed to replay")
        out.data["derivation"] = d.render().split("\n")
        out.data["rules"] = d.rules()
        out.say(d.render())
        return 0
    out.say(f"not derivable: {show_qual(Q)} <: {show_qual(R)}")
    exts = extensions_of(L)
    verdict = oracle_leq(env, Q, R, exts)
    if verdict:
        out.data["counterexample"] = None
        out.say(f"no counterexample in {len(exts)} lattices extending {L.name} "
                f"({verdict.instantiations} instantiations); the search is incomplete")
    else:
        out.data["counterexample"] = {"lattice": verdict.lattice, "assignment": verdict.assignment,
                                      "lhs": verdict.lhs, "rhs": verdict.rhs}
        out.say(f"counterexample: {verdict.describe()}")
    return 1


def _type_env(text: str, calculus: str) -> TypeEnv:
    env = initial_env(calculus)
    for e in parse_env(text, calculus):
        if e.kind == "qual":
            env = env.with_qual(e.name, e.bound)
        elif e.kind == "type":
            env = env.with_tvar(e.name, e.bound)
        elif calculus == "fc":
            env = bind_term_var(env, e.name, e.bound)
        else:
            env = env.with_term(e.name, e.bound)
    return env


def cmd_subtype(args, out: Output) -> int:
    L = _lattice_arg(args.lattice)
    env = _type_env(args.env, args.calculus)
    checker = checker_for(args.calculus, L)
    T1, T2 = parse_qtype(args.lhs, args.calculus), parse_qtype(args.rhs, args.calculus)
    checker.check_qtype(env, T1)
    checker.check_qtype(env, T2)
    d = checker.subtype(env, T1, T2)
    out.data.update({"lhs": pretty_print(T1), "rhs": pretty_print(T2), "subtype": d is not None})
    if d is None:
        return _diagnose(out, Diagnostic("error", "E-TYPE", f"{pretty_print(T1)} is not a subtype of {pretty_print(T2)}"))
    out.data["derivation"] = d.render(pretty_print).split("\n")
    out.say(d.render(pretty_print))
    return 0


# --- oracle / lattice --------------------------------------------------------

def cmd_oracle(args, out: Output) -> int:
    known = catalog_by_name()
    names = [n.strip() for n in args.lattices.split(",")] if args.lattices else [L.name for L in catalog_small_lattices()]
    for n in names:
        if n not in known:
            raise UsageError(f"unknown lattice {n!r}; known: {', '.join(known)}")
    suites = SUITES if args.suite == "all" else tuple(s.strip() for s in args.suite.split(","))
    for s in suites:
        if s not in SUITES:
            raise UsageError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
    bases = [known[n] for n in names]
    cfg = GenConfig(formula_depth=args.depth, term_depth=max(args.depth, 1), seed=args.seed,
                    lattices=(names[0],), count=args.count)
    reports = []
    for s in suites:
        if s == "laws":
            reports.append(run_laws_suite(cfg, args.samples))
        elif s == "subqual":
            reports.append(run_subqual_soundness(cfg, args.samples, bases, args.corpus))
        elif s == "join-meet":
            reports.append(run_join_meet_suite(bases))
        else:
            reports.append(run_soundness_suite(cfg, s))
    out.data["reports"] = [r.to_json() for r in reports]
    for r in reports:
        out.say(r.to_text())
    ok = all(r.ok for r in reports)
    out.say("all suites passed" if ok else "some suites FAILED")
    return 0 if ok else 1


def cmd_lattice_validate(args, out: Output) -> int:
    L = load_lattice(args.file)
    out.data.update(json.loads(dump_lattice(L)))
    out.data.update({"valid": True, "top": L.top, "bottom": L.bottom})
    out.say(f"{L.name}: valid bounded lattice with {len(L)} elements (bottom {L.bottom}, top {L.top})")
    out.say("covers: " + ", ".join(f"{a} < {b}" for a, b in L.covers()))
    return 0


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qualfsub", description="Qualified F-sub toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="parse and type-check a program")
    c.add_argument("file")
    c.add_argument("--colour-context", help="fa: ground colour of the calling context")
    c.set_defaults(run=cmd_check)

    e = sub.add_parser("eval", help="run a program")
    e.add_argument("file")
    e.add_argument("--fuel", type=int, default=10_000)
    e.add_argument("--trace", action="store_true", help="print every intermediate term")
    e.add_argument("--check", action="store_true", help="type-check before running")
    e.add_argument("--colour-context", help="fa: ground colour of the calling context")
    e.set_defaults(run=cmd_eval)

    s = sub.add_parser("sub", help="decide a subqualification")
    s.add_argument("--env", default="")
    s.add_argument("--lattice", help="catalog name or lattice file (default 2-chain)")
    s.add_argument("lhs")
    s.add_argument("rhs")
    s.set_defaults(run=cmd_sub)

    t = sub.add_parser("subtype", help="decide a subtyping")
    t.add_argument("--env", default="")
    t.add_argument("--lattice")
    t.add_argument("--calculus", choices=("fq", "fm", "fa", "fc"), default="fq")
    t.add_argument("lhs")
    t.add_argument("rhs")
    t.set_defaults(run=cmd_subtype)

    o = sub.add_parser("oracle", help="run the oracle and soundness suites")
    o.add_argument("--lattices", help="comma-separated catalog names (default: all)")
    o.add_argument("--depth", type=int, default=4)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--samples", type=int, default=200, help="qualifier samples per suite and base")
    o.add_argument("--count", type=int, default=100, help="programs per calculus")
    o.add_argument("--suite", default="all", help=f"comma-separated subset of {','.join(SUITES)}")
    o.add_argument("--corpus", help="write completeness misses to this JSON file")
    o.set_defaults(run=cmd_oracle)

    lat = sub.add_parser("lattice", help="lattice utilities")
    lsub = lat.add_subparsers(dest="action", required=True)
    v = lsub.add_parser("validate", help="check a lattice file")
    v.add_argument("file")
    v.set_defaults(run=cmd_lattice_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args.json)
    path = getattr(args, "file", None)
    try:
        code = args.run(args, out)
    except UsageError as exc:
        out.flush()
        print(f"qualfsub: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        out.flush()
        print(f"qualfsub: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return 2
    except QualError as exc:
        code = _diagnose(out, from_error(exc), path)
    except Internal as exc:
        out.flush()
        print(f"qualfsub: internal error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        out.flush()
        print(f"qualfsub: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
