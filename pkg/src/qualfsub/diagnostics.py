"""Diagnostics and source files with pragma headers."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CheckError, ParseError, PragmaError, QualError, Stuck
from .lattice import TWO_POINT, FiniteLattice, catalog_by_name, load_lattice
from .quals import BOT, TOP
from .syntax.parser import CALCULI


@dataclass
class Diagnostic:
    severity: str
    code: str
    message: str
    line: int | None = None
    column: int | None = None
    trace: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "severity": self.severity,
            "code": self.code,
            "span": None if self.line is None else {"line": self.line, "column": self.column},
            "message": self.message,
        }
        if self.trace:
            out["trace"] = list(self.trace)
        return out

    def render(self, path: str | None = None) -> str:
        where = path or "<input>"
        if self.line is not None:
            where += f":{self.line}:{self.column}"
        lines = [f"{where}: {self.severity}[{self.code}]: {self.message}"]
        lines += [f"  | {t}" for t in self.trace]
        return "\n".join(lines)


def _span_of(x):
    span = getattr(x, "span", None)
    if isinstance(span, tuple) and len(span) == 2:
        return span
    return None, None


def from_error(exc: QualError, trace=()) -> Diagnostic:
    line = column = None
    if isinstance(exc, ParseError):
        line, column = exc.line, exc.column
    elif isinstance(exc, CheckError) and isinstance(exc.at, tuple):
        line, column = exc.at
    elif isinstance(exc, Stuck) and exc.term is not None:
        line, column = _span_of(exc.term)
    return Diagnostic("error", exc.code, str(exc), line, column, list(trace))


# --- source files ------------------------------------------------------------

_PRAGMA = re.compile(r"#([a-z][a-z-]*)(?:[ \t]+(.*?))?[ \t]*$")


@dataclass
class SourceFile:
    path: str
    text: str
    calculus: str = "fq"
    lattice: FiniteLattice = TWO_POINT
    default_tag: object = None
    body: str = ""
    body_line: int = 1


def resolve_lattice(ref: str, base_dir: Path | None = None) -> FiniteLattice:
    """A catalog name such as ``3-chain``, or a path to a lattice file."""
    known = catalog_by_name()
    if ref in known:
        return known[ref]
    path = Path(ref)
    if base_dir is not None and not path.is_absolute() and not path.exists():
        path = base_dir / path
    return load_lattice(path)


def read_source(text: str, path: str = "<input>", base_dir: Path | None = None) -> SourceFile:
    """Split leading pragma lines from the body.

    Pragmas: ``#calculus fq|fm|fa|fc``, ``#lattice NAME-OR-PATH`` and
    ``#default-tag bot|top``.  Blank and comment lines may be mixed in.
    """
    src = SourceFile(path, text)
    lines = text.split("\n")
    n = 0
    seen = set()
    for n, raw in enumerate(lines):
        s = raw.strip()
        if not s or s.startswith("--"):
            continue
        m = _PRAGMA.match(s)
        if s.startswith("#") and m is None and not s[1:2].isdigit():
            raise PragmaError(f"malformed pragma {s!r}", n + 1, 1)
        if m is None:
            break
        name, arg = m.group(1), m.group(2) or ""
        if name in seen:
            raise PragmaError(f"duplicate pragma #{name}", n + 1, 1)
        seen.add(name)
        if name == "calculus":
            if arg not in CALCULI:
                raise PragmaError(f"unknown calculus {arg!r}; expected one of {', '.join(CALCULI)}", n + 1, 1)
            src.calculus = arg
        elif name == "lattice":
            if not arg:
                raise PragmaError("#lattice needs a catalog name or a file path", n + 1, 1)
            src.lattice = resolve_lattice(arg, base_dir)
        elif name == "default-tag":
            if arg not in ("bot", "top"):
                raise PragmaError("#default-tag must be bot or top", n + 1, 1)
            src.default_tag = BOT if arg == "bot" else TOP
        else:
            raise PragmaError(f"unknown pragma #{name}", n + 1, 1)
    else:
        n = len(lines)
    src.body_line = n + 1
    src.body = "\n".join(lines[n:])
    return src


def load_source(path: str | Path) -> SourceFile:
    p = Path(path)
    return read_source(p.read_text(encoding="utf-8"), str(path), p.parent)
