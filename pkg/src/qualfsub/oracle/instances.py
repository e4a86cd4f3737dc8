"""Brute-force semantics of qualifier formulas.

An inequality ``Q <: R`` holds in the free lattice exactly when it holds under
every bound-respecting instantiation into every bounded lattice extending the
base.  The oracle checks a finite sample of such lattices exhaustively.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterator, Mapping

import numpy as np

from ..lattice import FiniteLattice, catalog_small_lattices, chain, diamond_m3, pentagon_n5, splice
from ..quals import Bot, Const, Join, Meet, Qual, QualEnv, QVar, Top, eval_under, qual_vars


@dataclass(frozen=True)
class Extension:
    """A lattice together with an embedding of the base lattice's labels."""

    lattice: FiniteLattice
    embed: Mapping[str, str]
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.lattice.name


def identity_extension(L: FiniteLattice) -> Extension:
    return Extension(L, {e: e for e in L.elements})


def _fresh_prefix(L: FiniteLattice) -> str:
    n = 0
    while any(e.startswith(f"n{n}.") for e in L.elements):
        n += 1
    return f"n{n}."


def embeddings(base: FiniteLattice, L: FiniteLattice) -> list[dict]:
    """Every injective map ``base -> L`` preserving bounds, joins and meets."""
    inner = [e for e in base.elements if e not in (base.bottom, base.top)]
    spare = [e for e in L.elements if e not in (L.bottom, L.top)]
    out = []
    for image in permutations(spare, len(inner)):
        f = {base.bottom: L.bottom, base.top: L.top, **dict(zip(inner, image))}
        if all(
            f[base.join(x, y)] == L.join(f[x], f[y]) and f[base.meet(x, y)] == L.meet(f[x], f[y])
            for x in base.elements for y in base.elements
        ):
            out.append(f)
    return out


def extensions_of(base: FiniteLattice, catalog: list[FiniteLattice] | None = None) -> list[Extension]:
    """Finite bounded lattices into which ``base`` embeds, smallest first.

    Two families: every embedding of ``base`` into a catalog lattice, and
    ``base`` with the interval between a comparable pair widened by a
    one-element chain, by M3 or by N5.  Non-cover pairs add elements beside
    existing ones, and the last two gadgets keep the family from being all
    distributive.  Products are omitted: an inequality between lattice terms
    holds in a product exactly when it holds in each factor.
    """
    out = [identity_extension(base)]
    for L in catalog or catalog_small_lattices():
        maps = embeddings(base, L)
        for k, f in enumerate(maps):
            if len(L) == len(base) and all(f[e] == e for e in f):
                continue
            label = L.name if len(maps) == 1 else f"{L.name}<{','.join(f[e] for e in base.elements)}>"
            out.append(Extension(L, f, label))
    if len(base) > 2:
        prefix = _fresh_prefix(base)
        identity = {e: e for e in base.elements}
        for gadget in (chain(3), diamond_m3(), pentagon_n5()):
            for lower, upper in _strict_pairs(base):
                grown = splice(base, lower, upper, gadget, prefix)
                out.append(Extension(grown, identity, f"{base.name}+{gadget.name}[{lower}<{upper}]"))
    # stable: within one size, catalog lattices come before spliced ones
    return sorted(out, key=lambda e: len(e.lattice))


def _strict_pairs(L: FiniteLattice) -> list[tuple[str, str]]:
    return [(a, b) for a in L.elements for b in L.elements if a != b and L.leq(a, b)]


# --- enumeration -----------------------------------------------------------

def _needed(env: QualEnv, names) -> list[str]:
    """``names`` closed under the variables of their bounds, in environment order."""
    need = set(names)
    for b in reversed(env.entries):
        if b.name in need:
            need.update(qual_vars(b.bound))
    return [b.name for b in env.entries if b.name in need]


def enumerate_instantiations(env: QualEnv, L: FiniteLattice, embed: Mapping[str, str] | None = None) -> Iterator[dict]:
    """Every assignment of the environment's variables respecting their bounds.

    Variables are assigned in environment order and elements tried in the
    lattice's element order, so the stream is lexicographic.
    """
    names = env.names()

    def go(i: int, acc: dict):
        if i == len(names):
            yield dict(acc)
            return
        b = env.entries[i]
        limit = eval_under(L, b.bound, acc, embed)
        for e in L.elements:
            if L.leq(e, limit):
                acc[b.name] = e
                yield from go(i + 1, acc)
        acc.pop(b.name, None)

    yield from go(0, {})


class _Tables:
    def __init__(self, ext: Extension):
        L = ext.lattice
        self.L = L
        self.leq = np.array(L.leq_matrix, dtype=bool)
        self.join = np.array(L.join_table, dtype=np.int16)
        self.meet = np.array(L.meet_table, dtype=np.int16)
        self.top = L.index[L.top]
        self.bottom = L.index[L.bottom]
        self.embed = {k: L.index[v] for k, v in ext.embed.items()}

    def eval(self, q: Qual, cols: dict, rows: int) -> np.ndarray:
        if isinstance(q, QVar):
            return cols[q.name]
        if isinstance(q, Join):
            return self.join[self.eval(q.left, cols, rows), self.eval(q.right, cols, rows)]
        if isinstance(q, Meet):
            return self.meet[self.eval(q.left, cols, rows), self.eval(q.right, cols, rows)]
        if isinstance(q, Top):
            value = self.top
        elif isinstance(q, Bot):
            value = self.bottom
        elif isinstance(q, Const):
            value = self.embed[q.label]
        else:
            raise TypeError(q)
        return np.full(rows, value, dtype=np.int16)

    def assignments(self, env: QualEnv, names: list[str]) -> tuple[dict, int]:
        cols: dict[str, np.ndarray] = {}
        rows = 1
        n = len(self.L)
        elems = np.arange(n, dtype=np.int16)
        for name in names:
            limit = self.eval(env.bound(name), cols, rows)
            # ok[r, e]: element e lies below the bound in row r
            ok = self.leq[:, limit].T
            keep_rows, keep_elems = np.nonzero(ok)
            cols = {k: v[keep_rows] for k, v in cols.items()}
            cols[name] = elems[keep_elems]
            rows = len(keep_rows)
        return cols, rows


@dataclass(frozen=True)
class HoldsEverywhere:
    lattices: tuple[str, ...]
    instantiations: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Counterexample:
    lattice: str
    assignment: dict
    lhs: str
    rhs: str

    def __bool__(self):
        return False

    def describe(self) -> str:
        inst = ", ".join(f"{k} := {v}" for k, v in self.assignment.items()) or "no variables"
        return f"in {self.lattice} with {inst}: left side is {self.lhs}, right side is {self.rhs}"


def oracle_leq(env: QualEnv, q: Qual, r: Qual, extensions: list[Extension]):
    """``HoldsEverywhere`` or the first ``Counterexample`` (smallest lattice, lexicographic)."""
    names = _needed(env, set(qual_vars(q)) | set(qual_vars(r)))
    total = 0
    for ext in extensions:
        tab = _Tables(ext)
        cols, rows = tab.assignments(env, names)
        lv = tab.eval(q, cols, rows)
        rv = tab.eval(r, cols, rows)
        bad = np.nonzero(~tab.leq[lv, rv])[0]
        if len(bad):
            i = int(bad[0])
            els = ext.lattice.elements
            return Counterexample(
                ext.name, {k: els[int(cols[k][i])] for k in names}, els[int(lv[i])], els[int(rv[i])]
            )
        total += rows
    return HoldsEverywhere(tuple(e.name for e in extensions), total)
