"""Finite bounded lattices used as base qualifier lattices.

A lattice is given by its Hasse diagram; the order is the reflexive-transitive
closure of the covering edges, and top/bottom are inferred.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from .errors import (
    DuplicateLabel,
    LatticeFormatError,
    NoMeetOrJoin,
    NotAPartialOrder,
    Unbounded,
    UnknownElement,
)


@dataclass(frozen=True)
class LatticeSpec:
    name: str
    elements: tuple[str, ...]
    hasse_edges: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True, eq=False)
class FiniteLattice:
    """A validated finite bounded lattice.

    Construct through :func:`validate_lattice` (or :func:`product`); the tables
    are trusted as given.
    """

    name: str
    elements: tuple[str, ...]
    leq_matrix: tuple[tuple[bool, ...], ...] = field(repr=False)
    join_table: tuple[tuple[int, ...], ...] = field(repr=False)
    meet_table: tuple[tuple[int, ...], ...] = field(repr=False)
    top: str
    bottom: str
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(self, "index", {e: i for i, e in enumerate(self.elements)})

    def __len__(self):
        return len(self.elements)

    def __contains__(self, label) -> bool:
        return label in self.index

    def _idx(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownElement(label, self.name) from None

    def leq(self, a: str, b: str) -> bool:
        return self.leq_matrix[self._idx(a)][self._idx(b)]

    def join(self, a: str, b: str) -> str:
        return self.elements[self.join_table[self._idx(a)][self._idx(b)]]

    def meet(self, a: str, b: str) -> str:
        return self.elements[self.meet_table[self._idx(a)][self._idx(b)]]

    def join_all(self, labels: Iterable[str]) -> str:
        acc = self.bottom
        for label in labels:
            acc = self.join(acc, label)
        return acc

    def meet_all(self, labels: Iterable[str]) -> str:
        acc = self.top
        for label in labels:
            acc = self.meet(acc, label)
        return acc

    def covers(self) -> list[tuple[str, str]]:
        """Pairs (a, b) with a < b and nothing strictly between them."""
        out = []
        n = len(self.elements)
        for i in range(n):
            for j in range(n):
                if i == j or not self.leq_matrix[i][j]:
                    continue
                between = any(
                    k not in (i, j) and self.leq_matrix[i][k] and self.leq_matrix[k][j]
                    for k in range(n)
                )
                if not between:
                    out.append((self.elements[i], self.elements[j]))
        return out

    def to_spec(self) -> LatticeSpec:
        return LatticeSpec(self.name, self.elements, tuple(self.covers()))

    def __repr__(self):
        return f"FiniteLattice({self.name!r}, {list(self.elements)})"


def order_leq(L: FiniteLattice, a: str, b: str) -> bool:
    return L.leq(a, b)


def join_of(L: FiniteLattice, a: str, b: str) -> str:
    return L.join(a, b)


def meet_of(L: FiniteLattice, a: str, b: str) -> str:
    return L.meet(a, b)


def _closure(n: int, edges: Iterable[tuple[int, int]]) -> list[list[bool]]:
    leq = [[i == j for j in range(n)] for i in range(n)]
    for a, b in edges:
        leq[a][b] = True
    for k in range(n):
        for i in range(n):
            if leq[i][k]:
                row_k = leq[k]
                row_i = leq[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return leq


def _from_order(name: str, elements: Sequence[str], leq: list[list[bool]]) -> FiniteLattice:
    n = len(elements)
    for i, j in itertools.combinations(range(n), 2):
        if leq[i][j] and leq[j][i]:
            raise NotAPartialOrder(elements[i], elements[j])

    tops = [i for i in range(n) if all(leq[j][i] for j in range(n))]
    bots = [i for i in range(n) if all(leq[i][j] for j in range(n))]
    if n == 0 or not tops or not bots:
        raise Unbounded(name)

    join = [[0] * n for _ in range(n)]
    meet = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            uppers = [k for k in range(n) if leq[i][k] and leq[j][k]]
            least = [k for k in uppers if all(leq[k][u] for u in uppers)]
            lowers = [k for k in range(n) if leq[k][i] and leq[k][j]]
            greatest = [k for k in lowers if all(leq[l][k] for l in lowers)]
            if not least or not greatest:
                raise NoMeetOrJoin(elements[i], elements[j])
            join[i][j] = least[0]
            meet[i][j] = greatest[0]

    return FiniteLattice(
        name=name,
        elements=tuple(elements),
        leq_matrix=tuple(tuple(r) for r in leq),
        join_table=tuple(tuple(r) for r in join),
        meet_table=tuple(tuple(r) for r in meet),
        top=elements[tops[0]],
        bottom=elements[bots[0]],
    )


def validate_lattice(spec: LatticeSpec) -> FiniteLattice:
    seen: set[str] = set()
    for label in spec.elements:
        if label in seen:
            raise DuplicateLabel(label)
        seen.add(label)
    index = {e: i for i, e in enumerate(spec.elements)}
    edges = []
    for lower, upper in spec.hasse_edges:
        for label in (lower, upper):
            if label not in index:
                raise UnknownElement(label, spec.name)
        edges.append((index[lower], index[upper]))
    leq = _closure(len(spec.elements), edges)
    return _from_order(spec.name, spec.elements, leq)


def product(L1: FiniteLattice, L2: FiniteLattice, name: str | None = None) -> FiniteLattice:
    """Componentwise product; elements are labelled ``(a,b)``."""
    pairs = [(a, b) for a in L1.elements for b in L2.elements]
    labels = [f"({a},{b})" for a, b in pairs]
    leq = [[L1.leq(a1, a2) and L2.leq(b1, b2) for (a2, b2) in pairs] for (a1, b1) in pairs]
    return _from_order(name or f"{L1.name}x{L2.name}", labels, leq)


def splice(L: FiniteLattice, lower: str, upper: str, gadget: FiniteLattice, prefix: str) -> FiniteLattice:
    """Place the interior of ``gadget`` strictly between ``lower < upper``.

    The gadget's bottom and top are identified with ``lower`` and ``upper``;
    its other elements are added with labels ``prefix + label``, incomparable
    to everything strictly between the pair.  The original lattice stays a
    bounded sublattice of the result.
    """
    inner = [g for g in gadget.elements if g not in (gadget.bottom, gadget.top)]
    labels = [prefix + g for g in inner]
    for label in labels:
        if label in L:
            raise DuplicateLabel(label)
    old = len(L)
    elements = list(L.elements) + labels
    n = len(elements)
    leq = [[False] * n for _ in range(n)]
    for i in range(old):
        for j in range(old):
            leq[i][j] = L.leq_matrix[i][j]
    lo, up = L.index[lower], L.index[upper]
    for k, g in enumerate(inner):
        new = old + k
        for m, h in enumerate(inner):
            leq[new][old + m] = gadget.leq(g, h)
        for i in range(old):
            if L.leq_matrix[i][lo]:
                leq[i][new] = True
            if L.leq_matrix[up][i]:
                leq[new][i] = True
    return _from_order(f"{L.name}+{gadget.name}[{lower}<{upper}]", elements, leq)


def insert_between(L: FiniteLattice, lower: str, upper: str, label: str) -> FiniteLattice:
    """Add one fresh element strictly between a covering pair ``lower < upper``."""
    return splice(L, lower, upper, chain(3, ["0", label, "1"]), "")


# --- file format -----------------------------------------------------------

_FILE_KEYS = {"name", "elements", "order"}


def spec_from_mapping(data: object) -> LatticeSpec:
    if not isinstance(data, dict):
        raise LatticeFormatError("lattice file must contain a mapping")
    unknown = set(data) - _FILE_KEYS
    if unknown:
        raise LatticeFormatError(f"unknown keys: {', '.join(sorted(map(str, unknown)))}")
    missing = {"name", "elements"} - set(data)
    if missing:
        raise LatticeFormatError(f"missing keys: {', '.join(sorted(missing))}")
    elements = data["elements"]
    if not isinstance(elements, list) or not all(isinstance(e, (str, int)) for e in elements):
        raise LatticeFormatError("'elements' must be a list of strings")
    order = data.get("order") or []
    edges = []
    for pair in order:
        if not isinstance(pair, list) or len(pair) != 2:
            raise LatticeFormatError("'order' entries must be [lower, upper] pairs")
        edges.append((str(pair[0]), str(pair[1])))
    return LatticeSpec(str(data["name"]), tuple(str(e) for e in elements), tuple(edges))


def load_lattice(path: str | Path) -> FiniteLattice:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise LatticeFormatError(f"cannot parse {path}: {exc}") from None
    return validate_lattice(spec_from_mapping(data))


def dump_lattice(L: FiniteLattice) -> str:
    spec = L.to_spec()
    return json.dumps(
        {"name": spec.name, "elements": list(spec.elements), "order": [list(e) for e in spec.hasse_edges]},
        indent=2,
    )


# --- catalog ---------------------------------------------------------------

def chain(n: int, labels: Sequence[str] | None = None) -> FiniteLattice:
    if labels is None:
        labels = {2: ("0", "1"), 3: ("0", "m", "1"), 4: ("0", "p", "q", "1")}.get(n) or tuple(
            ["0"] + [f"c{i}" for i in range(1, n - 1)] + ["1"]
        )
    edges = tuple(zip(labels, labels[1:]))
    return validate_lattice(LatticeSpec(f"{n}-chain", tuple(labels), edges))


def two_point() -> FiniteLattice:
    return TWO_POINT


def diamond_m3() -> FiniteLattice:
    return validate_lattice(LatticeSpec(
        "M3", ("0", "a", "b", "c", "1"),
        (("0", "a"), ("0", "b"), ("0", "c"), ("a", "1"), ("b", "1"), ("c", "1")),
    ))


def pentagon_n5() -> FiniteLattice:
    return validate_lattice(LatticeSpec(
        "N5", ("0", "a", "b", "c", "1"),
        (("0", "a"), ("a", "c"), ("c", "1"), ("0", "b"), ("b", "1")),
    ))


def boolean_square() -> FiniteLattice:
    return validate_lattice(LatticeSpec(
        "2x2", ("0", "a", "b", "1"),
        (("0", "a"), ("0", "b"), ("a", "1"), ("b", "1")),
    ))


TWO_POINT = chain(2)


def catalog_small_lattices() -> list[FiniteLattice]:
    # smallest first: counterexample search relies on this order
    return [TWO_POINT, chain(3), chain(4), boolean_square(), diamond_m3(), pentagon_n5()]


def catalog_by_name() -> dict[str, FiniteLattice]:
    return {L.name: L for L in catalog_small_lattices()}
