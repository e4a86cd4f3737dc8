"""F_m: references whose qualifier records mutability (bottom = mutable, top = readonly)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    DanglingLocation, IllFormed, SealedWrite, Stuck, StuckIllFormed, TypeMismatch, WriteToReadonly,
)
from .kernel import Checker, Outcome, Reducer, TypeEnv, ground_value
from .lattice import TWO_POINT, FiniteLattice
from .quals import BOT, Derivation, Join, atom_of, show_qual
from .terms import Assign, Boxed, Deref, Loc, QType, Ref, UnitType, UnitVal, is_value, retag


# --- typing ----------------------------------------------------------------

class RefChecker(Checker):
    calculus = "fm"

    def check_extra_stype(self, env, S, at):
        if isinstance(S, Boxed):
            self.check_qtype(env, S.inner, at)
            return
        super().check_extra_stype(env, S, at)

    def subtype_extra(self, env, S1, S2) -> Derivation | None:
        # boxes are read and written, so their contents are invariant
        if isinstance(S1, Boxed) and isinstance(S2, Boxed):
            d1 = self.subtype(env, S1.inner, S2.inner)
            d2 = self.subtype(env, S2.inner, S1.inner)
            if d1 is None or d2 is None:
                return None
            return Derivation("sub-box", S1, S2, (d1, d2))
        return None

    def _t_Ref(self, env, t):
        self.check_qual(env, t.tag, t.span)
        Ti = self.type_of(env, t.init)
        content = Ti
        if t.content is not None:
            self.check_qtype(env, t.content, t.span)
            self.require_subtype(env, Ti, t.content, "reference contents", t.span)
            content = t.content
        return QType(t.tag, Boxed(content))

    def _t_Loc(self, env, t):
        self.check_qual(env, t.tag, t.span)
        content = env.store.get(t.id)
        if content is None:
            raise IllFormed(f"location #{t.id} is not in the store typing", t.span)
        return QType(t.tag, Boxed(content))

    def _boxed(self, env, T: QType, what: str, at) -> Boxed:
        shape = self.expose(env, T.shape)
        if not isinstance(shape, Boxed):
            raise TypeMismatch(f"{what} expects a reference, found {T}", at)
        return shape

    def _t_Deref(self, env, t):
        T = self.type_of(env, t.ref)
        inner = self._boxed(env, T, "dereference", t.span).inner
        return QType(Join(T.qual, inner.qual), inner.shape)

    def _t_Assign(self, env, t):
        T = self.type_of(env, t.ref)
        inner = self._boxed(env, T, "assignment", t.span).inner
        self.require_subqual(env, T.qual, BOT, WriteToReadonly, "write through a reference that is not mutable", t.span)
        Tv = self.type_of(env, t.value)
        self.require_subtype(env, Tv, inner, "assigned value", t.span)
        return QType(BOT, UnitType())


def type_of_fm(env: TypeEnv, store_typing, t, lattice: FiniteLattice = TWO_POINT) -> QType:
    return RefChecker(lattice).type_of(env.with_store(store_typing), t)


# --- stores ----------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    tag: object
    value: object
    # content type written on the allocating ``ref``, if any
    declared: QType | None = None


@dataclass(frozen=True)
class Store:
    cells: dict = field(default_factory=dict)
    next_id: int = 0

    def __contains__(self, loc: int) -> bool:
        return loc in self.cells

    def __getitem__(self, loc: int) -> Cell:
        return self.cells[loc]

    def __len__(self):
        return len(self.cells)

    def alloc(self, tag, value, declared=None) -> tuple["Store", int]:
        loc = self.next_id
        cells = dict(self.cells)
        cells[loc] = Cell(tag, value, declared)
        return Store(cells, loc + 1), loc

    def write(self, loc: int, value) -> "Store":
        cells = dict(self.cells)
        cells[loc] = replace(cells[loc], value=value)
        return Store(cells, self.next_id)

    def render(self) -> str:
        if not self.cells:
            return "store: (empty)"
        lines = ["store:"]
        for loc in sorted(self.cells):
            c = self.cells[loc]
            lines.append(f"  #{loc} [{show_qual(c.tag)}] = {c.value}")
        return "\n".join(lines)


@dataclass(frozen=True)
class DerefEvent:
    """A dereference as observed at run time (labels are lattice elements)."""

    loc: int
    ref_tag: str
    result_tag: str


class RefReducer(Reducer):
    def __init__(self, lattice: FiniteLattice = TWO_POINT, store: Store | None = None):
        super().__init__(lattice)
        self.store = store or Store()
        self.events: list[DerefEvent] = []

    def reduce_store_form(self, t):
        L = self.lattice
        if isinstance(t, Ref):
            if not is_value(t.init):
                return replace(t, init=self.reduce(t.init))
            tag = atom_of(L, ground_value(L, t.tag, "ref", t))
            self.store, loc = self.store.alloc(tag, t.init, t.content)
            return Loc(loc, tag)
        if isinstance(t, Deref):
            if not is_value(t.ref):
                return replace(t, ref=self.reduce(t.ref))
            loc = self._loc(t.ref, t)
            value = self.store[loc.id].value
            ref_tag = ground_value(L, loc.tag, "dereference", t)
            joined = L.join(ref_tag, ground_value(L, value.tag, "dereference", t))
            self.events.append(DerefEvent(loc.id, ref_tag, joined))
            return retag(value, atom_of(L, joined))
        if isinstance(t, Assign):
            if not is_value(t.ref):
                return replace(t, ref=self.reduce(t.ref))
            if not is_value(t.value):
                return replace(t, value=self.reduce(t.value))
            loc = self._loc(t.ref, t)
            if ground_value(L, loc.tag, "assignment", t) != L.bottom:
                raise SealedWrite(f"write to #{loc.id} through a reference tagged {show_qual(loc.tag)}", t)
            self.store = self.store.write(loc.id, t.value)
            return UnitVal(BOT)
        return super().reduce_store_form(t)

    def _loc(self, v, redex) -> Loc:
        if not isinstance(v, Loc):
            raise StuckIllFormed("expected a location", redex)
        if v.id not in self.store:
            raise DanglingLocation(f"location #{v.id} was never allocated", redex)
        return v


def step_fm(t, store: Store, lattice: FiniteLattice = TWO_POINT):
    """One step of a (term, store) configuration, or None when ``t`` is a value."""
    if is_value(t):
        return None
    r = RefReducer(lattice, store)
    return r.reduce(t), r.store


@dataclass
class FmOutcome(Outcome):
    store: Store = field(default_factory=Store)
    events: list = field(default_factory=list)


def run_fm(t, fuel: int, lattice: FiniteLattice = TWO_POINT, store: Store | None = None, trace: bool = False,
           observer=None) -> FmOutcome:
    """Run with fuel; ``observer(before, after, store)`` sees every step."""
    r = RefReducer(lattice, store)
    seen = [t] if trace else []
    for n in range(fuel + 1):
        if is_value(t):
            return FmOutcome("value", t, n, trace=seen, store=r.store, events=r.events)
        if n == fuel:
            break
        try:
            nxt = r.reduce(t)
        except Stuck as exc:
            return FmOutcome("stuck", t, n, exc, trace=seen, store=r.store, events=r.events)
        if observer is not None:
            observer(t, nxt, r.store)
        t = nxt
        if trace:
            seen.append(t)
    return FmOutcome("out-of-fuel", t, fuel, trace=seen, store=r.store, events=r.events)


def extend_store_typing(checker: RefChecker, env: TypeEnv, sigma: dict, store: Store) -> dict:
    """Type newly allocated cells; existing entries are kept (store typing only grows)."""
    sigma = dict(sigma)
    for loc in sorted(store.cells):
        if loc in sigma:
            continue
        cell = store[loc]
        sigma[loc] = cell.declared or checker.type_of(env.with_store(sigma), cell.value)
    return sigma


def store_well_typed(checker: RefChecker, env: TypeEnv, sigma: dict, store: Store) -> bool:
    typed = env.with_store(sigma)
    for loc, cell in store.cells.items():
        if loc not in sigma:
            return False
        if checker.subtype(typed, checker.type_of(typed, cell.value), sigma[loc]) is None:
            return False
    return True
