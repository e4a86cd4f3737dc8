import itertools
import json

import pytest

from qualfsub.errors import DuplicateLabel, LatticeFormatError, NoMeetOrJoin, NotAPartialOrder, Unbounded, UnknownElement
from qualfsub.lattice import (
    LatticeSpec, catalog_by_name, catalog_small_lattices, chain, diamond_m3, dump_lattice, insert_between,
    join_of, load_lattice, meet_of, order_leq, pentagon_n5, product, splice, validate_lattice,
)

CATALOG = catalog_small_lattices()


def test_m3_join_and_meet():
    M3 = diamond_m3()
    assert join_of(M3, "a", "b") == "1"
    assert meet_of(M3, "a", "b") == "0"
    assert not order_leq(M3, "a", "b")


def test_four_chain_join():
    assert join_of(chain(4), "p", "q") == "q"


def test_catalog_names():
    assert [L.name for L in CATALOG] == ["2-chain", "3-chain", "4-chain", "2x2", "M3", "N5"]
    assert set(catalog_by_name()) == {L.name for L in CATALOG}


def test_antichain_is_rejected():
    with pytest.raises((Unbounded, NoMeetOrJoin)):
        validate_lattice(LatticeSpec("anti", ("x", "y")))


def test_missing_join_is_rejected():
    # two maximal elements over a shared bottom, then two incomparable upper bounds
    spec = LatticeSpec("bowtie", ("0", "a", "b", "c", "d", "1"),
                       (("0", "a"), ("0", "b"), ("a", "c"), ("b", "c"), ("a", "d"), ("b", "d"),
                        ("c", "1"), ("d", "1")))
    with pytest.raises(NoMeetOrJoin):
        validate_lattice(spec)


def test_cycle_is_rejected():
    with pytest.raises(NotAPartialOrder):
        validate_lattice(LatticeSpec("cyc", ("0", "a", "b", "1"),
                                     (("0", "a"), ("a", "b"), ("b", "a"), ("b", "1"))))


def test_duplicate_and_unknown_labels():
    with pytest.raises(DuplicateLabel):
        validate_lattice(LatticeSpec("dup", ("0", "0")))
    with pytest.raises(UnknownElement):
        validate_lattice(LatticeSpec("unk", ("0", "1"), (("0", "z"),)))


def test_errors_carry_the_lattice_code():
    with pytest.raises(DuplicateLabel) as info:
        validate_lattice(LatticeSpec("dup", ("0", "0")))
    assert info.value.code == "E-LATTICE"


@pytest.mark.parametrize("L", CATALOG, ids=lambda L: L.name)
def test_lattice_laws(L):
    E = L.elements
    for a, b in itertools.product(E, E):
        j, m = L.join(a, b), L.meet(a, b)
        assert L.leq(a, j) and L.leq(b, j)
        assert L.leq(m, a) and L.leq(m, b)
        assert j == L.join(b, a) and m == L.meet(b, a)
        assert L.join(a, L.meet(a, b)) == a  # absorption
        assert L.leq(a, b) == (j == b) == (m == a)
        for c in E:
            if L.leq(a, c) and L.leq(b, c):
                assert L.leq(j, c)
            assert L.join(L.join(a, b), c) == L.join(a, L.join(b, c))
    for a in E:
        assert L.leq(L.bottom, a) and L.leq(a, L.top)


def _modular(L):
    return all(
        L.join(a, L.meet(b, c)) == L.meet(L.join(a, b), c)
        for a, b, c in itertools.product(L.elements, repeat=3) if L.leq(a, c)
    )


def _distributive(L):
    return all(
        L.meet(a, L.join(b, c)) == L.join(L.meet(a, b), L.meet(a, c))
        for a, b, c in itertools.product(L.elements, repeat=3)
    )


def test_m3_and_n5_are_the_non_distributive_witnesses():
    assert _modular(diamond_m3()) and not _distributive(diamond_m3())
    assert not _modular(pentagon_n5())
    for L in CATALOG:
        if L.name not in ("M3", "N5"):
            assert _distributive(L)


def test_covers_are_the_hasse_diagram():
    assert sorted(chain(3).covers()) == [("0", "m"), ("m", "1")]
    assert len(diamond_m3().covers()) == 6


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "m3.yaml"
    path.write_text("name: M3\nelements: [0, a, b, c, 1]\norder:\n"
                    "  - [0, a]\n  - [0, b]\n  - [0, c]\n  - [a, 1]\n  - [b, 1]\n  - [c, 1]\n")
    L = load_lattice(path)
    assert L.top == "1" and L.bottom == "0"
    assert L.join("a", "b") == "1"
    again = tmp_path / "m3.json"
    again.write_text(dump_lattice(L))
    L2 = load_lattice(again)
    assert L2.elements == L.elements and L2.leq_matrix == L.leq_matrix
    assert json.loads(dump_lattice(L))["name"] == "M3"


def test_bad_file(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("name: x\nelems: [a]\n")
    with pytest.raises(LatticeFormatError):
        load_lattice(path)
    path.write_text("[: not yaml")
    with pytest.raises(LatticeFormatError):
        load_lattice(path)


@pytest.mark.parametrize("gadget", [chain(3), diamond_m3(), pentagon_n5()], ids=lambda g: g.name)
def test_splice_keeps_base_as_sublattice(gadget):
    base = chain(3)
    L = splice(base, "0", "m", gadget, "g.")
    assert len(L) == len(base) + len(gadget) - 2
    for a, b in itertools.product(base.elements, repeat=2):
        assert L.join(a, b) == base.join(a, b)
        assert L.meet(a, b) == base.meet(a, b)
    assert L.top == base.top and L.bottom == base.bottom


def test_insert_between_adds_one_element():
    L = insert_between(chain(2), "0", "1", "mid")
    assert L.leq("0", "mid") and L.leq("mid", "1") and len(L) == 3


def test_product_is_componentwise():
    P = product(chain(2), chain(2))
    assert len(P) == 4
    assert P.join("(0,1)", "(1,0)") == "(1,1)"
