from __future__ import annotations

import itertools

from hypothesis import given
from hypothesis import strategies as st

from helpers import O1, O2
from supcheck.intertypes import (
    ATOM,
    arrow,
    arrows,
    chi,
    dupl,
    dupl_vector,
    enumerate_types,
    flag_of,
    render_ty,
    smultiset_size,
    smultiset_union,
    ty_matches_sort,
)
from supcheck.syntax import O

PR, NP = 1, 0


def test_atom_is_unique():
    assert enumerate_types(O, 1).__next__() is ATOM
    assert list(enumerate_types(O, 3)) == [ATOM]


def test_enumeration_counts():
    assert len(list(enumerate_types(O1, 1))) == 4
    assert len(list(enumerate_types(O1, 2))) == 9
    # two letters: four productivity sets per argument pair
    assert len(list(enumerate_types(O1, 1, letters=2))) == 16


def test_enumeration_is_duplicate_free_and_well_sorted():
    tys = list(enumerate_types(O2, 1))
    assert len(set(tys)) == len(tys)
    assert all(ty_matches_sort(t, O2) for t in tys)


def test_interning():
    a = arrow({(PR, ATOM): 1}, ATOM)
    b = arrows([{(PR, ATOM): 1}])
    assert a is b
    assert arrow({(PR, ATOM): 1}, ATOM) is not arrow({(NP, ATOM): 1}, ATOM)


def test_render():
    ty = arrows([{(PR, arrows([{(PR, ATOM): 1}])): 1}, {(PR, ATOM): 1}])
    assert render_ty(ty, ["a"]) == "({a}, ({a}, r) -> r) -> ({a}, r) -> r"
    assert render_ty(arrows([{}]), ["a"]) == "T -> r"


def test_chi_and_flag():
    assert chi(0b101, 3) == (1, 0, 1)
    assert flag_of((0, 4, 1)) == 0b110


small = st.dictionaries(st.sampled_from("pqrs"), st.integers(1, 2), max_size=4)


@given(small, small, st.integers(1, 2))
def test_union_law(u, v, s):
    u = {k: min(c, s) for k, c in u.items()}
    v = {k: min(c, s) for k, c in v.items()}
    w = smultiset_union(u, v, s)
    for k in set(u) | set(v):
        assert w[k] == min(u.get(k, 0) + v.get(k, 0), s)


@given(st.lists(st.dictionaries(st.tuples(st.sampled_from("xy"), st.integers(0, 3)), st.integers(1, 2), max_size=3), max_size=4))
def test_dupl_counts_lost_copies(envs):
    envs = [{(name, mask, ATOM): c for (name, mask), c in e.items()} for e in envs]
    s = 2
    for letter in range(2):
        d = dupl(envs, letter, s)
        assert d >= 0
        # pairwise folding telescopes to the global count
        acc: dict = {}
        total = 0
        for e in envs:
            total += dupl([acc, e], letter, s)
            acc = smultiset_union(acc, e, s)
        assert total == d
    assert len(dupl_vector(envs, 2, s)) == 2


def test_dupl_example():
    y = ("y", PR, ATOM)
    z = ("z", PR, ATOM)
    assert dupl([{y: 1}, {y: 1, z: 1}], 0, 1) == 1
    assert dupl([{y: 1}, {y: 1}], 0, 2) == 0
    assert dupl([{("y", NP, ATOM): 1}, {("y", NP, ATOM): 1}], 0, 1) == 0


def test_size_of_union_bounded():
    for u, v in itertools.product([{}, {"p": 1}, {"p": 2, "q": 1}], repeat=2):
        assert smultiset_size(smultiset_union(u, v, 2)) <= smultiset_size(u) + smultiset_size(v)
