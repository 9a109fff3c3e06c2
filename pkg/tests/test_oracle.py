from __future__ import annotations

import pytest
from hypothesis import given, settings

from helpers import random_schemes, scheme
from supcheck.oracle import (
    OMEGA_TREE,
    ApproxTree,
    Profiler,
    branch_profile,
    check_record,
    expand_tree,
    naive_saturate,
    oracle_unbounded_evidence,
    profile,
    profile_csv,
)
from supcheck.saturation import saturate


def test_expand_examples():
    assert str(expand_tree(scheme("S -> a S."), 3)) == "a(a(a(omega)))"
    assert str(expand_tree(scheme("S -> br c (a S)."), 4)) == "br(c, a(br(c, a(omega))))"
    assert str(expand_tree(scheme("S -> F c.\nF x -> br x (F (a x))."), 3)) == "br(c, br(a(omega), br(omega, omega)))"


def test_divergence_is_omega():
    g = scheme("S -> F c.\nF x -> F x.")
    assert expand_tree(g, 5) == OMEGA_TREE


def test_branch_profile_counts():
    t = ApproxTree("br", (ApproxTree("a", (ApproxTree("c"),)), ApproxTree("a", (OMEGA_TREE,))))
    assert branch_profile(t, ["a"]).f == 1
    assert branch_profile(OMEGA_TREE, ["a"]).f is None


def test_alternating_profile():
    # finite branches of br c (a S) reach level 2j with j - 1 letters
    rows = profile(scheme("S -> br c (a S)."), 8)
    assert [r.f for r in rows] == [None, 0, 0, 1, 1, 2, 2, 3]
    assert rows[3].f == 1
    assert profile_csv(rows[:2]) == "depth,f\n1,\n2,0"


def test_evidence():
    ev = oracle_unbounded_evidence(scheme("S -> br c (a S)."))
    assert ev.confirmed and ev.max_f == 5 and ev.depth == 12
    ev = oracle_unbounded_evidence(scheme("S -> a S."), depth_budget=30)
    assert not ev.confirmed and ev.max_f is None


def test_two_letter_profile():
    g = scheme("S -> br (F c) (G c).\nF x -> br x (F (a x)).\nG x -> br x (G (b x)).", "a -> 1. b -> 1. br -> 2. c -> 0.", "a. b.")
    assert profile(g, 30)[-1].f == 0
    assert profile(g, 30, letters=["a"])[-1].f >= 5


@settings(max_examples=60, deadline=None)
@given(random_schemes())
def test_profiler_matches_enumeration(g):
    p = Profiler(g, ["a"], cap=1 << 30)
    for d in range(1, 7):
        assert p.f(d) == branch_profile(expand_tree(g, d), ["a"]).f


@settings(max_examples=60, deadline=None)
@given(random_schemes())
def test_profile_monotone_and_prefix_consistent(g):
    rows = [r.f for r in profile(g, 25)]
    seen = [f for f in rows if f is not None]
    assert seen == sorted(seen)
    assert [r.f for r in profile(g, 10)] == rows[:10]
    t = expand_tree(g, 12)
    assert t.truncate(6) == expand_tree(g, 6)


def test_naive_table_includes_unused_rules():
    res = naive_saturate(scheme("S -> F c.\nU x -> a x.\nF x -> x."))
    lines = res.table.dump().splitlines()
    assert "U : ({a}, ({}, r) -> r) value=1 via {}" in lines
    assert "U : ({a}, ({a}, r) -> r) value=1 via {}" in lines


def test_naive_order_limit():
    g = scheme("S -> G Zero.\nG n -> br (n a c) (G (Succ n)).\nZero f x -> x.\nSucc n f x -> f (n f x).")
    with pytest.raises(ValueError):
        naive_saturate(g)


def test_check_record_rejects_forgery():
    g = scheme("S -> br c (a S).")
    res = saturate(g)
    rec = next(r for r in res.table.all_records() if r.value == (2,))
    assert check_record(rec, g)
    forged = type(rec)(rec.nonterminal, rec.mask, rec.ty, (3,), rec.assumptions)
    assert not check_record(forged, g)
