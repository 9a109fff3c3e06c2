from __future__ import annotations

import pytest
from hypothesis import given, settings

from helpers import O1, PR_R, R_TO_R, random_schemes, scheme, worked_example
from supcheck.flows import compute_flows
from supcheck.intertypes import ATOM, arrow, arrows, enumerate_pairs
from supcheck.syntax import O, Const, Rule, Var, apply
from supcheck.typecheck import (
    Deriver,
    Judgment,
    canon,
    merge_application,
    type_body,
    type_constant,
    type_variable,
)

Y_PR = ("y", 1, R_TO_R)
Y_NP = ("y", 0, R_TO_R)
Z_PR = ("z", 1, ATOM)


def test_worked_example_judgments():
    j = worked_example()
    assert j["a z"].env == canon({Z_PR: 1}) and j["a z"].value == (1,) and j["a z"].ty is ATOM
    assert j["y (a z)"].env == canon({Z_PR: 1, Y_PR: 1}) and j["y (a z)"].value == (1,)
    assert j["y (y (a z))"].env == canon({Z_PR: 1, Y_PR: 1}) and j["y (y (a z))"].value == (2,)
    assert j["\\z"].env == canon({Y_PR: 1}) and j["\\z"].ty is R_TO_R and j["\\z"].value == (2,)
    closed = j["\\y"]
    assert closed.env == () and closed.value == (2,)
    assert closed.ty is arrow({(1, R_TO_R): 1}, R_TO_R)


def test_worked_example_nonproductive_y():
    j = worked_example(y_mask=0)["y (y (a z))"]
    assert j.env == canon({Z_PR: 1, Y_NP: 1})
    assert j.value == (1,)


def test_worked_example_top_down():
    y, z = Var("y", O1), Var("z", O)
    body = apply(y, apply(y, apply(Const("a", 1), z)))
    cands = {"y": enumerate_pairs(O1, 1), "z": enumerate_pairs(O, 1)}
    got = {(env, value) for _, (env, value, _) in Deriver(["a"], 1, {}, cands).derive(body, ATOM)}
    assert (canon({Z_PR: 1, Y_PR: 1}), (2,)) in got
    assert (canon({Z_PR: 1, Y_NP: 1}), (1,)) in got
    rule = Rule("F", (y, z), body)
    target = arrows([{(1, R_TO_R): 1}, {PR_R: 1}])
    recs = type_body(rule, {}, {}, target, letters=["a"])
    assert {r.value for r in recs} == {(2,)}


def test_constant_rule():
    j = type_constant("br", 2, 2, PR_R, ["a"])
    assert j.ty is arrows([{}, {PR_R: 1}])
    assert j.value == (0,)
    assert type_constant("a", 1, 1, (0, ATOM), ["a"]).value == (1,)
    assert type_constant("omega", 0, None, None, ["a"]) is None
    with pytest.raises(ValueError):
        type_constant("br", 2, 3, PR_R, ["a"])


def test_application_side_condition():
    a = type_constant("a", 1, 1, PR_R, ["a"])
    z_np = type_variable(Var("z", O), (0, ATOM), 1)
    # a asks for a productive argument; z nonproductive does not fit
    assert merge_application(a, [z_np], 1) is None
    c = Judgment((), Const("c", 0), (0,), ATOM)
    assert merge_application(type_constant("a", 1, 1, (0, ATOM), ["a"]), [c], 1).value == (1,)


def test_application_two_letters_dupl():
    y = type_variable(Var("y", O1), (0b11, arrows([{(0b11, ATOM): 1}])), 2)
    inner = Judgment(y.env, None, (1, 1), ATOM)
    # s = 2 keeps two copies, so no duplication is charged
    assert merge_application(y, [inner], 2).value == (1, 1)
    # s = 1 would charge one duplication in every letter
    assert merge_application(y, [inner], 1).value == (2, 2)


def _records(g, letters=None):
    letters = list(letters or g.important)
    flows = compute_flows(g)
    del flows
    out = set()
    for x, rule in g.rules.items():
        if not rule.params:
            out |= type_body(rule, {}, {}, letters=letters)
    return out


def test_closed_rule_records():
    g = scheme("S -> br c (a c).")
    recs = _records(g)
    assert {(r.mask, r.value) for r in recs} == {(1, (1,)), (0, (0,))}


def test_zero_letters_give_zero_values():
    g = scheme("S -> br c (a c).")
    recs = type_body(g.rules["S"], {}, {}, letters=[])
    assert recs and all(r.value == () for r in recs)


@settings(max_examples=40, deadline=None)
@given(random_schemes())
def test_type_body_deterministic(g):
    a = type_body(g.rules["S"], {}, {}, letters=["a"])
    b = type_body(g.rules["S"], {}, {}, letters=["a"])
    assert a == b


def test_more_assumptions_more_records():
    g = scheme("S -> F c.\nF x -> br x (F (a x)).")
    rule = g.rules["S"]
    f_ty = arrows([{(0, ATOM): 1}])
    small = type_body(rule, {}, {}, letters=["a"])
    big = type_body(rule, {}, {"F": [(0, f_ty)]}, letters=["a"])
    assert small <= big
