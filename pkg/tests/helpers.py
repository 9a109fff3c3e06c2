"""Shared fixtures data: corpus loading and a small random scheme generator."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from hypothesis import reject
from hypothesis import strategies as st

from supcheck.cli import load_scheme, read_expect
from supcheck.parser import parse_scheme
from supcheck.syntax import SortError
from supcheck.saturation import saturate
from supcheck.verdict import decide

CORPUS = Path(__file__).parent / "corpus"


@dataclass
class Entry:
    name: str
    path: Path
    meta: dict

    @property
    def scheme(self):
        return load_scheme(self.path)

    @property
    def expect(self) -> str:
        return self.meta["verdict"]

    @property
    def truth(self) -> str:
        return self.meta["truth"].upper()

    @property
    def order(self) -> int:
        return int(self.meta["order"])

    @property
    def safe(self) -> bool:
        return self.meta["safe"] == "yes"


def corpus() -> list[Entry]:
    return [Entry(p.stem, p, read_expect(p.with_suffix(".expect"))) for p in sorted(CORPUS.glob("*.hrs"))]


@lru_cache(maxsize=None)
def analysed(name: str):
    """Default-flag saturation and verdict for a corpus scheme, cached."""
    g = load_scheme(CORPUS / f"{name}.hrs")
    res = saturate(g)
    return g, res, decide(res, g)


def scheme(rules: str, terminals: str = "a -> 1. br -> 2. c -> 0.", letters: str = "a."):
    return parse_scheme(f"%BEGING\n{rules}\n%ENDG\n%BEGINT\n{terminals}\n%ENDT\n%BEGINI\n{letters}\n%ENDI\n")


# Random order-1 schemes over a, b, br, c with nonterminals S (sort o) and
# F, G (sort o -> o).


def _body(draw, depth: int, params: list[str]) -> str:
    leaves = ["c"] + params + ["S"]
    if depth <= 0:
        return draw(st.sampled_from(leaves))
    kind = draw(st.sampled_from(["leaf", "a", "b", "br", "F", "G"]))
    if kind == "leaf":
        return draw(st.sampled_from(leaves))
    if kind == "br":
        return f"br ({_body(draw, depth - 1, params)}) ({_body(draw, depth - 1, params)})"
    return f"{kind} ({_body(draw, depth - 1, params)})"


@st.composite
def random_schemes(draw, letters: str = "a."):
    s_body = _body(draw, draw(st.integers(1, 3)), [])
    if s_body == "S":
        s_body = "a S"
    f_body = _body(draw, draw(st.integers(1, 3)), ["x"])
    g_body = _body(draw, draw(st.integers(1, 3)), ["x"])
    rules = f"S -> {s_body}.\nF (x : o) -> {f_body}.\nG (x : o) -> {g_body}."
    try:
        return scheme(rules, "a -> 1. b -> 1. br -> 2. c -> 0.", letters)
    except SortError:
        # e.g. F x -> F c leaves the result sort of F open
        reject()


# Hand-labelled terms for the safety and homogeneity deciders:
# (label, term, superficially safe, safe, homogeneous).

from supcheck.syntax import O, Abs, Arrow, Const, NonTerm, Var, apply, is_homogeneous_sort, make_sort, subterms  # noqa: E402

O1 = Arrow(O, O)
O2 = Arrow(O1, O)


def term_is_homogeneous(t) -> bool:
    return all(is_homogeneous_sort(u.sort) for u in subterms(t))


def structural_cases():
    x, y = Var("x", O), Var("y", O)
    f = Var("f", O1)
    a, c = Const("a", 1), Const("c", 0)
    k = NonTerm("K", make_sort([O, O]))
    big_f = NonTerm("F", O2)
    g = NonTerm("G", O2)
    bad = NonTerm("N", make_sort([O, O1]))
    good = NonTerm("M", make_sort([O2, O1]))
    nested = NonTerm("P", make_sort([make_sort([O, O1])]))
    h = NonTerm("H", make_sort([O, O, O1]))
    return [
        ("constant", c, True, True, True),
        ("ground variable", x, True, True, True),
        ("letter over variable", apply(a, x), True, True, True),
        ("partial application over ground variable", apply(k, x), False, False, True),
        ("closed by abstraction", Abs(x, apply(k, x)), True, True, True),
        ("unsafe argument", apply(big_f, apply(k, x)), True, False, True),
        ("unsafe argument under binder", Abs(x, apply(big_f, apply(k, x))), True, False, True),
        ("unsafe head", apply(Abs(y, apply(a, x)), c), True, False, True),
        ("order one variable as argument", apply(g, f), True, True, True),
        ("abstraction with free ground variable", Abs(y, apply(a, x)), False, False, True),
        ("higher order binder over safe body", Abs(f, Abs(x, apply(f, apply(a, x)))), True, True, True),
        ("increasing argument orders", bad, True, True, False),
        ("decreasing argument orders", good, True, True, True),
        ("inhomogeneous argument sort", nested, True, True, False),
        ("inhomogeneous partial application", apply(h, c), True, True, False),
    ]


# The worked derivation for \y.\z. y (y (a z)) with one letter a.

from supcheck.intertypes import ATOM, arrows  # noqa: E402
from supcheck.typecheck import merge_application, type_abstraction, type_constant, type_variable  # noqa: E402

PR_R = (1, ATOM)
R_TO_R = arrows([{PR_R: 1}])


def worked_example(y_mask: int = 1) -> dict:
    yv, zv = Var("y", O1), Var("z", O)
    a = type_constant("a", 1, 1, PR_R, ["a"])
    z = type_variable(zv, PR_R, 1)
    y = type_variable(yv, (y_mask, R_TO_R), 1)
    az = merge_application(a, [z], 1, zv)
    yaz = merge_application(y, [az], 1, az.term)
    yyaz = merge_application(y, [yaz], 1, yaz.term)
    lz = type_abstraction(yyaz, zv, 1)
    ly = type_abstraction(lz, yv, 1)
    return {"a z": az, "y (a z)": yaz, "y (y (a z))": yyaz, "\\z": lz, "\\y": ly}
