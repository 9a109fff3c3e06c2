"""0-CFA over rule bodies: which argument occurrences may reach a parameter.

An occurrence is an argument subterm identified by its rule and its path in
the rule body (0 = function side, 1 = argument side of an application).
Abstract values are partial applications ``(X, m)``: nonterminal ``X``
already given ``m`` arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .syntax import NonTerm, Scheme, Term, Var, spine


@dataclass(frozen=True)
class Occurrence:
    nonterminal: str
    path: tuple[int, ...]
    term: Term = field(compare=False, repr=False)

    def __str__(self) -> str:
        p = "".join(str(i) for i in self.path) or "e"
        return f"{self.nonterminal}@{p}[{self.term}]"


@dataclass
class _Spine:
    rule: str
    head: Term
    args: list[Occurrence]


def _spines(rule_name: str, body: Term) -> Iterator[_Spine]:
    """Every maximal application spine in ``body`` with its argument occurrences."""
    stack = [(body, ())]
    while stack:
        t, path = stack.pop()
        head, args = spine(t)
        k = len(args)
        occs = []
        for j, a in enumerate(args):
            # argument j sits under (k - 1 - j) function steps, then one argument step
            p = path + (0,) * (k - 1 - j) + (1,)
            occs.append(Occurrence(rule_name, p, a))
            stack.append((a, p))
        yield _Spine(rule_name, head, occs)


class FlowTable:
    def __init__(self) -> None:
        self.flows: dict[tuple[str, int], set[Occurrence]] = {}

    def get(self, nonterminal: str, index: int) -> set[Occurrence]:
        return self.flows.get((nonterminal, index), set())

    def __getitem__(self, key: tuple[str, int]) -> set[Occurrence]:
        return self.flows.get(key, set())

    def items(self):
        return sorted(self.flows.items())

    def into(self) -> dict[Occurrence, set[tuple[str, int]]]:
        """Inverse map: occurrence to the parameters it flows into."""
        out: dict = {}
        for key, occs in self.flows.items():
            for o in occs:
                out.setdefault(o, set()).add(key)
        return out

    def dump(self) -> str:
        lines = []
        for (x, i), occs in self.items():
            body = ", ".join(sorted(str(o) for o in occs))
            lines.append(f"({x}, {i + 1}) <- {{{body}}}")
        return "\n".join(lines)


def compute_flows(g: Scheme) -> FlowTable:
    """Least fixpoint of the flow rules; parameter indices are 0-based."""
    spines = [sp for x, r in g.rules.items() for sp in _spines(x, r.body)]
    params = {x: {p.name: i for i, p in enumerate(r.params)} for x, r in g.rules.items()}
    table = FlowTable()
    flows = table.flows
    values: dict[Occurrence, set[tuple[str, int]]] = {}

    def occ_values(o: Occurrence) -> set[tuple[str, int]]:
        head, args = spine(o.term)
        m = len(args)
        if isinstance(head, NonTerm):
            return {(head.name, m)}
        if isinstance(head, Var):
            i = params[o.nonterminal][head.name]
            out = set()
            for src in flows.get((o.nonterminal, i), ()):
                for x, m2 in values.get(src, ()):
                    out.add((x, m2 + m))
            return out
        return set()

    changed = True
    while changed:
        changed = False
        for sp in spines:
            for o in sp.args:
                v = occ_values(o)
                if not v <= values.get(o, set()):
                    values.setdefault(o, set()).update(v)
                    changed = True
            if isinstance(sp.head, NonTerm):
                targets = [(sp.head.name, 0)]
            elif isinstance(sp.head, Var):
                i = params[sp.rule][sp.head.name]
                targets = set()
                for src in flows.get((sp.rule, i), ()):
                    targets |= values.get(src, set())
            else:
                continue
            for x, m in targets:
                for j, o in enumerate(sp.args):
                    key = (x, m + j)
                    if key[1] >= len(g.rules[x].params):
                        continue
                    bucket = flows.setdefault(key, set())
                    if o not in bucket:
                        bucket.add(o)
                        changed = True
    return table
