"""The main fixpoint: every derivable nonterminal binding, and the graph of
assumption uses between them.

Work is driven by a FIFO queue of two kinds of events: a new nonterminal
binding, and a new type pair for an argument occurrence flowing into a
parameter.  Three toggles trade re-typing work for bookkeeping:

* ``fntty``: after a new binding, re-type only bodies that mention it,
  keeping derivations that use it;
* ``ftty``: after a new pair for parameter ``i`` of ``X``, re-type ``X``
  keeping derivations that use that pair;
* ``hvo``: when no parameter of ``X`` is applied in its body, let each
  parameter occurrence take whatever pair its context requests instead of
  consulting the flow table.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .flows import FlowTable, Occurrence, compute_flows
from .intertypes import ATOM, Ty, TyPair, chi, full_mask, render_mask, render_ty
from .typecheck import (
    Binding,
    Budget,
    DerivationRecord,
    Deriver,
    ResourceExceeded,
    binding_str,
    type_body,
)
from .syntax import NonTerm, Rule, Scheme, Var, free_vars, spine, subterms

__all__ = [
    "BindingTable",
    "DerivGraph",
    "Options",
    "all_option_combinations",
    "ResourceExceeded",
    "SaturationResult",
    "Stats",
    "hvo_applicable",
    "saturate",
]


@dataclass(frozen=True)
class Options:
    ftty: bool = True
    fntty: bool = True
    hvo: bool = True
    timeout: Optional[float] = 600.0
    max_steps: Optional[int] = None

    def label(self) -> str:
        off = [f"-no{name}" for name in ("ftty", "fntty", "hvo") if not getattr(self, name)]
        return " ".join(off) or "default"


def all_option_combinations(timeout: Optional[float] = 600.0) -> list[Options]:
    return [
        Options(ftty=bool(i & 1), fntty=bool(i & 2), hvo=bool(i & 4), timeout=timeout)
        for i in range(7, -1, -1)
    ]


def hvo_applicable(rule: Rule) -> bool:
    """True when no parameter of the rule is applied to an argument."""
    params = set(rule.params)
    for u in subterms(rule.body):
        head, args = spine(u)
        if args and isinstance(head, Var) and head in params:
            return False
    return True


class BindingTable:
    """Derived bindings with their supporting records, plus the type pairs
    found for argument occurrences and, through flows, for parameters."""

    def __init__(self, letters: Sequence[str]):
        self.letters = list(letters)
        self.bindings: dict[str, list[tuple[int, Ty]]] = {}
        self.records: dict[Binding, set[DerivationRecord]] = {}
        self.occ_pairs: dict[Occurrence, set[TyPair]] = {}
        self.param_pairs: dict[tuple[str, int], set[TyPair]] = {}

    def __contains__(self, b: Binding) -> bool:
        return b in self.records

    def __len__(self) -> int:
        return len(self.records)

    def entries(self) -> set[Binding]:
        return set(self.records)

    def add_record(self, rec: DerivationRecord) -> bool:
        """Store a record; return True if its binding is new."""
        b = rec.binding
        bucket = self.records.get(b)
        if bucket is None:
            self.records[b] = {rec}
            self.bindings.setdefault(b[0], []).append((b[1], b[2]))
            return True
        bucket.add(rec)
        return False

    def all_records(self) -> Iterator[DerivationRecord]:
        for recs in self.records.values():
            yield from recs

    def dump(self) -> str:
        lines = []
        for b in sorted(self.records, key=binding_key):
            for r in sorted(self.records[b], key=record_key):
                lines.append(r.render(self.letters))
        return "\n".join(lines)


def binding_key(b: Binding):
    return (b[0], b[1], b[2].sort_key)


def record_key(r: DerivationRecord):
    return (binding_key(r.binding), r.value, [(binding_key(a), c) for a, c in r.assumptions])


class DerivGraph:
    """Nodes are bindings; an edge X -> Y means some record of X assumes Y.

    The edge label is the mask of letters ``a`` with ``v(a) > w_Y(a)`` for
    some such record, where ``w_Y`` is the 0/1 vector of Y's mask.
    """

    def __init__(self, n: int):
        self.n = n
        self.nodes: set[Binding] = set()
        self.edges: dict[tuple[Binding, Binding], int] = {}
        self._succ: dict[Binding, set[Binding]] = {}

    def add_record(self, rec: DerivationRecord) -> None:
        src = rec.binding
        self.nodes.add(src)
        for dst, count in rec.assumptions:
            w = chi(dst[1], self.n)
            mask = 0
            for i in range(self.n):
                if rec.value[i] > w[i]:
                    mask |= 1 << i
            key = (src, dst)
            self.edges[key] = self.edges.get(key, 0) | mask
            self._succ.setdefault(src, set()).add(dst)

    def successors(self, b: Binding) -> set[Binding]:
        return self._succ.get(b, set())

    def reachable_from(self, start: Binding) -> set[Binding]:
        if start not in self.nodes:
            return set()
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in self._succ.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def productive_edges(self) -> int:
        return sum(1 for m in self.edges.values() if m)

    def to_dot(self, letters: Sequence[str]) -> str:
        colors = ["red", "blue", "darkgreen", "orange", "purple", "brown"]
        names = {b: f"n{i}" for i, b in enumerate(sorted(self.nodes, key=binding_key))}
        lines = ["digraph derivations {"]
        for b, nid in names.items():
            label = f"{b[0]}:({render_mask(b[1], letters)}, {render_ty(b[2], letters)})"
            lines.append(f'  {nid} [label="{_dot_escape(label)}"];')
        for (src, dst), mask in sorted(self.edges.items(), key=lambda e: (names[e[0][0]], names[e[0][1]])):
            if mask:
                prod = [a for i, a in enumerate(letters) if mask >> i & 1]
                color = ":".join(colors[letters.index(a) % len(colors)] for a in prod)
                attrs = f'label="{",".join(prod)}", color="{color}", style=bold'
            else:
                attrs = "style=dashed"
            lines.append(f"  {names[src]} -> {names[dst]} [{attrs}];")
        lines.append("}")
        return "\n".join(lines)


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


@dataclass
class Stats:
    iterations: int = 0
    bindings: int = 0
    edges: int = 0
    productive_edges: int = 0
    ms: float = 0.0

    def as_dict(self) -> dict:
        return {
            "bindings": self.bindings,
            "edges": self.edges,
            "productive_edges": self.productive_edges,
            "iterations": self.iterations,
            "ms": round(self.ms, 3),
        }


@dataclass
class SaturationResult:
    table: BindingTable
    graph: DerivGraph
    stats: Stats
    start: Binding
    hvo_rules: frozenset = field(default_factory=frozenset)

    def __iter__(self):
        yield self.table
        yield self.graph

    def reachable(self) -> set[Binding]:
        return self.graph.reachable_from(self.start) if self.start in self.table else set()


def start_binding(g: Scheme) -> Binding:
    return (g.start, full_mask(len(g.important)), ATOM)


class _Saturator:
    def __init__(self, g: Scheme, flows: FlowTable, opts: Options):
        self.g = g
        self.flows = flows
        self.opts = opts
        self.letters = list(g.important)
        self.n = len(self.letters)
        self.s = max(1, self.n)
        self.budget = Budget(opts.timeout, opts.max_steps)
        self.table = BindingTable(self.letters)
        self.graph = DerivGraph(self.n)
        self.stats = Stats()
        self.queue: deque = deque()

        self.reachable = g.reachable_nonterminals()
        reach = set(self.reachable)
        self.hvo = frozenset(x for x in self.reachable if opts.hvo and hvo_applicable(g.rules[x]))
        # occurrences inside reachable rules that flow somewhere
        self.targets: dict[Occurrence, list[tuple[str, int]]] = {}
        for o, keys in flows.into().items():
            if o.nonterminal in reach:
                self.targets[o] = sorted(k for k in keys if k[0] in reach)
        self.occurrences = sorted(self.targets, key=lambda o: (o.nonterminal, o.path))
        self.occ_nts = {o: _nonterminals(o.term) for o in self.occurrences}
        self.occ_vars = {o: {v.name for v in free_vars(o.term)} for o in self.occurrences}
        self.rule_nts = {x: _nonterminals(g.rules[x].body) for x in self.reachable}

    # candidates

    def _flow_candidates(self, x: str) -> dict:
        rule = self.g.rules[x]
        return {
            p.name: sorted(self.table.param_pairs.get((x, i), ()), key=_pair_key)
            for i, p in enumerate(rule.params)
        }

    def _rule_candidates(self, x: str) -> dict:
        if x in self.hvo:
            return {p.name: None for p in self.g.rules[x].params}
        return self._flow_candidates(x)

    # typing

    def type_rule(self, x: str, require=None) -> None:
        recs = type_body(
            self.g.rules[x],
            self._rule_candidates(x),
            self.table.bindings,
            letters=self.letters,
            s=self.s,
            require=require,
            budget=self.budget,
        )
        for r in sorted(recs, key=record_key):
            self.graph.add_record(r)
            if self.table.add_record(r):
                self.queue.append(("binding", r.binding))

    def type_occurrence(self, o: Occurrence) -> None:
        d = Deriver(
            self.letters, self.s, self.table.bindings, self._flow_candidates(o.nonterminal),
            budget=self.budget,
        )
        pairs = {(d.prod(out), ty) for ty, out in d.derive(o.term, None)}
        known = self.table.occ_pairs.setdefault(o, set())
        for p in sorted(pairs - known, key=_pair_key):
            known.add(p)
            for key in self.targets[o]:
                bucket = self.table.param_pairs.setdefault(key, set())
                if p not in bucket:
                    bucket.add(p)
                    self.queue.append(("pair", key, p))

    # events

    def on_binding(self, b: Binding, work: "_Round") -> None:
        y = b[0]
        if self.opts.fntty:
            for x in self.reachable:
                if y in self.rule_nts[x]:
                    work.rule(x, lambda r, b=b: r.uses(b) > 0)
            for o in self.occurrences:
                if y in self.occ_nts[o]:
                    work.occs.add(o)
        else:
            for x in self.reachable:
                work.rule(x, None)
            work.occs.update(self.occurrences)

    def on_pair(self, key: tuple[str, int], p: TyPair, work: "_Round") -> None:
        x, i = key
        rule = self.g.rules[x]
        name = rule.params[i].name
        if x not in self.hvo:
            if self.opts.ftty:
                work.rule(x, lambda r, i=i, p=p: _uses_param_pair(r.ty, i, p))
            else:
                work.rule(x, None)
        for o in self.occurrences:
            if o.nonterminal != x:
                continue
            if not self.opts.ftty or name in self.occ_vars[o]:
                work.occs.add(o)

    def run(self) -> SaturationResult:
        t0 = time.perf_counter()
        for x in self.reachable:
            self.type_rule(x)
        for o in self.occurrences:
            self.type_occurrence(o)
        while self.queue:
            # events queued so far form one round; each rule is re-typed once
            work = _Round()
            while self.queue:
                self.stats.iterations += 1
                self.budget.tick()
                ev = self.queue.popleft()
                if ev[0] == "binding":
                    self.on_binding(ev[1], work)
                else:
                    self.on_pair(ev[1], ev[2], work)
            for x in self.reachable:
                if x in work.rules:
                    self.type_rule(x, work.requirement(x))
            for o in self.occurrences:
                if o in work.occs:
                    self.type_occurrence(o)
        self.stats.ms = (time.perf_counter() - t0) * 1000
        self.stats.bindings = len(self.table)
        self.stats.edges = len(self.graph.edges)
        self.stats.productive_edges = self.graph.productive_edges()
        return SaturationResult(self.table, self.graph, self.stats, start_binding(self.g), self.hvo)


class _Round:
    """Pending re-typing work; ``None`` among a rule's filters means no filter."""

    def __init__(self) -> None:
        self.rules: dict[str, list] = {}
        self.occs: set[Occurrence] = set()

    def rule(self, x: str, keep) -> None:
        self.rules.setdefault(x, []).append(keep)

    def requirement(self, x: str):
        keeps = self.rules[x]
        if any(k is None for k in keeps):
            return None
        return lambda r: any(k(r) for k in keeps)


def _pair_key(p: TyPair):
    return (p[0], p[1].sort_key)


def _nonterminals(t) -> set[str]:
    return {u.name for u in subterms(t) if isinstance(u, NonTerm)}


def _uses_param_pair(ty: Ty, i: int, p: TyPair) -> bool:
    for _ in range(i):
        ty = ty.result
    return any(q == p for q, _ in ty.args)


def saturate(
    g: Scheme, flows: Optional[FlowTable] = None, opts: Optional[Options] = None
) -> SaturationResult:
    """Compute the binding table and derivation graph for ``g``.

    Raises :class:`ResourceExceeded` when the time or step cap is hit.
    """
    if flows is None:
        flows = compute_flows(g)
    return _Saturator(g, flows, opts or Options()).run()


def restrict(table: BindingTable, nodes: Iterable[Binding]) -> set[Binding]:
    return {b for b in nodes if b in table}


def render_bindings(bindings: Iterable[Binding], letters: Sequence[str]) -> list[str]:
    return [binding_str(b, letters) for b in sorted(bindings, key=binding_key)]
