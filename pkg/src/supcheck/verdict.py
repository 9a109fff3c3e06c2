"""From the derivation graph to a verdict.

For every node ``u`` reachable from the start binding we compute ``F(u)``, the
sets of letters that derivations rooted at ``u`` can make simultaneously
large.  It is the least family with

* ``{} in F(u)``;
* record rule: a record at ``u`` whose assumption leaves are ``Y1..Yk`` and
  ``Li in F(Yi)`` gives ``L1 | .. | Lk in F(u)``;
* pump rule: for ``u`` on a cycle of its strongly connected component ``S``
  and ``L in F(u)``, ``pump(S) | L in F(u)``.  ``pump(S)`` holds the letters
  of productive edges inside ``S`` and the masks of ``F(Y)`` for the side
  leaves ``Y`` of records that continue inside ``S``.

The answer is UNBOUNDED when the full mask lands in ``F`` of the start
binding.  With one letter this is exactly "a cycle with a productive edge is
reachable from the start binding", see :func:`cycle_criterion`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import networkx as nx

from .intertypes import chi, full_mask, mask_letters
from .saturation import SaturationResult, binding_key, record_key
from .syntax import Scheme, scheme_is_safe
from .typecheck import Binding, DerivationRecord, binding_str

UNBOUNDED = "UNBOUNDED"
BOUNDED = "BOUNDED"
UNKNOWN = "UNKNOWN"


def _leaves(r: DerivationRecord) -> list[Binding]:
    """Assumption leaves of a record, one entry per use."""
    return [b for b, c in r.assumptions for _ in range(c)]


@dataclass(frozen=True)
class Step:
    """Use ``record`` and continue the walk at leaf position ``position``."""

    record: DerivationRecord
    position: int

    @property
    def source(self) -> Binding:
        return self.record.binding

    @property
    def target(self) -> Binding:
        return _leaves(self.record)[self.position]


@dataclass
class Fact:
    id: int
    node: Binding
    mask: int
    kind: str  # "base", "record" or "pump"
    record: Optional[DerivationRecord] = None
    parts: tuple = ()  # record: fact id or None per leaf position
    inner: Optional[int] = None  # pump: the fact being extended
    scc: Optional[int] = None
    contributions: tuple = ()  # pump: (step index, leaf position, fact id)


@dataclass
class Visit:
    step: Step
    side: dict = field(default_factory=dict)  # leaf position -> fact id


class LetterFixpoint:
    def __init__(self, res: SaturationResult, n: int):
        self.res = res
        self.n = n
        self.full = full_mask(n)
        self.nodes = sorted(res.reachable(), key=binding_key)
        self.records = {u: sorted(res.table.records[u], key=record_key) for u in self.nodes}

        dg = nx.DiGraph()
        dg.add_nodes_from(self.nodes)
        dg.add_edges_from((u, y) for u in self.nodes for r in self.records[u] for y, _ in r.assumptions)
        comps = [sorted(c, key=binding_key) for c in nx.strongly_connected_components(dg)]
        comps.sort(key=lambda c: binding_key(c[0]))
        self.comp_of = {u: i for i, c in enumerate(comps) for u in c}
        self.comps = comps
        self.steps: dict[int, list[Step]] = {}
        self.prod: dict[int, int] = {}
        for i, comp in enumerate(comps):
            members = set(comp)
            steps = []
            for u in comp:
                for r in self.records[u]:
                    seen = set()
                    for pos, y in enumerate(_leaves(r)):
                        if y in members and y not in seen:
                            seen.add(y)
                            steps.append(Step(r, pos))
            if steps:
                self.steps[i] = steps
                mask = 0
                for (x, y), m in res.graph.edges.items():
                    if x in members and y in members:
                        mask |= m
                self.prod[i] = mask

        self.facts: list[Fact] = []
        self.F: dict[Binding, dict[int, int]] = {u: {} for u in self.nodes}
        for u in self.nodes:
            self._add(Fact(0, u, 0, "base"))
        self._run()

    def _add(self, fact: Fact) -> bool:
        known = self.F[fact.node]
        if fact.mask in known:
            return False
        fact.id = len(self.facts)
        self.facts.append(fact)
        known[fact.mask] = fact.id
        return True

    def _record_rule(self, u: Binding, r: DerivationRecord) -> bool:
        acc = {0: ()}
        for y in _leaves(r):
            nxt: dict = {}
            for m, ids in acc.items():
                for L, fid in self.F[y].items():
                    nxt.setdefault(m | L, ids + (fid if L else None,))
            acc = nxt
        changed = False
        for m, ids in sorted(acc.items()):
            changed |= self._add(Fact(0, u, m, "record", record=r, parts=ids))
        return changed

    def _pump_rule(self, i: int) -> bool:
        mask = self.prod[i]
        contributions = []
        for si, st in enumerate(self.steps[i]):
            for pos, y in enumerate(_leaves(st.record)):
                if pos == st.position:
                    continue
                for L, fid in sorted(self.F[y].items()):
                    if L & ~mask:
                        contributions.append((si, pos, fid))
                        mask |= L
        if not mask:
            return False
        changed = False
        for u in self.comps[i]:
            for L, fid in sorted(self.F[u].items()):
                if (L | mask) not in self.F[u]:
                    changed |= self._add(
                        Fact(0, u, L | mask, "pump", inner=fid, scc=i, contributions=tuple(contributions))
                    )
        return changed

    def _run(self) -> None:
        changed = True
        while changed:
            changed = False
            for u in self.nodes:
                for r in self.records[u]:
                    changed |= self._record_rule(u, r)
            for i in sorted(self.steps):
                changed |= self._pump_rule(i)

    # walks

    def walk(self, fact: Fact) -> list[Visit]:
        """A closed walk from ``fact.node`` through every step of its component."""
        steps = self.steps[fact.scc]
        per_step: dict[int, list[dict]] = {}
        for si, pos, fid in fact.contributions:
            slots = per_step.setdefault(si, [])
            for slot in slots:
                if pos not in slot:
                    slot[pos] = fid
                    break
            else:
                slots.append({pos: fid})
        visits: list[Visit] = []
        cur = fact.node
        for si, st in enumerate(steps):
            for side in per_step.get(si, [{}]):
                visits.extend(self._path(fact.scc, cur, st.source))
                visits.append(Visit(st, dict(side)))
                cur = st.target
        visits.extend(self._path(fact.scc, cur, fact.node))
        return visits

    def _path(self, i: int, src: Binding, dst: Binding) -> list[Visit]:
        if src == dst:
            return []
        back = {src: None}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for st in self.steps[i]:
                if st.source == u and st.target not in back:
                    back[st.target] = st
                    if st.target == dst:
                        queue.clear()
                        break
                    queue.append(st.target)
        out = []
        v = dst
        while v != src:
            st = back[v]
            out.append(Visit(st))
            v = st.source
        out.reverse()
        return out


# --------------------------------------------------------------------------
# Witnesses


class Witness:
    """A derivation plan for the start binding in which every pump can be
    repeated; see :func:`replay_witness`."""

    def __init__(self, fp: LetterFixpoint, root: int, letters: Sequence[str]):
        self.fp = fp
        self.root = root
        self.letters = list(letters)
        self._walks: dict[int, list[Visit]] = {}

    @property
    def start(self) -> Binding:
        return self.fp.facts[self.root].node

    def walk(self, fid: int) -> list[Visit]:
        if fid not in self._walks:
            self._walks[fid] = self.fp.walk(self.fp.facts[fid])
        return self._walks[fid]

    def pumps(self) -> list[int]:
        """Pump facts in the plan, depth-first from the root."""
        out: list[int] = []
        seen = set()

        def visit(fid):
            if fid is None or fid in seen:
                return
            seen.add(fid)
            f = self.fp.facts[fid]
            if f.kind == "record":
                for p in f.parts:
                    visit(p)
            elif f.kind == "pump":
                out.append(fid)
                for v in self.walk(fid):
                    for p in v.side.values():
                        visit(p)
                visit(f.inner)

        visit(self.root)
        return out

    def path_to(self, target: int) -> Optional[list[Binding]]:
        """Bindings from the root down to the node of fact ``target``."""

        def go(fid, trail):
            if fid == target:
                return trail
            f = self.fp.facts[fid]
            kids = []
            if f.kind == "record":
                kids = [(p, True) for p in f.parts if p is not None]
            elif f.kind == "pump":
                kids = [(f.inner, False)]
                kids += [(p, True) for v in self.walk(fid) for p in v.side.values()]
            for k, step in kids:
                found = go(k, trail + [self.fp.facts[k].node] if step else trail)
                if found:
                    return found
            return None

        return go(self.root, [self.start])

    def cycle(self, fid: int) -> list[Binding]:
        w = self.walk(fid)
        return [v.step.source for v in w] + [w[-1].step.target] if w else []

    def to_json(self) -> dict:
        render = lambda b: binding_str(b, self.letters)  # noqa: E731
        pumps = self.pumps()
        out: dict = {"path": [], "cycle": [], "pumps": []}
        for k, fid in enumerate(pumps):
            f = self.fp.facts[fid]
            walk = self.walk(fid)
            edges = []
            for v in walk:
                e = self.fp.res.graph.edges.get((v.step.source, v.step.target), 0)
                edges.append(mask_letters(e, self.letters))
            entry = {
                "node": render(f.node),
                "letters": mask_letters(f.mask & ~self.fp.facts[f.inner].mask, self.letters),
                "cycle": [render(b) for b in self.cycle(fid)],
                "productive": edges,
            }
            out["pumps"].append(entry)
            if k == 0:
                out["path"] = [render(b) for b in self.path_to(fid) or []]
                out["cycle"] = entry["cycle"]
        return out


def find_witness(res: SaturationResult, letters: Sequence[str]) -> Optional[Witness]:
    n = len(letters)
    if res.start not in res.table or n == 0:
        return None
    fp = LetterFixpoint(res, n)
    fid = fp.F[res.start].get(full_mask(n))
    if fid is None:
        return None
    return Witness(fp, fid, letters)


def replay_witness(w: Witness, k: int) -> tuple[int, ...]:
    """Lower bound on the value of the start derivation with every pump
    repeated ``k`` times.

    A record contributes ``v + sum(val(child) - w(child))`` where ``w`` is the
    0/1 price of the child's assumption; a leaf with no plan contributes 0,
    since any derivation of a binding is worth at least its price.
    """
    fp = w.fp
    n = fp.n
    memo: dict = {}

    def sub(vec, b):
        return tuple(x - y for x, y in zip(vec, chi(b[1], n)))

    def add(*vecs):
        return tuple(map(sum, zip(*vecs)))

    def excess(fid, b):
        if fid is None:
            return (0,) * n
        return sub(val(fid), b)

    def record_value(r: DerivationRecord, kids: dict) -> tuple:
        total = r.value
        for pos, y in enumerate(_leaves(r)):
            total = add(total, kids(pos, y))
        return total

    def val(fid):
        if fid in memo:
            return memo[fid]
        f = fp.facts[fid]
        if f.kind == "base":
            out = chi(f.node[1], n)
        elif f.kind == "record":
            out = record_value(f.record, lambda pos, y: excess(f.parts[pos], y))
        else:
            out = val(f.inner)
            walk = w.walk(fid)
            for _ in range(k):
                for v in reversed(walk):
                    cont, st = out, v.step

                    def kids(pos, y, cont=cont, st=st, side=v.side):
                        if pos == st.position:
                            return sub(cont, y)
                        return excess(side.get(pos), y)

                    out = record_value(st.record, kids)
        memo[fid] = out
        return out

    return val(w.root)


def check_witness(w: Witness) -> bool:
    """Every walk is a closed chain of stored records."""
    table = w.fp.res.table
    for fid in w.pumps():
        f = w.fp.facts[fid]
        cur = f.node
        walk = w.walk(fid)
        if not walk:
            return False
        for v in walk:
            r = v.step.record
            if r.binding != cur or r not in table.records.get(cur, ()):
                return False
            cur = v.step.target
        if cur != f.node:
            return False
    return True


# --------------------------------------------------------------------------
# Graph-only criteria


def _reachable_components(res: SaturationResult) -> list[tuple[set, bool]]:
    nodes = res.reachable()
    dg = nx.DiGraph()
    dg.add_nodes_from(nodes)
    dg.add_edges_from((x, y) for (x, y) in res.graph.edges if x in nodes)
    return [(c, len(c) > 1 or dg.has_edge(next(iter(c)), next(iter(c)))) for c in nx.strongly_connected_components(dg)]


def scc_criterion(res: SaturationResult, n: int) -> bool:
    """Some reachable component has, for every letter, a productive edge inside it."""
    if res.start not in res.table:
        return False
    for comp, _ in _reachable_components(res):
        mask = 0
        for (x, y), m in res.graph.edges.items():
            if x in comp and y in comp:
                mask |= m
        if mask == full_mask(n):
            return True
    return False


def cycle_criterion(res: SaturationResult, letter: int = 0) -> bool:
    """A cycle through an edge productive in ``letter`` is reachable from the start."""
    if res.start not in res.table:
        return False
    nodes = res.reachable()
    for (x, y), m in res.graph.edges.items():
        if x in nodes and m >> letter & 1 and x in res.graph.reachable_from(y):
            return True
    return False


# --------------------------------------------------------------------------
# Verdict


@dataclass
class Verdict:
    outcome: str
    scheme_safe: bool
    witness: Optional[Witness] = None

    def to_json(self) -> Optional[dict]:
        return self.witness.to_json() if self.witness else None


def decide(res: SaturationResult, g: Scheme) -> Verdict:
    safe = scheme_is_safe(g)
    w = find_witness(res, g.important)
    if w is not None:
        return Verdict(UNBOUNDED, safe, w)
    return Verdict(BOUNDED if safe else UNKNOWN, safe, None)
