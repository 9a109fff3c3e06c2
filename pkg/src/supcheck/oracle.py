"""Reference implementations used to test the engine.

* Tree expansion: unfold the scheme by head reduction into a finite
  approximation of its tree, and measure letter counts along finite branches.
* Naive saturation: compute the binding table bottom-up, typing every
  variable at every type of its sort, with no flow pruning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .intertypes import (
    ATOM,
    arrows,
    dupl_vector,
    enumerate_pairs,
    flag_of,
    full_mask,
    smultiset_union,
)
from .saturation import BindingTable, DerivGraph, SaturationResult, Stats, record_key
from .syntax import OMEGA, App, Const, NonTerm, Scheme, Term, Var, spine
from .typecheck import (
    Binding,
    Budget,
    DerivationRecord,
    Judgment,
    collapse_records,
    type_assumption,
    type_constant,
    type_variable,
)

STEP_BUDGET = 10_000


# --------------------------------------------------------------------------
# Term pool and head reduction


class TermPool:
    """Hash-consed closed applicative terms ``head arg1 .. argk``.

    A term is an int id; ``nodes[id]`` is ``(head name, arg ids)``.
    """

    def __init__(self, g: Scheme, step_budget: int = STEP_BUDGET):
        self.g = g
        self.step_budget = step_budget
        self.nodes: list[tuple[str, tuple[int, ...]]] = []
        self._ids: dict = {}
        self._whnf: dict[int, Optional[int]] = {}

    def make(self, head: str, args: tuple[int, ...] = ()) -> int:
        key = (head, args)
        tid = self._ids.get(key)
        if tid is None:
            tid = len(self.nodes)
            self.nodes.append(key)
            self._ids[key] = tid
        return tid

    def start(self) -> int:
        return self.make(self.g.start)

    def _build(self, t: Term, env: Mapping[str, int]) -> int:
        head, args = spine(t)
        ids = tuple(self._build(a, env) for a in args)
        if isinstance(head, Var):
            h, pre = self.nodes[env[head.name]]
            return self.make(h, pre + ids)
        return self.make(head.name, ids)

    def head_normalize(self, tid: int) -> Optional[int]:
        """Reduce until a terminal heads the term; ``None`` on budget exhaustion."""
        if tid in self._whnf:
            return self._whnf[tid]
        seen = [tid]
        cur = tid
        result = None
        for _ in range(self.step_budget):
            if cur in self._whnf:
                result = self._whnf[cur]
                break
            head, args = self.nodes[cur]
            rule = self.g.rules.get(head)
            if rule is None:
                result = cur
                break
            k = len(rule.params)
            env = {p.name: a for p, a in zip(rule.params, args[:k])}
            body = self._build(rule.body, env)
            if len(args) > k:
                h, pre = self.nodes[body]
                body = self.make(h, pre + args[k:])
            cur = body
            seen.append(cur)
        for t in seen:
            self._whnf[t] = result
        return result


# --------------------------------------------------------------------------
# Approximation trees


@dataclass(frozen=True)
class ApproxTree:
    label: str
    children: tuple["ApproxTree", ...] = ()

    def __str__(self) -> str:
        if not self.children:
            return self.label
        return f"{self.label}({', '.join(str(c) for c in self.children)})"

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def truncate(self, depth: int) -> "ApproxTree":
        """Replace every node below ``depth`` by omega."""
        if depth <= 0:
            return ApproxTree(OMEGA)
        return ApproxTree(self.label, tuple(c.truncate(depth - 1) for c in self.children))


OMEGA_TREE = ApproxTree(OMEGA)


def expand_tree(g: Scheme, depth: int, pool: Optional[TermPool] = None) -> ApproxTree:
    """Unfold ``g`` to ``depth`` tree levels; the root is level 1."""
    pool = pool or TermPool(g)
    memo: dict = {}

    def go(tid: int, d: int) -> ApproxTree:
        if d <= 0:
            return OMEGA_TREE
        key = (tid, d)
        if key in memo:
            return memo[key]
        nf = pool.head_normalize(tid)
        if nf is None:
            out = OMEGA_TREE
        else:
            head, args = pool.nodes[nf]
            out = ApproxTree(head, tuple(go(a, d - 1) for a in args))
        memo[key] = out
        return out

    return go(pool.start(), depth)


def _tree_branches(t: ApproxTree) -> Iterable[list[str]]:
    if t.label == OMEGA:
        return
    if not t.children:
        yield [t.label]
        return
    for c in t.children:
        for b in _tree_branches(c):
            yield [t.label] + b


@dataclass(frozen=True)
class BranchProfile:
    depth: int
    f: Optional[int]  # None: no finite branch


def branch_profile(t: ApproxTree, letters: Sequence[str], depth: Optional[int] = None) -> BranchProfile:
    """Max over finite branches of the min letter count, by explicit enumeration."""
    best = None
    for b in _tree_branches(t):
        m = min((b.count(a) for a in letters), default=0)
        best = m if best is None else max(best, m)
    return BranchProfile(t.depth() if depth is None else depth, best)


def _pareto(vectors: Iterable[tuple]) -> tuple:
    vs = sorted(set(vectors), reverse=True)
    keep: list[tuple] = []
    for v in vs:
        if not any(all(a >= b for a, b in zip(k, v)) for k in keep):
            keep.append(v)
    return tuple(keep)


class Profiler:
    """Branch letter counts over the term DAG, shared across depths.

    ``frontier(tid, d)`` is the Pareto frontier of count vectors, capped at
    ``cap``, over finite branches within ``d`` levels.
    """

    def __init__(self, g: Scheme, letters: Sequence[str], cap: int, pool: Optional[TermPool] = None):
        self.pool = pool or TermPool(g)
        self.letters = list(letters)
        self.cap = cap
        self.memo: dict = {}
        self._chi = {}

    def _letter_vec(self, name: str) -> tuple:
        v = self._chi.get(name)
        if v is None:
            v = tuple(1 if a == name else 0 for a in self.letters)
            self._chi[name] = v
        return v

    def frontier(self, tid: int, d: int) -> tuple:
        stack = [(tid, d, False)]
        memo = self.memo
        while stack:
            t, dd, ready = stack.pop()
            key = (t, dd)
            if key in memo:
                continue
            if dd <= 0:
                memo[key] = ()
                continue
            nf = self.pool.head_normalize(t)
            if nf is None:
                memo[key] = ()
                continue
            head, args = self.pool.nodes[nf]
            if head == OMEGA:
                memo[key] = ()
                continue
            own = self._letter_vec(head)
            if not args:
                memo[key] = (tuple(min(x, self.cap) for x in own),)
                continue
            missing = [a for a in args if (a, dd - 1) not in memo]
            if missing and not ready:
                stack.append((t, dd, True))
                stack.extend((a, dd - 1, False) for a in missing)
                continue
            vecs = []
            for a in args:
                for v in memo[(a, dd - 1)]:
                    vecs.append(tuple(min(x + y, self.cap) for x, y in zip(v, own)))
            memo[key] = _pareto(vecs)
        return memo[(tid, d)]

    def f(self, d: int) -> Optional[int]:
        fr = self.frontier(self.pool.start(), d)
        if not fr:
            return None
        return max(min(v, default=0) for v in fr)


def profile(g: Scheme, depth: int, letters: Optional[Sequence[str]] = None, cap: int = 1 << 30) -> list[BranchProfile]:
    p = Profiler(g, g.important if letters is None else letters, cap)
    return [BranchProfile(d, p.f(d)) for d in range(1, depth + 1)]


def profile_csv(rows: Sequence[BranchProfile]) -> str:
    lines = ["depth,f"]
    for r in rows:
        lines.append(f"{r.depth},{'' if r.f is None else r.f}")
    return "\n".join(lines)


@dataclass
class OracleEvidence:
    confirmed: bool
    max_f: Optional[int]
    depth: int
    profile: list[BranchProfile] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"confirmed": self.confirmed, "max_f": self.max_f, "depth": self.depth}


def oracle_unbounded_evidence(
    g: Scheme, depth_budget: int = 200, threshold: int = 5, letters: Optional[Sequence[str]] = None
) -> OracleEvidence:
    """Sweep depths until some finite branch holds ``threshold`` of every letter."""
    p = Profiler(g, g.important if letters is None else letters, threshold)
    best = None
    rows = []
    for d in range(1, depth_budget + 1):
        f = p.f(d)
        rows.append(BranchProfile(d, f))
        if f is not None:
            best = f if best is None else max(best, f)
        if best is not None and best >= threshold:
            return OracleEvidence(True, best, d, rows)
    return OracleEvidence(False, best, depth_budget, rows)


# --------------------------------------------------------------------------
# Naive saturation


class _BottomUp:
    """All judgments of a lambda-free body, bottom-up.

    ``var_pairs`` gives the pairs a variable may take; ``None`` means every
    pair of its sort.
    """

    def __init__(self, g: Scheme, letters, s, table, var_pairs=None, budget=None):
        self.g = g
        self.letters = list(letters)
        self.n = len(letters)
        self.s = s
        self.table = table
        self.var_pairs = var_pairs
        self.budget = budget
        self.memo: dict = {}
        self._pairs_of_sort: dict = {}

    def pairs(self, x: Var) -> list:
        if self.var_pairs is not None:
            return list(self.var_pairs.get(x.name, ()))
        got = self._pairs_of_sort.get(x.sort)
        if got is None:
            got = enumerate_pairs(x.sort, self.s, self.n)
            self._pairs_of_sort[x.sort] = got
        return got

    def judgments(self, t: Term) -> list[Judgment]:
        key = id(t)
        if key in self.memo:
            return self.memo[key]
        if self.budget is not None:
            self.budget.tick()
        if isinstance(t, Const):
            out = self._const(t)
        elif isinstance(t, Var):
            out = [type_variable(t, p, self.n) for p in self.pairs(t)]
        elif isinstance(t, NonTerm):
            out = [type_assumption(t, m, ty, self.n) for m, ty in self.table.get(t.name, ())]
        elif isinstance(t, App):
            out = self._app(t)
        else:
            raise TypeError("lambda inside a rule body")
        out = _collapse_judgments(out)
        self.memo[key] = out
        return out

    def _const(self, c: Const) -> list[Judgment]:
        if c.name == OMEGA:
            return []
        if c.arity == 0:
            return [type_constant(c.name, 0, None, None, self.letters)]
        return [
            type_constant(c.name, c.arity, j, (mask, ATOM), self.letters)
            for j in range(1, c.arity + 1)
            for mask in range(1 << self.n)
        ]

    def _app(self, t: App) -> list[Judgment]:
        funs = self.judgments(t.fun)
        if not funs:
            return []
        by_pair: dict = {}
        if any(fj.ty.args for fj in funs):
            for j in self.judgments(t.arg):
                by_pair.setdefault((j.productivity, j.ty), []).append(j)
        out = []
        for fj in funs:
            acc = [fj]
            for p, c in fj.ty.args:
                js = by_pair.get(p, [])
                for _ in range(c):
                    acc = _collapse_judgments([_merge(a, j, self.s) for a in acc for j in js])
                    if self.budget is not None:
                        self.budget.tick(len(acc) + 1)
            out.extend(Judgment(a.env, None, a.value, fj.ty.result, a.assumptions) for a in acc)
        return out


def _merge(u: Judgment, v: Judgment, s: int) -> Judgment:
    """One step of the application rule, from the literal definitions."""
    e1, e2 = dict(u.env), dict(v.env)
    env = smultiset_union(e1, e2, s)
    d = dupl_vector([e1, e2], len(u.value), s)
    value = tuple(a + b + c for a, b, c in zip(u.value, v.value, d))
    assum = dict(u.assumptions)
    for b, c in v.assumptions:
        assum[b] = assum.get(b, 0) + c
    return Judgment(_canon(env), None, value, u.ty, _canon(assum))


def _canon(counts: dict) -> tuple:
    return tuple(sorted(counts.items(), key=lambda bc: (bc[0][0], bc[0][1], bc[0][2].uid)))


def _collapse_judgments(js: list[Judgment]) -> list[Judgment]:
    groups: dict = {}
    for j in js:
        groups.setdefault((j.env, j.assumptions, j.ty, flag_of(j.value)), []).append(j)
    out = []
    for group in groups.values():
        best = _pareto(j.value for j in group)
        seen = set()
        for j in group:
            if j.value in best and j.value not in seen:
                seen.add(j.value)
                out.append(j)
    return out


def _records_for(g: Scheme, x: str, bu: _BottomUp) -> list[DerivationRecord]:
    rule = g.rules[x]
    recs = []
    for j in bu.judgments(rule.body):
        if not j.ty.is_atom:
            continue
        per_param = {p.name: {} for p in rule.params}
        for (name, mask, t), c in j.env:
            per_param[name][(mask, t)] = c
        ty = arrows([per_param[p.name] for p in rule.params], ATOM)
        recs.append(DerivationRecord(x, flag_of(j.value), ty, j.value, j.assumptions))
    return recs


def naive_saturate(
    g: Scheme,
    *,
    max_order: Optional[int] = 2,
    timeout: Optional[float] = None,
) -> SaturationResult:
    """The least fixpoint of the binding table over every nonterminal.

    Parameters are typed at every pair of their sort, so the cost grows
    doubly exponentially with the order; pass ``max_order=None`` to lift the
    guard.
    """
    if max_order is not None and g.order > max_order:
        raise ValueError(f"scheme has order {g.order}; naive saturation is limited to {max_order}")
    letters = list(g.important)
    n = len(letters)
    s = max(1, n)
    budget = Budget(timeout)
    stats = Stats()
    names = sorted(g.rules)
    bindings: dict[str, list] = {}
    known: set = set()
    while True:
        stats.iterations += 1
        snapshot = {x: list(v) for x, v in bindings.items()}
        bu = _BottomUp(g, letters, s, snapshot, budget=budget)
        records = [r for x in names for r in _records_for(g, x, bu)]
        new = sorted({r.binding for r in records} - known, key=lambda b: (b[0], b[1], b[2].sort_key))
        if not new:
            break
        for b in new:
            known.add(b)
            bindings.setdefault(b[0], []).append((b[1], b[2]))
    table = BindingTable(letters)
    graph = DerivGraph(n)
    for r in sorted(collapse_records(records), key=record_key):
        table.add_record(r)
        graph.add_record(r)
    stats.bindings = len(table)
    stats.edges = len(graph.edges)
    stats.productive_edges = graph.productive_edges()
    return SaturationResult(table, graph, stats, (g.start, full_mask(n), ATOM))


def start_reachable(res: SaturationResult, g: Scheme) -> set[Binding]:
    """Bindings reachable from any start binding ``X_st:(A, r)``."""
    out: set = set()
    for mask in range(1 << len(g.important)):
        out |= res.graph.reachable_from((g.start, mask, ATOM))
    return out


def check_record(rec: DerivationRecord, g: Scheme, table: Mapping[str, Iterable] = None) -> bool:
    """Re-derive ``rec`` bottom-up under its own header environment.

    Only the record's assumptions are offered for nonterminals, unless a
    ``table`` mapping is given.
    """
    rule = g.rules[rec.nonterminal]
    letters = list(g.important)
    s = max(1, len(letters))
    header: dict = {}
    var_pairs: dict = {p.name: [] for p in rule.params}
    ty = rec.ty
    for p in rule.params:
        if ty.is_atom:
            return False
        for pair, c in ty.args:
            var_pairs[p.name].append(pair)
            header[(p.name, pair[0], pair[1])] = c
        ty = ty.result
    if not ty.is_atom:
        return False
    if table is None:
        table = {}
        for (y, m, t), _ in rec.assumptions:
            table.setdefault(y, []).append((m, t))
    bu = _BottomUp(g, letters, s, table, var_pairs)
    for j in bu.judgments(rule.body):
        if j.ty.is_atom and dict(j.env) == header and j.assumptions == rec.assumptions and j.value == rec.value:
            return True
    return False
