"""Type judgments for rule bodies.

Two entry points:

* :func:`type_body` derives every judgment for a rule ``X x1 .. xk -> K``
  top-down: for an application we first pick a type for the head, then type
  each argument at the pair the head asks for.  Nonterminals are typed from a
  table of bindings used as assumptions; an assumption ``Y:(A, t)`` is priced
  at the 0/1 vector of ``A``.
* :func:`type_constant`, :func:`type_variable`, :func:`type_assumption`,
  :func:`merge_application` and :func:`type_abstraction` are the individual
  rules, for bottom-up use.

Environments are canonical tuples of ``((name, mask, ty), count)`` items,
counts capped at ``s``.  Assumption multisets have the same shape with exact
counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Mapping, Optional, Sequence

from .intertypes import (
    ATOM,
    Ty,
    TyPair,
    arrow,
    arrows,
    chi,
    env_productivity,
    flag_of,
    render_mask,
    render_ty,
    render_value,
    zero,
)
from .syntax import O as ATOM_SORT
from .syntax import OMEGA, Abs, App, Const, NonTerm, Rule, Term, Var, spine

Binding = tuple  # (name, mask, ty)


class ResourceExceeded(Exception):
    """Raised when a run hits its time or step cap."""


class Budget:
    def __init__(self, timeout: Optional[float] = None, max_steps: Optional[int] = None):
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.max_steps = max_steps
        self.steps = 0

    def tick(self, n: int = 1) -> None:
        self.steps += n
        if self.max_steps is not None and self.steps > self.max_steps:
            raise ResourceExceeded(f"step cap of {self.max_steps} exceeded")
        if self.deadline is not None and self.steps % 256 < n and time.monotonic() > self.deadline:
            raise ResourceExceeded("timeout")


def _bkey(item):
    b = item[0]
    return (b[0], b[1], b[2].uid)


def canon(counts: Mapping[Binding, int]) -> tuple:
    return tuple(sorted(((b, c) for b, c in counts.items() if c > 0), key=_bkey))


def binding_str(b: Binding, letters: Sequence[str]) -> str:
    return f"{b[0]}:({render_mask(b[1], letters)}, {render_ty(b[2], letters)})"


# --------------------------------------------------------------------------
# Records and judgments


@dataclass(frozen=True)
class DerivationRecord:
    nonterminal: str
    mask: int
    ty: Ty
    value: tuple
    assumptions: tuple

    @property
    def binding(self) -> Binding:
        return (self.nonterminal, self.mask, self.ty)

    def uses(self, b: Binding) -> int:
        for a, c in self.assumptions:
            if a == b:
                return c
        return 0

    def render(self, letters: Sequence[str]) -> str:
        via = ", ".join(f"{binding_str(a, letters)} x{c}" for a, c in self.assumptions)
        return (
            f"{self.nonterminal} : ({render_mask(self.mask, letters)}, {render_ty(self.ty, letters)})"
            f" value={render_value(self.value, letters)} via {{{via}}}"
        )


@dataclass(frozen=True)
class Judgment:
    env: tuple
    term: Optional[Term]
    value: tuple
    ty: Ty
    assumptions: tuple = ()

    @property
    def productivity(self) -> int:
        return flag_of(self.value) | env_productivity(b for b, _ in self.env)


def type_constant(
    name: str,
    arity: int,
    child_index: Optional[int],
    child_pair: Optional[TyPair],
    letters: Sequence[str],
) -> Optional[Judgment]:
    """The constant rule: one child carries ``(A, r)``, every other is top.

    Returns ``None`` for ``omega``, which has no rule.
    """
    if name == OMEGA:
        return None
    n = len(letters)
    value = chi(1 << letters.index(name), n) if name in letters else zero(n)
    if arity == 0:
        if child_index is not None:
            raise ValueError("a leaf has no children")
        return Judgment((), Const(name, 0), value, ATOM)
    if child_index is None or not 1 <= child_index <= arity:
        raise ValueError(f"child index must be in 1..{arity}")
    if child_pair is None or not child_pair[1].is_atom:
        raise ValueError("child pair must have the atomic type")
    sets = [{} for _ in range(arity)]
    sets[child_index - 1] = {child_pair: 1}
    return Judgment((), Const(name, arity), value, arrows(sets))


def type_variable(var: Var, pair: TyPair, n: int) -> Judgment:
    return Judgment((((var.name, pair[0], pair[1]), 1),), var, zero(n), pair[1])


def type_assumption(nt: NonTerm, mask: int, ty: Ty, n: int) -> Judgment:
    return Judgment((), nt, chi(mask, n), ty, (((nt.name, mask, ty), 1),))


def _merge_env(env1: tuple, env2: tuple, n: int, s: int) -> tuple[tuple, list[int]]:
    """Capped union of two environments and the duplication it causes."""
    d = [0] * n
    if not env2:
        return env1, d
    if not env1:
        return env2, d
    out = dict(env1)
    for b, c in env2:
        tot = out.get(b, 0) + c
        new = min(tot, s)
        lost = tot - new
        if lost:
            m = b[1]
            for i in range(n):
                if m >> i & 1:
                    d[i] += lost
        out[b] = new
    return canon(out), d


def _merge_assumptions(as1: tuple, as2: tuple) -> tuple:
    if not as2:
        return as1
    if not as1:
        return as2
    out = dict(as1)
    for b, c in as2:
        out[b] = out.get(b, 0) + c
    return canon(out)


def merge_application(
    fun: Judgment, args: Sequence[Judgment], s: int, arg_term: Optional[Term] = None
) -> Optional[Judgment]:
    """The (@) rule; ``None`` when the side conditions fail."""
    if fun.ty.is_atom:
        return None
    wanted: dict = {}
    for p, c in fun.ty.args:
        wanted[p] = c
    got: dict = {}
    for j in args:
        p = (j.productivity, j.ty)
        got[p] = got.get(p, 0) + 1
    if got != wanted:
        return None
    n = len(fun.value)
    env, value, assum = fun.env, list(fun.value), fun.assumptions
    for j in args:
        env, d = _merge_env(env, j.env, n, s)
        value = [a + b + c for a, b, c in zip(value, j.value, d)]
        assum = _merge_assumptions(assum, j.assumptions)
    term = App(fun.term, arg_term) if fun.term is not None and arg_term is not None else None
    return Judgment(env, term, tuple(value), fun.ty.result, assum)


def type_abstraction(body: Judgment, var: Var, s: int) -> Judgment:
    """The (lambda) rule: move every binding of ``var`` into the type."""
    moved = {}
    rest = []
    for b, c in body.env:
        if b[0] == var.name:
            moved[(b[1], b[2])] = c
        else:
            rest.append((b, c))
    term = Abs(var, body.term) if body.term is not None else None
    return Judgment(tuple(rest), term, body.value, arrow(moved, body.ty), body.assumptions)


# --------------------------------------------------------------------------
# Top-down derivation

# An outcome is (env, value, assumptions).


def _pareto_max(values: list[tuple]) -> list[tuple]:
    values = sorted(set(values), reverse=True)
    keep: list[tuple] = []
    for v in values:
        if not any(all(a >= b for a, b in zip(k, v)) for k in keep):
            keep.append(v)
    return keep


def _collapse(outcomes: Iterable[tuple]) -> list[tuple]:
    """Keep the componentwise-maximal values per (env, assumptions, flag)."""
    groups: dict = {}
    for env, value, assum in outcomes:
        groups.setdefault((env, assum, flag_of(value)), []).append(value)
    out = []
    for (env, assum, _), values in groups.items():
        if len(values) == 1:
            out.append((env, values[0], assum))
        else:
            out.extend((env, v, assum) for v in _pareto_max(values))
    return out


class Deriver:
    """Derives judgments for lambda-free terms under fixed candidate sets.

    ``table`` maps a nonterminal name to its available ``(mask, ty)``
    bindings.  ``candidates`` maps a variable name to its available pairs, or
    to ``None`` when the variable may take whatever pair its context asks for
    (it must then never occur in head position).  ``env_limit`` optionally
    bounds every environment by a fixed one.
    """

    def __init__(
        self,
        letters: Sequence[str],
        s: int,
        table: Mapping[str, Collection[tuple]],
        candidates: Mapping[str, Optional[Collection[TyPair]]],
        env_limit: Optional[Mapping[Binding, int]] = None,
        budget: Optional[Budget] = None,
    ):
        self.letters = list(letters)
        self.n = len(letters)
        self.s = s
        self.table = table
        self.candidates = candidates
        self.env_limit = env_limit
        self.budget = budget
        self.memo: dict = {}
        self._zero = zero(self.n)

    def prod(self, o: tuple) -> int:
        return flag_of(o[1]) | env_productivity(b for b, _ in o[0])

    def _merge(self, o1: tuple, o2: tuple) -> Optional[tuple]:
        env, d = _merge_env(o1[0], o2[0], self.n, self.s)
        if self.env_limit is not None:
            lim = self.env_limit
            for b, c in env:
                if c > lim.get(b, 0):
                    return None
        value = tuple(a + b + c for a, b, c in zip(o1[1], o2[1], d))
        return (env, value, _merge_assumptions(o1[2], o2[2]))

    def derive(self, term: Term, target: Optional[Ty]) -> list[tuple]:
        """All ``(ty, outcome)`` for ``term``; ``ty is target`` if given."""
        key = (id(term), target)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if self.budget is not None:
            self.budget.tick()
        head, args = spine(term)
        if isinstance(head, Const):
            res = self._derive_const(head, args, target)
        elif isinstance(head, Var):
            res = self._derive_var(head, args, target)
        elif isinstance(head, NonTerm):
            start = [
                (ty, ((), chi(mask, self.n), (((head.name, mask, ty), 1),)))
                for mask, ty in self.table.get(head.name, ())
            ]
            res = self._derive_headed(start, args, target)
        else:
            raise TypeError(f"cannot type {term} top-down: lambda in body")
        self.memo[key] = res
        return res

    def _derive_var(self, x: Var, args: list, target: Optional[Ty]) -> list[tuple]:
        cands = self.candidates.get(x.name, ())
        if cands is None:
            if args or target is None:
                raise ValueError(f"unconstrained variable {x} needs a known target")
            out = []
            for mask in range(1 << self.n):
                b = (x.name, mask, target)
                if self.env_limit is None or self.env_limit.get(b, 0) > 0:
                    out.append((target, (((b, 1),), self._zero, ())))
            return out
        start = [(ty, ((((x.name, mask, ty), 1),), self._zero, ())) for mask, ty in cands]
        start = [(ty, o) for ty, o in start if self.env_limit is None or self.env_limit.get(o[0][0][0], 0)]
        return self._derive_headed(start, args, target)

    def _derive_headed(self, start: list[tuple], args: list, target: Optional[Ty]) -> list[tuple]:
        m = len(args)
        by_type: dict = {}
        for ty, o in start:
            t, sets = ty, []
            for _ in range(m):
                if t.is_atom:
                    break
                sets.append(t.args)
                t = t.result
            else:
                if target is not None and t is not target:
                    continue
                by_type.setdefault((t, tuple(sets)), []).append(o)
        out = []
        for (rty, sets), heads in by_type.items():
            for o in self._apply(heads, sets, args):
                out.append((rty, o))
        return out

    def _apply(self, acc: list[tuple], sets: Sequence[tuple], args: list) -> list[tuple]:
        for arg, ms in zip(args, sets):
            for (mask, sigma), count in ms:
                outs = [o for _, o in self.derive(arg, sigma) if self.prod(o) == mask]
                if not outs:
                    return []
                for _ in range(count):
                    nxt = []
                    for a in acc:
                        for o in outs:
                            r = self._merge(a, o)
                            if r is not None:
                                nxt.append(r)
                    if self.budget is not None:
                        self.budget.tick(len(nxt))
                    acc = _collapse(nxt)
                    if not acc:
                        return []
        return acc

    def _derive_const(self, c: Const, args: list, target: Optional[Ty]) -> list[tuple]:
        if c.name == OMEGA:
            return []
        r, m = c.arity, len(args)
        if c.name in self.letters:
            v0 = chi(1 << self.letters.index(c.name), self.n)
        else:
            v0 = self._zero
        leaf = ((), v0, ())
        trailing = r - m
        if target is not None:
            t, sets = target, []
            for _ in range(trailing):
                if t.is_atom:
                    return []
                sets.append(t.args)
                t = t.result
            if not t.is_atom:
                return []
            nonempty = [ms for ms in sets if ms]
            if len(nonempty) > 1:
                return []
            if nonempty:
                ms = nonempty[0]
                if len(ms) != 1 or ms[0][1] != 1 or not ms[0][0][1].is_atom:
                    return []
                return [(target, leaf)]
            if r == 0:
                return [(target, leaf)]
            return [(target, o) for o in self._one_child(leaf, args)]
        if r == 0:
            return [(ATOM, leaf)]
        out = []
        if m:
            top = arrows([{}] * trailing)
            out.extend((top, o) for o in self._one_child(leaf, args))
        for j in range(trailing):
            for mask in range(1 << self.n):
                sets = [{} for _ in range(trailing)]
                sets[j] = {(mask, ATOM): 1}
                out.append((arrows(sets), leaf))
        return out

    def _one_child(self, leaf: tuple, args: list) -> list[tuple]:
        res = []
        for arg in args:
            for _, o in self.derive(arg, ATOM):
                r = self._merge(leaf, o)
                if r is not None:
                    res.append(r)
        return _collapse(res)


# --------------------------------------------------------------------------
# Rule bodies


def split_rule_type(ty: Ty, k: int) -> Optional[tuple[list[tuple], Ty]]:
    sets = []
    for _ in range(k):
        if ty.is_atom:
            return None
        sets.append(ty.args)
        ty = ty.result
    return sets, ty


def collapse_records(records: Iterable[DerivationRecord]) -> set[DerivationRecord]:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.binding, r.assumptions), []).append(r.value)
    out = set()
    for ((x, mask, ty), assum), values in groups.items():
        for v in _pareto_max(values):
            out.add(DerivationRecord(x, mask, ty, v, assum))
    return out


def type_body(
    rule: Rule,
    param_candidates: Mapping[str, Optional[Collection[TyPair]]],
    table: Mapping[str, Collection[tuple]],
    target: Optional[Ty] = None,
    *,
    letters: Sequence[str],
    s: Optional[int] = None,
    require: Optional[Callable[[DerivationRecord], bool]] = None,
    budget: Optional[Budget] = None,
) -> set[DerivationRecord]:
    """Every derivation outcome for ``rule`` (at ``target`` if given).

    Without a target the body must have sort ``o``; parameter types are read
    off the environment of each body derivation.
    """
    if s is None:
        s = max(1, len(letters))
    k = len(rule.params)
    body_target = ATOM
    env_limit = None
    cands = param_candidates
    if target is not None:
        split = split_rule_type(target, k)
        if split is None:
            return set()
        sets, body_target = split
        env_limit = {}
        cands = {}
        for p, ms in zip(rule.params, sets):
            cands[p.name] = [pair for pair, _ in ms]
            for pair, c in ms:
                env_limit[(p.name, pair[0], pair[1])] = c
    elif rule.body.sort != ATOM_SORT:
        raise ValueError(f"rule for {rule.nonterminal} has a body of higher sort; give a target")

    d = Deriver(letters, s, table, cands, env_limit, budget)
    records = []
    for _, (env, value, assum) in d.derive(rule.body, body_target):
        if env_limit is not None:
            if dict(env) != env_limit:
                continue
            ty = target
        else:
            per_param = {p.name: {} for p in rule.params}
            for (name, mask, t), c in env:
                per_param[name][(mask, t)] = c
            ty = arrows([per_param[p.name] for p in rule.params], body_target)
        rec = DerivationRecord(rule.nonterminal, flag_of(value), ty, value, assum)
        if require is None or require(rec):
            records.append(rec)
    return collapse_records(records)

