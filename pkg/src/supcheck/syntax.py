"""Sorts, lambda-terms and recursion schemes, plus the structural analyses
(order, complexity, safety, homogeneity) used by the rest of the checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union


class SchemeError(Exception):
    """Base class for every input-level problem with a scheme."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class SortError(SchemeError):
    pass


# --------------------------------------------------------------------------
# Sorts


@dataclass(frozen=True)
class Base:
    def __str__(self) -> str:
        return "o"


@dataclass(frozen=True)
class Arrow:
    argument: "Sort"
    result: "Sort"

    def __str__(self) -> str:
        arg = str(self.argument)
        if isinstance(self.argument, Arrow):
            arg = f"({arg})"
        return f"{arg} -> {self.result}"


Sort = Union[Base, Arrow]
O = Base()


def sort_order(s: Sort) -> int:
    if isinstance(s, Base):
        return 0
    return max(1 + sort_order(s.argument), sort_order(s.result))


def sort_arguments(s: Sort) -> list[Sort]:
    """Argument sorts of ``a1 -> ... -> ak -> o``, left to right."""
    out = []
    while isinstance(s, Arrow):
        out.append(s.argument)
        s = s.result
    return out


def make_sort(args: list[Sort], result: Sort = O) -> Sort:
    for a in reversed(args):
        result = Arrow(a, result)
    return result


def constant_sort(arity: int) -> Sort:
    return make_sort([O] * arity)


def is_homogeneous_sort(s: Sort) -> bool:
    args = sort_arguments(s)
    orders = [sort_order(a) for a in args]
    if any(orders[i] < orders[i + 1] for i in range(len(orders) - 1)):
        return False
    return all(is_homogeneous_sort(a) for a in args)


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    name: str
    arity: int

    @property
    def sort(self) -> Sort:
        return constant_sort(self.arity)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NonTerm:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"
    sort: Sort = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        fs = self.fun.sort
        if not isinstance(fs, Arrow):
            raise SortError(f"cannot apply {self.fun} of sort {fs}")
        if fs.argument != self.arg.sort:
            raise SortError(
                f"argument {self.arg} has sort {self.arg.sort}, expected {fs.argument}"
            )
        object.__setattr__(self, "sort", fs.result)

    def __str__(self) -> str:
        arg = str(self.arg)
        if isinstance(self.arg, (App, Abs)):
            arg = f"({arg})"
        fun = str(self.fun)
        if isinstance(self.fun, Abs):
            fun = f"({fun})"
        return f"{fun} {arg}"


@dataclass(frozen=True)
class Abs:
    param: Var
    body: "Term"
    sort: Sort = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sort", Arrow(self.param.sort, self.body.sort))

    def __str__(self) -> str:
        return f"\\{self.param}. {self.body}"


Term = Union[Const, Var, NonTerm, App, Abs]


def apply(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split ``h N1 ... Nk`` into the head ``h`` and its arguments."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.append(u.arg)
            stack.append(u.fun)
        elif isinstance(u, Abs):
            stack.append(u.body)


def free_vars(t: Term) -> set[Var]:
    """Free variables; nonterminals are not variables here."""
    if isinstance(t, Var):
        return {t}
    if isinstance(t, App):
        return free_vars(t.fun) | free_vars(t.arg)
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.param}
    return set()


def term_order(t: Term) -> int:
    return sort_order(t.sort)


def _constant_headed(t: Term) -> bool:
    head, _ = spine(t)
    return isinstance(head, Const)


def term_complexity(t: Term) -> int:
    return max(
        (term_order(u) for u in subterms(t) if not _constant_headed(u)),
        default=0,
    )


def is_superficially_safe(t: Term) -> bool:
    order = term_order(t)
    return all(order <= sort_order(x.sort) for x in free_vars(t))


def is_safe(t: Term) -> bool:
    if not is_superficially_safe(t):
        return False
    for u in subterms(t):
        if not isinstance(u, App):
            continue
        # only maximal spines; partial spines are prefixes of them
        head, args = spine(u)
        if not all(is_superficially_safe(p) for p in [head, *args]):
            return False
    return True


# --------------------------------------------------------------------------
# Schemes


OMEGA = "omega"


@dataclass(frozen=True)
class Rule:
    """``X x1 ... xk -> body`` with a lambda-free body."""

    nonterminal: str
    params: tuple[Var, ...]
    body: Term

    def as_term(self) -> Term:
        t = self.body
        for p in reversed(self.params):
            t = Abs(p, t)
        return t

    def param_index(self, name: str) -> Optional[int]:
        for i, p in enumerate(self.params):
            if p.name == name:
                return i
        return None


@dataclass(frozen=True, eq=True)
class Scheme:
    terminals: Mapping[str, int]
    nonterminals: Mapping[str, Sort]
    rules: Mapping[str, Rule]
    start: str
    important: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if OMEGA not in self.terminals:
            object.__setattr__(self, "terminals", {**self.terminals, OMEGA: 0})
        elif self.terminals[OMEGA] != 0:
            raise SchemeError("omega is reserved with arity 0")
        if self.start not in self.rules:
            raise SchemeError(f"start symbol {self.start} has no rule")
        if self.nonterminals[self.start] != O:
            raise SchemeError(f"start symbol {self.start} must have sort o")
        for name in self.important:
            if name not in self.terminals or name == OMEGA:
                raise SchemeError(f"important letter {name} is not a declared terminal")
        for x, rule in self.rules.items():
            self._check_rule(x, rule)

    def _check_rule(self, x: str, rule: Rule) -> None:
        if rule.nonterminal != x:
            raise SchemeError(f"rule for {rule.nonterminal} filed under {x}")
        if rule.as_term().sort != self.nonterminals[x]:
            raise SortError(f"rule for {x} does not have sort {self.nonterminals[x]}")
        if not rule.params and isinstance(rule.body, NonTerm):
            raise SchemeError(f"rule for {x} is a bare nonterminal")
        params = set(rule.params)
        for u in subterms(rule.body):
            if isinstance(u, Abs):
                raise SchemeError(f"rule body of {x} contains a lambda")
            if isinstance(u, Var) and u not in params:
                raise SchemeError(f"free variable {u} in rule for {x}")
            if isinstance(u, NonTerm) and self.nonterminals.get(u.name) != u.sort:
                raise SchemeError(f"unknown nonterminal {u} in rule for {x}")
            if isinstance(u, Const) and self.terminals.get(u.name) != u.arity:
                raise SchemeError(f"unknown terminal {u} in rule for {x}")

    def with_letters(self, letters) -> "Scheme":
        return Scheme(self.terminals, self.nonterminals, self.rules, self.start, tuple(letters))

    @property
    def order(self) -> int:
        return max(term_complexity(r.as_term()) for r in self.rules.values())

    def reachable_nonterminals(self) -> list[str]:
        """Nonterminals syntactically reachable from the start symbol."""
        seen = [self.start]
        i = 0
        while i < len(seen):
            for u in subterms(self.rules[seen[i]].body):
                if isinstance(u, NonTerm) and u.name not in seen:
                    seen.append(u.name)
            i += 1
        return seen


def scheme_is_safe(g: Scheme) -> bool:
    return all(is_safe(r.as_term()) for r in g.rules.values())


def scheme_is_homogeneous(g: Scheme) -> bool:
    return all(
        is_homogeneous_sort(u.sort)
        for r in g.rules.values()
        for u in subterms(r.as_term())
    )
