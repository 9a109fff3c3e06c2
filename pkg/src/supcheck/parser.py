"""Reader and writer for the scheme file format.

::

    %BEGING
    S -> br c (a S).
    F x -> a (F x).
    %ENDG
    %BEGINT
    a -> 1.  br -> 2.  c -> 0.
    %ENDT
    %BEGINI
    a.
    %ENDI

The first rule names the start symbol.  Variable and nonterminal sorts are
inferred by unification; a parameter whose sort cannot be inferred must be
annotated in the rule header as ``(x : o -> o)``.  Rules whose body is not of
sort ``o`` are eta-expanded with fresh parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (
    O,
    OMEGA,
    App,
    Arrow,
    Base,
    Const,
    NonTerm,
    Rule,
    Scheme,
    SchemeError,
    Sort,
    SortError,
    Var,
    constant_sort,
    sort_arguments,
    spine,
    subterms,
)


class ParseError(SchemeError):
    pass


class DuplicateRuleError(SchemeError):
    pass


class UndeclaredTerminalError(SchemeError):
    pass


class ArityMismatchError(SchemeError):
    pass


class StartSymbolError(SchemeError):
    pass


# --------------------------------------------------------------------------
# Lexing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<section>%[A-Z]+)
  | (?P<arrow>->)
  | (?P<punct>[().:,=])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of file'!r}", tok.line, tok.column)
        return tok


# --------------------------------------------------------------------------
# Raw syntax (before sort inference)


@dataclass
class _RIdent:
    name: str
    tok: Token


@dataclass
class _RApp:
    fun: "_Raw"
    arg: "_Raw"


_Raw = Union[_RIdent, _RApp]


@dataclass
class _RRule:
    name: str
    params: list[tuple[str, Optional[Sort], Token]]
    body: _Raw
    tok: Token


def _parse_sort(ts: _Stream) -> Sort:
    if ts.at("punct", "("):
        ts.next()
        left = _parse_sort(ts)
        ts.expect("punct", ")")
    else:
        tok = ts.expect("ident")
        if tok.text != "o":
            raise ParseError(f"unknown sort {tok.text!r}", tok.line, tok.column)
        left = O
    if ts.at("arrow"):
        ts.next()
        return Arrow(left, _parse_sort(ts))
    return left


def _parse_atom(ts: _Stream) -> _Raw:
    if ts.at("punct", "("):
        ts.next()
        t = _parse_app(ts)
        ts.expect("punct", ")")
        return t
    tok = ts.expect("ident")
    return _RIdent(tok.text, tok)


def _parse_app(ts: _Stream) -> _Raw:
    t = _parse_atom(ts)
    while ts.at("ident") or ts.at("punct", "("):
        t = _RApp(t, _parse_atom(ts))
    return t


def _parse_rule(ts: _Stream) -> _RRule:
    head = ts.expect("ident")
    if not head.text[0].isupper():
        raise ParseError(f"nonterminal {head.text!r} must start with an uppercase letter", head.line, head.column)
    params = []
    while not ts.at("arrow"):
        if ts.at("punct", "("):
            ts.next()
            tok = ts.expect("ident")
            ts.expect("punct", ":")
            sort = _parse_sort(ts)
            ts.expect("punct", ")")
        else:
            tok = ts.expect("ident")
            sort = None
        if tok.text[0].isupper():
            raise ParseError(f"parameter {tok.text!r} must start with a lowercase letter", tok.line, tok.column)
        if any(p[0] == tok.text for p in params):
            raise ParseError(f"parameter {tok.text!r} bound twice", tok.line, tok.column)
        params.append((tok.text, sort, tok))
    ts.expect("arrow")
    body = _parse_app(ts)
    ts.expect("punct", ".")
    return _RRule(head.text, params, body, head)


# --------------------------------------------------------------------------
# Sort inference


class _SVar:
    __slots__ = ("ref",)

    def __init__(self) -> None:
        self.ref: Optional[object] = None


@dataclass
class _SArrow:
    argument: object
    result: object


def _find(s):
    while isinstance(s, _SVar) and s.ref is not None:
        s = s.ref
    return s


def _lift(s: Sort):
    if isinstance(s, Base):
        return O
    return _SArrow(_lift(s.argument), _lift(s.result))


def _occurs(v: _SVar, s) -> bool:
    s = _find(s)
    if s is v:
        return True
    if isinstance(s, _SArrow):
        return _occurs(v, s.argument) or _occurs(v, s.result)
    return False


def _unify(a, b) -> bool:
    a, b = _find(a), _find(b)
    if a is b:
        return True
    if isinstance(a, _SVar):
        if _occurs(a, b):
            return False
        a.ref = b
        return True
    if isinstance(b, _SVar):
        return _unify(b, a)
    if isinstance(a, Base) and isinstance(b, Base):
        return True
    if isinstance(a, _SArrow) and isinstance(b, _SArrow):
        return _unify(a.argument, b.argument) and _unify(a.result, b.result)
    return False


def _resolve(s) -> Optional[Sort]:
    s = _find(s)
    if isinstance(s, _SVar):
        return None
    if isinstance(s, Base):
        return O
    arg, res = _resolve(s.argument), _resolve(s.result)
    if arg is None or res is None:
        return None
    return Arrow(arg, res)


def _raw_spine(t: _Raw) -> tuple[_RIdent, int]:
    n = 0
    while isinstance(t, _RApp):
        t, n = t.fun, n + 1
    return t, n


class _Inference:
    def __init__(self, terminals: dict[str, int], rules: list[_RRule]):
        self.terminals = terminals
        self.nt_sorts = {r.name: _SVar() for r in rules}

    def _arity_error(self, head: _RIdent, nargs: int) -> ArityMismatchError:
        arity = self.terminals[head.name]
        return ArityMismatchError(
            f"terminal {head.name} of arity {arity} applied to {nargs} argument(s)",
            head.tok.line, head.tok.column,
        )

    def _conflict(self, t: _Raw, what: str) -> SchemeError:
        head, n = _raw_spine(t)
        if head.name in self.terminals and n != self.terminals[head.name]:
            return self._arity_error(head, n)
        return SortError(what, head.tok.line, head.tok.column)

    def infer(self, t: _Raw, env: dict[str, object]):
        if isinstance(t, _RIdent):
            name = t.name
            if name in env:
                return env[name]
            if name[0].isupper():
                if name not in self.nt_sorts:
                    raise SchemeError(f"undefined nonterminal {name}", t.tok.line, t.tok.column)
                return self.nt_sorts[name]
            if name not in self.terminals:
                raise UndeclaredTerminalError(f"undeclared terminal {name}", t.tok.line, t.tok.column)
            return _lift(constant_sort(self.terminals[name]))
        head, n = _raw_spine(t)
        if head.name in self.terminals and head.name not in env and n > self.terminals[head.name]:
            raise self._arity_error(head, n)
        fs = self.infer(t.fun, env)
        a = self.infer(t.arg, env)
        r = _SVar()
        if not _unify(fs, _SArrow(a, r)):
            raise self._conflict(t.arg, f"sort conflict applying to {_show_raw(t.arg)}")
        return r


def _show_raw(t: _Raw) -> str:
    if isinstance(t, _RIdent):
        return t.name
    arg = _show_raw(t.arg)
    if isinstance(t.arg, _RApp):
        arg = f"({arg})"
    return f"{_show_raw(t.fun)} {arg}"


def _build(t: _Raw, params: dict[str, Var], nts: dict[str, Sort], terminals: dict[str, int]):
    if isinstance(t, _RApp):
        return App(_build(t.fun, params, nts, terminals), _build(t.arg, params, nts, terminals))
    if t.name in params:
        return params[t.name]
    if t.name[0].isupper():
        return NonTerm(t.name, nts[t.name])
    return Const(t.name, terminals[t.name])


def _fresh_names(taken: set[str], count: int) -> list[str]:
    out, i = [], 1
    while len(out) < count:
        name = f"_eta{i}"
        if name not in taken:
            out.append(name)
        i += 1
    return out


def parse_scheme(text: str) -> Scheme:
    ts = _Stream(tokenize(text))
    raw_rules: list[_RRule] = []
    terminals: dict[str, int] = {}
    important: Optional[list[str]] = None
    term_toks: dict[str, Token] = {}

    while not ts.at("eof"):
        sec = ts.expect("section")
        if sec.text == "%BEGING":
            while not ts.at("section", "%ENDG"):
                raw_rules.append(_parse_rule(ts))
            ts.next()
        elif sec.text == "%BEGINT":
            while not ts.at("section", "%ENDT"):
                tok = ts.expect("ident")
                ts.expect("arrow")
                arity = int(ts.expect("int").text)
                ts.expect("punct", ".")
                if tok.text in terminals:
                    raise SchemeError(f"terminal {tok.text} declared twice", tok.line, tok.column)
                if tok.text == OMEGA and arity != 0:
                    raise ArityMismatchError("omega must have arity 0", tok.line, tok.column)
                if tok.text[0].isupper():
                    raise ParseError(f"terminal {tok.text!r} must start with a lowercase letter", tok.line, tok.column)
                terminals[tok.text] = arity
                term_toks[tok.text] = tok
            ts.next()
        elif sec.text == "%BEGINI":
            important = important or []
            while not ts.at("section", "%ENDI"):
                tok = ts.expect("ident")
                if ts.at("punct", ".") or ts.at("punct", ","):
                    ts.next()
                important.append(tok.text)
            ts.next()
        else:
            raise ParseError(f"unknown section {sec.text}", sec.line, sec.column)

    terminals.setdefault(OMEGA, 0)
    if not raw_rules:
        raise StartSymbolError("no rules: start symbol missing")
    seen: dict[str, _RRule] = {}
    for r in raw_rules:
        if r.name in seen:
            raise DuplicateRuleError(f"duplicate rule for {r.name}", r.tok.line, r.tok.column)
        seen[r.name] = r

    inf = _Inference(terminals, raw_rules)
    if not _unify(inf.nt_sorts[raw_rules[0].name], O):
        raise StartSymbolError("start symbol must have sort o")
    envs = []
    for r in raw_rules:
        env = {}
        for name, sort, _ in r.params:
            env[name] = _lift(sort) if sort is not None else _SVar()
        envs.append(env)
        rule_sort = inf.infer(r.body, env)
        for name, _, _ in reversed(r.params):
            rule_sort = _SArrow(env[name], rule_sort)
        if not _unify(inf.nt_sorts[r.name], rule_sort):
            if r is raw_rules[0]:
                err = inf._conflict(r.body, f"rule for {r.name} has conflicting sort")
                if isinstance(err, ArityMismatchError):
                    raise err
                raise StartSymbolError(
                    f"start symbol {r.name} is not of sort o", r.tok.line, r.tok.column
                )
            raise inf._conflict(r.body, f"rule for {r.name} has conflicting sort")

    nts: dict[str, Sort] = {}
    for r, env in zip(raw_rules, envs):
        for name, _, tok in r.params:
            if _resolve(env[name]) is None:
                raise SortError(
                    f"cannot infer the sort of parameter {name} of {r.name}; annotate it as ({name} : sort)",
                    tok.line, tok.column,
                )
        s = _resolve(inf.nt_sorts[r.name])
        if s is None:
            raise SortError(f"cannot infer the sort of {r.name}", r.tok.line, r.tok.column)
        nts[r.name] = s

    rules: dict[str, Rule] = {}
    for r, env in zip(raw_rules, envs):
        params = {name: Var(name, _resolve(env[name])) for name, _, _ in r.params}
        body = _build(r.body, params, nts, terminals)
        plist = [params[name] for name, _, _ in r.params]
        extra = sort_arguments(body.sort)
        if extra:
            taken = set(params) | {u.name for u in subterms(body) if isinstance(u, Const)}
            for name, s in zip(_fresh_names(taken, len(extra)), extra):
                v = Var(name, s)
                plist.append(v)
                body = App(body, v)
        rules[r.name] = Rule(r.name, tuple(plist), body)

    if important is not None:
        for name in important:
            if name not in terminals or name == OMEGA:
                raise UndeclaredTerminalError(f"important letter {name} is not a declared terminal")
    return Scheme(terminals, nts, rules, raw_rules[0].name, tuple(important or ()))


def parse_file(path) -> Scheme:
    with open(path, encoding="utf-8") as fh:
        return parse_scheme(fh.read())


# --------------------------------------------------------------------------
# Printing


def format_term(t) -> str:
    head, args = spine(t)
    parts = [str(head)]
    for a in args:
        s = format_term(a)
        parts.append(f"({s})" if isinstance(a, App) else s)
    return " ".join(parts)


def format_sort(s: Sort) -> str:
    return str(s)


def format_scheme(g: Scheme) -> str:
    lines = ["%BEGING"]
    for rule in g.rules.values():
        used = {u for u in subterms(rule.body) if isinstance(u, Var)}
        header = [rule.nonterminal]
        for p in rule.params:
            header.append(p.name if p in used else f"({p.name} : {p.sort})")
        lines.append(f"{' '.join(header)} -> {format_term(rule.body)}.")
    lines.append("%ENDG")
    lines.append("%BEGINT")
    for name, arity in g.terminals.items():
        if name != OMEGA:
            lines.append(f"{name} -> {arity}.")
    lines.append("%ENDT")
    if g.important:
        lines.append("%BEGINI")
        lines.append(" ".join(f"{a}." for a in g.important))
        lines.append("%ENDI")
    return "\n".join(lines) + "\n"
