"""Intersection types with productivity sets.

A productivity set is a bitmask over the ordered important letters; bit ``i``
stands for ``letters[i]``.  Productivity values are tuples of naturals, one
per letter.  Types are hash-consed: each distinct type exists once and types
compare by identity.
"""

from __future__ import annotations

import itertools
import threading
from typing import Iterable, Iterator, Mapping, Optional, Sequence, TypeVar

from .syntax import Base, Sort

T = TypeVar("T")

# (productivity mask, type)
TyPair = tuple


class Ty:
    """An interned intersection type; ``args`` is ``None`` for the atom ``r``.

    For an arrow type ``args`` is the s-multiset of argument pairs, stored as
    ``((mask, ty), count)`` items sorted canonically.
    """

    __slots__ = ("args", "result", "uid", "sort_key", "__weakref__")

    def __init__(self, args, result, uid, sort_key):
        self.args = args
        self.result = result
        self.uid = uid
        self.sort_key = sort_key

    @property
    def is_atom(self) -> bool:
        return self.args is None

    def arg_pairs(self) -> list[TyPair]:
        """Argument pairs with repetitions."""
        return [p for p, c in self.args for _ in range(c)]

    def arity(self) -> int:
        n, t = 0, self
        while not t.is_atom:
            n, t = n + 1, t.result
        return n

    def __lt__(self, other: "Ty") -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        return f"Ty<{render_ty(self)}>"


_lock = threading.Lock()
_table: dict = {}


def _intern(key, args, result, sort_key) -> Ty:
    with _lock:
        ty = _table.get(key)
        if ty is None:
            ty = Ty(args, result, len(_table), sort_key)
            _table[key] = ty
        return ty


ATOM = _intern((), None, None, (0,))


def pair_key(p: TyPair):
    return (p[0], p[1].sort_key)


def arrow(args: Mapping[TyPair, int] | Iterable[TyPair], result: Ty) -> Ty:
    """Build ``/\\args -> result``; ``args`` is a pair->count mapping or an
    iterable of pairs (repetitions counted)."""
    if not isinstance(args, Mapping):
        counts: dict = {}
        for p in args:
            counts[p] = counts.get(p, 0) + 1
        args = counts
    items = tuple(sorted(((p, c) for p, c in args.items() if c > 0), key=lambda pc: pair_key(pc[0])))
    key = (tuple((p[0], p[1].uid, c) for p, c in items), result.uid)
    sort_key = (1, tuple((p[0], p[1].sort_key, c) for p, c in items), result.sort_key)
    return _intern(key, items, result, sort_key)


def arrows(arg_multisets: Sequence, result: Ty = ATOM) -> Ty:
    for a in reversed(arg_multisets):
        result = arrow(a, result)
    return result


def ty_matches_sort(ty: Ty, sort: Sort) -> bool:
    if isinstance(sort, Base):
        return ty.is_atom
    if ty.is_atom:
        return False
    return all(ty_matches_sort(p[1], sort.argument) for p, _ in ty.args) and ty_matches_sort(
        ty.result, sort.result
    )


# --------------------------------------------------------------------------
# Productivity sets and values


def full_mask(n: int) -> int:
    return (1 << n) - 1


def flag_of(value: Sequence[int]) -> int:
    mask = 0
    for i, v in enumerate(value):
        if v > 0:
            mask |= 1 << i
    return mask


def chi(mask: int, n: int) -> tuple[int, ...]:
    """The 0/1 vector of a productivity set."""
    return tuple((mask >> i) & 1 for i in range(n))


def zero(n: int) -> tuple[int, ...]:
    return (0,) * n


def mask_letters(mask: int, letters: Sequence[str]) -> list[str]:
    return [a for i, a in enumerate(letters) if mask >> i & 1]


def letters_mask(names: Iterable[str], letters: Sequence[str]) -> int:
    mask = 0
    for a in names:
        mask |= 1 << letters.index(a)
    return mask


# --------------------------------------------------------------------------
# s-multisets


def smultiset_union(u: Mapping[T, int], v: Mapping[T, int], s: int) -> dict[T, int]:
    out = dict(u)
    for x, m in v.items():
        out[x] = min(out.get(x, 0) + m, s)
    return {x: c for x, c in out.items() if c > 0}


def smultiset_size(u: Mapping) -> int:
    return sum(u.values())


def env_restrict(env: Mapping[tuple, int], letter: int) -> dict[tuple, int]:
    """Bindings ``(var, mask, ty)`` whose productivity set contains bit ``letter``."""
    return {b: c for b, c in env.items() if b[1] >> letter & 1}


def dupl(envs: Sequence[Mapping[tuple, int]], letter: int, s: int) -> int:
    total = sum(smultiset_size(env_restrict(e, letter)) for e in envs)
    union: dict = {}
    for e in envs:
        union = smultiset_union(union, env_restrict(e, letter), s)
    return total - smultiset_size(union)


def dupl_vector(envs: Sequence[Mapping[tuple, int]], n: int, s: int) -> tuple[int, ...]:
    return tuple(dupl(envs, i, s) for i in range(n))


def env_productivity(env: Iterable[tuple]) -> int:
    mask = 0
    for b in env:
        mask |= b[1]
    return mask


# --------------------------------------------------------------------------
# Enumeration


def enumerate_pairs(sort: Sort, s: int, letters: int = 1) -> list[TyPair]:
    return [
        (mask, t)
        for t in enumerate_types(sort, s, letters)
        for mask in range(1 << letters)
    ]


def enumerate_types(sort: Sort, s: int, letters: int = 1) -> Iterator[Ty]:
    """Every type of the given sort, once each, in canonical order."""
    if isinstance(sort, Base):
        yield ATOM
        return
    pairs = sorted(enumerate_pairs(sort.argument, s, letters), key=pair_key)
    results = list(enumerate_types(sort.result, s, letters))
    found = []
    for counts in itertools.product(range(s + 1), repeat=len(pairs)):
        ms = {p: c for p, c in zip(pairs, counts) if c}
        for r in results:
            found.append(arrow(ms, r))
    found.sort()
    yield from found


# --------------------------------------------------------------------------
# Rendering


def render_mask(mask: int, letters: Sequence[str]) -> str:
    return "{" + ",".join(mask_letters(mask, letters)) + "}"


def render_pair(p: TyPair, letters: Sequence[str]) -> str:
    return f"({render_mask(p[0], letters)}, {render_ty(p[1], letters)})"


def render_ty(ty: Ty, letters: Optional[Sequence[str]] = None) -> str:
    if letters is None:
        letters = [f"l{i}" for i in range(16)]
    if ty.is_atom:
        return "r"
    pairs = ty.arg_pairs()
    if not pairs:
        left = "T"
    elif len(pairs) == 1:
        left = render_pair(pairs[0], letters)
    else:
        left = "/\\{" + ", ".join(render_pair(p, letters) for p in pairs) + "}"
    return f"{left} -> {render_ty(ty.result, letters)}"


def render_value(value: Sequence[int], letters: Sequence[str]) -> str:
    if len(value) == 1:
        return str(value[0])
    return "(" + ", ".join(f"{a}:{v}" for a, v in zip(letters, value)) + ")"
