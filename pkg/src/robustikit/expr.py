"""Expression AST shared by guards, actions, invariants and uncertainty relations.

Nodes are frozen dataclasses, so structurally equal expressions compare equal
and can be used as dictionary keys.  Identifiers are not resolved into kinds
here: a ``Name`` may denote a state variable, an event parameter, a symbolic
constant, an enumeration constant or a quantifier binder.  The machine that
owns the expression decides which.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Int(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class BotLit(Expr):
    """The missing-parameter sentinel written ``bot``."""


@dataclass(frozen=True)
class Name(Expr):
    name: str


@dataclass(frozen=True)
class Primed(Expr):
    """Post-state reference ``v'``; only legal inside actions."""

    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Arith(Expr):
    op: str  # '+', '-', '*'
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cmp(Expr):
    op: str  # '=', '!=', '<', '<='
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr


@dataclass(frozen=True)
class And(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Or(Expr):
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Implies(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Iff(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Range(Expr):
    """Integer interval ``[lo .. hi]`` used as a binder domain."""

    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class EnumSet(Expr):
    """Literal set of enumeration constants ``{a, b}`` used as a binder domain."""

    values: tuple[str, ...]


@dataclass(frozen=True)
class Binder:
    name: str
    domain: Union[Range, EnumSet]


@dataclass(frozen=True)
class Quant(Expr):
    kind: str  # 'forall' | 'exists'
    binders: tuple[Binder, ...]
    body: Expr


TRUE = BoolLit(True)
FALSE = BoolLit(False)
BOT_LIT = BotLit()

ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("=", "!=", "<", "<=")


# ---------------------------------------------------------------------------
# smart constructors


def conj(*parts: Expr) -> Expr:
    """Flattening conjunction; drops ``true`` and collapses on ``false``."""
    out: list[Expr] = []
    for p in parts:
        if isinstance(p, And):
            out.extend(p.args)
        elif p == TRUE:
            continue
        elif p == FALSE:
            return FALSE
        else:
            out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*parts: Expr) -> Expr:
    out: list[Expr] = []
    for p in parts:
        if isinstance(p, Or):
            out.extend(p.args)
        elif p == FALSE:
            continue
        elif p == TRUE:
            return TRUE
        else:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def implies(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    if a == FALSE or b == TRUE:
        return TRUE
    return Implies(a, b)


def negate(e: Expr) -> Expr:
    """Push a negation through the boolean connectives only.

    Comparisons are wrapped rather than flipped: with the ``bot`` sentinel in
    play, ``not (a < b)`` and ``b <= a`` are not equivalent.
    """
    if isinstance(e, BoolLit):
        return BoolLit(not e.value)
    if isinstance(e, Not):
        return e.arg
    if isinstance(e, And):
        return disj(*(negate(a) for a in e.args))
    if isinstance(e, Or):
        return conj(*(negate(a) for a in e.args))
    if isinstance(e, Implies):
        return conj(e.left, negate(e.right))
    if isinstance(e, Quant):
        flipped = "exists" if e.kind == "forall" else "forall"
        return Quant(flipped, e.binders, negate(e.body))
    return Not(e)


def forall(binders: Iterable[Binder], body: Expr) -> Expr:
    binders = tuple(binders)
    if not binders or isinstance(body, BoolLit):
        return body
    return Quant("forall", binders, body)


def exists(binders: Iterable[Binder], body: Expr) -> Expr:
    binders = tuple(binders)
    if not binders or isinstance(body, BoolLit):
        return body
    return Quant("exists", binders, body)


def eq(a: Expr, b: Expr) -> Cmp:
    return Cmp("=", a, b)


def ne(a: Expr, b: Expr) -> Cmp:
    return Cmp("!=", a, b)


def le(a: Expr, b: Expr) -> Cmp:
    return Cmp("<=", a, b)


def lt(a: Expr, b: Expr) -> Cmp:
    return Cmp("<", a, b)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Int) and b.value == 0:
        return a
    if isinstance(b, Int) and b.value < 0:
        return Arith("-", a, Int(-b.value))
    return Arith("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Int) and b.value == 0:
        return a
    return Arith("-", a, b)


def as_expr(value) -> Expr:
    """Literal for a runtime value (int, enum constant name, bool, bot)."""
    from .model import BOT

    if value is BOT:
        return BOT_LIT
    if isinstance(value, bool):
        return BoolLit(value)
    if isinstance(value, int):
        return Int(value)
    if isinstance(value, str):
        return Name(value)
    raise TypeError(f"no literal for {value!r}")


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, And):
        out: list[Expr] = []
        for a in e.args:
            out.extend(conjuncts(a))
        return out
    if e == TRUE:
        return []
    return [e]


# ---------------------------------------------------------------------------
# traversal


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Neg, Not)):
        return (e.arg,)
    if isinstance(e, (Arith, Cmp, Implies, Iff)):
        return (e.left, e.right)
    if isinstance(e, (And, Or)):
        return e.args
    if isinstance(e, Range):
        return (e.lo, e.hi)
    if isinstance(e, Quant):
        return tuple(b.domain for b in e.binders) + (e.body,)
    return ()


def free_names(e: Expr) -> frozenset[str]:
    """Unprimed names occurring free in ``e``."""
    if isinstance(e, Name):
        return frozenset((e.name,))
    if isinstance(e, Quant):
        inner = free_names(e.body) - {b.name for b in e.binders}
        # binder domains are evaluated outside the scope of later binders
        doms: set[str] = set()
        bound: set[str] = set()
        for b in e.binders:
            doms |= free_names(b.domain) - bound
            bound.add(b.name)
        return frozenset(inner | doms)
    out: frozenset[str] = frozenset()
    for c in children(e):
        out |= free_names(c)
    return out


def primed_names(e: Expr) -> frozenset[str]:
    if isinstance(e, Primed):
        return frozenset((e.name,))
    out: frozenset[str] = frozenset()
    for c in children(e):
        out |= primed_names(c)
    return out


def binder_names(e: Expr) -> frozenset[str]:
    out: set[str] = set()
    if isinstance(e, Quant):
        out.update(b.name for b in e.binders)
    for c in children(e):
        out |= binder_names(c)
    return frozenset(out)


def substitute(e: Expr, names: Mapping[str, Expr] = {}, primes: Mapping[str, Expr] = {}) -> Expr:
    """Replace free ``Name`` and ``Primed`` occurrences.

    Binders shadow ``names`` inside their scope.  Replacement expressions are
    assumed not to mention any binder they are pushed under; generated code
    uses reserved binder prefixes so capture cannot happen.
    """
    if not names and not primes:
        return e
    if isinstance(e, Name):
        return names.get(e.name, e)
    if isinstance(e, Primed):
        return primes.get(e.name, e)
    if isinstance(e, (Int, BoolLit, BotLit, EnumSet)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, names, primes))
    if isinstance(e, Not):
        return Not(substitute(e.arg, names, primes))
    if isinstance(e, Arith):
        return Arith(e.op, substitute(e.left, names, primes), substitute(e.right, names, primes))
    if isinstance(e, Cmp):
        return Cmp(e.op, substitute(e.left, names, primes), substitute(e.right, names, primes))
    if isinstance(e, Implies):
        return Implies(substitute(e.left, names, primes), substitute(e.right, names, primes))
    if isinstance(e, Iff):
        return Iff(substitute(e.left, names, primes), substitute(e.right, names, primes))
    if isinstance(e, And):
        return And(tuple(substitute(a, names, primes) for a in e.args))
    if isinstance(e, Or):
        return Or(tuple(substitute(a, names, primes) for a in e.args))
    if isinstance(e, Range):
        return Range(substitute(e.lo, names, primes), substitute(e.hi, names, primes))
    if isinstance(e, Quant):
        binders = []
        inner = dict(names)
        for b in e.binders:
            binders.append(Binder(b.name, substitute(b.domain, inner, primes)))
            inner.pop(b.name, None)
        return Quant(e.kind, tuple(binders), substitute(e.body, inner, primes))
    raise TypeError(f"unknown expression node {e!r}")


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename free names (and their primed forms) consistently."""
    return substitute(
        e,
        {k: Name(v) for k, v in mapping.items()},
        {k: Primed(v) for k, v in mapping.items()},
    )


def prime_all(e: Expr, names: Iterable[str]) -> Expr:
    return substitute(e, {n: Primed(n) for n in names})
