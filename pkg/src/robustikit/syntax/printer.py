"""Canonical text for expressions, machines and uncertainty specifications.

Printing inserts only the parentheses the parser needs, so parsing printed
text gives back a structurally equal entity.  Quantifiers are parenthesized
everywhere except at the top of a clause, because their bodies extend as far
to the right as possible.
"""

from __future__ import annotations

from typing import Iterable, Union

from ..expr import (
    And,
    Arith,
    BoolLit,
    BotLit,
    Cmp,
    EnumSet,
    Expr,
    Iff,
    Implies,
    Int,
    Name,
    Neg,
    Not,
    Or,
    Primed,
    Quant,
    Range,
)
from ..model import EnumDomain, EventDef, IntRange, Machine, PairedMachine, UncertaintySpec

WRAP = 100

_QUANT, _IFF, _IMPL, _OR, _AND, _NOT, _CMP, _SUM, _PROD, _UNARY, _ATOM = range(11)


def _level(e: Expr) -> int:
    if isinstance(e, Quant):
        return _QUANT
    if isinstance(e, Iff):
        return _IFF
    if isinstance(e, Implies):
        return _IMPL
    if isinstance(e, Or):
        return _OR
    if isinstance(e, And):
        return _AND
    if isinstance(e, Not):
        return _NOT
    if isinstance(e, Cmp):
        return _CMP
    if isinstance(e, Arith):
        return _PROD if e.op == "*" else _SUM
    if isinstance(e, Neg):
        return _UNARY
    if isinstance(e, Int) and e.value < 0:
        return _UNARY
    return _ATOM


def expr_text(e: Expr, ctx: int = _QUANT) -> str:
    """Render ``e`` for a context that binds at least as tightly as ``ctx``."""
    s = _render(e)
    lvl = _level(e)
    if lvl < ctx or (lvl == _QUANT and ctx > _QUANT):
        return f"({s})"
    return s


def _render(e: Expr) -> str:
    if isinstance(e, Int):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, BotLit):
        return "bot"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Primed):
        return e.name + "'"
    if isinstance(e, Neg):
        if isinstance(e.arg, Int):
            return f"-({e.arg.value})"
        return "-" + expr_text(e.arg, _UNARY)
    if isinstance(e, Arith):
        if e.op == "*":
            return f"{expr_text(e.left, _PROD)} * {expr_text(e.right, _UNARY)}"
        return f"{expr_text(e.left, _SUM)} {e.op} {expr_text(e.right, _PROD)}"
    if isinstance(e, Cmp):
        return f"{expr_text(e.left, _SUM)} {e.op} {expr_text(e.right, _SUM)}"
    if isinstance(e, Not):
        return "not " + expr_text(e.arg, _NOT)
    if isinstance(e, And):
        return " and ".join(expr_text(a, _NOT) for a in e.args)
    if isinstance(e, Or):
        return " or ".join(expr_text(a, _AND) for a in e.args)
    if isinstance(e, Implies):
        return f"{expr_text(e.left, _OR)} => {expr_text(e.right, _IMPL)}"
    if isinstance(e, Iff):
        return f"{expr_text(e.left, _IMPL)} <=> {expr_text(e.right, _IMPL)}"
    if isinstance(e, Quant):
        bs = ", ".join(f"{b.name} in {_binder_domain(b.domain)}" for b in e.binders)
        return f"{e.kind} {bs} . {expr_text(e.body)}"
    raise TypeError(f"cannot print {e!r}")


def _binder_domain(d: Union[Range, EnumSet]) -> str:
    if isinstance(d, Range):
        return f"[{expr_text(d.lo)} .. {expr_text(d.hi)}]"
    return "{" + ", ".join(d.values) + "}"


def domain_text(d) -> str:
    if isinstance(d, IntRange):
        return f"int[{d.lo}..{d.hi}]"
    if isinstance(d, EnumDomain):
        return "{" + ", ".join(d.values()) + "}"
    raise TypeError(f"unknown domain {d!r}")


def _clause(keyword: str, e: Expr, indent: str) -> list[str]:
    """A clause, with top-level conjuncts on their own lines when long."""
    line = f"{indent}{keyword} {expr_text(e)}"
    if len(line) <= WRAP or not isinstance(e, And):
        return [line]
    parts = [expr_text(a, _NOT) for a in e.args]
    pad = indent + "  "
    return [f"{indent}{keyword} {parts[0]}"] + [f"{pad}and {p}" for p in parts[1:]]


def event_lines(ev: EventDef, indent: str = "  ") -> list[str]:
    out = [f"{indent}{ev.kind} event {ev.name}"]
    inner = indent + "  "
    if ev.covers is not None:
        out.append(f"{inner}covers {{{', '.join(map(str, ev.covers))}}}")
    for p in ev.params:
        bot = " | bot" if p.bot else ""
        out.append(f"{inner}param {p.name} : {domain_text(p.domain)}{bot}")
    out += _clause("guard", ev.guard, inner)
    out += _clause("action", ev.action, inner)
    return out


def machine_text(m: Machine) -> str:
    out = [f"machine {m.name}"]
    if isinstance(m, PairedMachine) and m.origin is not None:
        o = m.origin
        out.append(f"  origin {o.method} of {o.machine} under {o.uncertainty}")
    for v in m.vars:
        out.append(f"  var {v.name} : {domain_text(v.domain)}")
    for c in m.consts:
        out.append(f"  const {c.name} : {domain_text(c.domain)}")
    out += _clause("init", m.init, "  ")
    safety = _clause("safety", m.safety, "  ")
    if isinstance(m, PairedMachine) and m.origin is not None and m.origin.method == "inject":
        safety[-1] += "  // events may violate this"
    out += safety
    if isinstance(m, PairedMachine):
        out += _clause("uncertainty invariant", m.uncertainty, "  ")
    for ev in m.events:
        out.append("")
        out += event_lines(ev)
    return "\n".join(out) + "\n"


def spec_text(u: UncertaintySpec) -> str:
    out = [f"uncertainty {u.name} for {u.machine}"]
    for c in u.consts:
        out.append(f"  const {c.name} : {domain_text(c.domain)}")
    for c in u.clauses:
        if c.radius is None:
            out.append(f"  {c.var} exact")
        else:
            out.append(f"  {c.var} within {expr_text(c.radius, _ATOM)}")
    if u.relation is not None:
        out += _clause("relation", u.relation, "  ")
    return "\n".join(out) + "\n"


def print_entity(e: Union[Machine, UncertaintySpec]) -> str:
    if isinstance(e, Machine):
        return machine_text(e)
    if isinstance(e, UncertaintySpec):
        return spec_text(e)
    raise TypeError(f"cannot print {type(e).__name__}")


def print_entities(entities: Iterable[Union[Machine, UncertaintySpec]]) -> str:
    return "\n".join(print_entity(e) for e in entities)
