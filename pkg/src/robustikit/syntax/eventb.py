"""Event-B-flavoured text for reading generated models next to the published figures.

Output only: the notation uses mathematical symbols and is not parsed back.
Heterogeneous events are titled by their compartment, ``E_{1,2}``, with the
generated event name as a comment.
"""

from __future__ import annotations

from typing import Union

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
from .printer import _AND, _CMP, _IMPL, _NOT, _OR, _PROD, _QUANT, _SUM, _UNARY, _level

_CMP_SYMBOLS = {"=": "=", "!=": "≠", "<": "<", "<=": "≤"}
_METHOD_TAGS = {"inject": "ε", "pR": "ε,pR", "rR": "ε,rR"}


def _text(e: Expr, ctx: int = _QUANT) -> str:
    s = _render(e)
    lvl = _level(e)
    if lvl < ctx or (lvl == _QUANT and ctx > _QUANT):
        return f"({s})"
    return s


def _render(e: Expr) -> str:
    if isinstance(e, Int):
        return str(e.value) if e.value >= 0 else f"−{-e.value}"
    if isinstance(e, BoolLit):
        return "⊤" if e.value else "⊥"
    if isinstance(e, BotLit):
        return "⊥"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Primed):
        return e.name + "′"
    if isinstance(e, Neg):
        return "−" + _text(e.arg, _UNARY)
    if isinstance(e, Arith):
        if e.op == "*":
            return f"{_text(e.left, _PROD)} × {_text(e.right, _UNARY)}"
        op = "+" if e.op == "+" else "−"
        return f"{_text(e.left, _SUM)} {op} {_text(e.right, _PROD)}"
    if isinstance(e, Cmp):
        return f"{_text(e.left, _SUM)} {_CMP_SYMBOLS[e.op]} {_text(e.right, _SUM)}"
    if isinstance(e, Not):
        return "¬" + _text(e.arg, _CMP if not isinstance(e.arg, Not) else _NOT)
    if isinstance(e, And):
        return " ∧ ".join(_text(a, _NOT) for a in e.args)
    if isinstance(e, Or):
        return " ∨ ".join(_text(a, _AND) for a in e.args)
    if isinstance(e, Implies):
        return f"{_text(e.left, _OR)} ⇒ {_text(e.right, _IMPL)}"
    if isinstance(e, Iff):
        return f"{_text(e.left, _IMPL)} ⇔ {_text(e.right, _IMPL)}"
    if isinstance(e, Quant):
        sym = "∀" if e.kind == "forall" else "∃"
        bs = ", ".join(f"{b.name} ∈ {_binder_domain(b.domain)}" for b in e.binders)
        return f"{sym} {bs} · {_text(e.body)}"
    raise TypeError(f"cannot print {e!r}")


def _binder_domain(d: Union[Range, EnumSet]) -> str:
    if isinstance(d, Range):
        return f"[{_text(d.lo, _SUM)}, {_text(d.hi, _SUM)}]"
    return "{" + ", ".join(d.values) + "}"


def formula_text(e: Expr) -> str:
    return _text(e)


def _domain(d, bot: bool = False) -> str:
    if isinstance(d, IntRange):
        lo = str(d.lo) if d.lo >= 0 else f"−{-d.lo}"
        out = f"[{lo}, {d.hi}]"
    elif isinstance(d, EnumDomain):
        out = "{" + ", ".join(d.values()) + "}"
    else:
        raise TypeError(f"unknown domain {d!r}")
    return out + " ∪ {⊥}" if bot else out


def _lines(keyword: str, e: Expr, indent: str) -> list[str]:
    out = [f"{indent}{keyword}"]
    parts = e.args if isinstance(e, And) else (e,)
    pad = indent + "  "
    for k, a in enumerate(parts):
        lead = "   " if k == 0 else " ∧ "
        out.append(f"{pad}{lead}{_text(a, _NOT) if len(parts) > 1 else _text(a)}")
    return out


def event_text(ev: EventDef, indent: str = "  ") -> list[str]:
    kind = "Plant event" if ev.kind == "plant" else "Controller event"
    title = ev.name
    if ev.covers is not None and len(ev.covers) > 1:
        title = "E_{" + ",".join(map(str, ev.covers)) + "}  /* " + ev.name + " */"
    out = [f"{indent}{kind} {title}"]
    inner = indent + "  "
    if ev.params:
        out.append(f"{inner}Parameters")
        for p in ev.params:
            out.append(f"{inner}  {p.name} ∈ {_domain(p.domain, p.bot)}")
    out += _lines("Guard", ev.guard, inner)
    out += _lines("Action", ev.action, inner)
    return out


def machine_text(m: Machine, events: Union[None, list[str]] = None) -> str:
    """Event-B-flavoured rendering; ``events`` restricts the output to the named events."""
    title = f"Machine {m.name}"
    if isinstance(m, PairedMachine) and m.origin is not None:
        o = m.origin
        title += f"  /* {o.machine}^{{{_METHOD_TAGS.get(o.method, o.method)}}} with ε = {o.uncertainty} */"
    out = [title]
    if events is None:
        out.append("  Variables")
        for v in m.vars:
            out.append(f"    {v.name} ∈ {_domain(v.domain)}")
        for c in m.consts:
            out.append(f"  Constant {c.name} ∈ {_domain(c.domain)}")
        out += _lines("Initial states", m.init, "  ")
        safety = _lines("Safety invariant", m.safety, "  ")
        if isinstance(m, PairedMachine) and m.origin is not None and m.origin.method == "inject":
            safety[-1] += "  /* events may violate this */"
        out += safety
        if isinstance(m, PairedMachine):
            out += _lines("Uncertainty invariant", m.uncertainty, "  ")
    else:
        out.append("  …")
    for ev in m.events:
        if events is not None and ev.name not in events:
            continue
        out += event_text(ev)
    if events is not None:
        out.append("  …")
    return "\n".join(out) + "\n"


def spec_text(u: UncertaintySpec) -> str:
    out = [f"Uncertainty {u.name} for {u.machine}"]
    for c in u.clauses:
        if c.radius is None:
            out.append(f"  {c.var}: exact")
        else:
            r = _text(c.radius)
            out.append(f"  {c.var}: ε({c.var}) = [{c.var} − {r}, {c.var} + {r}]")
    if u.relation is not None:
        out += _lines("Relation", u.relation, "  ")
    return "\n".join(out) + "\n"


__all__ = ["event_text", "formula_text", "machine_text", "spec_text"]
