"""SMT-LIB v2 scripts for the enumeration checks.

Every script asks for a *violation*: ``unsat`` means the property holds and
``sat`` means a counterexample exists, matching the enumeration verdict.
Scripts are self-contained and use quantified linear integer arithmetic.

Naming: state variables ``v_<name>``, perceived copies ``h_<name>``, post
states add ``_p``, event parameters ``p_<name>``, quantifier binders
``b_<name>``.  Bound symbolic constants are inlined; unbound ones are declared
as ``c_<name>``.  Enumeration constants become distinct integers, listed in the
header.

The ``bot`` sentinel is encoded by an extra boolean ``<param>_bot`` per
parameter that admits it.  Arithmetic on ``bot`` yields ``bot``, ordering
comparisons involving ``bot`` are false, and ``=`` compares values with
``bot`` equal only to itself, exactly as the evaluator does.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence

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
from ..model import HAT, EnumDomain, EventDef, IntRange, Machine, PairedMachine, UncertaintySpec

LOGIC = "LIA"

QUERY_KINDS = (
    "partitioning",
    "preservation",
    "feasibility",
    "vacuity",
    "thm1",
    "thm2",
    "simulation",
)


class SmtError(ValueError):
    """An expression cannot be expressed in the target logic."""


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def _and(parts: Sequence[str]) -> str:
    parts = [p for p in parts if p != "true"]
    if "false" in parts:
        return "false"
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return f"(and {' '.join(parts)})"


def _or(parts: Sequence[str]) -> str:
    parts = [p for p in parts if p != "false"]
    if "true" in parts:
        return "true"
    if not parts:
        return "false"
    if len(parts) == 1:
        return parts[0]
    return f"(or {' '.join(parts)})"


def _not(p: str) -> str:
    if p == "true":
        return "false"
    if p == "false":
        return "true"
    return f"(not {p})"


class Sym:
    """An SMT symbol for a DSL name, with its ``bot`` flag when it has one."""

    __slots__ = ("name", "bot")

    def __init__(self, name: str, bot: Optional[str] = None):
        self.name = name
        self.bot = bot


class Encoder:
    """Translates expressions of one machine into SMT-LIB terms."""

    def __init__(self, m: Machine, consts: Optional[Mapping[str, int]] = None):
        self.m = m
        self.enum_ids: dict[str, int] = {}
        for c in m.enum_constants:
            self.enum_ids.setdefault(c, len(self.enum_ids))
        self.consts = dict(consts or {})
        self.scope: list[dict[str, Sym]] = [{}]
        self.decls: list[str] = []
        self.facts: list[str] = []

    # -- names ---------------------------------------------------------------

    def var_symbol(self, name: str) -> str:
        if isinstance(self.m, PairedMachine) and name.startswith(HAT):
            return "h_" + name[len(HAT):]
        return "v_" + name

    def bind(self, mapping: Mapping[str, Sym]) -> None:
        self.scope.append(dict(mapping))

    def unbind(self) -> None:
        self.scope.pop()

    def lookup(self, key: str) -> Optional[Sym]:
        for frame in reversed(self.scope):
            if key in frame:
                return frame[key]
        return None

    def state_syms(self, primed: bool = False, names: Optional[Iterable[str]] = None) -> dict[str, Sym]:
        out = {}
        for n in self.m.var_names if names is None else names:
            sym = self.var_symbol(n) + ("_p" if primed else "")
            out[n + "'" if primed else n] = Sym(sym)
        return out

    # -- domains ---------------------------------------------------------------

    def domain(self, sym: str, d) -> str:
        if isinstance(d, IntRange):
            return f"(and (<= {_int(d.lo)} {sym}) (<= {sym} {_int(d.hi)}))"
        if isinstance(d, EnumDomain):
            return _or([f"(= {sym} {self.enum_ids[c]})" for c in d.values()])
        raise SmtError(f"unknown domain {d!r}")

    def declare_state(self, primed: bool = False) -> None:
        for v in self.m.vars:
            sym = self.var_symbol(v.name) + ("_p" if primed else "")
            self.decls.append(f"(declare-const {sym} Int)")
            self.facts.append(self.domain(sym, v.domain))

    def declare_consts(self) -> None:
        for c in self.m.consts:
            if c.name not in self.consts:
                sym = "c_" + c.name
                self.decls.append(f"(declare-const {sym} Int)")
                self.facts.append(self.domain(sym, c.domain))

    def param_binders(self, ev: EventDef, prefix: str = "p_") -> tuple[str, str, dict[str, Sym]]:
        """Binder list, domain constraint and scope frame for the parameters of ``ev``."""
        parts, doms, frame = [], [], {}
        for p in ev.params:
            sym = prefix + p.name
            parts.append(f"({sym} Int)")
            dom = self.domain(sym, p.domain)
            if p.bot:
                flag = sym + "_bot"
                parts.append(f"({flag} Bool)")
                dom = _or([flag, dom])
                frame[p.name] = Sym(sym, flag)
            else:
                frame[p.name] = Sym(sym)
            doms.append(dom)
        return " ".join(parts), _and(doms), frame

    def state_binders(self, primed: bool, names: Optional[Sequence[str]] = None) -> tuple[str, str, dict[str, Sym]]:
        frame = self.state_syms(primed, names)
        parts, doms = [], []
        for key, sym in frame.items():
            n = key.rstrip("'")
            parts.append(f"({sym.name} Int)")
            doms.append(self.domain(sym.name, self.m.domain_of(n)))
        return " ".join(parts), _and(doms), frame

    # -- terms -------------------------------------------------------------------

    def term(self, e: Expr) -> tuple[str, Optional[str]]:
        """Value and ``bot`` condition (None when it cannot be ``bot``)."""
        if isinstance(e, Int):
            return _int(e.value), None
        if isinstance(e, BotLit):
            return "0", "true"
        if isinstance(e, Name):
            sym = self.lookup(e.name)
            if sym is not None:
                return sym.name, sym.bot
            if e.name in self.consts:
                return _int(self.consts[e.name]), None
            if e.name in self.m.const_names:
                return "c_" + e.name, None
            if e.name in self.enum_ids:
                return str(self.enum_ids[e.name]), None
            raise SmtError(f"unbound name {e.name!r}")
        if isinstance(e, Primed):
            sym = self.lookup(e.name + "'")
            if sym is None:
                raise SmtError(f"unbound primed name {e.name!r}")
            return sym.name, sym.bot
        if isinstance(e, Neg):
            v, b = self.term(e.arg)
            return f"(- {v})", b
        if isinstance(e, Arith):
            a, ba = self.term(e.left)
            c, bc = self.term(e.right)
            flags = [f for f in (ba, bc) if f is not None]
            return f"({e.op} {a} {c})", (_or(flags) if flags else None)
        raise SmtError(f"not a term: {e!r}")

    def formula(self, e: Expr) -> str:
        if isinstance(e, BoolLit):
            return "true" if e.value else "false"
        if isinstance(e, Cmp):
            return self._cmp(e)
        if isinstance(e, Not):
            return _not(self.formula(e.arg))
        if isinstance(e, And):
            return _and([self.formula(a) for a in e.args])
        if isinstance(e, Or):
            return _or([self.formula(a) for a in e.args])
        if isinstance(e, Implies):
            return f"(=> {self.formula(e.left)} {self.formula(e.right)})"
        if isinstance(e, Iff):
            return f"(= {self.formula(e.left)} {self.formula(e.right)})"
        if isinstance(e, Quant):
            return self._quant(e)
        raise SmtError(f"not a formula: {e!r}")

    def _cmp(self, e: Cmp) -> str:
        a, ba = self.term(e.left)
        c, bc = self.term(e.right)
        if e.op in ("=", "!="):
            if ba is None and bc is None:
                out = f"(= {a} {c})"
            elif isinstance(e.right, BotLit):
                out = ba or "false"
            elif isinstance(e.left, BotLit):
                out = bc or "false"
            else:
                ba, bc = ba or "false", bc or "false"
                out = _or([_and([ba, bc]), _and([_not(ba), _not(bc), f"(= {a} {c})"])])
            return out if e.op == "=" else _not(out)
        guard = [_not(f) for f in (ba, bc) if f is not None]
        return _and(guard + [f"({e.op} {a} {c})"])

    def _quant(self, q: Quant) -> str:
        parts, doms = [], []
        self.bind({})
        frame = self.scope[-1]
        try:
            for b in q.binders:
                sym = "b_" + b.name
                if isinstance(b.domain, Range):
                    lo, blo = self.term(b.domain.lo)
                    hi, bhi = self.term(b.domain.hi)
                    if blo is not None or bhi is not None:
                        raise SmtError("quantifier bound may be bot")
                    doms.append(f"(and (<= {lo} {sym}) (<= {sym} {hi}))")
                elif isinstance(b.domain, EnumSet):
                    doms.append(_or([f"(= {sym} {self.enum_ids[c]})" for c in b.domain.values]))
                parts.append(f"({sym} Int)")
                frame[b.name] = Sym(sym)
            body = self.formula(q.body)
        finally:
            self.unbind()
        if q.kind == "forall":
            return f"(forall ({' '.join(parts)}) (=> {_and(doms)} {body}))"
        return f"(exists ({' '.join(parts)}) {_and([_and(doms), body])})"

    # -- helpers for queries -------------------------------------------------------

    def exists(self, binders: str, body: str) -> str:
        if not binders:
            return body
        return f"(exists ({binders}) {body})"

    def with_frame(self, frame: Mapping[str, Sym], e: Expr) -> str:
        self.bind(frame)
        try:
            return self.formula(e)
        finally:
            self.unbind()

    def enabled(self, ev: EventDef) -> str:
        """``exists p . G(s, p)`` over the current state symbols."""
        binders, dom, frame = self.param_binders(ev)
        return self.exists(binders, _and([dom, self.with_frame(frame, ev.guard)]))


def _script(kind: str, subject: str, enc: Encoder, query: str, note: str = "") -> str:
    lines = [
        "; robustikit query",
        f"; kind: {kind}",
        f"; model: {subject}",
        "; answer: unsat means the property holds, sat means a violation exists",
    ]
    if note:
        lines.append(f"; {note}")
    if enc.enum_ids:
        lines.append("; enumeration constants: " + ", ".join(f"{c}={i}" for c, i in enc.enum_ids.items()))
    lines.append(f"(set-logic {LOGIC})")
    lines += enc.decls
    for f in enc.facts:
        lines.append(f"(assert {f})")
    lines.append(f"(assert {query})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _paired_guard(enc: Encoder, m: Machine) -> list[str]:
    if isinstance(m, PairedMachine):
        return [enc.formula(m.uncertainty)]
    return []


# ---------------------------------------------------------------------------
# queries on one machine


def partitioning_query(m: Machine, consts: Optional[Mapping[str, int]] = None) -> str:
    enc = Encoder(m, consts)
    enc.declare_consts()
    enc.declare_state()
    enc.bind(enc.state_syms())
    count = " ".join(f"(ite {enc.enabled(ev)} 1 0)" for ev in m.controller_events)
    total = count if len(m.controller_events) == 1 else f"(+ {count})"
    return _script("partitioning", m.name, enc, f"(not (= {total} 1))")


def preservation_query(m: Machine, consts: Optional[Mapping[str, int]] = None) -> str:
    enc = Encoder(m, consts)
    enc.declare_consts()
    enc.declare_state()
    enc.declare_state(primed=True)
    enc.bind(enc.state_syms())
    enc.bind(enc.state_syms(primed=True))
    safe = enc.formula(m.safety)
    init = _and([enc.formula(m.init)] + _paired_guard(enc, m) + [_not(safe)])
    steps = []
    for ev in m.events:
        binders, dom, frame = enc.param_binders(ev)
        body = _and([dom, enc.with_frame(frame, ev.guard), enc.with_frame(frame, ev.action)])
        steps.append(enc.exists(binders, body))
    post_safe = enc.with_frame({n: Sym(enc.var_symbol(n) + "_p") for n in m.var_names}, m.safety)
    step = _and([safe] + _paired_guard(enc, m) + [_or(steps), _not(post_safe)])
    return _script("preservation", m.name, enc, _or([init, step]))


def feasibility_query(m: Machine, consts: Optional[Mapping[str, int]] = None) -> str:
    enc = Encoder(m, consts)
    enc.declare_consts()
    enc.declare_state()
    enc.bind(enc.state_syms())
    stuck = []
    for ev in m.controller_events:
        binders, dom, frame = enc.param_binders(ev)
        enc.bind(frame)
        try:
            nb, ndom, nframe = enc.state_binders(primed=True)
            post = enc.exists(nb, _and([ndom, enc.with_frame(nframe, ev.action)]))
            body = _and([dom, enc.formula(ev.guard), _not(post)])
        finally:
            enc.unbind()
        stuck.append(enc.exists(binders, body))
    query = _and([enc.formula(m.safety)] + _paired_guard(enc, m) + [_or(stuck)])
    return _script("feasibility", m.name, enc, query)


# ---------------------------------------------------------------------------
# queries on a machine and an uncertainty specification


def _hat_encoder(m: Machine, spec: UncertaintySpec, consts: Optional[Mapping[str, int]]):
    """Encoder declaring the perceived state ``h_*`` of ``m``."""
    from ..transform.inject import inject

    pm = inject(m, spec, check=False)
    enc = Encoder(pm, consts)
    enc.declare_consts()
    return pm, enc


def vacuity_query(
    m: Machine, spec: UncertaintySpec, u: Iterable[int], consts: Optional[Mapping[str, int]] = None
) -> str:
    """Satisfiable exactly when some perceived state has compartment ``u``."""
    from ..transform.formulas import Builder

    u = sorted(set(u))
    pm, enc = _hat_encoder(m, spec, consts)
    b = Builder(m, spec, simplify=False)
    hats = [HAT + n for n in m.var_names]
    for n in hats:
        sym = enc.var_symbol(n)
        enc.decls.append(f"(declare-const {sym} Int)")
        enc.facts.append(enc.domain(sym, pm.domain_of(n)))
    enc.bind(enc.state_syms(names=hats))
    query = _and([enc.formula(c) for c in b.compartment(u)])
    subject = f"{m.name} under {spec.name}, compartment {{{', '.join(map(str, u))}}}"
    return _script("vacuity", subject, enc, query, note="here unsat means the compartment is vacuous")


def thm2_query(
    m: Machine, spec: UncertaintySpec, consts: Optional[Mapping[str, int]] = None, *, prose: bool = False
) -> str:
    from ..transform.formulas import Builder

    pm, enc = _hat_encoder(m, spec, consts)
    b = Builder(m, spec, simplify=False)
    hats = [HAT + n for n in m.var_names]
    for n in hats:
        sym = enc.var_symbol(n)
        enc.decls.append(f"(declare-const {sym} Int)")
        enc.facts.append(enc.domain(sym, pm.domain_of(n)))
    enc.bind(enc.state_syms(names=hats))
    parts = []
    for ev in m.controller_events:
        in_u = enc.formula(b.exists(b.enabled(ev)))
        member = b.safe(ev, prose=prose)
        binders, dom, frame = enc.param_binders(ev, prefix="p_")
        ren = {p: Name(p) for p in ev.param_names}
        safe = enc.exists(binders, _and([dom, enc.with_frame(frame, member(ren))]))
        parts.append(f"(=> {in_u} {_not(safe)})")
    return _script("thm2", f"{m.name} under {spec.name}", enc, _and(parts))


def thm1_query(m: Machine, spec: UncertaintySpec, consts: Optional[Mapping[str, int]] = None) -> str:
    from ..transform.formulas import Builder

    pm, enc = _hat_encoder(m, spec, consts)
    b = Builder(m, spec, simplify=False)
    enc.declare_state()
    enc.bind(enc.state_syms(names=pm.var_names))
    nb, ndom, nframe = enc.state_binders(primed=True, names=m.var_names)
    enc.bind(nframe)
    parts = []
    for ev in m.controller_events:
        in_u = enc.formula(b.exists(b.enabled(ev)))
        member = b.compatible(ev)
        binders, dom, frame = enc.param_binders(ev)
        ren = {p: Name(p) for p in ev.param_names}
        enc.bind(frame)
        try:
            reach = _and([dom, enc.formula(member(ren)), enc.formula(ev.action)])
        finally:
            enc.unbind()
        parts.append(f"(=> {in_u} {enc.exists(binders, reach)})")
    enc.unbind()
    common = enc.exists(nb, _and([ndom] + parts))
    query = _and([enc.formula(pm.uncertainty), _not(common)])
    return _script("thm1", f"{m.name} under {spec.name}", enc, query)


def simulation_query(robust: PairedMachine, original: Machine, consts: Optional[Mapping[str, int]] = None) -> str:
    enc = Encoder(robust, consts)
    enc.declare_consts()
    enc.declare_state()
    enc.declare_state(primed=True)
    enc.bind(enc.state_syms())
    enc.bind(enc.state_syms(primed=True))
    allowed = []
    for ev in original.events:
        binders, dom, frame = enc.param_binders(ev, prefix="q_")
        body = _and([dom, enc.with_frame(frame, ev.guard), enc.with_frame(frame, ev.action)])
        allowed.append(enc.exists(binders, body))
    steps = []
    for ev in robust.events:
        binders, dom, frame = enc.param_binders(ev)
        body = _and([dom, enc.with_frame(frame, ev.guard), enc.with_frame(frame, ev.action)])
        steps.append(enc.exists(binders, body))
    query = _and([enc.formula(robust.uncertainty), _or(steps), _not(_or(allowed))])
    return _script("simulation", f"{robust.name} vs {original.name}", enc, query)


def emit(
    kind: str,
    m: Machine,
    *,
    spec: Optional[UncertaintySpec] = None,
    subset: Optional[Iterable[int]] = None,
    original: Optional[Machine] = None,
    consts: Optional[Mapping[str, int]] = None,
    prose: bool = False,
) -> str:
    """Script for query ``kind`` (one of :data:`QUERY_KINDS`)."""
    if kind == "partitioning":
        return partitioning_query(m, consts)
    if kind == "preservation":
        return preservation_query(m, consts)
    if kind == "feasibility":
        return feasibility_query(m, consts)
    if kind == "simulation":
        if not isinstance(m, PairedMachine) or original is None:
            raise SmtError("simulation needs a robustified machine and its original")
        return simulation_query(m, original, consts)
    if spec is None:
        raise SmtError(f"{kind} query needs an uncertainty specification")
    if kind == "vacuity":
        if not subset:
            raise SmtError("vacuity query needs a compartment (--subset)")
        return vacuity_query(m, spec, subset, consts)
    if kind == "thm1":
        return thm1_query(m, spec, consts)
    if kind == "thm2":
        return thm2_query(m, spec, consts, prose=prose)
    raise SmtError(f"unknown query kind {kind!r}; expected one of {', '.join(QUERY_KINDS)}")
