"""Controller-plant models, uncertainty specifications and their validation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Mapping, Optional, Union

from .expr import (
    Binder,
    EnumSet,
    Expr,
    Int,
    Name,
    Quant,
    Range,
    binder_names,
    children,
    free_names,
    primed_names,
    substitute,
)


class _Bot:
    """Singleton for a missing heterogeneous-event parameter slot."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "bot"

    def __reduce__(self):
        return (_Bot, ())


BOT = _Bot()

Value = Union[int, str, _Bot]
State = tuple  # values in variable declaration order

HAT = "hat_"
TILDE = "tilde_"
ANY = "any_"
SOME = "some_"
NEXT = "next_"
RESERVED_PREFIXES = (HAT, TILDE, ANY, SOME, NEXT)


class ModelError(ValueError):
    """A model or uncertainty specification violates a structural invariant."""


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def values(self) -> range:
        return range(self.lo, self.hi + 1)

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, v) -> bool:
        return isinstance(v, int) and self.lo <= v <= self.hi

    def as_binder_domain(self) -> Range:
        return Range(Int(self.lo), Int(self.hi))


@dataclass(frozen=True)
class EnumDomain:
    values_: tuple[str, ...]

    def values(self) -> tuple[str, ...]:
        return self.values_

    def __len__(self) -> int:
        return len(self.values_)

    def __contains__(self, v) -> bool:
        return v in self.values_

    def as_binder_domain(self) -> EnumSet:
        return EnumSet(self.values_)


Domain = Union[IntRange, EnumDomain]


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: Domain


@dataclass(frozen=True)
class ConstDecl:
    name: str
    domain: IntRange


@dataclass(frozen=True)
class ParamDecl:
    name: str
    domain: Domain
    bot: bool = False  # whether the bot sentinel is an admissible value

    def values(self) -> list:
        vals = list(self.domain.values())
        if self.bot:
            vals.append(BOT)
        return vals


@dataclass(frozen=True)
class EventDef:
    kind: str  # 'plant' | 'ctrl'
    name: str
    params: tuple[ParamDecl, ...]
    guard: Expr
    action: Expr
    covers: Optional[tuple[int, ...]] = None  # source controller indices of a robustified event

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class Origin:
    method: str  # 'inject' | 'pR' | 'rR'
    machine: str
    uncertainty: str


@dataclass(frozen=True)
class Machine:
    name: str
    vars: tuple[VarDecl, ...]
    init: Expr
    safety: Expr
    events: tuple[EventDef, ...]
    consts: tuple[ConstDecl, ...] = ()

    # -- lookups -----------------------------------------------------------

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def domain_of(self, name: str) -> Domain:
        for v in self.vars:
            if v.name == name:
                return v.domain
        raise KeyError(name)

    @property
    def plant_events(self) -> tuple[EventDef, ...]:
        return tuple(e for e in self.events if e.kind == "plant")

    @property
    def controller_events(self) -> tuple[EventDef, ...]:
        return tuple(e for e in self.events if e.kind == "ctrl")

    def controller(self, index: int) -> EventDef:
        """Controller event by 1-based index."""
        return self.controller_events[index - 1]

    def event(self, name: str) -> EventDef:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def enum_constants(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for v in self.vars:
            if isinstance(v.domain, EnumDomain):
                for c in v.domain.values():
                    out[c] = c
        for e in self.events:
            for p in e.params:
                if isinstance(p.domain, EnumDomain):
                    for c in p.domain.values():
                        out[c] = c
        return out

    @property
    def const_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.consts)

    def state_dict(self, s: State) -> dict[str, Value]:
        return dict(zip(self.var_names, s))

    def state_of(self, values: Mapping[str, Value]) -> State:
        return tuple(values[n] for n in self.var_names)

    @property
    def is_paired(self) -> bool:
        return False

    def bind(self, values: Mapping[str, int]) -> "Machine":
        """Substitute concrete values for symbolic constants."""
        return _bind_machine(self, values)


@dataclass(frozen=True)
class PairedMachine(Machine):
    """A machine over (true, perceived) state pairs.

    The variable list holds every original variable followed by its ``hat_``
    copy.  ``uncertainty`` is the uncertainty invariant relating the two.
    ``base`` and ``spec`` keep the inputs of the construction when known; they
    are provenance only and excluded from equality.
    """

    uncertainty: Expr = field(default=None)  # type: ignore[assignment]
    origin: Optional[Origin] = None
    base: Optional[Machine] = field(default=None, compare=False, repr=False)
    spec: Optional["UncertaintySpec"] = field(default=None, compare=False, repr=False)

    @property
    def is_paired(self) -> bool:
        return True

    @property
    def true_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.var_names if not n.startswith(HAT))

    @property
    def hat_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.var_names if n.startswith(HAT))

    def split(self, s: State) -> tuple[State, State]:
        k = len(self.true_names)
        return s[:k], s[k:]


# ---------------------------------------------------------------------------
# uncertainty specifications


@dataclass(frozen=True)
class Clause:
    var: str
    radius: Optional[Expr]  # None means the variable is perceived exactly


@dataclass(frozen=True)
class UncertaintySpec:
    """Per-variable perception error plus an optional general relation.

    The relation is an expression over true variable names and their
    ``hat_`` copies.  A variable with no clause ranges over its whole domain,
    filtered by the relation.
    """

    name: str
    machine: str
    clauses: tuple[Clause, ...]
    relation: Optional[Expr] = None
    consts: tuple[ConstDecl, ...] = ()

    def clause_for(self, var: str) -> Optional[Clause]:
        for c in self.clauses:
            if c.var == var:
                return c
        return None

    def bind(self, values: Mapping[str, int]) -> "UncertaintySpec":
        sub = {k: Int(v) for k, v in values.items()}
        _check_binding(self.consts, values)
        return UncertaintySpec(
            self.name,
            self.machine,
            tuple(Clause(c.var, None if c.radius is None else substitute(c.radius, sub)) for c in self.clauses),
            None if self.relation is None else substitute(self.relation, sub),
            tuple(c for c in self.consts if c.name not in values),
        )

    @property
    def const_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.consts)

    def radius(self, var: str) -> Optional[int]:
        """Concrete radius of an interval clause (None when exact or absent)."""
        c = self.clause_for(var)
        if c is None or c.radius is None:
            return None
        if not isinstance(c.radius, Int):
            raise ModelError(f"symbolic radius of {var!r} is unbound; supply a value for {_describe(c.radius)}")
        return c.radius.value


def _describe(e: Expr) -> str:
    names = sorted(free_names(e))
    return ", ".join(names) if names else "the radius"


def _check_binding(consts: tuple[ConstDecl, ...], values: Mapping[str, int]) -> None:
    for c in consts:
        if c.name in values and values[c.name] not in c.domain:
            raise ModelError(f"value {values[c.name]} for {c.name} outside its domain [{c.domain.lo}..{c.domain.hi}]")


def _bind_machine(m: Machine, values: Mapping[str, int]) -> Machine:
    values = {k: v for k, v in values.items() if k in m.const_names}
    if not values:
        return m
    _check_binding(m.consts, values)
    sub = {k: Int(v) for k, v in values.items()}

    def s(e):
        return None if e is None else substitute(e, sub)

    events = tuple(replace(ev, guard=s(ev.guard), action=s(ev.action)) for ev in m.events)
    consts = tuple(c for c in m.consts if c.name not in values)
    if isinstance(m, PairedMachine):
        base = None if m.base is None else m.base.bind(values)
        spec = None if m.spec is None else m.spec.bind({k: v for k, v in values.items() if k in m.spec.const_names})
        return replace(
            m,
            init=s(m.init),
            safety=s(m.safety),
            events=events,
            consts=consts,
            uncertainty=s(m.uncertainty),
            base=base,
            spec=spec,
        )
    return replace(m, init=s(m.init), safety=s(m.safety), events=events, consts=consts)


# ---------------------------------------------------------------------------
# validation


def expr_problems(
    e: Expr,
    known: set[str],
    *,
    primable: frozenset[str] = frozenset(),
    allow_primed: bool = False,
    where: str = "expression",
) -> list[str]:
    """Return human-readable problems with ``e`` in the given scope."""
    problems: list[str] = []
    if not allow_primed and primed_names(e):
        problems.append(f"primed reference in {where}")
    elif allow_primed:
        for p in sorted(primed_names(e) - primable):
            problems.append(f"primed reference to non-variable {p!r} in {where}")
    _check_scope(e, known, problems, where)
    for b in sorted(binder_names(e) & known):
        problems.append(f"quantifier binder {b!r} shadows a declared name in {where}")
    return problems


def _check_scope(e: Expr, known: set[str], problems: list[str], where: str) -> None:
    if isinstance(e, Name):
        if e.name not in known:
            problems.append(f"unknown identifier {e.name!r} in {where}")
        return
    if isinstance(e, Quant):
        inner = set(known)
        for b in e.binders:
            if primed_names(b.domain):
                problems.append(f"quantifier bound contains a primed reference in {where}")
            _check_scope(b.domain, inner, problems, where)
            if isinstance(b.domain, EnumSet):
                for c in b.domain.values:
                    if c not in known:
                        problems.append(f"unknown enumeration constant {c!r} in {where}")
            inner.add(b.name)
        _check_scope(e.body, inner, problems, where)
        return
    for c in children(e):
        _check_scope(c, known, problems, where)


def _domain_problems(name: str, d: Domain) -> list[str]:
    if isinstance(d, IntRange) and d.lo > d.hi:
        return [f"invalid domain for {name!r}: lower bound {d.lo} exceeds upper bound {d.hi}"]
    if isinstance(d, EnumDomain):
        if not d.values_:
            return [f"invalid domain for {name!r}: empty enumeration"]
        if len(set(d.values_)) != len(d.values_):
            return [f"invalid domain for {name!r}: duplicate enumeration constant"]
    return []


def decl_problems(m: Machine) -> list[str]:
    """Problems with declarations alone (names, domains, paired structure)."""
    problems: list[str] = []
    seen: set[str] = set()
    for n in [v.name for v in m.vars] + [c.name for c in m.consts]:
        if n in seen:
            problems.append(f"duplicate declaration of {n!r}")
        seen.add(n)
    for v in m.vars:
        problems += _domain_problems(v.name, v.domain)
    for c in m.consts:
        problems += _domain_problems(c.name, c.domain)
    for c in m.enum_constants:
        if c in seen:
            problems.append(f"enumeration constant {c!r} clashes with a declared name")
    if isinstance(m, PairedMachine):
        problems += _paired_problems(m)
    return problems


def _paired_problems(m: PairedMachine) -> list[str]:
    problems: list[str] = []
    true = m.true_names
    hats = m.hat_names
    if list(hats) != [HAT + n for n in true]:
        problems.append("paired machine must declare a hat_ copy of every variable, after the true variables")
        return problems
    for n in true:
        if m.domain_of(n) != m.domain_of(HAT + n):
            problems.append(f"hat_{n} must have the same domain as {n}")
    if free_names(m.safety) & set(hats):
        problems.append("safety invariant of a paired machine must not mention hat variables")
    return problems


def known_names(m: Machine) -> set[str]:
    return set(m.var_names) | set(m.const_names) | set(m.enum_constants)


def machine_problems(m: Machine) -> list[str]:
    problems = decl_problems(m)
    known = known_names(m)
    problems += expr_problems(m.init, known, where="init")
    problems += expr_problems(m.safety, known, where="safety")
    if isinstance(m, PairedMachine):
        if m.uncertainty is None:
            problems.append("paired machine lacks an uncertainty invariant")
        else:
            problems += expr_problems(m.uncertainty, known, where="uncertainty invariant")
    for ev in m.events:
        problems += event_problems(ev, m, known)
    problems += event_set_problems(m)
    return problems


def event_set_problems(m: Machine) -> list[str]:
    problems: list[str] = []
    names: set[str] = set()
    for ev in m.events:
        if ev.name in names:
            problems.append(f"duplicate event name {ev.name!r}")
        names.add(ev.name)
    if not m.controller_events:
        problems.append("machine must declare at least one controller event")
    return problems


def event_problems(ev: EventDef, m: Machine, known: set[str]) -> list[str]:
    problems: list[str] = []
    scope = set(known)
    for p in ev.params:
        problems += _domain_problems(p.name, p.domain)
        if p.name in scope:
            problems.append(f"parameter {p.name!r} of event {ev.name!r} clashes with a declared name")
        scope.add(p.name)
    problems += expr_problems(ev.guard, scope, where=f"guard of {ev.name}")
    problems += expr_problems(
        ev.action, scope, primable=frozenset(m.var_names), allow_primed=True, where=f"action of {ev.name}"
    )
    missing = [v for v in m.var_names if v not in primed_names(ev.action)]
    for v in missing:
        problems.append(f"action of {ev.name} leaves primed variable {v}' unconstrained")
    return problems


def validate_machine(m: Machine) -> Machine:
    problems = machine_problems(m)
    if problems:
        raise ModelError("; ".join(problems))
    return m


def spec_problems(spec: UncertaintySpec, m: Machine) -> list[str]:
    problems: list[str] = []
    if spec.machine != m.name:
        problems.append(f"uncertainty {spec.name!r} is for machine {spec.machine!r}, not {m.name!r}")
    seen: set[str] = set()
    for c in spec.consts:
        problems += _domain_problems(c.name, c.domain)
        if c.name in m.var_names:
            problems.append(f"constant {c.name!r} clashes with a variable")
    const_names = set(spec.const_names) | set(m.const_names)
    for c in spec.clauses:
        if c.var in seen:
            problems.append(f"duplicate clause for {c.var!r}")
        seen.add(c.var)
        if c.var not in m.var_names:
            problems.append(f"unknown variable {c.var!r} in uncertainty {spec.name}")
            continue
        if c.radius is not None:
            if isinstance(m.domain_of(c.var), EnumDomain):
                problems.append(f"radius on enumerated variable {c.var!r}")
            if isinstance(c.radius, Int):
                if c.radius.value < 0:
                    problems.append(f"negative radius for {c.var!r}")
            elif not (isinstance(c.radius, Name) and c.radius.name in const_names):
                problems.append(f"radius of {c.var!r} must be an integer literal or a declared constant")
    if spec.relation is None:
        for v in m.var_names:
            if v not in seen:
                problems.append(f"no uncertainty clause for variable {v!r}")
    else:
        known = set(m.var_names) | {HAT + v for v in m.var_names} | const_names | set(m.enum_constants)
        problems += expr_problems(spec.relation, known, where=f"relation of {spec.name}")
    return problems


def validate_spec(spec: UncertaintySpec, m: Machine) -> UncertaintySpec:
    problems = spec_problems(spec, m)
    if problems:
        raise ModelError("; ".join(problems))
    return spec


def iter_product(domains: list) -> Iterator[tuple]:
    """Lexicographic product of value lists (first position varies slowest)."""
    import itertools

    return itertools.product(*domains)


def valuation_json(values: Mapping[str, Any]) -> dict[str, Any]:
    return {k: ("bot" if v is BOT else v) for k, v in values.items()}


def binder_for(name: str, d: Domain) -> Binder:
    return Binder(name, d.as_binder_domain())


__all__ = [
    "BOT",
    "Clause",
    "ConstDecl",
    "Domain",
    "EnumDomain",
    "EventDef",
    "IntRange",
    "Machine",
    "ModelError",
    "Origin",
    "PairedMachine",
    "ParamDecl",
    "State",
    "UncertaintySpec",
    "VarDecl",
    "validate_machine",
    "validate_spec",
]

