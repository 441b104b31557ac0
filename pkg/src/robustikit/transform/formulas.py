"""Expression builders for the generated guards and actions.

Everything is phrased over the original machine and its uncertainty
specification.  A *ball* quantifies over the potential true states of the
perceived state: one ``tilde_v`` binder per imprecisely perceived variable,
clipped to the variable's domain and filtered by the general relation when
there is one.  Exactly perceived variables are replaced by their ``hat_``
copies instead of being quantified.
"""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence

from ..evaluate import Evaluator
from ..expr import (
    BOT_LIT,
    TRUE,
    Binder,
    Expr,
    Implies,
    Int,
    Name,
    Not,
    Range,
    add,
    conj,
    conjuncts,
    disj,
    eq,
    exists,
    forall,
    free_names,
    implies,
    le,
    ne,
    prime_all,
    sub,
    substitute,
)
from ..model import ANY, HAT, NEXT, SOME, TILDE, EventDef, IntRange, Machine, UncertaintySpec, binder_for
from ..semantics import semantics

Member = Callable[[Mapping[str, Expr]], Expr]


def hat(v: str) -> str:
    return HAT + v


def uncertainty_invariant(m: Machine, spec: UncertaintySpec) -> Expr:
    """``s in eps(hat s)`` over the true variables and their hat copies."""
    parts: list[Expr] = []
    for v in m.var_names:
        c = spec.clause_for(v)
        if c is None:
            continue
        if c.radius is None:
            parts.append(eq(Name(v), Name(hat(v))))
        else:
            parts.append(le(sub(Name(hat(v)), c.radius), Name(v)))
            parts.append(le(Name(v), add(Name(hat(v)), c.radius)))
    if spec.relation is not None:
        parts.append(spec.relation)
    return conj(*parts)


def paired_names(m: Machine) -> list[str]:
    return list(m.var_names) + [hat(v) for v in m.var_names]


def reperceive(m: Machine, spec: UncertaintySpec) -> Expr:
    """``s' in eps(hat s')``: the uncertainty invariant on the post-state."""
    return prime_all(uncertainty_invariant(m, spec), paired_names(m))


def split_guard(ev: EventDef) -> tuple[list[Expr], list[Expr]]:
    """Guard conjuncts that ignore the parameters, and those that read them."""
    params = set(ev.param_names)
    outside = [c for c in conjuncts(ev.guard) if not free_names(c) & params]
    inside = [c for c in conjuncts(ev.guard) if free_names(c) & params]
    return outside, inside


def always_has_params(m: Machine, ev: EventDef) -> bool:
    """Whether the parameter-free part of the guard alone decides enabledness.

    Checked by enumeration over the domain.  When it holds, generated guards
    can test the short form (as the hand-written figures do) without changing
    their meaning, because ball binders never leave the domain.
    """
    outside, inside = split_guard(ev)
    if not inside:
        return True
    sem = semantics(m)
    k = m.events.index(ev)
    ev_fn = Evaluator(m.enum_constants).fn(conj(*outside))
    for s in sem.states():
        if bool(ev_fn(sem.env_of(s))) != sem.enabled(k, s):
            return False
    return True


class Builder:
    """Shared pieces of the generated guards for one (machine, uncertainty) pair."""

    def __init__(self, m: Machine, spec: UncertaintySpec, *, simplify: bool = True):
        self.m = m
        self.spec = spec
        binders: list[Binder] = []
        cond: list[Expr] = []
        self.sub: dict[str, Expr] = {}
        for v in m.vars:
            c = spec.clause_for(v.name)
            t = TILDE + v.name
            if c is not None and c.radius is None:
                self.sub[v.name] = Name(hat(v.name))
                continue
            self.sub[v.name] = Name(t)
            if c is None:
                binders.append(binder_for(t, v.domain))
                continue
            h = Name(hat(v.name))
            binders.append(Binder(t, Range(sub(h, c.radius), add(h, c.radius))))
            d = v.domain
            assert isinstance(d, IntRange)
            cond.append(le(Int(d.lo), Name(t)))
            cond.append(le(Name(t), Int(d.hi)))
        if spec.relation is not None:
            cond.append(substitute(spec.relation, self.sub))
        self.binders = tuple(binders)
        self.cond = conj(*cond)
        self.next_binders = tuple(binder_for(NEXT + v.name, v.domain) for v in m.vars)
        self.next_primes = {v: Name(NEXT + v) for v in m.var_names}
        self._short = {ev.name: simplify and always_has_params(m, ev) for ev in m.controller_events}

    # -- quantification over the ball -----------------------------------------

    def at(self, e: Expr, params: Mapping[str, Expr] = {}, primes: Mapping[str, Expr] = {}) -> Expr:
        """``e`` read at the potential true state."""
        names = dict(self.sub)
        names.update(params)
        return substitute(e, names, primes)

    def forall(self, body: Expr) -> Expr:
        if isinstance(body, Implies):
            return forall(self.binders, implies(conj(self.cond, body.left), body.right))
        return forall(self.binders, implies(self.cond, body))

    def exists(self, body: Expr) -> Expr:
        return exists(self.binders, conj(self.cond, body))

    # -- enabledness and compartments ------------------------------------------

    def enabled(self, ev: EventDef) -> Expr:
        """``exists p . G(s~, p)``, in short form when that is equivalent."""
        outside, inside = split_guard(ev)
        parts = [self.at(c) for c in outside]
        if inside and not self._short[ev.name]:
            ren = {p: Name(ANY + p) for p in ev.param_names}
            binders = tuple(binder_for(ANY + p.name, p.domain) for p in ev.params)
            parts.append(exists(binders, self.at(conj(*inside), ren)))
        return conj(*parts)

    def compartment(self, u: Sequence[int]) -> list[Expr]:
        """Conjuncts stating that the compartment of the perceived state is ``u``."""
        en = [self.enabled(self.m.controller(i)) for i in u]
        return [self.forall(disj(*en))] + [self.exists(e) for e in en]

    # -- parameter sets ----------------------------------------------------------

    def compatible(self, ev: EventDef) -> Member:
        """Membership in the parameters compatible with every ball state enabling ``ev``."""
        en = self.enabled(ev)
        _, inside = split_guard(ev)
        body = conj(*inside)

        def member(ren: Mapping[str, Expr]) -> Expr:
            return self.forall(implies(en, self.at(body, ren)))

        return member

    def safe(self, ev: EventDef, inv: Optional[Expr] = None, *, prose: bool = False) -> Member:
        """Membership in the parameters whose action is nonempty and inside ``inv`` at every ball state."""
        inv_next = substitute(self.m.safety if inv is None else inv, self.next_primes)
        en = self.enabled(ev) if prose else None

        def member(ren: Mapping[str, Expr]) -> Expr:
            act = self.at(ev.action, ren, self.next_primes)
            body = conj(
                exists(self.next_binders, act),
                forall(self.next_binders, implies(act, inv_next)),
            )
            if en is not None:
                body = implies(en, body)
            return self.forall(body)

        return member

    def common_post(self, slots: Sequence["Slot"]) -> Expr:
        """At every ball state the slot actions share a post-state."""
        parts = [conj(s.nonbot(), self.at(s.ev.action, s.map, self.next_primes)) for s in slots]
        return self.forall(exists(self.next_binders, conj(*parts)))


class Slot:
    """Parameters of one source event inside a heterogeneous event."""

    def __init__(self, index: int, ev: EventDef, names: Sequence[str]):
        self.index = index
        self.ev = ev
        self.names = tuple(names)
        self.map = {p: Name(n) for p, n in zip(ev.param_names, names)}

    @property
    def has_params(self) -> bool:
        return bool(self.names)

    def nonbot(self) -> Expr:
        return conj(*(ne(Name(n), BOT_LIT) for n in self.names))

    def isbot(self) -> Expr:
        return conj(*(eq(Name(n), BOT_LIT) for n in self.names))

    def guard(self, member: Member) -> Expr:
        """Slot takes a value from the set when it is nonempty and ``bot`` otherwise."""
        if not self.has_params:
            return TRUE
        some = {p: Name(SOME + p) for p in self.ev.param_names}
        binders = tuple(binder_for(SOME + p.name, p.domain) for p in self.ev.params)
        nonempty = exists(binders, member(some))
        return conj(
            implies(nonempty, conj(self.nonbot(), member(self.map))),
            implies(Not(nonempty), self.isbot()),
        )
