"""Action-preserving and action-repurposing robustification.

Both constructions replace the controller events of an injected machine by
one event per compartment ``u`` (a nonempty set of controller indices).  The
event for ``u`` is enabled exactly when the potential true states around the
perceived state enable precisely the events in ``u``, and carries one
parameter slot per source event, each of which may be ``bot``.

* preserving: slot ``i`` ranges over the parameters compatible with every
  potential true state enabling event ``i``; the action is the intersection
  of the source actions, which must be nonempty at every potential true state.
* repurposing: slot ``i`` ranges over the parameters whose action is
  nonempty and safe at every potential true state; the action applies any
  source action whose slot is not ``bot``.

Compartments that no perceived state produces are pruned.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from ..analysis.params import compartment_map
from ..analysis.report import CheckReport
from ..expr import Expr, conj, disj, substitute
from ..model import EventDef, Machine, ModelError, Origin, PairedMachine, ParamDecl, UncertaintySpec
from .conditions import thm1_condition, thm2_condition
from .formulas import Builder, Slot, reperceive
from .inject import injection_inputs, require_bound

PRESERVING = "pR"
REPURPOSING = "rR"
METHODS = {"preserving": PRESERVING, "repurposing": REPURPOSING, PRESERVING: PRESERVING, REPURPOSING: REPURPOSING}


@dataclass
class RobustifyOutcome:
    """Result of one robustification attempt.

    ``machine`` is present exactly when the sufficient condition holds, unless
    the construction was forced, in which case it is kept for inspection.
    """

    method: str
    machine: Optional[PairedMachine]
    condition: CheckReport
    retained: list[dict[str, Any]] = field(default_factory=list)
    pruned: list[dict[str, Any]] = field(default_factory=list)
    forced: bool = False

    @property
    def ok(self) -> bool:
        return self.condition.holds

    def to_json(self, *, timing: bool = True) -> dict[str, Any]:
        return {
            "method": self.method,
            "machine": None if self.machine is None else self.machine.name,
            "condition": self.condition.to_json(timing=timing),
            "retained": self.retained,
            "pruned": self.pruned,
            "forced": self.forced,
        }


# ---------------------------------------------------------------------------
# naming


def _common_prefix(names: Sequence[str]) -> str:
    prefix = os.path.commonprefix(list(names))
    cut = prefix.rfind("_")
    return prefix[: cut + 1] if cut > 0 else ""


def hetero_name(m: Machine, u: Sequence[int]) -> str:
    """Sorted source names joined by ``_`` with ``_hetero`` appended.

    A prefix shared by every source name (such as ``ctrl_``) is written once.
    A singleton compartment keeps the name of its only source event.
    """
    names = sorted(m.controller(i).name for i in u)
    if len(names) == 1:
        return names[0]
    prefix = _common_prefix(names)
    parts = [names[0]] + [n[len(prefix):] for n in names[1:]]
    return "_".join(parts) + "_hetero"


def compartment_order(u) -> tuple[int, tuple[int, ...]]:
    t = tuple(sorted(u))
    return len(t), t


def _slot_names(m: Machine, u: Sequence[int]) -> list[list[str]]:
    counts: dict[str, int] = {}
    for i in u:
        for p in m.controller(i).param_names:
            counts[p] = counts.get(p, 0) + 1
    out = []
    for i in u:
        ev = m.controller(i)
        out.append([p if counts[p] == 1 else f"{ev.name}_{p}" for p in ev.param_names])
    return out


def _slots(m: Machine, u: Sequence[int]) -> list[Slot]:
    return [Slot(i, m.controller(i), names) for i, names in zip(u, _slot_names(m, u))]


def _params(slots: Sequence[Slot]) -> tuple[ParamDecl, ...]:
    return tuple(
        ParamDecl(n, p.domain, bot=True) for s in slots for n, p in zip(s.names, s.ev.params)
    )


def _renamed_action(s: Slot) -> Expr:
    return substitute(s.ev.action, s.map)


# ---------------------------------------------------------------------------
# event synthesis


def preserving_event(b: Builder, u: Sequence[int], name: str) -> EventDef:
    slots = _slots(b.m, u)
    guard = conj(
        *b.compartment(u),
        *(s.guard(b.compatible(s.ev)) for s in slots),
        b.common_post(slots),
    )
    action = conj(*(conj(s.nonbot(), _renamed_action(s)) for s in slots), reperceive(b.m, b.spec))
    return EventDef("ctrl", name, _params(slots), guard, action, covers=tuple(u))


def repurposing_event(
    b: Builder, u: Sequence[int], name: str, *, inv: Optional[Expr] = None, prose: bool = False
) -> EventDef:
    slots = _slots(b.m, u)
    guards: list[Expr] = []
    usable: list[Expr] = []
    for s in slots:
        member = b.safe(s.ev, inv, prose=prose)
        if s.has_params:
            guards.append(s.guard(member))
            usable.append(s.nonbot())
        else:
            usable.append(member({}))
    guard = conj(*b.compartment(u), *guards, disj(*usable))
    action = conj(
        disj(*(conj(ok, _renamed_action(s)) for ok, s in zip(usable, slots))),
        reperceive(b.m, b.spec),
    )
    return EventDef("ctrl", name, _params(slots), guard, action, covers=tuple(u))


def _all_compartments(n: int) -> list[tuple[int, ...]]:
    idx = range(1, n + 1)
    return [c for k in range(1, n + 1) for c in itertools.combinations(idx, k)]


def _unique(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for n in names:
        if n in seen:
            seen[n] += 1
            n = f"{n}_{seen[n]}"
        else:
            seen[n] = 1
        out.append(n)
    return out


def _build(
    pm: PairedMachine,
    method: str,
    *,
    force: bool,
    inv: Optional[Expr] = None,
    prose: bool = False,
    simplify: bool = True,
) -> RobustifyOutcome:
    m, spec = injection_inputs(pm)
    require_bound(m, spec)
    cmap = compartment_map(m, spec)
    live = sorted((tuple(sorted(u)) for u in cmap), key=compartment_order)
    n = len(m.controller_events)
    dead = [u for u in _all_compartments(n) if frozenset(u) not in cmap]
    if method == PRESERVING:
        cond = thm1_condition(m, spec)
    else:
        cond = thm2_condition(m, spec, inv=inv, prose=prose)
    names = _unique([hetero_name(m, u) for u in live])
    retained = [{"compartment": list(u), "event": name} for u, name in zip(live, names)]
    pruned = [{"compartment": list(u), "event": hetero_name(m, u)} for u in dead]
    machine = None
    if cond.holds or force:
        b = Builder(m, spec, simplify=simplify)
        if method == PRESERVING:
            hetero = [preserving_event(b, u, name) for u, name in zip(live, names)]
        else:
            hetero = [repurposing_event(b, u, name, inv=inv, prose=prose) for u, name in zip(live, names)]
        machine = PairedMachine(
            name=f"{m.name}_{spec.name}_{method}",
            vars=pm.vars,
            init=pm.init,
            safety=pm.safety,
            events=pm.plant_events + tuple(hetero),
            consts=(),
            uncertainty=pm.uncertainty,
            origin=Origin(method, m.name, spec.name),
            base=m,
            spec=spec,
        )
    return RobustifyOutcome(method, machine, cond, retained, pruned, forced=force and not cond.holds)


def robustify_preserving(pm: PairedMachine, *, force: bool = False, simplify: bool = True) -> RobustifyOutcome:
    """Action-preserving robustification of an injected machine."""
    return _build(pm, PRESERVING, force=force, simplify=simplify)


def robustify_repurposing(
    pm: PairedMachine,
    *,
    force: bool = False,
    inv: Optional[Expr] = None,
    prose: bool = False,
    simplify: bool = True,
) -> RobustifyOutcome:
    """Action-repurposing robustification of an injected machine.

    ``inv`` replaces the safety invariant used to select safe parameters;
    ``prose`` restricts that selection to potential true states enabling the
    source event.
    """
    return _build(pm, REPURPOSING, force=force, inv=inv, prose=prose, simplify=simplify)


def robustify(pm: PairedMachine, method: str, **kw) -> RobustifyOutcome:
    key = METHODS.get(method)
    if key is None:
        raise ModelError(f"unknown robustification method {method!r}")
    if key == PRESERVING:
        kw.pop("inv", None)
        kw.pop("prose", None)
        return robustify_preserving(pm, **kw)
    return robustify_repurposing(pm, **kw)
