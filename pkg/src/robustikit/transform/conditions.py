"""Sufficient conditions for the two robustifications, and vacuity of compartments.

All three are decided by enumeration on the original machine.  Witnesses name
the true state, the perceived state and the compartment of the perceived
state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Iterable, Optional

from ..analysis.params import compartment_map, compartments, oracle, par_c_eps, safpar
from ..analysis.report import CheckReport, Collector, make_report, state_json
from ..expr import Expr
from ..model import Machine, State, UncertaintySpec
from ..semantics import perception

THM1 = "thm1-condition"
THM2 = "thm2-condition"
VACUITY = "vacuity"


def _subject(m: Machine, spec: UncertaintySpec) -> str:
    return f"{m.name} under {spec.name}"


def _witness(m: Machine, s: State, hat: State, u: Iterable[int], reason: str) -> dict[str, Any]:
    return {
        "state": state_json(m, s),
        "perceived": state_json(m, hat),
        "compartment": sorted(u),
        "reason": reason,
    }


def iter_thm1_violations(m: Machine, spec: UncertaintySpec, stats: Optional[dict] = None):
    """Pairs at which no parameter choice compatible with the ball has a common post-state.

    For every perceived state with compartment ``u`` and every true state in
    its ball, some tuple ``p`` with ``p_i`` in the compatible parameters of
    event ``i`` must make the actions of all ``i`` in ``u`` share a post-state
    at the true state.  The tuple may depend on the true state.
    """
    o = oracle(m)
    perc = perception(m, spec)
    n = 0
    for hat, u in compartments(m, spec):
        n += 1
        idx = sorted(u)
        allowed = {i: par_c_eps(m, spec, i, hat) for i in idx}
        empty = [i for i in idx if not allowed[i]]
        for s in perc.ball(hat):
            if empty:
                names = ", ".join(m.controller(i).name for i in empty)
                yield _witness(m, s, hat, u, f"no parameter of {names} is compatible with every potential true state")
                continue
            reach = [frozenset().union(*(o.posts(i, s, p) for p in allowed[i])) for i in idx]
            if not reduce(frozenset.intersection, reach):
                yield _witness(m, s, hat, u, "the compatible actions share no post-state")
    if stats is not None:
        stats["perceived_states"] = n


def thm1_condition(m: Machine, spec: UncertaintySpec, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Condition under which action-preserving robustification is safe and feasible."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    stats: dict = {}
    for w in iter_thm1_violations(m, spec, stats):
        col.add(w)
    return make_report(THM1, _subject(m, spec), col, stats, t0)


def iter_thm2_violations(
    m: Machine, spec: UncertaintySpec, stats: Optional[dict] = None, *, inv: Optional[Expr] = None, prose: bool = False
):
    """Perceived states where no event of the compartment has a safe parameter.

    Safe means the action is nonempty and stays inside the safety invariant at
    every potential true state.
    """
    perc = perception(m, spec)
    n = 0
    for hat, u in compartments(m, spec):
        n += 1
        if not any(safpar(m, spec, i, hat, inv, prose=prose) for i in sorted(u)):
            s = perc.ball(hat)[0]
            yield _witness(m, s, hat, u, "no event of the compartment has a parameter safe at every potential true state")
    if stats is not None:
        stats["perceived_states"] = n


def thm2_condition(
    m: Machine,
    spec: UncertaintySpec,
    max_witnesses: Optional[int] = 1,
    *,
    inv: Optional[Expr] = None,
    prose: bool = False,
) -> CheckReport:
    """Condition under which action-repurposing robustification is safe and feasible."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    stats: dict = {}
    for w in iter_thm2_violations(m, spec, stats, inv=inv, prose=prose):
        col.add(w)
    return make_report(THM2, _subject(m, spec), col, stats, t0)


@dataclass
class Vacuity:
    """Whether any perceived state has compartment ``u``; witnesses when one does."""

    u: tuple[int, ...]
    vacuous: bool
    witnesses: list[State] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.vacuous


def is_vacuous(u: Iterable[int], m: Machine, spec: UncertaintySpec) -> Vacuity:
    key = frozenset(u)
    if not key:
        raise ValueError("compartments are nonempty")
    hats = compartment_map(m, spec).get(key, [])
    return Vacuity(tuple(sorted(key)), not hats, list(hats))


def vacuity_report(u: Iterable[int], m: Machine, spec: UncertaintySpec, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Vacuity as a check: holds when no perceived state produces ``u``."""
    t0 = time.perf_counter()
    v = is_vacuous(u, m, spec)
    col = Collector(max_witnesses)
    for hat in v.witnesses:
        col.add({"perceived": state_json(m, hat), "compartment": list(v.u)})
    subject = f"{_subject(m, spec)}, compartment {{{', '.join(map(str, v.u))}}}"
    return make_report(VACUITY, subject, col, {"compartment": list(v.u)}, t0)
