"""Uncertainty injection: controllers read perceived values, actions act on true ones."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from ..expr import Name, conj, substitute
from ..model import (
    RESERVED_PREFIXES,
    ConstDecl,
    Machine,
    ModelError,
    Origin,
    PairedMachine,
    UncertaintySpec,
    VarDecl,
    validate_machine,
    validate_spec,
)
from ..semantics import perception
from .formulas import hat, reperceive, uncertainty_invariant


def _reserved_problems(m: Machine) -> list[str]:
    names = list(m.var_names) + list(m.const_names)
    for ev in m.events:
        names += list(ev.param_names)
    return [
        f"name {n!r} uses the reserved prefix {p!r}"
        for n in names
        for p in RESERVED_PREFIXES
        if n.startswith(p)
    ]


def merged_consts(m: Machine, spec: UncertaintySpec) -> tuple[ConstDecl, ...]:
    out = list(m.consts)
    for c in spec.consts:
        if c.name not in m.const_names:
            out.append(c)
    return tuple(out)


def check_inputs(m: Machine, spec: UncertaintySpec, *, semantic: bool = True) -> None:
    """Raise :class:`ModelError` unless ``m`` and ``spec`` can be injected.

    With ``semantic`` (and no unbound constants) partitioning and reflexivity
    are verified by enumeration as well.
    """
    validate_machine(m)
    validate_spec(spec, m)
    problems = _reserved_problems(m)
    if problems:
        raise ModelError("; ".join(problems))
    if not semantic or m.consts or spec.consts:
        return
    from ..analysis.checks import iter_partitioning_violations

    for w in iter_partitioning_violations(m):
        raise ModelError(f"partitioning violated at {w['state']}: enabled controller events {w['enabled']}")
    for s in perception(m, spec).reflexivity_violations():
        raise ModelError(f"uncertainty {spec.name} is not reflexive at {m.state_dict(s)}")


def inject(m: Machine, spec: UncertaintySpec, *, check: bool = True) -> PairedMachine:
    """The machine over (true, perceived) pairs in which controllers see only perceived values."""
    if check:
        check_inputs(m, spec)
    to_hat = {v: Name(hat(v)) for v in m.var_names}
    again = reperceive(m, spec)
    events = []
    for ev in m.events:
        guard = ev.guard if ev.kind == "plant" else substitute(ev.guard, to_hat)
        events.append(replace(ev, guard=guard, action=conj(ev.action, again)))
    inv = uncertainty_invariant(m, spec)
    return PairedMachine(
        name=f"{m.name}_{spec.name}",
        vars=tuple(m.vars) + tuple(VarDecl(hat(v.name), v.domain) for v in m.vars),
        init=conj(m.init, inv),
        safety=m.safety,
        events=tuple(events),
        consts=merged_consts(m, spec),
        uncertainty=inv,
        origin=Origin("inject", m.name, spec.name),
        base=m,
        spec=spec,
    )


def injection_inputs(pm: PairedMachine) -> tuple[Machine, UncertaintySpec]:
    """The original machine and specification behind an injected machine."""
    if not isinstance(pm, PairedMachine) or pm.origin is None or pm.origin.method != "inject":
        raise ModelError(f"{pm.name} was not produced by uncertainty injection")
    if pm.base is None or pm.spec is None:
        raise ModelError(
            f"{pm.name} lacks its inputs; load {pm.origin.machine} and {pm.origin.uncertainty} alongside it"
        )
    return pm.base, pm.spec


def require_bound(m: Machine, spec: Optional[UncertaintySpec] = None) -> None:
    names = list(m.const_names) + ([] if spec is None else [c for c in spec.const_names if c not in m.const_names])
    if names:
        raise ModelError(f"symbolic constant(s) {', '.join(names)} unbound; bind them with --set NAME=VALUE")
