"""Exhaustive checks of partitioning, invariant preservation, feasibility and
forward simulation.

States are visited in lexicographic order of the declared domains, so the
first witness of a failing check is the lexicographically least violation.
For paired machines, preservation and feasibility quantify over pairs that
satisfy both the safety and the uncertainty invariant; pairs outside the
uncertainty invariant cannot be reached because every action re-establishes it.
"""

from __future__ import annotations

import time
from typing import Any, Iterator, Mapping, Optional

from ..evaluate import Evaluator
from ..model import HAT, BOT, Machine, PairedMachine, State
from ..semantics import semantics
from .report import CheckReport, Collector, make_report, pair_json, params_json, state_json


def _domain_states(m: Machine, *, safe: bool) -> Iterator[State]:
    sem = semantics(m)
    constraints = []
    if safe:
        constraints.append(m.safety)
    if isinstance(m, PairedMachine):
        constraints.append(m.uncertainty)
    if not constraints:
        return sem.states()
    return sem.states_where(*constraints)


# ---------------------------------------------------------------------------
# partitioning


def iter_partitioning_violations(m: Machine) -> Iterator[dict[str, Any]]:
    sem = semantics(m)
    ctrl = m.controller_events
    for s in sem.states():
        en = sem.enabled_controller(s)
        if len(en) != 1:
            w = pair_json(m, s)
            w["enabled"] = [ctrl[i - 1].name for i in en]
            w["indices"] = en
            yield w


def check_partitioning(m: Machine, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Exactly one controller event is enabled in every state of the domain."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    for w in iter_partitioning_violations(m):
        col.add(w)
    return make_report("partitioning", m.name, col, {"states": semantics(m).size()}, t0)


# ---------------------------------------------------------------------------
# invariant preservation


def iter_preservation_violations(m: Machine, stats: Optional[dict] = None) -> Iterator[dict[str, Any]]:
    """Initial states outside the safety invariant, then unsafe transitions."""
    sem = semantics(m)
    init_constraints = [m.init]
    if isinstance(m, PairedMachine):
        init_constraints.append(m.uncertainty)
    for s in sem.states_where(*init_constraints):
        if not sem.safe(s):
            w = pair_json(m, s)
            w["initial"] = True
            yield w
    n_states = n_trans = 0
    for s in _domain_states(m, safe=True):
        n_states += 1
        for k, p, t in sem.transitions(s):
            n_trans += 1
            if not sem.safe(t):
                ev = sem.events[k]
                w = pair_json(m, s)
                w["event"] = ev.name
                w["params"] = params_json(ev.param_names, p)
                w["successor"] = pair_json(m, t)
                yield w
        if stats is not None:
            stats["states"], stats["transitions"] = n_states, n_trans
    if stats is not None:
        stats["states"], stats["transitions"] = n_states, n_trans


def check_invariant_preservation(m: Machine, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Initial states are safe and every transition from a safe state stays safe."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    stats: dict = {}
    for w in iter_preservation_violations(m, stats):
        col.add(w)
    return make_report("invariant-preservation", m.name, col, stats, t0)


# ---------------------------------------------------------------------------
# feasibility


def iter_feasibility_violations(m: Machine, stats: Optional[dict] = None) -> Iterator[dict[str, Any]]:
    sem = semantics(m)
    n = 0
    for s in _domain_states(m, safe=True):
        n += 1
        env = sem.env_of(s)
        for k in sem.ctrl_indices:
            ev = sem.events[k]
            for p in sem.params(k, s, env):
                if not sem.has_post(k, s, p, env=env):
                    w = pair_json(m, s)
                    w["event"] = ev.name
                    w["params"] = params_json(ev.param_names, p)
                    yield w
    if stats is not None:
        stats["states"] = n


def check_feasibility(m: Machine, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Every enabled controller event has a nonempty action at every safe state."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    stats: dict = {}
    for w in iter_feasibility_violations(m, stats):
        col.add(w)
    return make_report("feasibility", m.name, col, stats, t0)


# ---------------------------------------------------------------------------
# forward simulation


def iter_simulation_violations(
    robust: PairedMachine, original: Machine, stats: Optional[dict] = None
) -> Iterator[dict[str, Any]]:
    rsem = semantics(robust)
    osem = semantics(original)
    true_names = robust.true_names
    if tuple(true_names) != tuple(original.var_names):
        raise ValueError(f"{robust.name} does not pair the variables of {original.name}")
    k_true = len(true_names)
    succ_cache: dict[State, set] = {}
    n = 0
    for s in rsem.states_where(robust.uncertainty):
        n += 1
        st = s[:k_true]
        allowed = succ_cache.get(st)
        if allowed is None:
            allowed = succ_cache[st] = osem.successors(st)
        env = rsem.env_of(s)
        for k, ev in enumerate(robust.events):
            for p in rsem.params(k, s, env):
                for t in rsem.posts(k, s, p, project=true_names, env=env):
                    if t not in allowed:
                        w = pair_json(robust, s)
                        w["event"] = ev.name
                        w["params"] = params_json(ev.param_names, p)
                        w["successor"] = state_json(original, t)
                        yield w
    if stats is not None:
        stats["states"] = n


def check_forward_simulation(robust: PairedMachine, original: Machine, max_witnesses: Optional[int] = 1) -> CheckReport:
    """Every transition of ``robust`` projects onto a transition of ``original``."""
    t0 = time.perf_counter()
    col = Collector(max_witnesses)
    stats: dict = {}
    for w in iter_simulation_violations(robust, original, stats):
        col.add(w)
    return make_report("forward-simulation", f"{robust.name} vs {original.name}", col, stats, t0)


# ---------------------------------------------------------------------------
# witness re-checking


def _valuation(m: Machine, w: Mapping[str, Any], key: str = "") -> dict[str, Any]:
    part = w[key] if key else w
    out = dict(part["state"])
    if "perceived" in part:
        out.update({HAT + n: v for n, v in part["perceived"].items()})
    return out


def _value(v):
    return BOT if v == "bot" else v


def recheck(m: Machine, kind: str, w: Mapping[str, Any], original: Optional[Machine] = None) -> bool:
    """Re-evaluate a witness with the plain evaluator; True if it is a genuine violation."""
    ev = Evaluator(m.enum_constants)
    s = _valuation(m, w)
    if kind == "partitioning":
        enabled = []
        for i, e in enumerate(m.controller_events, start=1):
            sem = semantics(m)
            if sem.params(sem.ctrl_indices[i - 1], m.state_of(s)):
                enabled.append(i)
        return enabled == list(w["indices"]) and len(enabled) != 1
    if kind == "invariant-preservation":
        if w.get("initial"):
            return bool(ev.eval(m.init, s)) and not ev.eval(m.safety, s)
        e = m.event(w["event"])
        env = dict(s)
        env.update({k: _value(v) for k, v in w["params"].items()})
        t = _valuation(m, w, "successor")
        env.update({n + "'": v for n, v in t.items()})
        return (
            bool(ev.eval(m.safety, s))
            and bool(ev.eval(e.guard, env))
            and bool(ev.eval(e.action, env))
            and not ev.eval(m.safety, t)
        )
    if kind == "feasibility":
        e = m.event(w["event"])
        env = dict(s)
        env.update({k: _value(v) for k, v in w["params"].items()})
        if not ev.eval(e.guard, env):
            return False
        sem = semantics(m)
        k = m.events.index(e)
        p = tuple(_value(w["params"][n]) for n in e.param_names)
        return not sem.has_post(k, m.state_of(s), p)
    if kind == "forward-simulation":
        assert original is not None
        e = m.event(w["event"])
        env = dict(s)
        env.update({k: _value(v) for k, v in w["params"].items()})
        if not ev.eval(e.guard, env):
            return False
        sem = semantics(m)
        k = m.events.index(e)
        p = tuple(_value(w["params"][n]) for n in e.param_names)
        assert isinstance(m, PairedMachine)
        t = tuple(w["successor"][n] for n in m.true_names)
        if t not in set(sem.posts(k, m.state_of(s), p, project=m.true_names)):
            return False
        st = tuple(s[n] for n in m.true_names)
        return t not in semantics(original).successors(st)
    raise ValueError(f"unknown check kind {kind!r}")
