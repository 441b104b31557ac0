"""Finite-state semantics of machines: states, transitions and perception balls."""

from __future__ import annotations

import itertools
import math
import weakref
from typing import Iterator, Mapping, Optional, Sequence

from .evaluate import EvalError, Evaluator, Unknown
from .expr import Expr, conjuncts, free_names
from .model import (
    HAT,
    Machine,
    ModelError,
    PairedMachine,
    State,
    UncertaintySpec,
    spec_problems,
)

DEFAULT_STATE_CAP = 10**7


class StateSpaceTooLarge(RuntimeError):
    """The enumeration would exceed the configured state cap."""


class _Config:
    state_cap = DEFAULT_STATE_CAP


config = _Config()


def set_state_cap(cap: int) -> None:
    config.state_cap = cap
    _SEM.clear()


def _check_size(n: int, what: str) -> None:
    if n > config.state_cap:
        raise StateSpaceTooLarge(f"state space too large: {what} has {n} points (cap {config.state_cap})")


class MachineSemantics:
    """Compiled guards and actions of one machine, with per-state memoization.

    Guard solutions are cached on the values of the state variables the guard
    actually reads, so events whose guards only look at perceived variables are
    solved once per perceived state rather than once per pair.
    """

    def __init__(self, m: Machine):
        if m.consts:
            names = ", ".join(c.name for c in m.consts)
            raise ModelError(f"symbolic constant(s) {names} unbound; bind them before analysis")
        self.m = m
        self.names = m.var_names
        self.domains = [v.domain for v in m.vars]
        self.ev = Evaluator(m.enum_constants)
        self.events = m.events
        self.ctrl_indices = [i for i, e in enumerate(m.events) if e.kind == "ctrl"]
        self._guard_solvers = []
        self._guard_keys = []
        self._guard_memo: list[dict] = []
        for e in m.events:
            unknowns = [Unknown(p.name, p.domain, p.bot) for p in e.params]
            self._guard_solvers.append(self.ev.solver(conjuncts(e.guard), unknowns, reorder=False))
            reads = free_names(e.guard) & set(self.names)
            self._guard_keys.append(tuple(i for i, n in enumerate(self.names) if n in reads))
            self._guard_memo.append({})
        self._action_solvers: dict[tuple, object] = {}
        self._safety = self.ev.fn(m.safety)
        self._init = self.ev.fn(m.init)

    # -- states ------------------------------------------------------------

    def size(self) -> int:
        return math.prod(len(d) for d in self.domains)

    def states(self) -> Iterator[State]:
        _check_size(self.size(), f"machine {self.m.name}")
        return itertools.product(*(tuple(d.values()) for d in self.domains))

    def states_where(self, *constraints: Expr) -> Iterator[State]:
        """States satisfying all constraints, in lexicographic order."""
        conjs: list[Expr] = []
        for c in constraints:
            conjs.extend(conjuncts(c))
        unknowns = [Unknown(n, d) for n, d in zip(self.names, self.domains)]
        solver = self.ev.solver(conjs, unknowns, reorder=False)
        env = self.ev.env()
        count = 0
        for sol in solver.solutions(env):
            count += 1
            _check_size(count, f"constrained states of {self.m.name}")
            yield sol

    def env_of(self, s: State) -> dict:
        env = self.ev.env()
        env.update(zip(self.names, s))
        return env

    def safe(self, s: State) -> bool:
        return bool(self._safety(self.env_of(s)))

    def initial(self, s: State) -> bool:
        return bool(self._init(self.env_of(s)))

    # -- events ------------------------------------------------------------

    def params(self, k: int, s: State, env: Optional[dict] = None) -> list[tuple]:
        """Parameter tuples of event ``k`` (0-based over all events) enabled at ``s``."""
        key = tuple(s[i] for i in self._guard_keys[k])
        memo = self._guard_memo[k]
        hit = memo.get(key)
        if hit is None:
            if env is None:
                env = self.env_of(s)
            hit = list(self._guard_solvers[k].solutions(env))
            if len(memo) > 200_000:
                memo.clear()
            memo[key] = hit
        return hit

    def enabled(self, k: int, s: State) -> bool:
        return bool(self.params(k, s))

    def _action_solver(self, k: int, project: Sequence[str]):
        key = (k, tuple(project))
        sol = self._action_solvers.get(key)
        if sol is None:
            first = [n for n in self.names if n in project]
            rest = [n for n in self.names if n not in project]
            dom = dict(zip(self.names, self.domains))
            unknowns = [Unknown(n + "'", dom[n]) for n in first + rest]
            groups = [g for g in (len(first), len(rest)) if g]
            sol = self.ev.solver(conjuncts(self.events[k].action), unknowns, groups=groups or None)
            sol._first = first  # type: ignore[attr-defined]
            self._action_solvers[key] = sol
        return sol

    def posts(self, k: int, s: State, p: tuple, project: Optional[Sequence[str]] = None, env: Optional[dict] = None):
        """Post-states of event ``k`` at ``s`` with parameters ``p``.

        Without ``project`` full states are returned; with it, the distinct
        projections onto those variables (in declaration order) that extend to
        some post-state.
        """
        if env is None:
            env = self.env_of(s)
        ev = self.events[k]
        for name, v in zip(ev.param_names, p):
            env[name] = v
        try:
            if project is None:
                solver = self._action_solver(k, self.names)
                perm = _perm(solver.out_keys, self.names)
                return [tuple(sol[i] for i in perm) for sol in solver.solutions(env)]
            solver = self._action_solver(k, project)
            first = solver._first  # type: ignore[attr-defined]
            return list(solver.solutions(env, project=len(first)))
        finally:
            for name in ev.param_names:
                env.pop(name, None)

    def has_post(self, k: int, s: State, p: tuple, env: Optional[dict] = None) -> bool:
        return bool(self.posts(k, s, p, project=(), env=env))

    def transitions(self, s: State) -> Iterator[tuple[int, tuple, State]]:
        env = self.env_of(s)
        for k in range(len(self.events)):
            for p in self.params(k, s, env):
                for t in self.posts(k, s, p, env=env):
                    yield k, p, t

    def successors(self, s: State) -> set[State]:
        return {t for _, _, t in self.transitions(s)}

    def enabled_controller(self, s: State) -> list[int]:
        """1-based indices of controller events enabled at ``s``."""
        return [j + 1 for j, k in enumerate(self.ctrl_indices) if self.enabled(k, s)]

    def param_dict(self, k: int, p: tuple) -> dict:
        return dict(zip(self.events[k].param_names, p))


def _perm(keys: Sequence[str], names: Sequence[str]) -> list[int]:
    idx = {k: i for i, k in enumerate(keys)}
    return [idx[n + "'"] for n in names]


_SEM: dict[int, MachineSemantics] = {}


def semantics(m: Machine) -> MachineSemantics:
    """Shared compiled semantics of ``m`` (kept alive as long as ``m`` is)."""
    key = id(m)
    sem = _SEM.get(key)
    if sem is not None and sem.m is m:
        return sem
    sem = MachineSemantics(m)
    _SEM[key] = sem
    weakref.finalize(m, _SEM.pop, key, None)
    return sem


# ---------------------------------------------------------------------------
# perception


class Perception:
    """Evaluates an uncertainty specification on the states of its machine."""

    def __init__(self, m: Machine, spec: UncertaintySpec):
        problems = spec_problems(spec, m)
        if problems:
            raise ModelError("; ".join(problems))
        if spec.consts:
            # radius() raises with the constant name
            for c in spec.clauses:
                spec.radius(c.var)
            raise ModelError(f"symbolic constant(s) {', '.join(spec.const_names)} unbound")
        self.m = m
        self.spec = spec
        self.names = m.var_names
        self.ev = Evaluator(m.enum_constants)
        self._relation = None if spec.relation is None else self.ev.fn(spec.relation)
        self._plans = []
        for v in m.vars:
            c = spec.clause_for(v.name)
            if c is None:
                self._plans.append(("any", tuple(v.domain.values())))
            elif c.radius is None:
                self._plans.append(("exact", None))
            else:
                self._plans.append(("radius", (spec.radius(v.name), v.domain.lo, v.domain.hi)))
        self._cache: dict[State, tuple[State, ...]] = {}

    def ball(self, hat: State) -> tuple[State, ...]:
        """All true states consistent with perceiving ``hat``, lexicographically."""
        hit = self._cache.get(hat)
        if hit is not None:
            return hit
        axes = []
        for (kind, data), hv in zip(self._plans, hat):
            if kind == "exact":
                axes.append((hv,))
            elif kind == "radius":
                r, lo, hi = data
                axes.append(range(max(lo, hv - r), min(hi, hv + r) + 1))
            else:
                axes.append(data)
        out = itertools.product(*axes)
        if self._relation is not None:
            env = self.ev.env({HAT + n: v for n, v in zip(self.names, hat)})
            kept = []
            for s in out:
                env.update(zip(self.names, s))
                if self._relation(env):
                    kept.append(s)
            res = tuple(kept)
        else:
            res = tuple(out)
        if len(self._cache) > 500_000:
            self._cache.clear()
        self._cache[hat] = res
        return res

    def contains(self, hat: State, s: State) -> bool:
        for (kind, data), hv, v in zip(self._plans, hat, s):
            if kind == "exact" and hv != v:
                return False
            if kind == "radius" and abs(hv - v) > data[0]:
                return False
        if self._relation is not None:
            env = self.ev.env({HAT + n: v for n, v in zip(self.names, hat)})
            env.update(zip(self.names, s))
            return bool(self._relation(env))
        return True

    def reflexivity_violations(self) -> Iterator[State]:
        sem = semantics(self.m)
        for s in sem.states():
            if not self.contains(s, s):
                yield s


def perception(m: Machine, spec: UncertaintySpec) -> Perception:
    key = (id(m), id(spec))
    p = _PERC.get(key)
    if p is not None and p.m is m and p.spec is spec:
        return p
    p = Perception(m, spec)
    _PERC[key] = p
    weakref.finalize(spec, _PERC.pop, key, None)
    return p


_PERC: dict[tuple[int, int], Perception] = {}


# ---------------------------------------------------------------------------
# module-level operations


def enumerate_states(m: Machine) -> Iterator[State]:
    """Every point of the domain product, lexicographic in declaration order."""
    return semantics(m).states()


def eps_ball(spec: UncertaintySpec, hat: State, m: Machine) -> tuple[State, ...]:
    return perception(m, spec).ball(tuple(hat))


def successors(m: Machine, s: State) -> set[State]:
    return semantics(m).successors(tuple(s))


def enabled_controller_events(m: Machine, s: State) -> set[int]:
    return set(semantics(m).enabled_controller(tuple(s)))


def pairs(pm: PairedMachine, *extra: Expr) -> Iterator[State]:
    """States of a paired machine satisfying its uncertainty invariant (and ``extra``)."""
    return semantics(pm).states_where(pm.uncertainty, *extra)


__all__ = [
    "DEFAULT_STATE_CAP",
    "EvalError",
    "MachineSemantics",
    "Perception",
    "StateSpaceTooLarge",
    "enabled_controller_events",
    "enumerate_states",
    "eps_ball",
    "pairs",
    "perception",
    "semantics",
    "set_state_cap",
    "successors",
]
