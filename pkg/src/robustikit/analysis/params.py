"""Controller-event indices, compatible parameters and compartments.

Everything here is computed on the original (uncertainty-unaware) machine by
enumeration.  Per-state results are cached on a shared :class:`Oracle`, so the
many perception balls that overlap reuse the same work.
"""

from __future__ import annotations

import weakref
from functools import reduce
from typing import Iterable, Iterator, Optional

from ..evaluate import Evaluator
from ..expr import Expr
from ..model import Machine, State, UncertaintySpec
from ..semantics import MachineSemantics, Perception, perception, semantics

ParamTuple = tuple
Compartment = frozenset  # of 1-based controller indices


class PartitioningViolation(Exception):
    """A state enables no controller event, or more than one."""

    def __init__(self, state: State, indices: Iterable[int]):
        self.state = tuple(state)
        self.indices = tuple(sorted(indices))
        what = "no controller event" if not self.indices else f"controller events {list(self.indices)}"
        super().__init__(f"partitioning violated at {self.state}: {what} enabled")


class Oracle:
    """Cached per-state facts about the controller events of one machine."""

    def __init__(self, m: Machine):
        self.m = m
        self.sem: MachineSemantics = semantics(m)
        self.ctrl = self.sem.ctrl_indices  # 0-based event positions, by controller index
        self._idx: dict[State, int] = {}
        self._par: dict[tuple[int, State], frozenset] = {}
        self._posts: dict[tuple[int, State, ParamTuple], frozenset] = {}
        self._safe: dict[tuple[int, State, int], frozenset] = {}
        self._inv_fns: dict[int, tuple[Expr, object]] = {}

    # -- basic facts -----------------------------------------------------------

    def enabled(self, s: State) -> list[int]:
        return self.sem.enabled_controller(s)

    def idx(self, s: State) -> int:
        hit = self._idx.get(s)
        if hit is None:
            en = self.enabled(s)
            if len(en) != 1:
                raise PartitioningViolation(s, en)
            hit = self._idx[s] = en[0]
        return hit

    def par(self, i: int, s: State) -> frozenset:
        """Parameter tuples of controller event ``i`` whose guard holds at ``s``."""
        key = (i, s)
        hit = self._par.get(key)
        if hit is None:
            hit = self._par[key] = frozenset(self.sem.params(self.ctrl[i - 1], s))
        return hit

    def par_c(self, s: State) -> frozenset:
        return self.par(self.idx(s), s)

    def param_space(self, i: int) -> list[ParamTuple]:
        ev = self.m.controller(i)
        from itertools import product

        return list(product(*(tuple(p.domain.values()) for p in ev.params)))

    def posts(self, i: int, s: State, p: ParamTuple) -> frozenset:
        """Post-states of controller event ``i`` at ``s`` with parameters ``p`` (guard ignored)."""
        key = (i, s, p)
        hit = self._posts.get(key)
        if hit is None:
            hit = self._posts[key] = frozenset(self.sem.posts(self.ctrl[i - 1], s, p))
        return hit

    def safe_params(self, i: int, s: State, inv: Optional[Expr] = None) -> frozenset:
        """``{p | {} < A_i(s, p) <= inv}`` with ``inv`` defaulting to the safety invariant."""
        key = (i, s, 0 if inv is None else id(inv))
        hit = self._safe.get(key)
        if hit is None:
            fn = self._inv_fn(inv)
            out = []
            for p in self.param_space(i):
                ts = self.posts(i, s, p)
                if ts and all(fn(t) for t in ts):
                    out.append(p)
            hit = self._safe[key] = frozenset(out)
        return hit

    def _inv_fn(self, inv: Optional[Expr]):
        if inv is None:
            return self.sem.safe
        hit = self._inv_fns.get(id(inv))
        if hit is not None and hit[0] is inv:
            return hit[1]
        ev = Evaluator(self.m.enum_constants)
        f = ev.fn(inv)
        names = self.m.var_names

        def check(t: State) -> bool:
            env = ev.env(dict(zip(names, t)))
            return bool(f(env))

        self._inv_fns[id(inv)] = (inv, check)
        return check


_ORACLES: dict[int, Oracle] = {}


def oracle(m: Machine) -> Oracle:
    key = id(m)
    o = _ORACLES.get(key)
    if o is not None and o.m is m:
        return o
    o = _ORACLES[key] = Oracle(m)
    weakref.finalize(m, _ORACLES.pop, key, None)
    return o


# ---------------------------------------------------------------------------
# public operations


def idx_c(m: Machine, s: State) -> int:
    """1-based index of the unique controller event enabled at ``s``."""
    return oracle(m).idx(tuple(s))


def par_c(m: Machine, s: State) -> frozenset:
    return oracle(m).par_c(tuple(s))


def par_c_eps(m: Machine, spec: UncertaintySpec, i: int, hat: State) -> frozenset:
    """Parameters of event ``i`` compatible with every ball state that enables it.

    When no state of the ball enables ``i`` the intersection is over an empty
    family and the whole parameter space is returned.
    """
    o = oracle(m)
    sets = [o.par(i, t) for t in perception(m, spec).ball(tuple(hat)) if o.idx(t) == i]
    if not sets:
        return frozenset(o.param_space(i))
    return reduce(frozenset.intersection, sets)


def safpar(
    m: Machine, spec: UncertaintySpec, i: int, hat: State, inv: Optional[Expr] = None, *, prose: bool = False
) -> frozenset:
    """Parameters of event ``i`` whose action is nonempty and stays inside ``inv``
    at every state of the ball of ``hat``.

    With ``prose`` only ball states that enable event ``i`` are considered.
    """
    o = oracle(m)
    ball = perception(m, spec).ball(tuple(hat))
    if prose:
        ball = tuple(t for t in ball if o.idx(t) == i)
        if not ball:
            return frozenset(o.param_space(i))
    out: Optional[frozenset] = None
    for t in ball:
        sp = o.safe_params(i, t, inv)
        out = sp if out is None else out & sp
        if not out:
            return frozenset()
    return out if out is not None else frozenset()


def compartment(m: Machine, spec: UncertaintySpec, hat: State) -> Compartment:
    o = oracle(m)
    return frozenset(o.idx(t) for t in perception(m, spec).ball(tuple(hat)))


def compartments(m: Machine, spec: UncertaintySpec) -> Iterator[tuple[State, Compartment]]:
    """Every perceived state with its compartment, lexicographically."""
    o = oracle(m)
    perc: Perception = perception(m, spec)
    for hat in o.sem.states():
        yield hat, frozenset(o.idx(t) for t in perc.ball(hat))


def compartment_map(m: Machine, spec: UncertaintySpec) -> dict[Compartment, list[State]]:
    """Compartments that occur, each with the perceived states producing it."""
    out: dict[Compartment, list[State]] = {}
    for hat, u in compartments(m, spec):
        out.setdefault(u, []).append(hat)
    return out


def param_dict(m: Machine, i: int, p: ParamTuple) -> dict:
    return dict(zip(m.controller(i).param_names, p))
