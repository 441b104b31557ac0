from __future__ import annotations

import itertools

from hypothesis import HealthCheck, given, settings

from randmodels import models
from robustikit.analysis import check_partitioning, compartment, idx_c, par_c, par_c_eps, safpar
from robustikit.model import PairedMachine
from robustikit.semantics import semantics
from robustikit.transform import inject, robustify_preserving, robustify_repurposing
from robustikit.transform.formulas import Builder
from robustikit.transform.robustify import _all_compartments, hetero_name, preserving_event, repurposing_event

SETTINGS = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SMALL = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


@SETTINGS
@given(models())
def test_generated_guards_partition(model):
    m, _ = model.load()
    assert check_partitioning(m).holds


@SETTINGS
@given(models())
def test_idx_and_par_match_oracle(model):
    m, _ = model.load()
    for s in model.states():
        i = model.idx(s)
        assert idx_c(m, s) == i
        assert set(par_c(m, s)) == model.par(i, s)


@SETTINGS
@given(models())
def test_compartment_par_eps_safpar_match_oracle(model):
    m, spec = model.load()
    for hat in model.states():
        assert compartment(m, spec, hat) == model.compartment(hat)
        for i in range(1, len(model.ctrls) + 1):
            assert set(par_c_eps(m, spec, i, hat)) == model.par_eps(i, hat)
            assert set(safpar(m, spec, i, hat)) == model.safpar(i, hat)


def _pair_oracle(model, pm: PairedMachine):
    """Transitions of the injected machine, built from the oracle's definitions."""
    n = len(model.doms)
    perceived = model.states()

    def in_ball(s, hat):
        return all((x == h) if r is None else abs(x - h) <= r for x, h, r in zip(s, hat, model.radii))

    def with_hats(posts):
        return {t + h for t in posts for h in perceived if in_ball(t, h)}

    out = {}
    for s in model.states():
        for hat in perceived:
            succ = set()
            lo0, hi0 = model.doms[0]
            for d in range(-2, 3):
                if lo0 <= s[0] + d <= hi0:
                    succ |= with_hats({(s[0] + d,) + s[1:]})
            for i in range(1, len(model.ctrls) + 1):
                for p in model.par(i, hat):
                    succ |= with_hats(model.posts(i, s, p))
            out[s + hat] = succ
    assert all(len(k) == 2 * n for k in out)
    return out


@SMALL
@given(models(max_vars=2, max_width=6, max_radius=2))
def test_injection_matches_oracle_and_preserves_uncertainty_invariant(model):
    m, spec = model.load()
    pm = inject(m, spec)
    sem = semantics(pm)
    expected = _pair_oracle(model, pm)
    k = len(model.doms)
    for state, succ in expected.items():
        assert sem.successors(state) == succ
        s, hat = state[:k], state[k:]
        if s in model.ball(hat):
            assert all(t[:k] in model.ball(t[k:]) for t in succ)


def _unpruned(pm, method):
    """The robustified machine with an event for every compartment, vacuous or not."""
    out = (robustify_preserving if method == "pR" else robustify_repurposing)(pm, force=True)
    m, spec = pm.base, pm.spec
    b = Builder(m, spec)
    have = {ev.covers for ev in out.machine.events if ev.covers is not None}
    extra = []
    for u in _all_compartments(len(m.controller_events)):
        if u in have:
            continue
        name = hetero_name(m, u) + "_vacuous"
        make = preserving_event if method == "pR" else repurposing_event
        extra.append(make(b, u, name))
    return out.machine, out.machine.__class__(
        **{**out.machine.__dict__, "events": out.machine.events + tuple(extra)}
    )


@SMALL
@given(models(max_vars=2, max_width=5, max_ctrls=3, max_radius=2))
def test_pruning_vacuous_events_keeps_transitions(model):
    m, spec = model.load()
    pm = inject(m, spec)
    for method in ("pR", "rR"):
        pruned, full = _unpruned(pm, method)
        sp, sf = semantics(pruned), semantics(full)
        names = [v.name for v in pm.vars]
        doms = [tuple(v.domain.values()) for v in pm.vars]
        for state in itertools.product(*doms):
            assert sp.successors(state) == sf.successors(state), (method, dict(zip(names, state)))
