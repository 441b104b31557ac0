from __future__ import annotations

import pytest

from robustikit.analysis import (
    check_feasibility,
    check_forward_simulation,
    check_invariant_preservation,
    check_partitioning,
)
from robustikit.explore import bind
from robustikit.model import BOT, ModelError
from robustikit.semantics import semantics
from robustikit.syntax import load
from robustikit.transform import (
    hetero_name,
    inject,
    robustify,
    robustify_preserving,
    robustify_repurposing,
    thm1_condition,
    thm2_condition,
)
from robustikit.transform.formulas import always_has_params, uncertainty_invariant
from robustikit.transform.robustify import _unique


# -- injection ----------------------------------------------------------------------


def test_injection_shape(ht0, eps0, injected):
    assert injected.name == "ht0_eps0"
    assert injected.var_names == ("tn", "temp", "hat_tn", "hat_temp")
    assert injected.origin.method == "inject"
    assert injected.safety == ht0.safety
    assert injected.uncertainty == uncertainty_invariant(ht0, eps0)
    # plant guards keep reading true values, controller guards read perceived ones
    plant = injected.event("plant_change_temp")
    assert "hat_temp" not in repr(plant.guard)
    heat = injected.event("ctrl_heat")
    assert "hat_temp" in repr(heat.guard) and "Name(name='temp')" not in repr(heat.guard)


def test_injected_machine_is_partitioned_and_feasible(injected):
    assert check_partitioning(injected).holds
    assert check_feasibility(injected).holds


def test_injection_rejects_reserved_names():
    text = """
machine m
  var hat_x : int[0..2]
  init true
  safety true
  ctrl event a
    action hat_x' = hat_x
uncertainty e for m
  hat_x within 1
"""
    sf = load(text)
    with pytest.raises(ModelError, match="reserved"):
        inject(sf.machines["m"], sf.uncertainties["e"])


def test_injection_rejects_overlapping_guards():
    text = """
machine m
  var x : int[0..4]
  init true
  safety true
  ctrl event a
    guard x <= 2
    action x' = x
  ctrl event b
    guard 2 <= x
    action x' = x
uncertainty e for m
  x within 1
"""
    sf = load(text)
    with pytest.raises(ModelError, match="partitioning"):
        inject(sf.machines["m"], sf.uncertainties["e"])


def test_robustify_requires_bound_constants(ht1, epsdt):
    pm = inject(ht1, epsdt)
    with pytest.raises(ModelError, match="Delta"):
        robustify_preserving(pm)


def test_robustify_requires_an_injected_machine(ht0):
    with pytest.raises(ModelError):
        robustify_preserving(ht0)
    with pytest.raises(ModelError, match="unknown"):
        robustify(ht0, "sideways")


# -- naming -------------------------------------------------------------------------


def test_hetero_names(ht0):
    assert hetero_name(ht0, (1, 2)) == "ctrl_heat_keep_safe_hetero"
    assert hetero_name(ht0, (2, 3)) == "ctrl_cool_keep_safe_hetero"
    assert hetero_name(ht0, (1, 2, 3)) == "ctrl_cool_heat_keep_safe_hetero"
    assert hetero_name(ht0, (3,)) == "ctrl_cool"


def test_unique_names():
    assert _unique(["a", "b", "a", "a"]) == ["a", "b", "a_2", "a_3"]


def test_short_enabledness_is_used_only_when_equivalent(ht0):
    assert all(always_has_params(ht0, ev) for ev in ht0.controller_events)
    sf = load("""
machine m
  var x : int[0..4]
  init true
  safety true
  ctrl event a
    param p : int[0..1]
    guard x <= 2 and x + p = 3
    action x' = x
  ctrl event b
    guard 3 <= x or x <= 1
    action x' = x
""")
    m = sf.machines["m"]
    assert not always_has_params(m, m.event("a"))


# -- action-preserving --------------------------------------------------------------


def test_preserving_outcome(pr_outcome):
    assert pr_outcome.ok and not pr_outcome.forced
    m = pr_outcome.machine
    assert m.name == "ht0_eps0_pR"
    assert [e.name for e in m.events] == [
        "plant_change_temp",
        "ctrl_heat",
        "ctrl_keep_safe",
        "ctrl_cool",
        "ctrl_heat_keep_safe_hetero",
        "ctrl_cool_keep_safe_hetero",
    ]
    assert [p["compartment"] for p in pr_outcome.pruned] == [[1, 3], [1, 2, 3]]
    hetero = m.event("ctrl_heat_keep_safe_hetero")
    assert hetero.covers == (1, 2)
    assert all(p.bot for p in hetero.params)


def test_preserving_window_at_29(pr_outcome):
    m = pr_outcome.machine
    sem = semantics(m)
    k = m.events.index(m.event("ctrl_heat_keep_safe_hetero"))
    for true_temp in (26, 29, 32):
        params = sem.params(k, ("c", true_temp, "c", 29))
        assert sorted(params) == [(d, d) for d in range(4, 9)]


def test_preserving_machine_is_correct(ht0, pr_outcome):
    m = pr_outcome.machine
    for r in (
        check_partitioning(m),
        check_invariant_preservation(m),
        check_feasibility(m),
        check_forward_simulation(m, ht0),
    ):
        assert r.holds, r.summary()


def test_forced_preserving_keeps_the_machine_for_inspection(ht1, epsdt):
    m, spec = bind(ht1, epsdt, {"Delta": 3})
    out = robustify_preserving(inject(m, spec), force=True)
    assert not out.ok and out.forced and out.machine is not None
    # the common-post conjunct leaves some perceived states with no enabled event
    assert check_partitioning(out.machine).fails
    assert check_feasibility(out.machine).holds


def test_failing_condition_gives_no_machine(ht1, epsdt):
    m, spec = bind(ht1, epsdt, {"Delta": 3})
    out = robustify_preserving(inject(m, spec))
    assert not out.ok and out.machine is None and out.condition.witnesses


# -- action-repurposing -------------------------------------------------------------


def test_repurposing_machine_is_safe_and_feasible(rr_outcome):
    m = rr_outcome.machine
    assert rr_outcome.ok
    assert check_invariant_preservation(m).holds
    assert check_feasibility(m).holds
    assert check_partitioning(m).holds


def test_repurposing_guard_keeps_every_potential_temperature_safe(rr_outcome):
    m = rr_outcome.machine
    sem = semantics(m)
    k = m.events.index(m.event("ctrl_heat_keep_safe_hetero"))
    seen = 0
    for s in sem.states_where(m.uncertainty):
        hat_temp = s[3]
        for dh, dt in sem.params(k, s):
            if dh is BOT:
                continue
            seen += 1
            for t in range(max(-20, hat_temp - 3), min(80, hat_temp + 3) + 1):
                assert 30 <= t + dh <= 40
    assert seen


def test_repurposing_may_leave_the_original_behaviour(ht1, epsdt):
    m, spec = bind(ht1, epsdt, {"Delta": 3})
    out = robustify_repurposing(inject(m, spec))
    assert out.ok
    sim = check_forward_simulation(out.machine, m)
    assert sim.fails
    assert sim.witnesses[0]["event"] == "ctrl_heat_keep_safe_eco_hetero"


# -- sufficient conditions ----------------------------------------------------------


def test_conditions_on_heater(ht0, eps0, eps7):
    assert thm1_condition(ht0, eps0).holds
    assert thm2_condition(ht0, eps0).holds
    r = thm1_condition(ht0, eps7)
    assert r.fails and r.witnesses[0]["reason"]


@pytest.mark.parametrize("delta, thm1, thm2", [(0, True, True), (2, True, True), (3, False, True), (5, False, True), (6, False, False)])
def test_conditions_on_eco_heater(ht1, epsdt, delta, thm1, thm2):
    m, spec = bind(ht1, epsdt, {"Delta": delta})
    assert thm1_condition(m, spec).holds is thm1
    assert thm2_condition(m, spec).holds is thm2


def test_first_infeasible_eco_heater_witness_includes_the_mixed_compartment(ht1, epsdt):
    m, spec = bind(ht1, epsdt, {"Delta": 6})
    r = thm2_condition(m, spec, max_witnesses=None)
    assert any(w["compartment"] == [1, 2] for w in r.witnesses)


def test_prose_safe_parameters_are_at_least_as_permissive(ht1, epsdt):
    for d in range(0, 8):
        m, spec = bind(ht1, epsdt, {"Delta": d})
        if thm2_condition(m, spec).holds:
            assert thm2_condition(m, spec, prose=True).holds
