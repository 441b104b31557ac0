from __future__ import annotations

import json

import pytest

from robustikit.analysis import (
    check_feasibility,
    check_forward_simulation,
    check_invariant_preservation,
    check_partitioning,
    compartment,
    compartment_map,
    idx_c,
    par_c,
    par_c_eps,
    recheck,
    safpar,
)
from robustikit.analysis.params import PartitioningViolation
from robustikit.semantics import DEFAULT_STATE_CAP, StateSpaceTooLarge, semantics, set_state_cap
from robustikit.syntax import load
from robustikit.transform import is_vacuous, vacuity_report

OVERLAP = """
machine ov
  var x : int[0..5]
  init x = 0
  safety x <= 3
  plant event tick
    guard true
    action x' = x
  ctrl event low
    guard x <= 3
    action x' = x + 1
  ctrl event high
    guard 3 <= x
    action x' = x + 3
"""


@pytest.fixture(scope="module")
def overlap():
    return load(OVERLAP).machines["ov"]


def test_heater_baseline_holds(ht0):
    for check in (check_partitioning, check_invariant_preservation, check_feasibility):
        r = check(ht0)
        assert r.holds, r.summary()
        assert r.witnesses == []


def test_partitioning_witness(overlap):
    r = check_partitioning(overlap, max_witnesses=None)
    assert r.fails
    assert [w["state"] for w in r.witnesses] == [{"x": 3}]
    assert r.witnesses[0]["enabled"] == ["low", "high"]
    assert all(recheck(overlap, "partitioning", w) for w in r.witnesses)


def test_preservation_and_feasibility_witnesses(overlap):
    r = check_invariant_preservation(overlap, max_witnesses=None)
    assert r.fails
    assert all(recheck(overlap, "invariant-preservation", w) for w in r.witnesses)
    # x = 3 going to 6 leaves the domain: no post-state, so the event is infeasible there
    f = check_feasibility(overlap, max_witnesses=None)
    assert [(w["state"]["x"], w["event"]) for w in f.witnesses] == [(3, "high")]
    assert all(recheck(overlap, "feasibility", w) for w in f.witnesses)


def test_recheck_rejects_fabricated_witness(injected):
    w = {
        "state": {"tn": "c", "temp": 35},
        "perceived": {"tn": "c", "temp": 35},
        "event": "ctrl_keep_safe",
        "params": {"dt": 0},
        "successor": {"state": {"tn": "c", "temp": 35}, "perceived": {"tn": "c", "temp": 35}},
    }
    assert not recheck(injected, "invariant-preservation", w)


def test_injected_heater_breaks_safety_with_the_documented_witness(injected):
    r = check_invariant_preservation(injected, max_witnesses=None)
    assert r.fails
    wanted = {
        "state": {"tn": "p", "temp": 32},
        "perceived": {"tn": "p", "temp": 29},
        "event": "ctrl_heat",
        "params": {"dh": 11},
    }
    hits = [w for w in r.witnesses if all(w[k] == v for k, v in wanted.items())]
    assert hits and {w["successor"]["state"]["temp"] for w in hits} == {43}
    assert all(recheck(injected, "invariant-preservation", w) for w in r.witnesses[:200])
    assert r.stats["violations"] == len(r.witnesses)


def test_reports_are_json_and_deterministic(injected):
    a = check_invariant_preservation(injected, max_witnesses=5).to_json(timing=False)
    b = check_invariant_preservation(injected, max_witnesses=5).to_json(timing=False)
    assert json.dumps(a) == json.dumps(b)
    assert "timing" not in a


def test_state_cap():
    m = load(OVERLAP.replace("machine ov", "machine capped")).machines["capped"]
    set_state_cap(5)
    try:
        with pytest.raises(StateSpaceTooLarge):
            check_partitioning(m)
    finally:
        set_state_cap(DEFAULT_STATE_CAP)


# -- controller indices and parameter sets -------------------------------------------


def test_idx_and_par(ht0):
    assert idx_c(ht0, ("c", 20)) == 1
    assert idx_c(ht0, ("c", 35)) == 2
    assert idx_c(ht0, ("c", 50)) == 3
    assert {p[0] for p in par_c(ht0, ("c", 29))} == set(range(1, 12))


def test_idx_requires_partitioning(overlap):
    with pytest.raises(PartitioningViolation):
        idx_c(overlap, (3,))


def test_compartments_under_eps0(ht0, eps0):
    assert compartment(ht0, eps0, ("c", 29)) == {1, 2}
    assert compartment(ht0, eps0, ("c", 20)) == {1}
    assert set(compartment_map(ht0, eps0)) == {
        frozenset({1}),
        frozenset({2}),
        frozenset({3}),
        frozenset({1, 2}),
        frozenset({2, 3}),
    }


def test_compatible_parameters_at_29(ht0, eps0):
    hat = ("c", 29)
    assert {p[0] for p in par_c_eps(ht0, eps0, 1, hat)} == set(range(4, 12))
    assert {p[0] for p in par_c_eps(ht0, eps0, 2, hat)} == set(range(0, 9))
    # cooling is enabled nowhere in the ball: empty family, whole space
    assert len(par_c_eps(ht0, eps0, 3, hat)) == 51


def test_safe_parameters_at_29(ht0, eps0):
    hat = ("c", 29)
    # dh keeps every t in [26, 32] inside [30, 40]
    assert {p[0] for p in safpar(ht0, eps0, 1, hat)} == set(range(4, 9))
    assert {p[0] for p in safpar(ht0, eps0, 2, hat)} == set(range(4, 9))
    assert safpar(ht0, eps0, 3, hat) == frozenset()


def test_vacuity(ht0, eps0, eps7):
    assert is_vacuous({1, 2, 3}, ht0, eps0)
    v7 = is_vacuous({1, 2, 3}, ht0, eps7)
    assert not v7
    temps = {s[1] for s in v7.witnesses}
    assert temps == {34, 35, 36}
    r = vacuity_report([1, 2, 3], ht0, eps0)
    assert r.holds and r.kind == "vacuity"
    assert vacuity_report([1, 2, 3], ht0, eps7).fails


def test_pair_semantics_respect_uncertainty_invariant(injected):
    sem = semantics(injected)
    s = ("p", 32, "p", 29)
    for k, _, t in sem.transitions(s):
        assert abs(t[1] - t[3]) <= 3 and t[0] == t[2]


def test_preserving_machine_is_simulated_by_original(ht0, pr_outcome):
    assert check_forward_simulation(pr_outcome.machine, ht0).holds
