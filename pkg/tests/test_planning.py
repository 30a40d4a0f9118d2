from __future__ import annotations

import math
import random

import pytest
from conftest import objects_from_letters
from hypothesis import given
from hypothesis import strategies as st
from oracles import any_valid_plan, minimal_length, plan_valid

from probeplan.core import PACK_ALL, ConstraintSet, PhysicalProperty as P, Rule
from probeplan.domain import build_problem, generate_domain
from probeplan.execution import validate_plan
from probeplan.planning import (
    REFERENCE_FAULT_RATES,
    REFERENCE_FAULT_WEIGHTS,
    CanonicalPlanner,
    GroundedAction,
    NoisyPlanner,
    Plan,
    PlannerFeedback,
    PlanningResult,
    canonical_length,
    canonical_plan,
    check_feasibility,
    ground_actions,
    noisy_plan,
)

letters = st.text("RBFCP", min_size=1, max_size=7)


def _setup(props, constraints=ConstraintSet()):
    objs = objects_from_letters(props)
    return generate_domain(objs, constraints), build_problem(objs, PACK_ALL)


def _as_pairs(plan):
    return [(s.schema_name, s.object_index) for s in plan.steps]


def test_canonical_order():
    dom, inst = _setup("RPCBF")
    got = _as_pairs(canonical_plan(inst))
    assert got == [("bend", 3), ("pick", 3), ("place", 3), ("fold", 4), ("pick", 4), ("place", 4),
                   ("pick", 2), ("place", 2), ("push", 2), ("pick", 1), ("place", 1), ("pick", 0), ("place", 0)]


@given(letters)
def test_canonical_plan_valid_when_feasible(props):
    dom, inst = _setup(props)
    res = CanonicalPlanner().plan(dom, inst)
    assert res.ok == any_valid_plan(props) if len(props) <= 4 else True
    if res.ok:
        assert plan_valid(props, _as_pairs(res.plan))
        assert len(res.plan) == minimal_length(props)
        report, _ = validate_plan(res.plan, dom, inst)
        assert report.success


@given(letters)
def test_infeasible_exactly_when_plastic_without_compressible(props):
    _, inst = _setup(props)
    blocked = "P" in props and "C" not in props
    assert (check_feasibility(inst) is not None) == blocked


def test_feasibility_depends_on_guard():
    dom, inst = _setup("PR", ConstraintSet().without(Rule.R1))
    assert check_feasibility(inst, dom) is None
    assert CanonicalPlanner().plan(dom, inst).ok


def test_canonical_length_formula():
    counts = {P.BENDABLE: 2, P.FOLDABLE: 1, P.COMPRESSIBLE: 3, P.PLASTIC: 1, P.RIGID: 4}
    assert canonical_length(counts) == 3 * 6 + 2 * 5


def test_ground_actions_prunes_static_mismatch():
    dom, inst = _setup("BP")
    grounded = {(g.schema_name, g.object_index) for g in ground_actions(dom, inst)}
    assert ("bend", 0) in grounded and ("bend", 1) not in grounded
    assert ("push", 0) not in grounded and ("pick", 1) in grounded


def test_plan_text_and_json_roundtrip():
    _, inst = _setup("BCR")
    plan = canonical_plan(inst)
    assert Plan.from_text(plan.to_text(inst), inst) == plan
    assert Plan.from_json(plan.to_json(inst)) == plan
    assert plan.to_json(inst)["steps"][0] == {"action": "bend", "object": 0, "box": 0, "name": inst.objects[0].name}


def test_feedback_and_result_contracts():
    with pytest.raises(ValueError):
        PlannerFeedback((), "semantic")
    with pytest.raises(ValueError):
        PlannerFeedback((), "syntax", 3)
    with pytest.raises(ValueError):
        PlanningResult()
    with pytest.raises(ValueError):
        PlanningResult(Plan(), "x")


def test_fault_schedule_reproduces_reference_curve():
    """Chained conditional fault rates give the reference cumulative success curve."""
    reference = [76.05, 90.53, 95.00, 96.05, 96.58, 96.84]
    still_failing = 1.0
    for rate, target in zip(REFERENCE_FAULT_RATES, reference):
        still_failing *= rate
        assert abs(100 * (1 - still_failing) - target) < 0.02
    assert math.isclose(sum(REFERENCE_FAULT_WEIGHTS.values()), 1.0)


def test_noisy_plan_rate_zero_and_one():
    dom, inst = _setup("BFCPR")
    clean, kind = noisy_plan(dom, inst, 0, random.Random(0), (0.0,))
    assert kind is None and clean.plan == canonical_plan(inst)
    for s in range(20):
        res, kind = noisy_plan(dom, inst, 0, random.Random(s), (1.0,))
        assert kind in REFERENCE_FAULT_WEIGHTS
        assert not validate_plan(res.plan, dom, inst)[0].success


def test_noisy_planner_seeded_and_attempts():
    dom, inst = _setup("BFCPR")
    a, b = NoisyPlanner(5), NoisyPlanner(5)
    for p in (a, b):
        p.plan(dom, inst)
        for _ in range(5):
            p.replan(dom, inst, PlannerFeedback((), "syntax"))
    assert a.faults == b.faults and len(a.faults) == 6 and a.attempt == 5


def test_noisy_planner_reports_infeasible():
    dom, inst = _setup("PR")
    res, kind = noisy_plan(dom, inst, 0, random.Random(0), (1.0,))
    assert not res.ok and kind is None


def test_bad_plan_steps_are_data():
    g = GroundedAction("pick", 0)
    assert GroundedAction.from_json(g.to_json()) == g
