from __future__ import annotations

import pytest
from conftest import objects_from_letters
from hypothesis import given
from hypothesis import strategies as st

from probeplan.core import PACK_ALL, ConstraintSet, InstructionSpec, ObjectRecord, PhysicalProperty as P, Rule, check_invariants
from probeplan.domain import (
    BOX_HAS_COMPRESSIBLE,
    PRIMITIVES,
    ActionSchema,
    DomainDescription,
    Literal,
    ProblemInstance,
    build_problem,
    describe_goal_state,
    describe_initial_state,
    generate_actions,
    generate_domain,
    generate_predicates,
)
from probeplan.errors import MissingProperty, UnsupportedInstruction

INSTANCE15 = [("white_3D_cuboid", P.RIGID), ("yellow_3D_cuboid", P.COMPRESSIBLE), ("white_3D_cylinder", P.COMPRESSIBLE),
              ("blue_2D_rectangle", P.PLASTIC), ("black_1D_line", P.BENDABLE), ("brown_3D_cylinder", P.COMPRESSIBLE)]

# goal table layout for this six-object scene, written out by hand
GOAL_TABLE_15 = """\
| Index | Name              | Packed |
|-------|-------------------|--------|
|   0   | white_3D_cuboid   |  True  |
|   1   | yellow_3D_cuboid  |  True  |
|   2   | white_3D_cylinder |  True  |
|   3   | blue_2D_rectangle |  True  |
|   4   | black_1D_line     |  True  |
|   5   | brown_3D_cylinder |  True  |
"""


def _instance15():
    return [ObjectRecord.from_name(k, n, p) for k, (n, p) in enumerate(INSTANCE15)]


def test_predicates_follow_present_properties():
    preds = generate_predicates(_instance15())
    assert set(preds.property_predicates) == {"is_rigid", "is_compressible", "is_plastic", "is_bendable"}
    assert "in_bin" in preds and "hand_empty" in preds


def test_predicates_need_properties():
    with pytest.raises(MissingProperty):
        generate_predicates([ObjectRecord.from_name(0, "red_3D_cuboid")])


def test_schema_shapes_under_all_rules():
    acts = {a.name: a for a in generate_domain(_instance15()).actions}
    assert set(acts) == set(PRIMITIVES)
    assert Literal(BOX_HAS_COMPRESSIBLE, when="is_plastic") in acts["place"].preconditions
    assert Literal("is_plastic", True) in acts["bend"].preconditions
    assert Literal("is_plastic", True) in acts["fold"].preconditions
    assert Literal("in_bin") in acts["push"].preconditions
    assert Literal("in_bin") in acts["place"].add


def test_dropping_rules_drops_guards():
    preds = generate_predicates(_instance15())
    acts = {a.name: a for a in generate_actions(preds, PRIMITIVES, ConstraintSet().without(Rule.R1, Rule.R5))}
    assert all(l.predicate != BOX_HAS_COMPRESSIBLE for l in acts["place"].preconditions)
    assert Literal("is_plastic", True) not in acts["bend"].preconditions


def test_unknown_primitive():
    with pytest.raises(ValueError):
        generate_actions(generate_predicates(_instance15()), ["pick", "squash"])


def test_effects_cannot_touch_properties():
    bad = ActionSchema("melt", (), add=(Literal("is_plastic"),))
    with pytest.raises(ValueError):
        DomainDescription(generate_predicates(_instance15()), (bad,))


def test_duplicate_actions_rejected():
    pick = generate_actions(generate_predicates(_instance15()), ["pick"])[0]
    with pytest.raises(ValueError):
        DomainDescription(generate_predicates(_instance15()), (pick, pick))


def test_domain_json_roundtrip():
    d = generate_domain(_instance15())
    assert DomainDescription.from_json(d.to_json()) == d


def test_initial_state():
    objs = [o.__class__(**{**o.__dict__, "index": 10 + o.index, "in_bin": True}) for o in _instance15()]
    s = describe_initial_state(objs)
    assert [o.index for o in s.objects] == list(range(6))
    assert not any(o.in_bin for o in s.objects) and s.hand_empty and s.holding is None
    assert check_invariants(s) == []


def test_initial_state_predicate_mismatch():
    preds = generate_predicates(_instance15()[:2])
    with pytest.raises(MissingProperty):
        describe_initial_state(_instance15(), preds)


def test_goal_table_layout():
    assert describe_goal_state(_instance15(), PACK_ALL).render() == GOAL_TABLE_15


def test_goal_unsupported():
    with pytest.raises(UnsupportedInstruction):
        describe_goal_state(_instance15(), InstructionSpec.from_text("Stack the cubes"))


def test_problem_json_roundtrip():
    p = build_problem(_instance15(), PACK_ALL)
    assert ProblemInstance.from_json(p.to_json()) == p


@given(st.text("RBFCP", min_size=1, max_size=6))
def test_schema_application_keeps_invariants(props):
    """Applying any applicable schema from any reachable state keeps the state well formed."""
    objs = objects_from_letters(props)
    dom = generate_domain(objs)
    frontier = [describe_initial_state(objs)]
    seen = set()
    while frontier:
        s = frontier.pop()
        if s.key() in seen or len(seen) > 400:
            continue
        seen.add(s.key())
        assert check_invariants(s) == []
        for a in dom.actions:
            for i in range(len(objs)):
                if a.applicable(s, i):
                    frontier.append(a.apply(s, i))
