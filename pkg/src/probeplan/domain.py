"""Planning domain (predicates + lifted action schemas) and problem instance.

Schemas are plain data: conjunctions of literals for preconditions and
literal lists for effects, each over the schema's object parameter and
the single box. ``ActionSchema.applicable`` / ``ActionSchema.apply`` give
them their execution semantics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import (
    BoxRecord,
    ConstraintSet,
    InstructionSpec,
    ObjectRecord,
    PhysicalProperty,
    Rule,
    WorldState,
)
from .errors import MissingProperty, UnsupportedInstruction

P = PhysicalProperty

PRIMITIVES = ("pick", "place", "bend", "fold", "push")
PROPERTY_PREDICATES = tuple(p.predicate for p in PhysicalProperty)
STATE_PREDICATES = ("in_bin", "is_bent", "is_folded", "is_pushed", "hand_empty", "holding")
# Derived test over the box contents, used by the plastic-placement guard.
BOX_HAS_COMPRESSIBLE = "box_has_compressible"
MEMBER = "member"

_FLAG_PREDICATES = ("in_bin", "is_bent", "is_folded", "is_pushed")
_EFFECT_PREDICATES = ("in_bin", MEMBER, "hand_empty", "holding", "is_bent", "is_folded", "is_pushed")


@dataclass(frozen=True)
class PredicateSet:
    property_predicates: tuple[str, ...]
    state_predicates: tuple[str, ...] = STATE_PREDICATES

    @property
    def all(self) -> tuple[str, ...]:
        return self.property_predicates + self.state_predicates

    def __contains__(self, predicate: str) -> bool:
        return predicate in self.all


@dataclass(frozen=True)
class Literal:
    """``predicate(o)`` or its negation, optionally only required ``when``
    the object carries a given property predicate."""

    predicate: str
    negated: bool = False
    when: Optional[str] = None

    def __str__(self) -> str:
        body = self.predicate if self.predicate in ("hand_empty", BOX_HAS_COMPRESSIBLE) else f"{self.predicate}(o)"
        body = ("¬" if self.negated else "") + body
        return f"({self.when}(o) → {body})" if self.when else body

    def to_json(self) -> dict:
        d: dict = {"predicate": self.predicate, "negated": self.negated}
        if self.when:
            d["when"] = self.when
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Literal":
        return cls(d["predicate"], bool(d.get("negated", False)), d.get("when"))


def _truth(predicate: str, state: WorldState, o: ObjectRecord) -> bool:
    if predicate == "hand_empty":
        return state.hand_empty
    if predicate == "holding":
        return state.holding == o.index
    if predicate in _FLAG_PREDICATES:
        return getattr(o, predicate)
    if predicate == MEMBER:
        return o.index in state.box.in_bin_objects
    if predicate == BOX_HAS_COMPRESSIBLE:
        return any(state.objects[i].property is P.COMPRESSIBLE for i in state.box.in_bin_objects)
    if predicate.startswith("is_"):
        return o.property is not None and o.property.predicate == predicate
    raise KeyError(f"unknown predicate {predicate!r}")


def holds(lit: Literal, state: WorldState, o: ObjectRecord) -> bool:
    if lit.when is not None and not _truth(lit.when, state, o):
        return True
    return _truth(lit.predicate, state, o) != lit.negated


@dataclass(frozen=True)
class ActionSchema:
    name: str
    preconditions: tuple[Literal, ...]
    add: tuple[Literal, ...] = ()
    delete: tuple[Literal, ...] = ()
    params: tuple[tuple[str, str], ...] = (("o", "object"), ("b", "box"))

    def applicable(self, state: WorldState, index: int) -> bool:
        o = state.objects[index]
        return all(holds(lit, state, o) for lit in self.preconditions)

    def apply(self, state: WorldState, index: int) -> WorldState:
        """Successor state; assumes ``applicable`` already checked."""
        obj_changes: dict = {}
        box = state.box
        hand_empty, holding = state.hand_empty, state.holding
        for lit in self.delete:
            p = lit.predicate
            if p == "holding":
                if holding == index:
                    holding = None
            elif p == "hand_empty":
                hand_empty = False
            elif p == MEMBER:
                box = replace(box, in_bin_objects=tuple(i for i in box.in_bin_objects if i != index))
            elif p in _FLAG_PREDICATES:
                obj_changes[p] = False
        for lit in self.add:
            p = lit.predicate
            if p == "holding":
                holding = index
            elif p == "hand_empty":
                hand_empty = True
                holding = None
            elif p == MEMBER:
                if index not in box.in_bin_objects:
                    box = replace(box, in_bin_objects=box.in_bin_objects + (index,))
            elif p in _FLAG_PREDICATES:
                obj_changes[p] = True
        new = replace(state, box=box, hand_empty=hand_empty, holding=holding)
        if obj_changes:
            new = new.update_object(index, **obj_changes)
        return new

    def describe(self) -> str:
        pre = " ∧ ".join(str(l) for l in self.preconditions) or "⊤"
        eff = ", ".join([str(l) for l in self.add] + [f"¬{l}" for l in self.delete])
        return f"{self.name}(o, b): pre {pre}; eff {eff}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": [{"name": n, "type": t} for n, t in self.params],
            "preconditions": [l.to_json() for l in self.preconditions],
            "add": [l.to_json() for l in self.add],
            "delete": [l.to_json() for l in self.delete],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ActionSchema":
        return cls(
            d["name"],
            tuple(Literal.from_json(x) for x in d.get("preconditions", [])),
            tuple(Literal.from_json(x) for x in d.get("add", [])),
            tuple(Literal.from_json(x) for x in d.get("delete", [])),
            tuple((p["name"], p["type"]) for p in d.get("params", [{"name": "o", "type": "object"}, {"name": "b", "type": "box"}])),
        )


@dataclass(frozen=True)
class DomainDescription:
    predicates: PredicateSet
    actions: tuple[ActionSchema, ...]

    def __post_init__(self) -> None:
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate action names in {names}")
        for a in self.actions:
            for lit in a.add + a.delete:
                if lit.predicate in PROPERTY_PREDICATES:
                    raise ValueError(f"{a.name}: effects may not change object properties")

    def action(self, name: str) -> Optional[ActionSchema]:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def with_action(self, schema: ActionSchema) -> "DomainDescription":
        acts = tuple(schema if a.name == schema.name else a for a in self.actions)
        if schema.name not in {a.name for a in self.actions}:
            acts += (schema,)
        return replace(self, actions=acts)

    def to_json(self) -> dict:
        return {
            "predicates": {
                "property_predicates": list(self.predicates.property_predicates),
                "state_predicates": list(self.predicates.state_predicates),
            },
            "actions": [a.to_json() for a in self.actions],
        }

    @classmethod
    def from_json(cls, d: dict) -> "DomainDescription":
        preds = PredicateSet(tuple(d["predicates"]["property_predicates"]), tuple(d["predicates"]["state_predicates"]))
        return cls(preds, tuple(ActionSchema.from_json(a) for a in d["actions"]))


# --------------------------------------------------------------------------
# Generation
# --------------------------------------------------------------------------


def generate_predicates(objects: Sequence[ObjectRecord]) -> PredicateSet:
    missing = [o.name for o in objects if o.property is None]
    if missing:
        raise MissingProperty(f"objects without a property: {missing}")
    present = {o.property for o in objects}
    return PredicateSet(tuple(p.predicate for p in PhysicalProperty if p in present))


def _lit(predicate: str, negated: bool = False, when: Optional[str] = None) -> Literal:
    return Literal(predicate, negated, when)


def generate_actions(
    predicates: PredicateSet,
    primitives: Iterable[str] = PRIMITIVES,
    constraints: ConstraintSet = ConstraintSet(),
) -> list[ActionSchema]:
    """Canonical lifted schemas for the requested primitives.

    R1 and R5 are the rules expressible as single-step preconditions; the
    ordering obligations (R2-R4) are audited at plan level instead. A
    schema whose guard property is absent from ``predicates`` is still
    emitted and simply never applies.
    """
    wanted = list(primitives)
    unknown = set(wanted) - set(PRIMITIVES)
    if unknown:
        raise ValueError(f"unknown primitives {sorted(unknown)}")
    guard_plastic = (_lit("is_plastic", True),) if Rule.R5 in constraints else ()
    schemas = {
        "pick": ActionSchema(
            "pick",
            (_lit("hand_empty"), _lit("in_bin", True)),
            add=(_lit("holding"),),
            delete=(_lit("hand_empty"),),
        ),
        "place": ActionSchema(
            "place",
            (_lit("holding"),) + ((_lit(BOX_HAS_COMPRESSIBLE, when="is_plastic"),) if Rule.R1 in constraints else ()),
            add=(_lit("in_bin"), _lit(MEMBER), _lit("hand_empty")),
            delete=(_lit("holding"),),
        ),
        "bend": ActionSchema(
            "bend",
            (_lit("hand_empty"), _lit("in_bin", True), _lit("is_bendable")) + guard_plastic,
            add=(_lit("is_bent"),),
        ),
        "fold": ActionSchema(
            "fold",
            (_lit("hand_empty"), _lit("in_bin", True), _lit("is_foldable")) + guard_plastic,
            add=(_lit("is_folded"),),
        ),
        "push": ActionSchema(
            "push",
            (_lit("hand_empty"), _lit("is_compressible"), _lit("in_bin")),
            add=(_lit("is_pushed"),),
        ),
    }
    return [schemas[name] for name in PRIMITIVES if name in wanted]


def generate_domain(
    objects: Sequence[ObjectRecord], constraints: ConstraintSet = ConstraintSet()
) -> DomainDescription:
    preds = generate_predicates(objects)
    return DomainDescription(preds, tuple(generate_actions(preds, PRIMITIVES, constraints)))


# --------------------------------------------------------------------------
# Problem instance
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GoalRow:
    index: int
    name: str
    packed: bool


@dataclass(frozen=True)
class GoalTable:
    rows: tuple[GoalRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def render(self) -> str:
        """Aligned pipe table: Index | Name | Packed."""
        width = max([len("Name")] + [len(r.name) for r in self.rows]) + 2
        lines = [
            "| Index | " + "Name".ljust(width - 1) + "| Packed |",
            "|-------|" + "-" * width + "|--------|",
        ]
        for r in self.rows:
            lines.append(f"|{str(r.index).center(7)}| " + r.name.ljust(width - 1) + f"|{str(r.packed).center(8)}|")
        return "\n".join(lines) + "\n"

    def to_json(self) -> list[dict]:
        return [{"index": r.index, "name": r.name, "packed": r.packed} for r in self.rows]

    @classmethod
    def from_json(cls, rows: list[dict]) -> "GoalTable":
        return cls(tuple(GoalRow(int(r["index"]), r["name"], bool(r["packed"])) for r in rows))


@dataclass(frozen=True)
class ProblemInstance:
    s_init: WorldState
    goal: GoalTable

    @property
    def objects(self) -> tuple[ObjectRecord, ...]:
        return self.s_init.objects

    def to_json(self) -> dict:
        return {
            "s_init": state_to_json(self.s_init),
            "goal": self.goal.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProblemInstance":
        return cls(state_from_json(d["s_init"]), GoalTable.from_json(d["goal"]))


def state_to_json(state: WorldState) -> dict:
    return {
        "objects": [
            {
                "index": o.index, "name": o.name, "color": o.color, "shape": o.shape.value,
                "dimension": o.dimension.value, "property": o.property.value if o.property else None,
                "in_bin": o.in_bin, "is_bent": o.is_bent, "is_folded": o.is_folded, "is_pushed": o.is_pushed,
            }
            for o in state.objects
        ],
        "box": {"index": state.box.index, "name": state.box.name, "in_bin_objects": list(state.box.in_bin_objects)},
        "hand_empty": state.hand_empty,
        "holding": state.holding,
    }


def state_from_json(d: dict) -> WorldState:
    from .core import Dimension, Shape

    objs = tuple(
        ObjectRecord(
            o["index"], o["name"], o["color"], Shape(o["shape"]), Dimension.parse(o["dimension"]),
            PhysicalProperty.parse(o["property"]) if o.get("property") else None,
            o.get("in_bin", False), o.get("is_bent", False), o.get("is_folded", False), o.get("is_pushed", False),
        )
        for o in d["objects"]
    )
    b = d.get("box", {})
    box = BoxRecord(b.get("index", 0), b.get("name", "box"), tuple(b.get("in_bin_objects", [])))
    return WorldState(objs, box, d.get("hand_empty", True), d.get("holding"))


def describe_initial_state(objects: Sequence[ObjectRecord], predicates: Optional[PredicateSet] = None) -> WorldState:
    """Everything out of the bin, undeformed, gripper empty; indices renumbered 0..n-1."""
    missing = [o.name for o in objects if o.property is None]
    if missing:
        raise MissingProperty(f"objects without a property: {missing}")
    if predicates is not None:
        absent = {o.property.predicate for o in objects} - set(predicates.property_predicates)
        if absent:
            raise MissingProperty(f"predicate set lacks {sorted(absent)}")
    objs = tuple(
        replace(o, index=k, in_bin=False, is_bent=False, is_folded=False, is_pushed=False)
        for k, o in enumerate(objects)
    )
    return WorldState(objs, BoxRecord(), True, None)


def describe_goal_state(objects: Sequence[ObjectRecord], instruction: InstructionSpec) -> GoalTable:
    if instruction.goal_kind != "pack_all":
        raise UnsupportedInstruction(f"cannot ground instruction {instruction.text!r}")
    return GoalTable(tuple(GoalRow(k, o.name, True) for k, o in enumerate(objects)))


def build_problem(objects: Sequence[ObjectRecord], instruction: InstructionSpec,
                  predicates: Optional[PredicateSet] = None) -> ProblemInstance:
    s_init = describe_initial_state(objects, predicates)
    return ProblemInstance(s_init, describe_goal_state(s_init.objects, instruction))


def save_json(path: str | Path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
