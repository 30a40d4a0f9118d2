"""Shared vocabulary: dimensions, shapes, properties, objects, world state,
constraints and the property knowledge base."""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import MalformedName, PropertyConflict


class Dimension(str, Enum):
    D1 = "1D"
    D2 = "2D"
    D3 = "3D"

    @classmethod
    def parse(cls, text: str) -> "Dimension":
        t = str(text).strip().upper()
        if t in ("D1", "D2", "D3"):
            return cls[t]
        for member in cls:
            if member.value == t:
                return member
        raise ValueError(f"unknown dimension {text!r}")


class Shape(str, Enum):
    LINE = "line"
    CIRCLE = "circle"
    RECTANGLE = "rectangle"
    TRIANGLE = "triangle"
    POLYGON = "polygon"
    LOOP = "loop"
    SPHERE = "sphere"
    CUBE = "cube"
    CUBOID = "cuboid"
    PYRAMID = "pyramid"
    CYLINDER = "cylinder"
    CONE = "cone"
    POLYHEDRON = "polyhedron"

    @property
    def dimension(self) -> Dimension:
        return SHAPE_DIMENSION[self]


SHAPE_DIMENSION: dict[Shape, Dimension] = {
    Shape.LINE: Dimension.D1,
    **{s: Dimension.D2 for s in (Shape.CIRCLE, Shape.RECTANGLE, Shape.TRIANGLE, Shape.POLYGON, Shape.LOOP)},
    **{
        s: Dimension.D3
        for s in (Shape.SPHERE, Shape.CUBE, Shape.CUBOID, Shape.PYRAMID, Shape.CYLINDER, Shape.CONE, Shape.POLYHEDRON)
    },
}


class PhysicalProperty(str, Enum):
    RIGID = "rigid"
    BENDABLE = "bendable"
    FOLDABLE = "foldable"
    COMPRESSIBLE = "compressible"
    PLASTIC = "plastic"

    @property
    def predicate(self) -> str:
        return f"is_{self.value}"

    @property
    def letter(self) -> str:
        return self.value[0].upper()

    @classmethod
    def parse(cls, text: str) -> "PhysicalProperty":
        t = str(text).strip().strip("`'\"").lower()
        if t.startswith("is_"):
            t = t[3:]
        if t == "compressive":
            t = "compressible"
        for member in cls:
            if member.value == t or member.letter == t.upper():
                return member
        raise ValueError(f"unknown property {text!r}")


# Properties tied to a single dimension; rigid and plastic are free.
PROPERTY_DIMENSION: dict[PhysicalProperty, Dimension] = {
    PhysicalProperty.BENDABLE: Dimension.D1,
    PhysicalProperty.FOLDABLE: Dimension.D2,
    PhysicalProperty.COMPRESSIBLE: Dimension.D3,
}


def property_allowed(prop: PhysicalProperty, dimension: Dimension) -> bool:
    required = PROPERTY_DIMENSION.get(prop)
    return required is None or required is dimension


# --------------------------------------------------------------------------
# Names
# --------------------------------------------------------------------------

_NAME_RE = re.compile(r"^(?P<color>[a-z][a-z0-9-]*)_(?P<dim>[123][dD])_(?P<shape>[a-z]+)(?:_(?P<ordinal>\d+))?$")


@dataclass(frozen=True)
class NameParts:
    color: str
    dimension: Dimension
    shape: Shape
    ordinal: Optional[int] = None

    def render(self) -> str:
        return render_name(self.color, self.dimension, self.shape, self.ordinal)


def parse_name(name: str) -> NameParts:
    """Split ``color_dimension_shape[_N]`` into its components.

    >>> parse_name("red_3D_cuboid_2")
    NameParts(color='red', dimension=<Dimension.D3: '3D'>, shape=<Shape.CUBOID: 'cuboid'>, ordinal=2)
    """
    if not name:
        raise MalformedName("empty name")
    m = _NAME_RE.match(name)
    if m is None:
        raise MalformedName(f"{name!r} does not follow color_dimension_shape")
    try:
        shape = Shape(m["shape"])
    except ValueError:
        raise MalformedName(f"unknown shape {m['shape']!r} in {name!r}") from None
    dimension = Dimension.parse(m["dim"])
    if shape.dimension is not dimension:
        raise MalformedName(f"shape {shape.value} is not a {dimension.value} shape in {name!r}")
    ordinal = m["ordinal"]
    if ordinal is not None:
        ordinal = int(ordinal)
        if ordinal < 2 or m["ordinal"].startswith("0"):
            raise MalformedName(f"duplicate suffix must be an integer >= 2 in {name!r}")
    return NameParts(m["color"], dimension, shape, ordinal)


def render_name(color: str, dimension: Dimension, shape: Shape, ordinal: Optional[int] = None) -> str:
    base = f"{color}_{dimension.value}_{shape.value}"
    return base if ordinal is None else f"{base}_{ordinal}"


# --------------------------------------------------------------------------
# Objects and world state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectRecord:
    index: int
    name: str
    color: str
    shape: Shape
    dimension: Dimension
    property: Optional[PhysicalProperty] = None
    in_bin: bool = False
    is_bent: bool = False
    is_folded: bool = False
    is_pushed: bool = False

    @classmethod
    def from_name(cls, index: int, name: str, prop: Optional[PhysicalProperty] = None) -> "ObjectRecord":
        parts = parse_name(name)
        return cls(index, name, parts.color, parts.shape, parts.dimension, prop)

    def has(self, prop: PhysicalProperty) -> bool:
        return self.property is prop

    def with_property(self, prop: PhysicalProperty) -> "ObjectRecord":
        return replace(self, property=prop)

    def problems(self) -> list[str]:
        out = []
        if self.index < 0:
            out.append(f"{self.name}: negative index")
        try:
            parts = parse_name(self.name)
        except MalformedName as exc:
            out.append(str(exc))
        else:
            if (parts.color, parts.dimension, parts.shape) != (self.color, self.dimension, self.shape):
                out.append(f"{self.name}: name disagrees with attributes")
        if self.shape.dimension is not self.dimension:
            out.append(f"{self.name}: shape/dimension mismatch")
        if self.property is not None and not property_allowed(self.property, self.dimension):
            out.append(f"{self.name}: {self.property.value} impossible for {self.dimension.value}")
        for flag, prop in (("is_bent", PhysicalProperty.BENDABLE), ("is_folded", PhysicalProperty.FOLDABLE),
                           ("is_pushed", PhysicalProperty.COMPRESSIBLE)):
            if getattr(self, flag) and self.property is not prop:
                out.append(f"{self.name}: {flag} set on a non-{prop.value} object")
        return out


@dataclass(frozen=True)
class BoxRecord:
    index: int = 0
    name: str = "box"
    in_bin_objects: tuple[int, ...] = ()


@dataclass(frozen=True)
class WorldState:
    """Snapshot of objects, box contents and the gripper.

    States are immutable; actions produce new states, which keeps execution
    traces free of aliasing.
    """

    objects: tuple[ObjectRecord, ...]
    box: BoxRecord = field(default_factory=BoxRecord)
    hand_empty: bool = True
    holding: Optional[int] = None

    def obj(self, index: int) -> ObjectRecord:
        return self.objects[index]

    def by_name(self, name: str) -> Optional[ObjectRecord]:
        for o in self.objects:
            if o.name == name:
                return o
        return None

    def update_object(self, index: int, **changes) -> "WorldState":
        objs = list(self.objects)
        objs[index] = replace(objs[index], **changes)
        return replace(self, objects=tuple(objs))

    def key(self) -> tuple:
        """Hashable summary of every mutable field."""
        return (
            tuple((o.in_bin, o.is_bent, o.is_folded, o.is_pushed) for o in self.objects),
            self.box.in_bin_objects,
            self.hand_empty,
            self.holding,
        )

    def all_in_bin(self) -> bool:
        return all(o.in_bin for o in self.objects)


def check_invariants(state: WorldState) -> list[str]:
    """Return human-readable descriptions of every broken state invariant."""
    problems: list[str] = []
    if state.hand_empty == (state.holding is not None):
        problems.append("hand_empty must be the negation of holding")
    if state.holding is not None and not 0 <= state.holding < len(state.objects):
        problems.append(f"holding refers to unknown object {state.holding}")
    members = state.box.in_bin_objects
    if len(set(members)) != len(members):
        problems.append("duplicate entries in box")
    for pos, o in enumerate(state.objects):
        if o.index != pos:
            problems.append(f"{o.name}: index {o.index} stored at position {pos}")
        problems.extend(o.problems())
        if o.in_bin != (o.index in members):
            problems.append(f"{o.name}: in_bin={o.in_bin} disagrees with box membership")
    if state.holding is not None and 0 <= state.holding < len(state.objects) and state.objects[state.holding].in_bin:
        problems.append("holding an object that is already in the bin")
    return problems


# --------------------------------------------------------------------------
# Constraints and instructions
# --------------------------------------------------------------------------


class Rule(str, Enum):
    R1 = "R1_plastic_after_compressible"
    R2 = "R2_push_compressible_after_place"
    R3 = "R3_bend_before_place"
    R4 = "R4_fold_before_place"
    R5 = "R5_never_deform_plastic"


RULE_TEXT = {
    Rule.R1: "A plastic object may be placed only when a compressible object is already in the box; "
             "other objects can be placed at any time.",
    Rule.R2: "Every compressible object must be pushed once it is in the box.",
    Rule.R3: "A bendable object must be bent before it goes into the box.",
    Rule.R4: "A foldable object must be folded before it goes into the box.",
    Rule.R5: "Never bend, fold or push a plastic object.",
}


@dataclass(frozen=True)
class ConstraintSet:
    rules: tuple[Rule, ...] = tuple(Rule)

    def __contains__(self, rule: Rule) -> bool:
        return rule in self.rules

    def without(self, *rules: Rule) -> "ConstraintSet":
        return ConstraintSet(tuple(r for r in self.rules if r not in rules))

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "ConstraintSet":
        wanted = {Rule(i) if i in Rule._value2member_map_ else Rule[i] for i in ids}
        return cls(tuple(r for r in Rule if r in wanted))


@dataclass(frozen=True)
class InstructionSpec:
    text: str
    goal_kind: str = "pack_all"

    @classmethod
    def from_text(cls, text: str) -> "InstructionSpec":
        t = " ".join(text.lower().split())
        if re.search(r"\b(pack|put|place)\b.*\ball\b", t) or re.search(r"\ball\b.*\b(in|into) the (box|bin)\b", t):
            return cls(text, "pack_all")
        return cls(text, "unsupported")


PACK_ALL = InstructionSpec("Pack all the objects.", "pack_all")


# --------------------------------------------------------------------------
# Knowledge base
# --------------------------------------------------------------------------


class KnowledgeBase:
    """Name -> property map that only ever grows.

    Reads are lock-free; inserts serialize on an internal lock.
    """

    def __init__(self, entries: Optional[dict[str, PhysicalProperty]] = None, version: int = 0) -> None:
        self.entries: dict[str, PhysicalProperty] = dict(entries or {})
        self.version = version
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __repr__(self) -> str:
        return f"KnowledgeBase(version={self.version}, entries={len(self.entries)})"

    def lookup(self, name: str) -> Optional[PhysicalProperty]:
        return self.entries.get(name)

    def insert(self, name: str, prop: PhysicalProperty) -> "KnowledgeBase":
        with self._lock:
            existing = self.entries.get(name)
            if existing is not None and existing is not prop:
                raise PropertyConflict(f"{name} is stored as {existing.value}, refusing {prop.value}")
            self.entries[name] = prop
            self.version += 1
        return self

    def merge(self, other: "KnowledgeBase") -> "KnowledgeBase":
        for name, prop in other.entries.items():
            self.insert(name, prop)
        return self

    def copy(self) -> "KnowledgeBase":
        return KnowledgeBase(self.entries, self.version)

    def to_json(self) -> dict:
        return {"version": self.version, "entries": {k: v.value for k, v in sorted(self.entries.items())}}

    @classmethod
    def from_json(cls, doc: dict) -> "KnowledgeBase":
        if not isinstance(doc, dict) or not isinstance(doc.get("entries"), dict):
            raise ValueError("a knowledge base file needs an 'entries' mapping")
        entries = {k: PhysicalProperty.parse(v) for k, v in doc["entries"].items()}
        return cls(entries, int(doc.get("version", 0)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        p = Path(path)
        if not p.exists():
            return cls()
        return cls.from_json(json.loads(p.read_text(encoding="utf-8")))


def kb_lookup(kb: KnowledgeBase, name: str) -> Optional[PhysicalProperty]:
    return kb.lookup(name)


def kb_insert(kb: KnowledgeBase, name: str, prop: PhysicalProperty) -> KnowledgeBase:
    return kb.insert(name, prop)
