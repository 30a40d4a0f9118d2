"""Property probing and constraint-aware bin-packing planning for unseen
deformable objects, with symbolic scenes and pluggable reasoners."""

from .core import (
    PACK_ALL,
    BoxRecord,
    ConstraintSet,
    Dimension,
    InstructionSpec,
    KnowledgeBase,
    ObjectRecord,
    PhysicalProperty,
    Rule,
    Shape,
    WorldState,
    check_invariants,
    kb_insert,
    kb_lookup,
    parse_name,
    render_name,
)

__version__ = "0.1.0"

__all__ = [
    "PACK_ALL",
    "BoxRecord",
    "ConstraintSet",
    "Dimension",
    "InstructionSpec",
    "KnowledgeBase",
    "ObjectRecord",
    "PhysicalProperty",
    "Rule",
    "Shape",
    "WorldState",
    "check_invariants",
    "kb_insert",
    "kb_lookup",
    "parse_name",
    "render_name",
]
