"""Simulated probing actions and the observation decision tree.

A probe applies the deforming action matched to the object's dimension,
releases (and, for deformable objects, recovers) it, and records three
symbolic observations: before, during and after. The decision tree turns
those observations into one physical property.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

from .core import Dimension, KnowledgeBase, ObjectRecord, PhysicalProperty, PROPERTY_DIMENSION, property_allowed
from .errors import ActionDimensionMismatch, MissingProperty, PropertyConflict

P = PhysicalProperty


class ProbingAction(str, Enum):
    BEND = "bend"
    FOLD = "fold"
    PUSH = "push"
    RECOVER = "recover"


class Deformation(str, Enum):
    ORIGINAL = "original"
    DEFORMED = "deformed"


DEFORMING_ACTION = {Dimension.D1: ProbingAction.BEND, Dimension.D2: ProbingAction.FOLD, Dimension.D3: ProbingAction.PUSH}
ACTION_DIMENSION = {a: d for d, a in DEFORMING_ACTION.items()}
RECOVERABLE = {Dimension.D1: P.BENDABLE, Dimension.D2: P.FOLDABLE, Dimension.D3: P.COMPRESSIBLE}


@dataclass(frozen=True)
class ObservationTriple:
    before: Deformation
    during: Deformation
    after: Deformation

    def __post_init__(self) -> None:
        if self.before is not Deformation.ORIGINAL:
            raise ValueError("objects start undeformed")
        if self.after is Deformation.DEFORMED and self.during is not Deformation.DEFORMED:
            raise ValueError("recovery cannot introduce deformation")

    def __str__(self) -> str:
        return f"{self.before.value}/{self.during.value}/{self.after.value}"

    @classmethod
    def parse(cls, text: str) -> "ObservationTriple":
        parts = [Deformation(p.strip()) for p in text.split("/")]
        if len(parts) != 3:
            raise ValueError(f"expected three observations in {text!r}")
        return cls(*parts)


O, D = Deformation.ORIGINAL, Deformation.DEFORMED
ALL_TRIPLES = (ObservationTriple(O, O, O), ObservationTriple(O, D, O), ObservationTriple(O, D, D))


@dataclass(frozen=True)
class ProbeOutcome:
    object_name: str
    action_used: ProbingAction
    triple: ObservationTriple
    inferred: PhysicalProperty

    def log_line(self) -> str:
        return f"{self.object_name} {self.action_used.value} {self.triple} -> {self.inferred.value}"

    @classmethod
    def parse_log_line(cls, line: str) -> "ProbeOutcome":
        lhs, rhs = line.rsplit(" -> ", 1)
        name, action, triple = lhs.split()
        return cls(name, ProbingAction(action), ObservationTriple.parse(triple), P.parse(rhs))


def select_probe_action(dimension: Dimension) -> ProbingAction:
    return DEFORMING_ACTION[dimension]


def simulate_probe(
    ground_truth: PhysicalProperty,
    action: ProbingAction,
    dimension: Optional[Dimension] = None,
) -> ObservationTriple:
    """Observations a perfect camera would record for one probing cycle.

    ``dimension`` is only needed to validate rigid/plastic objects, whose
    property does not pin down a dimension.
    """
    if action is ProbingAction.RECOVER:
        raise ActionDimensionMismatch("recover is not a probing action on its own")
    target = ACTION_DIMENSION[action]
    implied = PROPERTY_DIMENSION.get(ground_truth, dimension)
    if dimension is not None and implied is not dimension:
        raise ActionDimensionMismatch(f"{ground_truth.value} cannot describe a {dimension.value} object")
    if implied is not None and implied is not target:
        raise ActionDimensionMismatch(f"{action.value} applies to {target.value} objects, not {implied.value}")
    if ground_truth is P.RIGID:
        return ObservationTriple(O, O, O)
    if ground_truth is P.PLASTIC:
        return ObservationTriple(O, D, D)
    return ObservationTriple(O, D, O)


def classify_decision_tree(dimension: Dimension, triple: ObservationTriple) -> PhysicalProperty:
    if triple.during is Deformation.ORIGINAL:
        return P.RIGID
    if triple.after is Deformation.ORIGINAL:
        return RECOVERABLE[dimension]
    return P.PLASTIC


# --------------------------------------------------------------------------
# Property adapters
# --------------------------------------------------------------------------


class PropertyAdapter(Protocol):
    def classify(
        self, obj: ObjectRecord, action: ProbingAction, triple: ObservationTriple, rng: random.Random
    ) -> PhysicalProperty: ...


class OracleProperty:
    def classify(self, obj, action, triple, rng):
        return classify_decision_tree(obj.dimension, triple)


def misread(dimension: Dimension, triple: ObservationTriple) -> PhysicalProperty:
    """Label produced when exactly one decisive observation is misjudged.

    No deformation seen -> deformation imagined; recovered -> judged not
    recovered; not recovered -> judged recovered.
    """
    if triple.during is O:
        return RECOVERABLE[dimension]
    if triple.after is O:
        return P.PLASTIC
    return RECOVERABLE[dimension]


class NoisyProperty:
    """Decision tree whose answer is wrong with a per-object probability.

    ``accuracy`` maps object names (base names, without ``_N``) to the
    probability of the correct label; unknown names use ``default``.
    """

    def __init__(self, accuracy: Mapping[str, float], default: float = 1.0) -> None:
        self.accuracy = dict(accuracy)
        self.default = default

    def rate(self, name: str) -> float:
        if name in self.accuracy:
            return self.accuracy[name]
        base = name.rsplit("_", 1)[0] if name.rsplit("_", 1)[-1].isdigit() else name
        return self.accuracy.get(base, self.default)

    def classify(self, obj, action, triple, rng):
        if rng.random() < self.rate(obj.name):
            return classify_decision_tree(obj.dimension, triple)
        return misread(obj.dimension, triple)


class CountingAdapter:
    """Wraps another adapter and counts classification calls."""

    def __init__(self, inner: PropertyAdapter) -> None:
        self.inner = inner
        self.calls = 0

    def classify(self, obj, action, triple, rng):
        self.calls += 1
        return self.inner.classify(obj, action, triple, rng)


# --------------------------------------------------------------------------
# Probing loop
# --------------------------------------------------------------------------


def _probe_rng(seed: int, name: str) -> random.Random:
    return random.Random(f"{seed}:{name}")


def probe_object(
    obj: ObjectRecord,
    kb: KnowledgeBase,
    adapter: PropertyAdapter,
    seed: int = 0,
    *,
    truth: Mapping[str, PhysicalProperty],
) -> ProbeOutcome:
    """Probe one unseen object and record the inferred property in ``kb``.

    ``truth`` is the simulated physical world: object name -> actual property.
    """
    if obj.property is not None:
        raise ValueError(f"{obj.name} already has a property")
    try:
        actual = truth[obj.name]
    except KeyError:
        raise MissingProperty(f"the simulated world has no ground truth for {obj.name}") from None
    action = select_probe_action(obj.dimension)
    triple = simulate_probe(actual, action, obj.dimension)
    inferred = adapter.classify(obj, action, triple, _probe_rng(seed, obj.name))
    kb.insert(obj.name, inferred)
    return ProbeOutcome(obj.name, action, triple, inferred)


@dataclass
class ReasoningResult:
    objects: list[ObjectRecord]
    outcomes: list[ProbeOutcome] = field(default_factory=list)
    cache_hits: int = 0

    @property
    def probes(self) -> int:
        return len(self.outcomes)

    def log(self) -> str:
        return "".join(o.log_line() + "\n" for o in self.outcomes)


def reason_properties(
    objects: Sequence[ObjectRecord],
    kb: KnowledgeBase,
    adapter: PropertyAdapter,
    seed: int = 0,
    *,
    truth: Mapping[str, PhysicalProperty],
) -> ReasoningResult:
    """Fill in every object's property, from ``kb`` when known, else by probing."""
    result = ReasoningResult([])
    for obj in objects:
        if obj.property is not None:
            result.objects.append(obj)
            continue
        known = kb.lookup(obj.name)
        if known is not None:
            if not property_allowed(known, obj.dimension):
                raise PropertyConflict(f"{obj.name} is stored as {known.value}, impossible for a {obj.dimension.value} object")
            result.cache_hits += 1
            result.objects.append(obj.with_property(known))
            continue
        outcome = probe_object(obj, kb, adapter, seed, truth=truth)
        result.outcomes.append(outcome)
        result.objects.append(obj.with_property(outcome.inferred))
    return result
