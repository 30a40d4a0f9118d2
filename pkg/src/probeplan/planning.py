"""Grounded plans, the canonical phase planner and a seeded fault-injecting planner."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .core import PhysicalProperty
from .domain import BOX_HAS_COMPRESSIBLE, DomainDescription, ProblemInstance

P = PhysicalProperty


@dataclass(frozen=True)
class GroundedAction:
    schema_name: str
    object_index: int
    box_index: int = 0

    def to_json(self) -> dict:
        return {"action": self.schema_name, "object": self.object_index, "box": self.box_index}

    @classmethod
    def from_json(cls, d: dict) -> "GroundedAction":
        return cls(str(d["action"]), int(d["object"]), int(d.get("box", 0)))


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundedAction, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_json(self, instance: Optional[ProblemInstance] = None) -> dict:
        steps = []
        for s in self.steps:
            d = s.to_json()
            if instance is not None and 0 <= s.object_index < len(instance.objects):
                d["name"] = instance.objects[s.object_index].name
            steps.append(d)
        return {"steps": steps}

    @classmethod
    def from_json(cls, d: dict) -> "Plan":
        return cls(tuple(GroundedAction.from_json(s) for s in d["steps"]))

    def to_text(self, instance: ProblemInstance) -> str:
        def name(i: int) -> str:
            return instance.objects[i].name if 0 <= i < len(instance.objects) else f"object{i}"

        return "".join(f"{s.schema_name} {name(s.object_index)}\n" for s in self.steps)

    @classmethod
    def from_text(cls, text: str, instance: ProblemInstance) -> "Plan":
        """Inverse of ``to_text``; unknown names map to index -1."""
        index = {o.name: o.index for o in instance.objects}
        steps = []
        for line in text.splitlines():
            if not line.strip():
                continue
            verb, _, obj = line.strip().partition(" ")
            steps.append(GroundedAction(verb, index.get(obj.strip(), -1)))
        return cls(tuple(steps))


@dataclass(frozen=True)
class PlannerFeedback:
    transcript: tuple[str, ...]
    error_class: str  # "syntax" | "semantic"
    failed_step: Optional[int] = None
    violations: tuple = ()

    def __post_init__(self) -> None:
        if self.error_class not in ("syntax", "semantic"):
            raise ValueError(f"feedback error class must be syntax or semantic, got {self.error_class!r}")
        if (self.failed_step is not None) != (self.error_class == "semantic"):
            raise ValueError("failed_step is given exactly for semantic errors")


@dataclass(frozen=True)
class PlanningResult:
    plan: Optional[Plan] = None
    infeasible: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.plan is None) == (self.infeasible is None):
            raise ValueError("a planning result is either a plan or an infeasibility reason")

    @property
    def ok(self) -> bool:
        return self.plan is not None


class Planner(Protocol):
    def plan(self, domain: DomainDescription, instance: ProblemInstance) -> PlanningResult: ...

    def replan(self, domain: DomainDescription, instance: ProblemInstance, feedback: PlannerFeedback) -> PlanningResult: ...


def check_feasibility(instance: ProblemInstance, domain: Optional[DomainDescription] = None) -> Optional[str]:
    """Reason string when pack-all is unreachable, else None.

    The only blocker under the canonical schemas is a plastic object with
    nothing compressible to cushion it. When a domain is given and its
    place schema carries no such guard, that blocker disappears.
    """
    objs = instance.objects
    if not objs:
        return None
    if domain is not None:
        for verb in ("pick", "place"):
            if domain.action(verb) is None:
                return f"the domain has no {verb} action"
        place = domain.action("place")
        if not any(l.predicate == BOX_HAS_COMPRESSIBLE for l in place.preconditions):
            return None
    plastics = [o.name for o in objs if o.property is P.PLASTIC]
    if plastics and not any(o.property is P.COMPRESSIBLE for o in objs):
        return f"plastic object(s) {', '.join(plastics)} need a compressible object in the box first, and none exists"
    return None


def ground_actions(domain: DomainDescription, instance: ProblemInstance) -> list[GroundedAction]:
    """Schemas x objects, dropping pairs excluded by a static property precondition."""
    out = []
    for schema in domain.actions:
        for o in instance.objects:
            ok = True
            for lit in schema.preconditions:
                if lit.when is None and lit.predicate.startswith("is_") and lit.predicate in _PROPERTY_PREDICATES:
                    if (o.property is not None and o.property.predicate == lit.predicate) == lit.negated:
                        ok = False
                        break
            if ok:
                out.append(GroundedAction(schema.name, o.index, instance.s_init.box.index))
    return out


_PROPERTY_PREDICATES = frozenset(p.predicate for p in PhysicalProperty)

# (property, verbs in order) for each phase of the canonical strategy
PHASES: tuple[tuple[PhysicalProperty, tuple[str, ...]], ...] = (
    (P.BENDABLE, ("bend", "pick", "place")),
    (P.FOLDABLE, ("fold", "pick", "place")),
    (P.COMPRESSIBLE, ("pick", "place", "push")),
    (P.PLASTIC, ("pick", "place")),
    (P.RIGID, ("pick", "place")),
)


def canonical_plan(instance: ProblemInstance) -> Plan:
    box = instance.s_init.box.index
    steps = []
    for prop, verbs in PHASES:
        for o in sorted(instance.objects, key=lambda o: o.index):
            if o.property is prop:
                steps.extend(GroundedAction(v, o.index, box) for v in verbs)
    return Plan(tuple(steps))


def canonical_length(counts: dict[PhysicalProperty, int]) -> int:
    return sum(len(verbs) * counts.get(prop, 0) for prop, verbs in PHASES)


class CanonicalPlanner:
    """Deterministic phase strategy; replanning simply re-derives the plan."""

    def plan(self, domain, instance):
        reason = check_feasibility(instance, domain)
        if reason is not None:
            return PlanningResult(infeasible=reason)
        return PlanningResult(plan=canonical_plan(instance))

    def replan(self, domain, instance, feedback):
        return self.plan(domain, instance)


# --------------------------------------------------------------------------
# Noisy planner
# --------------------------------------------------------------------------

# Probability that the k-th planning attempt (0-based) is faulty, given all
# earlier ones were. Chained, these give cumulative clean rates of about
# 76.1, 90.5, 95.0, 96.1, 96.6 and 96.8 percent over six attempts.
REFERENCE_FAULT_RATES = (0.2395, 0.395, 0.528, 0.79, 0.866, 0.924)

# Relative weights of plan-level fault kinds. Kinds that break a packing rule
# carry 0.923 of the mass and kinds that stay rule-clean but miss the goal
# (drop_place_after_bend, unknown_action_name) carry 0.077, so a faulty first
# attempt breaks a rule in 22.1 of every 23.95 cases.
REFERENCE_FAULT_WEIGHTS = {
    "swap_plastic_first": 0.3793,
    "drop_push": 0.3540,
    "pick_then_fold": 0.1897,
    "drop_place_after_bend": 0.060,
    "unknown_action_name": 0.017,
}

PRESETS = {"paper": (REFERENCE_FAULT_RATES, REFERENCE_FAULT_WEIGHTS)}


def noisy_plan(domain: DomainDescription, instance: ProblemInstance, attempt: int, rng: random.Random,
               fault_rates: Sequence[float] = REFERENCE_FAULT_RATES,
               fault_weights: Optional[dict[str, float]] = None) -> tuple[PlanningResult, Optional[str]]:
    """One planning attempt: the canonical plan, corrupted with probability
    ``fault_rates[attempt]`` (the last rate repeats). Returns the result and
    the fault kind used, if any."""
    from .execution import FaultSpec, applicable_plan_faults, inject_fault

    weights = REFERENCE_FAULT_WEIGHTS if fault_weights is None else fault_weights
    base = CanonicalPlanner().plan(domain, instance)
    rate = fault_rates[min(attempt, len(fault_rates) - 1)]
    if not base.ok or rng.random() >= rate:
        return base, None
    kinds = applicable_plan_faults(base.plan, instance, weights)
    if not kinds:
        return base, None
    names = sorted(kinds)
    kind = rng.choices(names, weights=[kinds[k] for k in names])[0]
    mutated = inject_fault(base.plan, FaultSpec(kind, rng.randrange(2**31)), instance=instance)
    return PlanningResult(plan=mutated), kind


class NoisyPlanner:
    """Canonical plan corrupted by a randomly chosen fault with a per-attempt rate.

    ``plan`` starts a new episode; every ``replan`` moves to the next
    attempt's fault rate. One ``rng`` drives the whole episode, so a fixed
    seed fixes every attempt.
    """

    def __init__(self, seed: int | str = 0, preset: str = "paper",
                 fault_rates: Optional[Sequence[float]] = None,
                 fault_weights: Optional[dict[str, float]] = None) -> None:
        rates, weights = PRESETS[preset]
        self.fault_rates = tuple(fault_rates if fault_rates is not None else rates)
        self.fault_weights = dict(fault_weights if fault_weights is not None else weights)
        self.rng = random.Random(seed)
        self.attempt = 0
        self.faults: list[Optional[str]] = []

    def _draw(self, domain, instance) -> PlanningResult:
        result, kind = noisy_plan(domain, instance, self.attempt, self.rng, self.fault_rates, self.fault_weights)
        self.faults.append(kind)
        return result

    def plan(self, domain, instance):
        self.attempt = 0
        self.faults = []
        return self._draw(domain, instance)

    def replan(self, domain, instance, feedback):
        self.attempt += 1
        return self._draw(domain, instance)


class FirstPlanFault:
    """Wraps a planner so that only its first plan carries a given plan fault."""

    def __init__(self, inner: Planner, fault) -> None:
        self.inner = inner
        self.fault = fault

    def plan(self, domain, instance):
        from .execution import inject_fault

        res = self.inner.plan(domain, instance)
        if not res.ok:
            return res
        return PlanningResult(plan=inject_fault(res.plan, self.fault, instance=instance))

    def replan(self, domain, instance, feedback):
        return self.inner.replan(domain, instance, feedback)
