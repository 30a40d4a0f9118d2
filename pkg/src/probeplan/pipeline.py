"""End-to-end run: detect, name, probe, build the domain and problem, then validate-replan."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .adapters import Reasoner, ReasonerRole, RolePlanner, RoleProperty
from .core import ConstraintSet, InstructionSpec, KnowledgeBase, ObjectRecord, PhysicalProperty
from .domain import DomainDescription, ProblemInstance
from .errors import AdapterFailure, CardinalityMismatch
from .execution import FaultSpec, LoopResult, PLAN_FAULTS, inject_fault, validate_loop
from .planning import FirstPlanFault
from .probing import ReasoningResult, reason_properties
from .scene import NoisyDetector, OracleDetector, SceneSpec, detect_objects

R = ReasonerRole


@dataclass
class PerceptionReport:
    objects: list[ObjectRecord]
    truth: dict[str, PhysicalProperty]
    missing: int
    hallucinated: int
    matches: dict[int, int]
    phantoms: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "objects": [o.name for o in self.objects],
            "missing": self.missing,
            "hallucinated": self.hallucinated,
            "phantoms": self.phantoms,
            "matches": {str(k + 1): v + 1 for k, v in sorted(self.matches.items())},
        }


def perceive(scene: SceneSpec, reasoner: Reasoner, seed: int = 0) -> PerceptionReport:
    """Detect both views, match them, name the top-view detections.

    Objects the simulated world cannot identify (phantom detections) are
    left out of the returned object list and reported separately.
    """
    cfg = reasoner.config
    if cfg.family == "noisy":
        conf = cfg.confusion or {}
        detector = NoisyDetector(conf.get("p_miss", NoisyDetector.DEFAULT_P_MISS), conf.get("p_hall", NoisyDetector.DEFAULT_P_HALL))
    else:
        detector = OracleDetector()
    top = detect_objects(scene, detector, seed, "top")
    side = detect_objects(scene, detector, seed, "side")
    try:
        matches = reasoner.invoke(R.DETECTOR, {"top": top, "side": side}) if top.detections else {}
    except CardinalityMismatch as exc:
        raise AdapterFailure(f"views disagree: {exc}") from exc
    descriptors = [(d.color, d.dimension, d.shape) for d in top.detections]
    names = reasoner.invoke(R.NAMER, {"descriptors": descriptors}) if descriptors else []
    if len(names) != len(descriptors):
        raise AdapterFailure(f"namer returned {len(names)} names for {len(descriptors)} objects")
    objects, truth, phantoms = [], {}, []
    for name, det in zip(names, top.detections):
        if det.object_id is None or det.object_id not in scene.ground_truth:
            phantoms.append(name)
            continue
        rec = ObjectRecord.from_name(len(objects), name)
        objects.append(rec)
        truth[name] = scene.ground_truth[det.object_id]
    return PerceptionReport(objects, truth, top.missing_count, top.hallucinated_count, matches, phantoms)


def probe_scene(scene: SceneSpec, kb: KnowledgeBase, reasoner: Reasoner, seed: int = 0
                ) -> tuple[PerceptionReport, ReasoningResult]:
    seen = perceive(scene, reasoner, seed)
    result = reason_properties(seen.objects, kb, RoleProperty(reasoner), seed, truth=seen.truth)
    return seen, result


def synthesize(objects: list[ObjectRecord], instruction: InstructionSpec, reasoner: Reasoner,
               constraints: ConstraintSet = ConstraintSet()) -> tuple[DomainDescription, ProblemInstance]:
    preds = reasoner.invoke(R.PREDICATE_GEN, {"objects": objects})
    actions = reasoner.invoke(R.ACTION_GEN, {"predicates": preds, "constraints": constraints})
    domain = DomainDescription(preds, tuple(actions))
    s_init = reasoner.invoke(R.INIT_STATE_GEN, {"objects": objects, "predicates": preds})
    goal = reasoner.invoke(R.GOAL_STATE_GEN, {"objects": list(s_init.objects), "instruction": instruction})
    return domain, ProblemInstance(s_init, goal)


@dataclass
class RunReport:
    perception: PerceptionReport
    probing: ReasoningResult
    domain: DomainDescription
    problem: ProblemInstance
    loop: LoopResult

    @property
    def status(self) -> str:
        if self.loop.infeasible is not None:
            return "infeasible"
        return "success" if self.loop.success else "exhausted"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objects": {o.name: o.property.value for o in self.probing.objects},
            "probes": self.probing.probes,
            "cache_hits": self.probing.cache_hits,
            "perception": self.perception.to_json(),
            "validation": self.loop.to_json(self.problem),
        }


def run_scene(scene: SceneSpec, instruction: InstructionSpec, reasoner: Reasoner, kb: KnowledgeBase,
              *, seed: int = 0, max_replans: int = 5, constraints: ConstraintSet = ConstraintSet(),
              fault: Optional[FaultSpec] = None) -> RunReport:
    seen, probing = probe_scene(scene, kb, reasoner, seed)
    domain, problem = synthesize(probing.objects, instruction, reasoner, constraints)
    planner = RolePlanner(reasoner, constraints)
    if fault is not None:
        if fault.kind in PLAN_FAULTS:
            planner = FirstPlanFault(planner, fault)
        else:
            domain = inject_fault(domain, fault)
    loop = validate_loop(planner, domain, problem, max_replans, constraints)
    return RunReport(seen, probing, domain, problem, loop)
