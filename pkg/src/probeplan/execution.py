"""Plan interpreter, transcript classification, constraint audit, fault
injection and the validate-replan loop."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from .core import ConstraintSet, PhysicalProperty, Rule, WorldState, check_invariants
from .domain import (
    PRIMITIVES,
    ActionSchema,
    DomainDescription,
    GoalTable,
    ProblemInstance,
    generate_actions,
)
from .errors import AdapterFailure, InapplicableFault, TraceMismatch, UnknownAction, UnknownObject
from .planning import GroundedAction, Plan, Planner, PlannerFeedback, PlanningResult

P = PhysicalProperty
TERMINATOR = "All task planning is done"
_LINE = re.compile(r"^(Cannot )?(pick|place|bend|fold|push) (\S+)$")


@dataclass(frozen=True)
class ExecutionTranscript:
    lines: tuple[str, ...]
    terminated: bool
    syntax_error: Optional[str] = None

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)

    @classmethod
    def parse(cls, text: str) -> "ExecutionTranscript":
        """Read a transcript file; a missing terminator means it was cut short."""
        lines = tuple(l for l in text.splitlines() if l.strip())
        terminated = bool(lines) and lines[-1] == TERMINATOR
        return cls(lines, terminated, None if terminated else "transcript has no terminator")


_DONE_LINES = {TERMINATOR, "Task planning is done successfully."}


def normalize_transcript(text: str, sort_push_blocks: bool = True) -> str:
    """Canonical one-line-per-step form for comparing transcripts.

    Comma-separated steps are split, blank lines dropped, either completion
    line becomes ``TERMINATOR``, and with ``sort_push_blocks`` each run of
    consecutive ``pick X / place X / push X`` blocks is ordered by name.
    """
    lines = [p.strip() for raw in text.splitlines() for p in raw.split(",") if p.strip()]
    lines = [TERMINATOR if l in _DONE_LINES else l for l in lines]
    if sort_push_blocks:
        out: list[str] = []
        k = 0
        while k < len(lines):
            run: list[tuple[str, ...]] = []
            while k + 2 < len(lines) and _is_push_block(lines[k:k + 3]):
                run.append(tuple(lines[k:k + 3]))
                k += 3
            if run:
                for block in sorted(run, key=lambda b: b[0].split()[-1]):
                    out.extend(block)
            else:
                out.append(lines[k])
                k += 1
        lines = out
    return "".join(l + "\n" for l in lines)


def _is_push_block(three: Sequence[str]) -> bool:
    parts = [l.split() for l in three]
    if any(len(p) not in (2, 3) for p in parts):
        return False
    verbs = [" ".join(p[:-1]) for p in parts]
    names = {p[-1] for p in parts}
    return len(names) == 1 and verbs[:2] == ["pick", "place"] and verbs[2] in ("push", "Cannot push")


@dataclass(frozen=True)
class ExecutionResult:
    final: WorldState
    transcript: ExecutionTranscript
    trace: tuple[WorldState, ...]
    succeeded: tuple[bool, ...]

    @property
    def executed(self) -> int:
        return len(self.succeeded)


def _step_error(step: GroundedAction, domain: DomainDescription, state: WorldState) -> Optional[Exception]:
    if domain.action(step.schema_name) is None:
        return UnknownAction(f"no action named {step.schema_name!r}")
    if not 0 <= step.object_index < len(state.objects):
        return UnknownObject(f"no object with index {step.object_index}")
    if step.box_index != state.box.index:
        return UnknownObject(f"no box with index {step.box_index}")
    return None


def execute_plan(plan: Plan, domain: DomainDescription, instance: Union[ProblemInstance, WorldState],
                 *, check: bool = False) -> ExecutionResult:
    """Run ``plan`` from the instance's initial state.

    A step whose preconditions fail prints ``Cannot <verb> <name>`` and
    changes nothing; execution carries on. An unknown action or object
    stops the run there with no terminator. ``check`` asserts the state
    invariants after every step.
    """
    state = instance.s_init if isinstance(instance, ProblemInstance) else instance
    lines: list[str] = []
    trace = [state]
    ok: list[bool] = []
    for k, step in enumerate(plan.steps):
        err = _step_error(step, domain, state)
        if err is not None:
            transcript = ExecutionTranscript(tuple(lines), False, f"step {k}: {err}")
            return ExecutionResult(state, transcript, tuple(trace), tuple(ok))
        schema = domain.action(step.schema_name)
        name = state.objects[step.object_index].name
        if schema.applicable(state, step.object_index):
            state = schema.apply(state, step.object_index)
            lines.append(f"{schema.name} {name}")
            ok.append(True)
        else:
            lines.append(f"Cannot {schema.name} {name}")
            ok.append(False)
        if check:
            problems = check_invariants(state)
            if problems:
                raise AssertionError(f"step {k} broke invariants: {problems}")
        trace.append(state)
    lines.append(TERMINATOR)
    return ExecutionResult(state, ExecutionTranscript(tuple(lines), True), tuple(trace), tuple(ok))


# --------------------------------------------------------------------------
# Classification, audit, goal
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CannotLine:
    line_index: int
    verb: str
    object: str


def classify_errors(transcript: ExecutionTranscript) -> tuple[str, list[CannotLine]]:
    cannot = []
    for i, line in enumerate(transcript.lines):
        m = _LINE.match(line)
        if m and m.group(1):
            cannot.append(CannotLine(i, m.group(2), m.group(3)))
    if not transcript.terminated:
        return "syntax", cannot
    return ("semantic" if cannot else "none"), cannot


@dataclass(frozen=True)
class Violation:
    rule: Rule
    step: int  # -1 for end-of-plan checks
    object: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"rule": self.rule.name, "step": self.step, "object": self.object, "detail": self.detail}


def audit_constraints(trace: Sequence[WorldState], plan: Plan, constraints: ConstraintSet = ConstraintSet(),
                      *, strict_push: bool = False) -> list[Violation]:
    """Check the packing rules against an execution trace.

    R1: placing (or trying to place) a plastic object while nothing
    compressible is in the box. R2: a compressible object ends in the box
    unpushed; with ``strict_push`` the push must also be the very next
    step after its placement. R3/R4: a bendable/foldable object placed
    without having been bent/folded, or a bend/fold tried while holding
    the object. R5: any bend, fold or push tried on a plastic object.
    """
    if len(trace) != len(plan.steps) + 1:
        raise TraceMismatch(f"{len(trace)} states for {len(plan.steps)} steps")
    out: list[Violation] = []
    deform_rule = {"bend": (P.BENDABLE, "is_bent", Rule.R3), "fold": (P.FOLDABLE, "is_folded", Rule.R4)}
    for k, step in enumerate(plan.steps):
        before, after = trace[k], trace[k + 1]
        o = before.objects[step.object_index]
        verb = step.schema_name
        if verb == "place" and o.property is P.PLASTIC and Rule.R1 in constraints:
            if not any(before.objects[i].property is P.COMPRESSIBLE for i in before.box.in_bin_objects):
                out.append(Violation(Rule.R1, k, o.name, "no compressible object in the box"))
        if verb in ("bend", "fold", "push") and o.property is P.PLASTIC and Rule.R5 in constraints:
            out.append(Violation(Rule.R5, k, o.name, f"{verb} on a plastic object"))
        for dverb, (prop, flag, rule) in deform_rule.items():
            if o.property is not prop or rule not in constraints:
                continue
            placed = verb == "place" and after.objects[o.index].in_bin and not before.objects[o.index].in_bin
            if placed and not getattr(before.objects[o.index], flag):
                out.append(Violation(rule, k, o.name, f"placed without {dverb}ing"))
            if verb == dverb and before.holding == o.index:
                out.append(Violation(rule, k, o.name, f"{dverb} attempted while holding the object"))
        if strict_push and Rule.R2 in constraints and verb == "place" and o.property is P.COMPRESSIBLE:
            if after.objects[o.index].in_bin and not before.objects[o.index].in_bin:
                nxt = plan.steps[k + 1] if k + 1 < len(plan.steps) else None
                pushed_next = (nxt is not None and nxt.schema_name == "push" and nxt.object_index == o.index
                               and trace[k + 2].objects[o.index].is_pushed)
                if not pushed_next:
                    out.append(Violation(Rule.R2, k, o.name, "not pushed immediately after placing"))
    if Rule.R2 in constraints:
        for o in trace[-1].objects:
            if o.property is P.COMPRESSIBLE and o.in_bin and not o.is_pushed:
                out.append(Violation(Rule.R2, -1, o.name, "in the box but never pushed"))
    return out


def check_goal(final: WorldState, goal: GoalTable) -> bool:
    for row in goal.rows:
        if not 0 <= row.index < len(final.objects):
            return False
        o = final.objects[row.index]
        if o.name != row.name or o.in_bin != row.packed:
            return False
    return True


@dataclass(frozen=True)
class ValidationReport:
    error_class: str
    cannot_lines: tuple[CannotLine, ...]
    violations: tuple[Violation, ...]
    goal_reached: bool
    syntax_error: Optional[str] = None

    def __post_init__(self) -> None:
        if self.error_class == "none" and (self.cannot_lines or self.violations):
            raise ValueError("a clean report cannot carry failures")

    @property
    def success(self) -> bool:
        return self.error_class == "none" and self.goal_reached

    @property
    def case1(self) -> bool:
        """Constraints violated."""
        return bool(self.violations)

    @property
    def case2(self) -> bool:
        """Constraints respected, goal still missed."""
        return not self.violations and not self.success

    def to_json(self) -> dict:
        return {
            "error_class": self.error_class,
            "cannot_lines": [{"line": c.line_index, "verb": c.verb, "object": c.object} for c in self.cannot_lines],
            "violations": [v.to_json() for v in self.violations],
            "goal_reached": self.goal_reached,
            "syntax_error": self.syntax_error,
            "success": self.success,
        }


def validate_plan(plan: Plan, domain: DomainDescription, instance: ProblemInstance,
                  constraints: ConstraintSet = ConstraintSet(), *, strict_push: bool = False
                  ) -> tuple[ValidationReport, ExecutionResult]:
    result = execute_plan(plan, domain, instance)
    error_class, cannot = classify_errors(result.transcript)
    executed = Plan(plan.steps[: result.executed])
    violations = audit_constraints(result.trace, executed, constraints, strict_push=strict_push)
    if error_class == "none" and violations:
        error_class = "semantic"
    goal = check_goal(result.final, instance.goal) if result.transcript.terminated else False
    report = ValidationReport(error_class, tuple(cannot), tuple(violations), goal, result.transcript.syntax_error)
    return report, result


def feedback_from(report: ValidationReport, result: ExecutionResult) -> PlannerFeedback:
    if report.error_class == "syntax":
        return PlannerFeedback(result.transcript.lines, "syntax", None, report.violations)
    failed = [k for k, ok in enumerate(result.succeeded) if not ok]
    steps = [v.step for v in report.violations if v.step >= 0]
    first = min(failed + steps) if failed or steps else result.executed
    return PlannerFeedback(result.transcript.lines, "semantic", first, report.violations)


# --------------------------------------------------------------------------
# Validate-replan loop
# --------------------------------------------------------------------------


@dataclass
class Iteration:
    number: int
    plan: Optional[Plan]
    report: Optional[ValidationReport]
    transcript: Optional[ExecutionTranscript]
    domain_repaired: bool = False
    adapter_error: Optional[str] = None

    def to_json(self, instance: Optional[ProblemInstance] = None) -> dict:
        return {
            "iteration": self.number,
            "plan": self.plan.to_json(instance) if self.plan else None,
            "report": self.report.to_json() if self.report else None,
            "transcript": list(self.transcript.lines) if self.transcript else None,
            "domain_repaired": self.domain_repaired,
            "adapter_error": self.adapter_error,
        }


@dataclass
class LoopResult:
    success: bool
    plan: Optional[Plan]
    domain: DomainDescription
    iterations: list[Iteration] = field(default_factory=list)
    infeasible: Optional[str] = None

    @property
    def iterations_used(self) -> int:
        return len(self.iterations)

    @property
    def first_success(self) -> Optional[int]:
        return self.iterations[-1].number if self.success else None

    def to_json(self, instance: Optional[ProblemInstance] = None) -> dict:
        return {
            "success": self.success,
            "infeasible": self.infeasible,
            "iterations_used": self.iterations_used,
            "iterations": [it.to_json(instance) for it in self.iterations],
        }


def repair_domain(domain: DomainDescription, constraints: ConstraintSet = ConstraintSet()) -> DomainDescription:
    """Regenerate the schemas present in ``domain`` from its predicates and the constraint set."""
    names = [a.name for a in domain.actions if a.name in PRIMITIVES] or list(PRIMITIVES)
    return DomainDescription(domain.predicates, tuple(generate_actions(domain.predicates, names, constraints)))


def validate_loop(planner: Planner, domain: DomainDescription, instance: ProblemInstance,
                  max_replans: int = 5, constraints: ConstraintSet = ConstraintSet(),
                  *, repair: bool = True, strict_push: bool = False) -> LoopResult:
    """Plan, execute, check; on failure repair the domain and replan.

    At most ``max_replans + 1`` planning attempts are made.
    """
    if max_replans < 0:
        raise ValueError("max_replans must be >= 0")
    out = LoopResult(False, None, domain)
    feedback: Optional[PlannerFeedback] = None
    for number in range(1, max_replans + 2):
        repaired = False
        if feedback is not None and repair:
            fixed = repair_domain(domain, constraints)
            repaired = fixed != domain
            domain = fixed
        try:
            res: PlanningResult = planner.plan(domain, instance) if feedback is None else planner.replan(domain, instance, feedback)
        except AdapterFailure as exc:
            out.iterations.append(Iteration(number, None, None, None, repaired, str(exc)))
            feedback = PlannerFeedback((), "syntax")
            continue
        if not res.ok:
            out.iterations.append(Iteration(number, None, None, None, repaired))
            out.infeasible = res.infeasible
            break
        report, result = validate_plan(res.plan, domain, instance, constraints, strict_push=strict_push)
        out.iterations.append(Iteration(number, res.plan, report, result.transcript, repaired))
        out.plan = res.plan
        if report.success:
            out.success = True
            break
        feedback = feedback_from(report, result)
    out.domain = domain
    return out


# --------------------------------------------------------------------------
# Fault injection
# --------------------------------------------------------------------------

DOMAIN_FAULTS = ("place_no_inbin_effect", "push_no_inbin_guard")
PLAN_FAULTS = ("pick_then_fold", "drop_push", "drop_place_after_bend", "swap_plastic_first", "unknown_action_name")
FAULT_KINDS = DOMAIN_FAULTS + PLAN_FAULTS
BOGUS_VERBS = ("grasp", "pick_up", "put", "drop", "compress")


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}; choose from {FAULT_KINDS}")


def _fault_domain(domain: DomainDescription, kind: str) -> DomainDescription:
    if kind == "place_no_inbin_effect":
        place = domain.action("place")
        if place is None or not any(l.predicate == "in_bin" for l in place.add):
            raise InapplicableFault("place has no in_bin effect to remove")
        return domain.with_action(replace(place, add=tuple(l for l in place.add if l.predicate != "in_bin")))
    push = domain.action("push")
    if push is None or not any(l.predicate == "in_bin" for l in push.preconditions):
        raise InapplicableFault("push has no in_bin guard to remove")
    return domain.with_action(replace(push, preconditions=tuple(l for l in push.preconditions if l.predicate != "in_bin")))


def _objects_with(plan: Plan, verb: str) -> list[int]:
    seen: list[int] = []
    for s in plan.steps:
        if s.schema_name == verb and s.object_index not in seen:
            seen.append(s.object_index)
    return seen


def _plan_fault_targets(plan: Plan, instance: Optional[ProblemInstance], kind: str) -> list:
    steps = plan.steps
    if kind == "pick_then_fold":
        return [k for k in range(len(steps) - 1)
                if steps[k].schema_name == "fold" and steps[k + 1].schema_name == "pick"
                and steps[k + 1].object_index == steps[k].object_index]
    if kind == "drop_push":
        return [k for k, s in enumerate(steps) if s.schema_name == "push"]
    if kind == "drop_place_after_bend":
        return [k for k in range(len(steps) - 2)
                if steps[k].schema_name == "bend"
                and [s.schema_name for s in steps[k + 1:k + 3]] == ["pick", "place"]
                and all(s.object_index == steps[k].object_index for s in steps[k + 1:k + 3])]
    if kind == "swap_plastic_first":
        if instance is None:
            raise InapplicableFault("swap_plastic_first needs the instance to know which objects are plastic")
        plastic = {o.index for o in instance.objects if o.property is P.PLASTIC}
        return [i for i in _objects_with(plan, "place") if i in plastic
                and not all(s.object_index == i for s in steps[:2])]
    if kind == "unknown_action_name":
        return list(range(len(steps)))
    raise InapplicableFault(f"{kind} is not a plan fault")


def _fault_plan(plan: Plan, fault: FaultSpec, instance: Optional[ProblemInstance]) -> Plan:
    targets = _plan_fault_targets(plan, instance, fault.kind)
    if not targets:
        raise InapplicableFault(f"{fault.kind} does not apply to this plan")
    rng = random.Random(fault.seed)
    steps = list(plan.steps)
    if fault.kind == "drop_push":
        return Plan(tuple(s for s in steps if s.schema_name != "push"))
    k = rng.choice(targets)
    if fault.kind == "pick_then_fold":
        steps[k], steps[k + 1] = steps[k + 1], steps[k]
    elif fault.kind == "drop_place_after_bend":
        del steps[k + 1:k + 3]
    elif fault.kind == "swap_plastic_first":
        moved = [s for s in steps if s.object_index == k and s.schema_name in ("pick", "place")]
        steps = moved + [s for s in steps if not (s.object_index == k and s.schema_name in ("pick", "place"))]
    elif fault.kind == "unknown_action_name":
        steps[k] = replace(steps[k], schema_name=rng.choice(BOGUS_VERBS))
    return Plan(tuple(steps))


def inject_fault(target: Union[DomainDescription, Plan], fault: FaultSpec,
                 *, instance: Optional[ProblemInstance] = None) -> Union[DomainDescription, Plan]:
    """Deterministic mutation of a domain or plan.

    place_no_inbin_effect   place no longer sets in_bin (membership still recorded)
    push_no_inbin_guard     push loses its in_bin precondition
    pick_then_fold          one fold is moved after its pick
    drop_push               every push step removed
    drop_place_after_bend   one bent object is never picked and placed
    swap_plastic_first      one plastic object's pick/place moved to the front
    unknown_action_name     one step renamed to a verb the domain lacks
    """
    if isinstance(target, DomainDescription):
        if fault.kind not in DOMAIN_FAULTS:
            raise InapplicableFault(f"{fault.kind} mutates plans, not domains")
        return _fault_domain(target, fault.kind)
    if fault.kind not in PLAN_FAULTS:
        raise InapplicableFault(f"{fault.kind} mutates domains, not plans")
    return _fault_plan(target, fault, instance)


def applicable_plan_faults(plan: Plan, instance: Optional[ProblemInstance],
                           weights: dict[str, float]) -> dict[str, float]:
    """Subset of ``weights`` whose fault kind has a target in ``plan``."""
    return {k: w for k, w in weights.items() if w > 0 and _plan_fault_targets(plan, instance, k)}
