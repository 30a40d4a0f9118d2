"""Prompt templates, one per reasoning role.

Each prompt states the task, lists its structured inputs, and closes with
an answer template bracketed by ``---template start---`` and
``---template end---``; ``parsing`` reads answers in the same layout.
Images are symbolic here, so image slots are filled with short captions.
"""

from __future__ import annotations

from typing import Any, Mapping

from ..core import ConstraintSet, InstructionSpec, ObjectRecord, PhysicalProperty, RULE_TEXT, Rule
from ..errors import IncompleteContext
from .config import ReasonerRole

R = ReasonerRole
START = "---template start---"
END = "---template end---"

PROPERTY_DEFINITIONS = {
    PhysicalProperty.RIGID: "keeps its shape when a force is applied to it.",
    PhysicalProperty.BENDABLE: "a 1D object that flexes under force and springs back afterwards.",
    PhysicalProperty.FOLDABLE: "a 2D object that can be folded over and opened again without a lasting mark.",
    PhysicalProperty.COMPRESSIBLE: "a 3D object that shrinks when pressed and regains its volume when released.",
    PhysicalProperty.PLASTIC: "any object that stays deformed once it has been bent, folded or pressed.",
}

ACTION_HINTS = {
    "pick": "take one object that is not yet in the box; the hand must be empty.",
    "place": "put the held object into the box.",
    "bend": "bend a 1D bendable object; the hand is empty before and after.",
    "fold": "fold a 2D foldable object; the hand is empty before and after.",
    "push": "press a 3D compressible object down inside the box; the hand is empty before and after.",
}

REQUIRED = {
    R.DETECTOR: ("top", "side"),
    R.NAMER: ("descriptors",),
    R.PROPERTY_REASONER: ("object", "action", "triple"),
    R.PREDICATE_GEN: ("objects",),
    R.ACTION_GEN: ("predicates",),
    R.INIT_STATE_GEN: ("objects",),
    R.GOAL_STATE_GEN: ("objects", "instruction"),
    R.TASK_PLANNER: ("domain", "instance"),
    R.PLAN_VALIDATOR: ("transcript",),
}


def check_context(role: ReasonerRole, context: Mapping[str, Any]) -> None:
    role = ReasonerRole(role)
    missing = [k for k in REQUIRED[role] if context.get(k) is None]
    if missing:
        raise IncompleteContext(f"{role.value} needs {missing}")
    if role is R.NAMER and not context["descriptors"]:
        raise IncompleteContext("namer needs at least one object")


def definitions_block() -> str:
    return "\n".join(f"{p.predicate}: {PROPERTY_DEFINITIONS[p]}" for p in PhysicalProperty)


def rules_block(constraints: ConstraintSet) -> str:
    return "\n".join(f"{k}: {RULE_TEXT[r]}" for k, r in enumerate(Rule, 1) if r in constraints)


def object_lines(objects, with_pose: bool = False) -> str:
    out = []
    for o in objects:
        preds = [o.property.predicate] if o.property else []
        line = f"{o.index}: name='{o.name}', shape='{o.dimension.value}_{o.shape.value}', color='{o.color}', predicates={preds}"
        if with_pose:
            line += ", init_pose='out_box'"
        out.append(line)
    return "\n".join(out)


def _detector(ctx) -> str:
    def table(label, det):
        rows = [f"|  {label} index  | descriptions"]
        for k, d in enumerate(det.detections, 1):
            rows.append(f"|      {k}      | {d.color} {d.dimension.value} {d.shape.value} at ({d.centroid[0]:.1f}, {d.centroid[1]:.1f})")
        return "\n".join(rows)

    def edges(det):
        if det.graph is None:
            return "(none)"
        return ", ".join(f"{a + 1}-{b + 1}" for a, b in sorted(det.graph.edges)) or "(none)"

    return f"""Two detector passes saw the same tabletop, once from above and once from the side.
Every object appears once in each view, but detections may contain mistakes.
The neighbour graph links each box to its nearest boxes; use it to line the views up.

# top view detections
{table("top", ctx["top"])}
# top view graph edges: {edges(ctx["top"])}

# side view detections
{table("side", ctx["side"])}
# side view graph edges: {edges(ctx["side"])}

Answer with the template below.
{START}
### Objects and Their Descriptions:
# Find same objects in both views
- <description>: top index <i>, side index <j>

### Critical bounding box errors Description:
{END}
"""


def _namer(ctx) -> str:
    lines = "\n".join(f"{k}. {c} {d.value} {s.value}" for k, (c, d, s) in enumerate(ctx["descriptors"], 1))
    return f"""Give each detected object a name of the form color_dimension_shape, e.g. red_3D_cuboid.
Dimension and shape must agree: lines are 1D; circle, rectangle, triangle, polygon and loop are 2D;
sphere, cube, cuboid, pyramid, cylinder, cone and polyhedron are 3D.
When two objects would get the same name, append _2, _3 and so on to the later ones.

Detected objects, in order:
{lines}

Answer with the template below.
{START}
Answer
---
object: <name>, <name>, ...
---
{END}
"""


def _property(ctx) -> str:
    obj: ObjectRecord = ctx["object"]
    action = ctx["action"].value
    t = ctx["triple"]
    return f"""We are probing an object to learn how it deforms.
Physical properties under consideration:
{definitions_block()}

Only what matters for packing counts: judge whether a deformation can be undone, not what the material is.

object name: {obj.name}
The robot performed {action} on the object and then tried to recover it.
[image 1, before {action}]: the object looks {t.before.value}.
[image 2, during {action}]: the object looks {t.during.value}.
[image 3, after recovery]: the object looks {t.after.value}.

Pick exactly one property.
{START}
1. Reasoning
    -

2. Result
    - Property: `'
{END}
"""


def _predicates(ctx) -> str:
    return f"""We need the predicates of an Object dataclass for bin packing.
Detected objects and their properties:
{object_lines(ctx["objects"])}

Complete the class with one boolean field per physical property that occurs above.
At most one extra predicate may be added; it will not be used for planning.

{START}
Answer:
```python
@dataclass
class Object:
    index: int
    name: str
    color: str
    shape: str
    object_type: str  # box or obj
    in_bin: bool
    # Object physical properties
```
Reason:
{END}
"""


def _actions(ctx) -> str:
    preds = ctx["predicates"]
    constraints = ctx.get("constraints") or ConstraintSet()
    prims = ctx.get("primitives") or ("pick", "place", "bend", "fold", "push")
    hints = "\n".join(f"{p}: {ACTION_HINTS[p]}" for p in prims)
    return f"""Write preconditions and effects for the robot's actions, PDDL style, as methods of class Action.
Available property predicates: {", ".join(preds.property_predicates) or "(none)"}
State predicates: {", ".join(preds.state_predicates)}
If a rule mentions a property that is not available, leave that rule out.

Actions:
{hints}

Rules:
{rules_block(constraints)}

Each method prints "<verb> {{obj.name}}" on success and "Cannot <verb> {{obj.name}}" otherwise.
The helpers self.state_holding(obj) and self.state_handempty() update the gripper.

{START}
```python
class Action:
    # one method per action: def <verb>(self, obj, box)
```
{END}
"""


def _init(ctx) -> str:
    return f"""Describe the initial state of the bin-packing problem as a table.
Objects:
{object_lines(ctx["objects"], with_pose=True)}

{START}
### 1. Init Table
| Index | Name | In Bin | Is Rigid | Is Bendable | Is Foldable | Is Compressible | Is Plastic |

### 2. Notes:
{END}
"""


def _goal(ctx) -> str:
    instr: InstructionSpec = ctx["instruction"]
    return f"""Turn the goal below into a table of target states.
Objects:
{object_lines(ctx["objects"], with_pose=True)}

Our goal is as follows:
{instr.text}

{START}
### 1. Goal Table
| Index | Name | Packed |

### 2. Notes:
{END}
"""


def _planner(ctx) -> str:
    domain = ctx["domain"]
    inst = ctx["instance"]
    constraints = ctx.get("constraints") or ConstraintSet()
    schemas = "\n".join(a.describe() for a in domain.actions)
    init = "\n".join(
        f"object{o.index} = Object(index={o.index}, name=\"{o.name}\", in_bin={o.in_bin}, {o.property.predicate}=True)"
        for o in inst.objects
    )
    fb = ctx.get("feedback")
    feedback = ""
    if fb is not None:
        feedback = "\nThe previous plan failed when executed. Its output was:\n" + "\n".join(fb.transcript) + "\nFix the plan.\n"
    return f"""Plan a bin-packing task with the actions below.
Actions:
{schemas}

# Object Initial State
{init}

### 1. Goal Table
{inst.goal.render()}
Rules:
{rules_block(constraints)}
{feedback}
Write the action sequence as calls action.<verb>(object<i>, box), one per line.
If the goal cannot be reached under the rules, write a single line "# Infeasible: <reason>" instead.
{START}
```python
if __name__ == "__main__":
    action = Action()
    box = Box(index=0, name="box", object_type="box", in_bin_objects=[])
    # action sequence
    print("All task planning is done")
```
{END}
"""


def _validator(ctx) -> str:
    t = ctx["transcript"]
    status = "" if t.terminated else "\nThe script stopped early: " + (t.syntax_error or "interpreter error") + "\n"
    return f"""Below is the output of running a task plan. Lines starting with Cannot mark actions whose
preconditions failed. Classify the outcome as none, syntax or semantic and list the failed lines.
{status}
{t.text()}
{START}
Error class: <none|syntax|semantic>
Cannot lines:
- <line index>: <verb> <object>
{END}
"""


_RENDERERS = {
    R.DETECTOR: _detector,
    R.NAMER: _namer,
    R.PROPERTY_REASONER: _property,
    R.PREDICATE_GEN: _predicates,
    R.ACTION_GEN: _actions,
    R.INIT_STATE_GEN: _init,
    R.GOAL_STATE_GEN: _goal,
    R.TASK_PLANNER: _planner,
    R.PLAN_VALIDATOR: _validator,
}


def render_prompt(role: ReasonerRole, context: Mapping[str, Any]) -> str:
    role = ReasonerRole(role)
    check_context(role, context)
    return _RENDERERS[role](context)
