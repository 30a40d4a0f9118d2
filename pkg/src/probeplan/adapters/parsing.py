"""Answer grammars: ``parse_response`` reads a role's answer and
``render_answer`` writes the canonical answer for a structured result.

Parsing is tolerant of prose around the template markers and strict
about what lies between them.
"""

from __future__ import annotations

import ast
import re
import textwrap
from typing import Any, Mapping, Optional

from ..core import (
    BoxRecord,
    Dimension,
    ObjectRecord,
    PhysicalProperty,
    Shape,
    WorldState,
    parse_name,
)
from ..domain import (
    BOX_HAS_COMPRESSIBLE,
    MEMBER,
    PRIMITIVES,
    ActionSchema,
    GoalRow,
    GoalTable,
    Literal,
    PredicateSet,
)
from ..errors import MalformedName, ParseFailure
from ..execution import CannotLine
from ..planning import GroundedAction, Plan, PlanningResult
from .config import ReasonerRole
from .prompts import END, START

R = ReasonerRole
_PROPERTY_PREDICATES = tuple(p.predicate for p in PhysicalProperty)
_FLAGS = ("in_bin", "is_bent", "is_folded", "is_pushed")


def payload(text: str) -> str:
    """Text between the first start marker and the next end marker."""
    i = text.find(START)
    if i < 0:
        raise ParseFailure("no template start marker", text[:80])
    j = text.find(END, i + len(START))
    if j < 0:
        raise ParseFailure("no template end marker", text[i:i + 80])
    return text[i + len(START):j]


def _fenced_code(body: str) -> str:
    m = re.search(r"```(?:python)?\s*\n(.*?)```", body, re.S)
    return m.group(1) if m else body


# --------------------------------------------------------------------------
# Action code
# --------------------------------------------------------------------------


def _segment(src: str, node: ast.AST) -> str:
    return ast.get_source_segment(src, node) or ast.dump(node)[:80]


def _is_obj_attr(node: ast.AST, base: str = "obj") -> Optional[str]:
    if isinstance(node, ast.Attribute) and isinstance(node.value, ast.Name) and node.value.id == base:
        return node.attr
    return None


def _condition(node: ast.AST, src: str, guards: dict[str, str]) -> list[Literal]:
    """Literals whose conjunction is ``node``."""
    if isinstance(node, ast.BoolOp) and isinstance(node.op, ast.And):
        return [lit for v in node.values for lit in _condition(v, src, guards)]
    if isinstance(node, ast.BoolOp) and isinstance(node.op, ast.Or) and len(node.values) == 2:
        first, second = node.values
        if isinstance(first, ast.UnaryOp) and isinstance(first.op, ast.Not) and _is_obj_attr(first.operand):
            inner = _condition(second, src, guards)
            if len(inner) == 1 and inner[0].when is None:
                return [Literal(inner[0].predicate, inner[0].negated, _is_obj_attr(first.operand))]
        raise ParseFailure("unsupported disjunction", _segment(src, node))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
        inner = _condition(node.operand, src, guards)
        if len(inner) != 1:
            raise ParseFailure("negation of a compound condition", _segment(src, node))
        return [Literal(inner[0].predicate, not inner[0].negated, inner[0].when)]
    attr = _is_obj_attr(node)
    if attr is not None:
        if attr not in _PROPERTY_PREDICATES + _FLAGS:
            raise ParseFailure("unknown object predicate", _segment(src, node))
        return [Literal(attr)]
    if _is_obj_attr(node, "self") == "robot_handempty":
        return [Literal("hand_empty")]
    if isinstance(node, ast.Compare) and len(node.ops) == 1 and isinstance(node.ops[0], (ast.Eq, ast.Is)):
        if _is_obj_attr(node.left, "self") == "robot_now_holding" and isinstance(node.comparators[0], ast.Name) \
                and node.comparators[0].id == "obj":
            return [Literal("holding")]
    if isinstance(node, ast.Constant) and node.value is True:
        return []
    if isinstance(node, ast.Name) and node.id in guards:
        return [Literal(guards[node.id])]
    if _is_box_has_compressible(node):
        return [Literal(BOX_HAS_COMPRESSIBLE)]
    raise ParseFailure("unsupported condition", _segment(src, node))


def _is_box_has_compressible(node: ast.AST) -> bool:
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "any"):
        return False
    if len(node.args) != 1 or not isinstance(node.args[0], ast.GeneratorExp):
        return False
    gen = node.args[0]
    if len(gen.generators) != 1 or not isinstance(gen.elt, ast.Attribute) or gen.elt.attr != "is_compressible":
        return False
    it = gen.generators[0].iter
    return _is_obj_attr(it, "box") == "in_bin_objects"


def _prints(stmts, verb: str, failure: bool) -> bool:
    for s in stmts:
        for node in ast.walk(s):
            if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "print" and node.args:
                arg = node.args[0]
                text = ""
                if isinstance(arg, ast.JoinedStr):
                    text = "".join(v.value for v in arg.values if isinstance(v, ast.Constant))
                elif isinstance(arg, ast.Constant) and isinstance(arg.value, str):
                    text = arg.value
                if text.strip().startswith("Cannot") == failure and (failure or text.strip().startswith(verb)):
                    return True
    return False


class _Effects:
    def __init__(self) -> None:
        self.add: list[Literal] = []
        self.delete: list[Literal] = []

    def put(self, predicate: str, value: bool) -> None:
        (self.add if value else self.delete).append(Literal(predicate))

    def read(self, stmts, src: str) -> None:
        for s in stmts:
            if isinstance(s, ast.Expr) and isinstance(s.value, ast.Call):
                call = s.value
                f = call.func
                if isinstance(f, ast.Name) and f.id == "print":
                    continue
                if _is_obj_attr(f, "self") == "state_holding":
                    self.put("holding", True)
                    self.put("hand_empty", False)
                    continue
                if _is_obj_attr(f, "self") == "state_handempty":
                    self.put("hand_empty", True)
                    self.put("holding", False)
                    continue
                if isinstance(f, ast.Attribute) and _is_obj_attr(f.value, "box") == "in_bin_objects" \
                        and f.attr in ("append", "remove"):
                    self.put(MEMBER, f.attr == "append")
                    continue
                raise ParseFailure("unsupported call in effect", _segment(src, s))
            elif isinstance(s, ast.Assign) and len(s.targets) == 1 and isinstance(s.value, ast.Constant):
                tgt = s.targets[0]
                attr = _is_obj_attr(tgt)
                if attr in _FLAGS:
                    self.put(attr, bool(s.value.value))
                    continue
                if _is_obj_attr(tgt, "self") == "robot_handempty" and s.value.value is False:
                    self.put("hand_empty", False)
                    continue
                if _is_obj_attr(tgt, "self") == "robot_now_holding" and s.value.value is False:
                    self.put("holding", False)
                    continue
                raise ParseFailure("unsupported assignment in effect", _segment(src, s))
            elif isinstance(s, (ast.Pass, ast.Return)) or (isinstance(s, ast.Expr) and isinstance(s.value, ast.Constant)):
                continue
            else:
                raise ParseFailure("unsupported statement in effect", _segment(src, s))


def _method_schema(fn: ast.FunctionDef, src: str) -> ActionSchema:
    verb = fn.name
    pre: list[Literal] = []
    guards: list[Literal] = []
    eff = _Effects()
    aliases: dict[str, str] = {}
    body = list(fn.body)
    while body:
        s = body.pop(0)
        if isinstance(s, ast.Expr) and isinstance(s.value, ast.Constant):
            continue  # docstring
        if isinstance(s, ast.Assign) and len(s.targets) == 1 and isinstance(s.targets[0], ast.Name) \
                and _is_box_has_compressible(s.value):
            aliases[s.targets[0].id] = BOX_HAS_COMPRESSIBLE
            continue
        if isinstance(s, ast.If) and not s.orelse and _guard_block(s, src, aliases, guards, verb):
            continue
        split = _property_split(s, src, aliases, verb)
        if split is not None:
            plain, conditional, effects = split
            pre.extend(plain)
            guards.extend(conditional)
            eff.add += effects.add
            eff.delete += effects.delete
            continue
        if isinstance(s, ast.If):
            if not _prints(s.body, verb, failure=False):
                raise ParseFailure(f"{verb}: branch without a success message", _segment(src, s))
            pre.extend(_condition(s.test, src, aliases))
            eff.read(s.body, src)
            continue
        eff.read([s], src)
    return ActionSchema(verb, tuple(pre + guards), tuple(eff.add), tuple(eff.delete))


def _guard_block(s: ast.If, src: str, aliases: dict[str, str], guards: list[Literal], verb: str) -> bool:
    """``if obj.P: ... if not <cond>: print Cannot; return`` -> conditional literal(s)."""
    when = _is_obj_attr(s.test)
    if when is None or not _prints(s.body, verb, failure=True):
        return False
    local = dict(aliases)
    found = False
    for inner in s.body:
        if isinstance(inner, ast.Assign) and len(inner.targets) == 1 and isinstance(inner.targets[0], ast.Name) \
                and _is_box_has_compressible(inner.value):
            local[inner.targets[0].id] = BOX_HAS_COMPRESSIBLE
        elif isinstance(inner, ast.If) and any(isinstance(x, ast.Return) for x in inner.body):
            for lit in _condition(inner.test, src, local):
                guards.append(Literal(lit.predicate, not lit.negated, when))
            found = True
        elif isinstance(inner, (ast.Expr, ast.Return, ast.Pass)):
            continue
        else:
            raise ParseFailure("unsupported statement in guard", _segment(src, inner))
    return found


def _branch(stmts, src: str, aliases: dict[str, str], verb: str) -> Optional[tuple[list[Literal], _Effects]]:
    """A success block, or one ``if`` whose body succeeds and whose else only fails."""
    eff = _Effects()
    if len(stmts) == 1 and isinstance(stmts[0], ast.If):
        s = stmts[0]
        if not (_prints(s.body, verb, failure=False) and (not s.orelse or _prints(s.orelse, verb, failure=True))):
            return None
        if any(not (isinstance(x, ast.Expr) or isinstance(x, (ast.Pass, ast.Return))) for x in s.orelse):
            return None
        eff.read(s.body, src)
        return _condition(s.test, src, aliases), eff
    if not _prints(stmts, verb, failure=False) or any(isinstance(x, ast.If) for x in stmts):
        return None
    eff.read(stmts, src)
    return [], eff


def _property_split(s: ast.stmt, src: str, aliases: dict[str, str], verb: str
                    ) -> Optional[tuple[list[Literal], list[Literal], _Effects]]:
    """``if obj.P: <guarded success> else: <success>`` -> plain and P-conditional literals.

    Both branches must have the same effects, and every condition of the
    else branch must also hold in the P branch.
    """
    if not (isinstance(s, ast.If) and s.orelse):
        return None
    when = _is_obj_attr(s.test)
    if when not in _PROPERTY_PREDICATES:
        return None
    special, general = _branch(s.body, src, aliases, verb), _branch(s.orelse, src, aliases, verb)
    if special is None or general is None:
        return None
    (cond_p, eff_p), (cond_rest, eff_rest) = special, general
    if (sorted(map(str, eff_p.add)), sorted(map(str, eff_p.delete))) != \
            (sorted(map(str, eff_rest.add)), sorted(map(str, eff_rest.delete))):
        raise ParseFailure(f"{verb}: effects differ between {when} and other objects", _segment(src, s))
    if any(lit not in cond_p for lit in cond_rest):
        raise ParseFailure(f"{verb}: a condition applies only to objects that are not {when}", _segment(src, s))
    extra = [Literal(l.predicate, l.negated, when) for l in cond_p if l not in cond_rest]
    return cond_rest, extra, eff_rest


def parse_action_code(code: str) -> list[ActionSchema]:
    code = textwrap.dedent(code)
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        lines = code.splitlines()
        span = lines[exc.lineno - 1] if exc.lineno and exc.lineno <= len(lines) else ""
        raise ParseFailure(f"action code does not parse ({exc.msg})", span) from None
    fns = [n for n in ast.walk(tree) if isinstance(n, ast.FunctionDef) and n.name in PRIMITIVES]
    if not fns:
        raise ParseFailure("no action methods found", code[:80])
    return [_method_schema(fn, code) for fn in fns]


def _render_condition(lit: Literal) -> str:
    if lit.predicate == "hand_empty":
        body = "self.robot_handempty"
    elif lit.predicate == "holding":
        body = "self.robot_now_holding == obj"
    elif lit.predicate == BOX_HAS_COMPRESSIBLE:
        body = "any(o.is_compressible for o in box.in_bin_objects)"
    else:
        body = f"obj.{lit.predicate}"
    return f"not {body}" if lit.negated else body


def render_action_code(schemas) -> str:
    out = ["class Action:"]
    for a in schemas:
        plain = [l for l in a.preconditions if l.when is None]
        cond = [l for l in a.preconditions if l.when is not None]
        out.append(f"    def {a.name}(self, obj, box):")
        for g in cond:
            flipped = Literal(g.predicate, not g.negated)
            out += [
                f"        if obj.{g.when}:",
                f"            if {_render_condition(flipped)}:",
                f"                print(f\"Cannot {a.name} {{obj.name}}\")",
                "                return",
            ]
        test = " and ".join(_render_condition(l) for l in plain) or "True"
        out.append(f"        if {test}:")
        out.append(f"            print(f\"{a.name} {{obj.name}}\")")
        deletes = list(a.delete)
        for lit in a.add:
            p = lit.predicate
            if p == "holding":
                out.append("            self.state_holding(obj)")
                deletes = [d for d in deletes if d.predicate != "hand_empty"]
            elif p == "hand_empty":
                out.append("            self.state_handempty()")
                deletes = [d for d in deletes if d.predicate != "holding"]
            elif p == MEMBER:
                out.append("            box.in_bin_objects.append(obj)")
            else:
                out.append(f"            obj.{p} = True")
        for lit in deletes:
            p = lit.predicate
            if p == "hand_empty":
                out.append("            self.robot_handempty = False")
            elif p == "holding":
                out.append("            self.robot_now_holding = False")
            elif p == MEMBER:
                out.append("            box.in_bin_objects.remove(obj)")
            else:
                out.append(f"            obj.{p} = False")
        out += ["        else:", f"            print(f\"Cannot {a.name} {{obj.name}}\")", ""]
    return "\n".join(out)


# --------------------------------------------------------------------------
# Tables
# --------------------------------------------------------------------------


def _table_rows(body: str, header_word: str) -> tuple[list[str], list[list[str]]]:
    lines = [l.strip() for l in body.splitlines() if l.strip().startswith("|")]
    head_at = next((k for k, l in enumerate(lines) if header_word in l), None)
    if head_at is None:
        raise ParseFailure(f"no table with a {header_word} column", body[:80])
    cells = lambda l: [c.strip() for c in l.strip().strip("|").split("|")]
    header = cells(lines[head_at])
    rows = [cells(l) for l in lines[head_at + 1:] if not set(l.replace("|", "").strip()) <= set("-: ")]
    return header, rows


def _bool(cell: str, span: str) -> bool:
    v = cell.strip().lower()
    if v in ("true", "yes"):
        return True
    if v in ("false", "no"):
        return False
    raise ParseFailure("expected True or False", span)


def parse_goal_table(text: str) -> GoalTable:
    header, rows = _table_rows(text, "Packed")
    try:
        i_idx, i_name, i_packed = header.index("Index"), header.index("Name"), header.index("Packed")
    except ValueError:
        raise ParseFailure("goal table needs Index, Name and Packed columns", " | ".join(header)) from None
    out = []
    for r in rows:
        span = " | ".join(r)
        if len(r) < len(header) or not r[i_idx].isdigit():
            raise ParseFailure("malformed goal row", span)
        out.append(GoalRow(int(r[i_idx]), r[i_name], _bool(r[i_packed], span)))
    return GoalTable(tuple(out))


_INIT_PROPERTY_COLUMNS = {f"Is {p.value.capitalize()}": p for p in PhysicalProperty}
_INIT_FLAG_COLUMNS = {"In Bin": "in_bin", "Is Bent": "is_bent", "Is Folded": "is_folded", "Is Pushed": "is_pushed"}


def parse_init_table(text: str) -> WorldState:
    header, rows = _table_rows(text, "In Bin")
    objs = []
    for k, r in enumerate(rows):
        span = " | ".join(r)
        if len(r) < len(header):
            raise ParseFailure("short init row", span)
        cell = dict(zip(header, r))
        try:
            index = int(cell["Index"])
            obj = ObjectRecord.from_name(index, cell["Name"])
        except (KeyError, ValueError, MalformedName):
            raise ParseFailure("bad index or name in init row", span) from None
        props = [p for col, p in _INIT_PROPERTY_COLUMNS.items() if col in cell and _bool(cell[col], span)]
        if len(props) != 1:
            raise ParseFailure("each object needs exactly one property", span)
        flags = {attr: _bool(cell[col], span) for col, attr in _INIT_FLAG_COLUMNS.items() if col in cell}
        objs.append(ObjectRecord(index, obj.name, obj.color, obj.shape, obj.dimension, props[0], **flags))
    box = BoxRecord(0, "box", tuple(o.index for o in objs if o.in_bin))
    return WorldState(tuple(objs), box, True, None)


def render_init_table(state: WorldState) -> str:
    cols = ["Index", "Name", "In Bin"] + list(_INIT_PROPERTY_COLUMNS)
    width = max([len("Name")] + [len(o.name) for o in state.objects]) + 1
    lines = ["| " + " | ".join(c.ljust(width) if c == "Name" else c for c in cols) + " |",
             "|" + "|".join("-" * (len(c if c != "Name" else "x" * width) + 2) for c in cols) + "|"]
    for o in state.objects:
        vals = [str(o.index).ljust(5), o.name.ljust(width), str(o.in_bin).ljust(6)]
        vals += [str(o.property is p).ljust(len(col)) for col, p in _INIT_PROPERTY_COLUMNS.items()]
        lines.append("| " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parse_response / render_answer
# --------------------------------------------------------------------------

_PLAN_CALL = re.compile(r"action\.(\w+)\(\s*object(\d+)\s*,\s*box\s*\)")
_INFEASIBLE = re.compile(r"#\s*Infeasible:\s*(.+)")


def parse_response(role: ReasonerRole, text: str, context: Optional[Mapping[str, Any]] = None) -> Any:
    role = ReasonerRole(role)
    body = payload(text)
    if role is R.DETECTOR:
        pairs = re.findall(r"top index\s*(\d+)\s*,\s*side index\s*(\d+)", body)
        if not pairs and "top index" in body:
            raise ParseFailure("unreadable view matches", body[:80])
        out = {int(t) - 1: int(s) - 1 for t, s in pairs}
        if len(set(out.values())) != len(out):
            raise ParseFailure("a side index is matched twice", body[:80])
        return out
    if role is R.NAMER:
        m = re.search(r"^\s*object:\s*(.+)$", body, re.M)
        if not m:
            raise ParseFailure("no 'object:' line", body[:80])
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
        for n in names:
            try:
                parse_name(n)
            except MalformedName:
                raise ParseFailure("malformed object name", n) from None
        return names
    if role is R.PROPERTY_REASONER:
        m = re.search(r"Property:\s*[`'\"‘’]*\s*(is_[a-z]+)", body)
        if not m:
            raise ParseFailure("no 'Property:' result", body[:80])
        try:
            return PhysicalProperty.parse(m.group(1))
        except ValueError:
            raise ParseFailure("unknown property", m.group(1)) from None
    if role is R.PREDICATE_GEN:
        code = _fenced_code(body)
        if "class Object" not in code:
            raise ParseFailure("no Object class", code[:80])
        fields = re.findall(r"^\s*(is_[a-z_]+)\s*:\s*bool", code, re.M)
        props = tuple(p.predicate for p in PhysicalProperty if p.predicate in fields)
        return PredicateSet(props)
    if role is R.ACTION_GEN:
        return parse_action_code(_fenced_code(body))
    if role is R.INIT_STATE_GEN:
        return parse_init_table(body)
    if role is R.GOAL_STATE_GEN:
        return parse_goal_table(body)
    if role is R.TASK_PLANNER:
        m = _INFEASIBLE.search(body)
        if m:
            return PlanningResult(infeasible=m.group(1).strip())
        calls = _PLAN_CALL.findall(body)
        if not calls:
            raise ParseFailure("no action calls in plan", body[:80])
        return PlanningResult(plan=Plan(tuple(GroundedAction(v, int(i)) for v, i in calls)))
    if role is R.PLAN_VALIDATOR:
        m = re.search(r"Error class:\s*(none|syntax|semantic)\b", body)
        if not m:
            raise ParseFailure("no 'Error class:' line", body[:80])
        cannot = [CannotLine(int(i), v, o) for i, v, o in re.findall(r"^\s*-\s*(\d+):\s*(\w+)\s+(\S+)\s*$", body, re.M)]
        return m.group(1), cannot
    raise AssertionError(role)


def render_answer(role: ReasonerRole, result: Any, context: Optional[Mapping[str, Any]] = None) -> str:
    """Canonical answer text whose parse is ``result``."""
    role = ReasonerRole(role)
    if role is R.DETECTOR:
        ctx_top = context["top"].detections if context else None
        lines = []
        for t, s in sorted(result.items()):
            desc = f"{ctx_top[t].color} {ctx_top[t].shape.value}" if ctx_top else f"object {t + 1}"
            lines.append(f"- {desc}: top index {t + 1}, side index {s + 1}")
        body = "### Objects and Their Descriptions:\n# Find same objects in both views\n" + "\n".join(lines) + \
            "\n\n### Critical bounding box errors Description:\n- none\n"
    elif role is R.NAMER:
        body = "Answer\n---\nobject: " + ", ".join(result) + "\n---\n"
    elif role is R.PROPERTY_REASONER:
        body = f"1. Reasoning\n    - Read off the three observations.\n\n2. Result\n    - Property: `{result.predicate}'\n"
    elif role is R.PREDICATE_GEN:
        fields = "".join(f"    {p}: bool = False\n" for p in result.property_predicates)
        body = ("Answer:\n```python\n@dataclass\nclass Object:\n    index: int\n    name: str\n    color: str\n"
                "    shape: str\n    object_type: str  # box or obj\n    in_bin: bool\n    # Object physical properties\n"
                f"{fields}```\nReason:\nOne flag per observed property.\n")
    elif role is R.ACTION_GEN:
        body = "```python\n" + render_action_code(result) + "```\n"
    elif role is R.INIT_STATE_GEN:
        body = "### 1. Init Table\n" + render_init_table(result) + "\n### 2. Notes:\n- everything starts outside the box\n"
    elif role is R.GOAL_STATE_GEN:
        body = "### 1. Goal Table\n" + result.render() + "\n### 2. Notes:\n- every object ends up packed\n"
    elif role is R.TASK_PLANNER:
        if not result.ok:
            body = f"# Infeasible: {result.infeasible}\n"
        else:
            calls = "".join(f"    action.{s.schema_name}(object{s.object_index}, box)\n" for s in result.plan.steps)
            body = ("```python\nif __name__ == \"__main__\":\n    action = Action()\n"
                    "    box = Box(index=0, name=\"box\", object_type=\"box\", in_bin_objects=[])\n"
                    f"{calls}    print(\"All task planning is done\")\n```\n")
    elif role is R.PLAN_VALIDATOR:
        error_class, cannot = result
        lines = "".join(f"- {c.line_index}: {c.verb} {c.object}\n" for c in cannot)
        body = f"Error class: {error_class}\nCannot lines:\n{lines}"
    else:
        raise AssertionError(role)
    return f"{START}\n{body}{END}\n"
