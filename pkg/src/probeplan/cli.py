"""Command-line entry point.

Exit codes
  0  success
  1  unreadable or malformed input
  2  reasoning adapter failure
  3  knowledge-base conflict
  4  task infeasible under the constraints
  5  validation failed (replanning budget exhausted)
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .adapters import FAMILIES, AdapterConfig, Reasoner, RolePlanner
from .catalog import load_catalog
from .core import PACK_ALL, ConstraintSet, InstructionSpec, KnowledgeBase
from .corpus import gen_instances, load_corpus
from .domain import DomainDescription, ProblemInstance, save_json
from .errors import AdapterFailure, GenerationExhausted, PropertyConflict, ProbePlanError
from .execution import FAULT_KINDS, FaultSpec, PLAN_FAULTS, inject_fault, validate_loop, validate_plan
from .planning import PRESETS, Plan
from .scene import SceneSpec

EXIT_OK, EXIT_INPUT, EXIT_ADAPTER, EXIT_KB, EXIT_INFEASIBLE, EXIT_EXHAUSTED = range(6)

log = logging.getLogger("probeplan")


class InputError(Exception):
    """A file could not be read or parsed."""


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load(kind, path):
    try:
        return kind.from_json(_read_json(path))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed {kind.__name__} in {path}: {exc}") from exc


def _load_scene(path: str) -> SceneSpec:
    scene = _load(SceneSpec, path)
    try:
        scene.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return scene


def _load_kb(path: Optional[str]) -> KnowledgeBase:
    if not path or not Path(path).exists():
        return KnowledgeBase()
    try:
        return KnowledgeBase.load(path)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read knowledge base {path}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _confusion(args) -> Optional[dict]:
    conf: dict = {}
    if getattr(args, "probe_preset", None):
        conf["probe_accuracy"] = load_catalog(args.catalog).preset(args.probe_preset)
    if getattr(args, "preset", None):
        conf["plan_fault_rates"] = PRESETS[args.preset][0]
    return conf or None


def _reasoner(args) -> Reasoner:
    kw = dict(seed=args.seed, confusion=_confusion(args))
    if args.transcript_dir:
        kw["transcript_dir"] = Path(args.transcript_dir)
    if args.adapter == "remote":
        if args.endpoint:
            kw["endpoint"] = args.endpoint
        cfg = AdapterConfig.from_env("remote", **kw)
    else:
        cfg = AdapterConfig(args.adapter, **kw)
    return Reasoner(cfg)


def _constraints(args) -> ConstraintSet:
    return ConstraintSet.from_ids(args.rules.split(",")) if args.rules else ConstraintSet()


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_probe(args) -> int:
    from .pipeline import probe_scene

    scene = _load_scene(args.scene)
    kb = _load_kb(args.kb)
    seen, result = probe_scene(scene, kb, _reasoner(args), args.seed)
    out = _out_dir(args)
    _write(out / "probe.log", result.log())
    if args.kb:
        kb.save(args.kb)
    labels = {o.name: o.property.value for o in result.objects}
    correct = sum(1 for o in result.outcomes if o.inferred is seen.truth.get(o.object_name))
    save_json(out / "probe_report.json", {
        "objects": labels,
        "probes": result.probes,
        "cache_hits": result.cache_hits,
        "correct": correct,
        "perception": seen.to_json(),
    })
    print(f"{len(labels)} objects, {result.probes} probes, {result.cache_hits} from knowledge base")
    return EXIT_OK


def _domain_problem(args, reasoner: Reasoner) -> tuple[DomainDescription, ProblemInstance]:
    if args.scene:
        from .pipeline import probe_scene, synthesize

        kb = _load_kb(args.kb)
        _, probing = probe_scene(_load_scene(args.scene), kb, reasoner, args.seed)
        if args.kb:
            kb.save(args.kb)
        return synthesize(probing.objects, InstructionSpec.from_text(args.instruction), reasoner, _constraints(args))
    if not (args.domain and args.problem):
        raise InputError("give --scene, or both --domain and --problem")
    return _load(DomainDescription, args.domain), _load(ProblemInstance, args.problem)


def cmd_plan(args) -> int:
    reasoner = _reasoner(args)
    domain, problem = _domain_problem(args, reasoner)
    out = _out_dir(args)
    save_json(out / "domain.json", domain.to_json())
    save_json(out / "problem.json", problem.to_json())
    _write(out / "goal_table.txt", problem.goal.render())
    result = RolePlanner(reasoner, _constraints(args)).plan(domain, problem)
    if not result.ok:
        save_json(out / "report.json", {"status": "infeasible", "reason": result.infeasible})
        print(f"infeasible: {result.infeasible}", file=sys.stderr)
        return EXIT_INFEASIBLE
    save_json(out / "plan.json", result.plan.to_json(problem))
    _write(out / "plan.txt", result.plan.to_text(problem))
    print(f"{len(result.plan.steps)} steps")
    return EXIT_OK


def cmd_validate(args) -> int:
    domain = _load(DomainDescription, args.domain)
    problem = _load(ProblemInstance, args.problem)
    if args.plan.endswith(".json"):
        plan = _load(Plan, args.plan)
    else:
        try:
            plan = Plan.from_text(Path(args.plan).read_text(encoding="utf-8"), problem)
        except OSError as exc:
            raise InputError(f"cannot read {args.plan}: {exc}") from exc
    report, result = validate_plan(plan, domain, problem, _constraints(args), strict_push=args.strict_push)
    out = _out_dir(args)
    _write(out / "transcript.txt", result.transcript.text())
    save_json(out / "report.json", report.to_json())
    print(f"error class {report.error_class}, goal reached {report.goal_reached}, "
          f"{len(report.violations)} violations")
    return EXIT_OK if report.success else EXIT_EXHAUSTED


def cmd_run(args) -> int:
    from .pipeline import run_scene

    scene = _load_scene(args.scene)
    kb = _load_kb(args.kb)
    fault = FaultSpec(args.fault, args.seed) if args.fault else None
    report = run_scene(scene, InstructionSpec.from_text(args.instruction), _reasoner(args), kb,
                       seed=args.seed, max_replans=args.max_replans, constraints=_constraints(args), fault=fault)
    if args.kb:
        kb.save(args.kb)
    out = _out_dir(args)
    save_json(out / "domain.json", report.loop.domain.to_json())
    save_json(out / "problem.json", report.problem.to_json())
    _write(out / "goal_table.txt", report.problem.goal.render())
    _write(out / "probe.log", report.probing.log())
    if report.loop.plan is not None:
        save_json(out / "plan.json", report.loop.plan.to_json(report.problem))
        _write(out / "plan.txt", report.loop.plan.to_text(report.problem))
    last = report.loop.iterations[-1] if report.loop.iterations else None
    if last is not None and last.transcript is not None:
        _write(out / "transcript.txt", last.transcript.text())
    save_json(out / "report.json", report.to_json())
    if report.status == "infeasible":
        print(f"infeasible: {report.loop.infeasible}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if report.status == "exhausted":
        print(f"no valid plan after {report.loop.iterations_used} iterations", file=sys.stderr)
        return EXIT_EXHAUSTED
    print(f"success at iteration {report.loop.first_success}")
    return EXIT_OK


def cmd_batch(args) -> int:
    from .batch import run_batch, write_batch

    try:
        corpus = load_corpus(args.corpus)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read corpus: {exc}") from exc
    if args.adapter in ("remote", "replay"):
        raise InputError("batch runs use the oracle or noisy adapters")
    report = run_batch(corpus.instances, args.repeats, family=args.adapter, seed=args.seed,
                       max_replans=args.max_replans, confusion=_confusion(args), workers=args.workers,
                       catalog_variant=args.catalog)
    paths = write_batch(report, _out_dir(args), plot=not args.no_plot)
    for k, r in report.per_iteration_success:
        print(f"iteration {k}: {100 * r:.2f}%")
    if report.infeasible_instances:
        print("infeasible instances: " + ", ".join(map(str, report.infeasible_instances)))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_gen_instances(args) -> int:
    corpus = gen_instances(args.count, args.min_objs, args.max_objs, args.seed)
    out = Path(args.output) if args.output else _out_dir(args) / "corpus.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save(out)
    print(f"{len(corpus)} instances -> {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--adapter", choices=FAMILIES, default="oracle", help="reasoner family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kb", help="knowledge-base JSON file (read, then updated)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--max-replans", type=int, default=5, help="replanning rounds after the first plan")
    p.add_argument("--preset", choices=sorted(PRESETS), help="noisy task-planner fault schedule")
    p.add_argument("--probe-preset", help="noisy per-object probing accuracy (robot, robot_tree)")
    p.add_argument("--catalog", choices=("alt",), help="alternative ground-truth table")
    p.add_argument("--transcript-dir", help="where remote exchanges are recorded or replayed from")
    p.add_argument("--endpoint", help="chat-completion URL for the remote adapter")
    p.add_argument("--rules", help="comma-separated rule ids to enforce (default: all)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probeplan", description=__doc__.splitlines()[0],
                                 epilog="\n".join(__doc__.splitlines()[2:]),
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="identify properties of the objects in a scene")
    p.add_argument("scene")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("plan", help="build domain and problem, then ask the planner once")
    p.add_argument("--scene")
    p.add_argument("--domain")
    p.add_argument("--problem")
    p.add_argument("--instruction", default=PACK_ALL.text)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="execute a plan and check it")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--plan", required=True, help="plan.json or plan.txt")
    p.add_argument("--strict-push", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="full pipeline on one scene")
    p.add_argument("scene")
    p.add_argument("--instruction", default=PACK_ALL.text)
    p.add_argument("--fault", choices=FAULT_KINDS, help="inject one domain or first-plan fault")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="repeated trials over an instance corpus")
    p.add_argument("--corpus", help="corpus JSON (default: shipped 38 instances)")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--workers", type=int, help="worker processes (default: core count)")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("gen-instances", help="sample a corpus with no contained instances")
    p.add_argument("--count", type=int, default=38)
    p.add_argument("--min-objs", type=int, default=3)
    p.add_argument("--max-objs", type=int, default=7)
    p.add_argument("--output", help="corpus file (default: <out>/corpus.json)")
    p.set_defaults(func=cmd_gen_instances)

    for name, sp in sub.choices.items():
        _common(sp)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.max_replans < 0:
        print("--max-replans must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PropertyConflict as exc:
        print(f"knowledge-base conflict: {exc}", file=sys.stderr)
        return EXIT_KB
    except AdapterFailure as exc:
        print(f"adapter failure: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except (GenerationExhausted, ProbePlanError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
