"""Seeded Monte-Carlo batches over a corpus: repeated trials, per-iteration success curves."""

from __future__ import annotations

import csv
import hashlib
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .adapters import AdapterConfig, Reasoner, RolePlanner, RoleProperty
from .catalog import load_catalog
from .core import PACK_ALL, KnowledgeBase, ObjectRecord
from .execution import validate_loop
from .pipeline import synthesize
from .probing import reason_properties


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts."""
    digest = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class TrialSpec:
    instance: int
    repeat: int
    names: tuple[str, ...]
    seed: int
    family: str
    confusion: Optional[dict]
    max_replans: int
    catalog_variant: Optional[str] = None


@dataclass(frozen=True)
class TrialResult:
    instance: int
    repeat: int
    feasible: bool
    first_success: Optional[int]
    case1: bool
    case2: bool
    probe_hits: tuple[tuple[str, bool], ...]
    error: Optional[str] = None


def run_trial(spec: TrialSpec) -> TrialResult:
    """One pack-all episode from unseen objects; failures are recorded, not raised."""
    truth = load_catalog(spec.catalog_variant).truth
    reasoner = Reasoner(AdapterConfig(spec.family, spec.seed, spec.confusion))
    try:
        objects = [ObjectRecord.from_name(k, n) for k, n in enumerate(spec.names)]
        probed = reason_properties(objects, KnowledgeBase(), RoleProperty(reasoner), spec.seed, truth=truth)
        hits = tuple((o.object_name, o.inferred is truth[o.object_name]) for o in probed.outcomes)
        domain, problem = synthesize(probed.objects, PACK_ALL, reasoner)
        loop = validate_loop(RolePlanner(reasoner), domain, problem, spec.max_replans)
    except Exception as exc:  # one broken trial must not sink the batch
        return TrialResult(spec.instance, spec.repeat, True, None, False, False, (), f"{type(exc).__name__}: {exc}")
    if loop.infeasible is not None:
        return TrialResult(spec.instance, spec.repeat, False, None, False, False, hits)
    first = loop.iterations[0].report
    case1 = bool(first is not None and first.case1)
    case2 = bool(first is not None and first.case2) or first is None
    return TrialResult(spec.instance, spec.repeat, True, loop.first_success, case1, case2, hits)


@dataclass
class BatchReport:
    trials: int
    feasible_trials: int
    infeasible_instances: list[int]
    per_iteration_success: list[tuple[int, float]]
    case1_rate: float
    case2_rate: float
    per_object_probe_accuracy: dict[str, float]
    errors: list[str] = field(default_factory=list)
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "feasible_trials": self.feasible_trials,
            "infeasible_instances": self.infeasible_instances,
            "per_iteration_success": [{"iteration": k, "success_rate": r} for k, r in self.per_iteration_success],
            "case1_rate": self.case1_rate,
            "case2_rate": self.case2_rate,
            "per_object_probe_accuracy": self.per_object_probe_accuracy,
            "errors": self.errors,
            "seed": self.seed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "success_rate"])
        for k, r in self.per_iteration_success:
            w.writerow([k, f"{r:.6f}"])
        return buf.getvalue()


def aggregate(results: Sequence[TrialResult], max_replans: int, seed: int = 0) -> BatchReport:
    """Success fractions are over trials whose instance is feasible."""
    feasible = [r for r in results if r.feasible]
    n = len(feasible)
    curve = []
    if results:
        for k in range(1, max_replans + 2):
            ok = sum(1 for r in feasible if r.first_success is not None and r.first_success <= k)
            curve.append((k, ok / n if n else 0.0))
    counts: dict[str, list[int]] = {}
    for r in results:
        for name, hit in r.probe_hits:
            c = counts.setdefault(name, [0, 0])
            c[0] += int(hit)
            c[1] += 1
    return BatchReport(
        trials=len(results),
        feasible_trials=n,
        infeasible_instances=sorted({r.instance for r in results if not r.feasible}),
        per_iteration_success=curve,
        case1_rate=sum(r.case1 for r in feasible) / n if n else 0.0,
        case2_rate=sum(r.case2 for r in feasible) / n if n else 0.0,
        per_object_probe_accuracy={k: v[0] / v[1] for k, v in sorted(counts.items())},
        errors=[f"instance {r.instance} repeat {r.repeat}: {r.error}" for r in results if r.error],
        seed=seed,
    )


def run_batch(instances: Sequence[Sequence[str]], repeats: int, *, family: str = "oracle", seed: int = 0,
              max_replans: int = 5, confusion: Optional[dict] = None, workers: Optional[int] = None,
              catalog_variant: Optional[str] = None) -> BatchReport:
    """``repeats`` trials per instance (1-based instance numbers in the report).

    ``confusion`` is handed to every trial's noisy adapter unchanged.
    """
    specs = [
        TrialSpec(i + 1, r, tuple(names), derive_seed(seed, i + 1, r), family, confusion, max_replans, catalog_variant)
        for i, names in enumerate(instances)
        for r in range(repeats)
    ]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, specs, chunksize=max(1, len(specs) // (4 * workers))))
    else:
        results = [run_trial(s) for s in specs]
    return aggregate(results, max_replans, seed)


def write_batch(report: BatchReport, out_dir: str | Path, plot: bool = True) -> dict[str, Path]:
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "batch_report.json", "csv": out / "success_rate.csv"}
    paths["report"].write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")
    paths["csv"].write_text(report.to_csv(), encoding="utf-8")
    if plot and report.per_iteration_success:
        from .plotting import plot_success_curve

        paths["png"] = plot_success_curve(report.per_iteration_success, out / "success_rate.png")
    return paths
