"""Symbolic scenes, the k-nearest-neighbour detection graph, simulated
detectors and object naming."""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .core import Dimension, ObjectRecord, PhysicalProperty, Shape, render_name
from .errors import CardinalityMismatch, DuplicatePoint, InvalidScene

VIEWS = ("top", "side")
GRAPH_DEGREE = 3


@dataclass(frozen=True)
class SceneItem:
    id: str
    centroid: tuple[float, float]
    color: str
    dimension: Dimension
    shape: Shape

    @property
    def descriptor(self) -> tuple[str, Dimension, Shape]:
        return (self.color, self.dimension, self.shape)


@dataclass
class SceneSpec:
    views: dict[str, list[SceneItem]]
    ground_truth: dict[str, PhysicalProperty] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    @property
    def ids(self) -> list[str]:
        return [item.id for item in self.views["top"]]

    def validate(self) -> None:
        if set(self.views) != set(VIEWS):
            raise InvalidScene(f"scene needs exactly the views {VIEWS}, got {sorted(self.views)}")
        top, side = self.views["top"], self.views["side"]
        for view, items in self.views.items():
            ids = [i.id for i in items]
            if len(set(ids)) != len(ids):
                raise InvalidScene(f"duplicate object id in {view} view")
            pts = [i.centroid for i in items]
            if len(set(pts)) != len(pts):
                raise InvalidScene(f"coincident centroids in {view} view")
            for item in items:
                if item.shape.dimension is not item.dimension:
                    raise InvalidScene(f"{item.id}: {item.shape.value} is not {item.dimension.value}")
        if {i.id for i in top} != {i.id for i in side}:
            raise InvalidScene("top and side views list different objects")
        by_id = {i.id: i for i in side}
        for item in top:
            if by_id[item.id].descriptor != item.descriptor:
                raise InvalidScene(f"{item.id}: views disagree on appearance")
        unknown = set(self.ground_truth) - {i.id for i in top}
        if unknown:
            raise InvalidScene(f"ground truth for unknown ids {sorted(unknown)}")

    def item(self, object_id: str, view: str = "top") -> SceneItem:
        for it in self.views[view]:
            if it.id == object_id:
                return it
        raise KeyError(object_id)

    def to_json(self) -> dict:
        return {
            "views": {
                v: [
                    {"id": i.id, "centroid": list(i.centroid), "color": i.color,
                     "dimension": i.dimension.value, "shape": i.shape.value}
                    for i in items
                ]
                for v, items in self.views.items()
            },
            "ground_truth": {k: p.value for k, p in self.ground_truth.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SceneSpec":
        try:
            views = {
                v: [
                    SceneItem(
                        str(e["id"]),
                        (float(e["centroid"][0]), float(e["centroid"][1])),
                        str(e["color"]),
                        Dimension.parse(e["dimension"]),
                        Shape(str(e["shape"]).lower()),
                    )
                    for e in doc["views"][v]
                ]
                for v in doc["views"]
            }
            gt = {str(k): PhysicalProperty.parse(p) for k, p in doc.get("ground_truth", {}).items()}
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise InvalidScene(f"malformed scene document: {exc}") from exc
        return cls(views, gt)

    @classmethod
    def load(cls, path: str | Path) -> "SceneSpec":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# Detection graph
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionGraph:
    vertices: tuple[tuple[float, float], ...]
    edges: frozenset[tuple[int, int]]

    def neighbours(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.edges if v in (a, b)}


def build_graph(centroids: Sequence[Sequence[float]], k: int = GRAPH_DEGREE) -> DetectionGraph:
    """Connect every vertex to its ``min(k, n-1)`` nearest neighbours.

    Equidistant candidates are taken in ascending index order. Edges are
    undirected and stored as ``(low, high)`` pairs.
    """
    pts = tuple((float(p[0]), float(p[1])) for p in centroids)
    if len(set(pts)) != len(pts):
        raise DuplicatePoint("centroids must be pairwise distinct")
    n = len(pts)
    degree = min(k, n - 1)
    edges: set[tuple[int, int]] = set()
    for i, (xi, yi) in enumerate(pts):
        others = sorted(
            (j for j in range(n) if j != i),
            key=lambda j: ((pts[j][0] - xi) ** 2 + (pts[j][1] - yi) ** 2, j),
        )
        for j in others[:degree]:
            edges.add((min(i, j), max(i, j)))
    return DetectionGraph(pts, frozenset(edges))


# --------------------------------------------------------------------------
# Detectors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Detection:
    object_id: Optional[str]  # None marks a hallucination
    centroid: tuple[float, float]
    color: str
    dimension: Dimension
    shape: Shape


@dataclass
class DetectionResult:
    detected: list[ObjectRecord]
    missing_count: int = 0
    hallucinated_count: int = 0
    view: str = "top"
    detections: list[Detection] = field(default_factory=list)
    graph: Optional[DetectionGraph] = None

    @property
    def object_ids(self) -> list[Optional[str]]:
        return [d.object_id for d in self.detections]

    @property
    def success(self) -> bool:
        return self.missing_count == 0 and self.hallucinated_count == 0


class PerceptionAdapter(Protocol):
    def detect(self, items: Sequence[SceneItem], rng: random.Random) -> list[Detection]: ...


class OracleDetector:
    """Reports every scene item exactly once."""

    def detect(self, items: Sequence[SceneItem], rng: random.Random) -> list[Detection]:
        return [Detection(i.id, i.centroid, i.color, i.dimension, i.shape) for i in items]


_HALLUCINATION_COLORS = ("gray", "white", "black", "silver", "orange")


class NoisyDetector:
    """Seeded detector that loses and invents objects.

    ``p_miss`` is the probability that a scene has at least one missing
    object; each object is dropped independently at the per-object rate
    ``1 - (1 - p_miss) ** (1 / n)`` so that the scene-level rate holds for any
    scene size (and ``p_miss = 1`` drops everything). ``p_hall`` is the
    probability that one phantom object is added.
    """

    # Raw-image row of the detection table: 1.84% missing, 0.53% hallucination.
    DEFAULT_P_MISS = 0.0184
    DEFAULT_P_HALL = 0.0053

    def __init__(self, p_miss: float = DEFAULT_P_MISS, p_hall: float = DEFAULT_P_HALL) -> None:
        if not (0.0 <= p_miss <= 1.0 and 0.0 <= p_hall <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        self.p_miss = p_miss
        self.p_hall = p_hall

    def detect(self, items: Sequence[SceneItem], rng: random.Random) -> list[Detection]:
        n = len(items)
        per_object = 1.0 - (1.0 - self.p_miss) ** (1.0 / n) if n else 0.0
        if self.p_miss >= 1.0:
            per_object = 1.0
        out = [
            Detection(i.id, i.centroid, i.color, i.dimension, i.shape)
            for i in items
            if rng.random() >= per_object
        ]
        if rng.random() < self.p_hall:
            shape = rng.choice(list(Shape))
            taken = {d.centroid for d in out} | {i.centroid for i in items}
            centroid = (round(rng.uniform(0, 100), 3), round(rng.uniform(0, 100), 3))
            while centroid in taken:
                centroid = (centroid[0] + 0.5, centroid[1])
            out.insert(rng.randrange(len(out) + 1),
                       Detection(None, centroid, rng.choice(_HALLUCINATION_COLORS), shape.dimension, shape))
        return out


def detect_objects(scene: SceneSpec, adapter: PerceptionAdapter, seed: int = 0, view: str = "top") -> DetectionResult:
    """Run one detector pass over a view and name what was found.

    The same seed gives the same drop/phantom decisions in both views, so a
    single noisy pass is consistent across perspectives.
    """
    # visit objects in top-view order so a seed means the same thing in every view
    order = {i.id: k for k, i in enumerate(scene.views["top"])}
    items = sorted(scene.views[view], key=lambda i: order[i.id])
    rng = random.Random(seed)
    detections = adapter.detect(items, rng)
    names = assign_names([(d.color, d.dimension, d.shape) for d in detections])
    records = [
        ObjectRecord(k, name, d.color, d.shape, d.dimension)
        for k, (name, d) in enumerate(zip(names, detections))
    ]
    found = {d.object_id for d in detections if d.object_id is not None}
    missing = sum(1 for i in items if i.id not in found)
    hallucinated = sum(1 for d in detections if d.object_id is None)
    graph = build_graph([d.centroid for d in detections]) if detections else None
    return DetectionResult(records, missing, hallucinated, view, detections, graph)


def assign_names(descriptors: Sequence[tuple[str, Dimension, Shape]]) -> list[str]:
    """Render ``color_dimension_shape`` names, suffixing repeats with ``_2``, ``_3``..."""
    seen: Counter[str] = Counter()
    names = []
    for color, dimension, shape in descriptors:
        base = render_name(color, dimension, shape)
        seen[base] += 1
        names.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return names


def cross_view_match(top: DetectionResult, side: DetectionResult) -> dict[int, int]:
    """Pair top-view indices with side-view indices one to one.

    Detections with a known object id are matched by id; the remainder
    (phantoms) are matched by appearance, then by order.
    """
    if len(top.detections) != len(side.detections):
        raise CardinalityMismatch(f"top view has {len(top.detections)} objects, side view {len(side.detections)}")
    pairing: dict[int, int] = {}
    side_by_id = {d.object_id: j for j, d in enumerate(side.detections) if d.object_id is not None}
    leftovers_top = []
    for i, d in enumerate(top.detections):
        j = side_by_id.get(d.object_id) if d.object_id is not None else None
        if j is None:
            leftovers_top.append(i)
        else:
            pairing[i] = j
    used = set(pairing.values())
    leftovers_side = [j for j in range(len(side.detections)) if j not in used]
    for i in list(leftovers_top):
        td = top.detections[i]
        for j in leftovers_side:
            sd = side.detections[j]
            if (sd.color, sd.dimension, sd.shape) == (td.color, td.dimension, td.shape):
                pairing[i] = j
                leftovers_side.remove(j)
                leftovers_top.remove(i)
                break
    for i, j in zip(leftovers_top, leftovers_side):
        pairing[i] = j
    return pairing


# --------------------------------------------------------------------------
# Scene construction helpers
# --------------------------------------------------------------------------


def scene_from_names(names: Sequence[str], ground_truth: dict[str, PhysicalProperty], seed: int = 0) -> SceneSpec:
    """Lay the named objects out on a jittered grid and derive both views.

    ``ground_truth`` maps base names (no ``_N`` suffix) to properties.
    """
    from .core import parse_name

    rng = random.Random(seed)
    cols = max(1, math.ceil(math.sqrt(len(names))))
    top, side = [], []
    gt = {}
    for k, name in enumerate(names):
        parts = parse_name(name)
        oid = f"o{k + 1}"
        r, c = divmod(k, cols)
        x = round(20.0 * c + 10.0 + rng.uniform(-4, 4), 2)
        y = round(20.0 * r + 10.0 + rng.uniform(-4, 4), 2)
        top.append(SceneItem(oid, (x, y), parts.color, parts.dimension, parts.shape))
        # side camera: x preserved, depth compressed into the vertical axis
        side.append(SceneItem(oid, (x, round(0.35 * y + 5.0 + k * 0.01, 3)), parts.color, parts.dimension, parts.shape))
        base = render_name(parts.color, parts.dimension, parts.shape)
        if base in ground_truth:
            gt[oid] = ground_truth[base]
    return SceneSpec({"top": top, "side": side}, gt)
