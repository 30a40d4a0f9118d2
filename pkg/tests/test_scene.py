from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probeplan.catalog import ground_truth
from probeplan.core import Dimension, Shape
from probeplan.errors import CardinalityMismatch, DuplicatePoint, InvalidScene
from probeplan.scene import (
    NoisyDetector,
    OracleDetector,
    SceneSpec,
    assign_names,
    build_graph,
    cross_view_match,
    detect_objects,
    scene_from_names,
)


def knn_edges_numpy(pts, k):
    """Reference kNN edge set via a dense distance matrix and a stable sort."""
    a = np.asarray(pts, dtype=float)
    n = len(a)
    d = ((a[:, None, :] - a[None, :, :]) ** 2).sum(-1)
    edges = set()
    for i in range(n):
        order = [j for j in np.argsort(d[i], kind="stable") if j != i][: min(k, n - 1)]
        edges |= {(min(i, int(j)), max(i, int(j))) for j in order}
    return edges


points = st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=12, unique=True)


@given(points, st.integers(1, 5))
def test_graph_matches_reference(pts, k):
    g = build_graph(pts, k)
    assert set(g.edges) == knn_edges_numpy(pts, k)


@given(points)
def test_graph_degree_and_symmetry(pts):
    g = build_graph(pts)
    n = len(pts)
    for a, b in g.edges:
        assert a < b
    for v in range(n):
        assert len(g.neighbours(v)) >= min(3, n - 1)


def test_graph_small_cases():
    assert build_graph([(0, 0)]).edges == frozenset()
    assert build_graph([(0, 0), (1, 0)]).edges == {(0, 1)}
    with pytest.raises(DuplicatePoint):
        build_graph([(0, 0), (0, 0)])


def test_assign_names_suffixes():
    d = [("white", Dimension.D3, Shape.CYLINDER)] * 3 + [("red", Dimension.D3, Shape.CUBOID)]
    assert assign_names(d) == ["white_3D_cylinder", "white_3D_cylinder_2", "white_3D_cylinder_3", "red_3D_cuboid"]


def test_fixture_scenes_load(scenes_dir):
    for name in ("fourteen_objects", "instance15", "plastic_only", "similar_appearance"):
        scene = SceneSpec.load(scenes_dir / f"{name}.json")
        assert set(scene.ground_truth) == set(scene.ids)


def test_scene_json_roundtrip(scenes_dir):
    scene = SceneSpec.load(scenes_dir / "instance15.json")
    again = SceneSpec.from_json(scene.to_json())
    assert again.to_json() == scene.to_json()


def test_scene_validation():
    scene = scene_from_names(["red_3D_cuboid", "black_1D_line"], ground_truth())
    doc = scene.to_json()
    doc["views"]["side"] = doc["views"]["side"][:1]
    with pytest.raises(InvalidScene):
        SceneSpec.from_json(doc)
    doc = scene.to_json()
    doc["views"]["side"][0]["color"] = "green"
    with pytest.raises(InvalidScene):
        SceneSpec.from_json(doc)
    with pytest.raises(InvalidScene):
        SceneSpec.from_json({"views": {"top": []}})


def test_oracle_detection_complete(scenes_dir):
    scene = SceneSpec.load(scenes_dir / "fourteen_objects.json")
    top = detect_objects(scene, OracleDetector(), 0, "top")
    side = detect_objects(scene, OracleDetector(), 0, "side")
    assert top.success and side.success
    assert [d.object_id for d in top.detections] == scene.ids
    assert len(top.detected) == 14
    m = cross_view_match(top, side)
    assert all(top.detections[i].object_id == side.detections[j].object_id for i, j in m.items())
    assert sorted(m.values()) == list(range(14))


def test_similar_objects_named_apart(scenes_dir):
    scene = SceneSpec.load(scenes_dir / "similar_appearance.json")
    top = detect_objects(scene, OracleDetector(), 0, "top")
    names = [o.name for o in top.detected]
    assert len(set(names)) == len(names)
    assert "white_3D_cuboid_2" in names and "blue_3D_cylinder_2" in names


def test_cross_view_cardinality():
    scene = scene_from_names(["red_3D_cuboid", "black_1D_line", "white_3D_cylinder"], ground_truth())
    top = detect_objects(scene, OracleDetector(), 0, "top")
    side = detect_objects(scene, NoisyDetector(p_miss=1.0, p_hall=0.0), 0, "side")
    with pytest.raises(CardinalityMismatch):
        cross_view_match(top, side)


def test_noisy_extremes():
    scene = scene_from_names(["red_3D_cuboid", "black_1D_line", "white_3D_cylinder"], ground_truth())
    assert detect_objects(scene, NoisyDetector(1.0, 0.0), 1).missing_count == 3
    r = detect_objects(scene, NoisyDetector(0.0, 1.0), 1)
    assert r.hallucinated_count == 1 and r.missing_count == 0 and len(r.detected) == 4
    assert detect_objects(scene, NoisyDetector(0.0, 0.0), 1).success


def test_noisy_detector_seeded():
    scene = scene_from_names(["red_3D_cuboid", "black_1D_line", "white_3D_cylinder"], ground_truth())
    a = [detect_objects(scene, NoisyDetector(0.5, 0.5), s).object_ids for s in range(30)]
    b = [detect_objects(scene, NoisyDetector(0.5, 0.5), s).object_ids for s in range(30)]
    assert a == b


def test_noisy_views_consistent():
    """One seed drops the same objects from both views."""
    scene = scene_from_names(["red_3D_cuboid", "black_1D_line", "white_3D_cylinder", "blue_2D_rectangle"], ground_truth())
    for s in range(50):
        top = detect_objects(scene, NoisyDetector(0.5, 0.0), s, "top")
        side = detect_objects(scene, NoisyDetector(0.5, 0.0), s, "side")
        assert sorted(filter(None, top.object_ids)) == sorted(filter(None, side.object_ids))


def test_noisy_rates_follow_settings():
    """Scene-level miss and phantom frequencies match the requested rates."""
    names = ["red_3D_cuboid", "black_1D_line", "white_3D_cylinder", "blue_2D_rectangle", "green_3D_cylinder"]
    scene = scene_from_names(names, ground_truth())
    det = NoisyDetector(0.2, 0.1)
    runs = [detect_objects(scene, det, s) for s in range(4000)]
    miss = sum(r.missing_count > 0 for r in runs) / len(runs)
    hall = sum(r.hallucinated_count > 0 for r in runs) / len(runs)
    assert abs(miss - 0.2) < 0.025 and abs(hall - 0.1) < 0.02


def test_scene_from_names_layout():
    rng = random.Random(3)
    truth = ground_truth()
    names = rng.sample(sorted(truth), 7)
    scene = scene_from_names(names, truth, seed=4)
    assert [scene.ground_truth[i] for i in scene.ids] == [truth[n] for n in names]
