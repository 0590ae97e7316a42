import json
import math
from pathlib import Path

import pytest

from geoloc.geo import EARTH_RADIUS_KM, GeoPoint, KM_PER_DEG
from geoloc.topology import Topology, build_topology

# Detour factor that makes provider road distances, converted to plane
# degrees at KM_PER_DEG, equal the true angular separation. Used by the
# zero-noise closed-loop tests so the latency -> radius chain is exact.
HAVERSINE_KM_PER_DEG = 2.0 * math.pi * EARTH_RADIUS_KM / 360.0
CALIBRATED_DETOUR = KM_PER_DEG / HAVERSINE_KM_PER_DEG


def make_path_topology(ids: str = "abcde") -> Topology:
    nodes = [(x, GeoPoint(0.0, i * 0.1), None) for i, x in enumerate(ids)]
    edges = [(ids[i], ids[i + 1]) for i in range(len(ids) - 1)]
    return build_topology(nodes, edges)


def make_cycle_topology(n: int) -> Topology:
    width = max(2, len(str(n - 1)))
    ids = [f"n{i:0{width}d}" for i in range(n)]
    nodes = [
        (ids[i], GeoPoint(0.5 * math.sin(2 * math.pi * i / n), 0.5 * math.cos(2 * math.pi * i / n)), None)
        for i in range(n)
    ]
    edges = [(ids[i], ids[(i + 1) % n]) for i in range(n)]
    return build_topology(nodes, edges)


def make_star_topology(leaves: int) -> Topology:
    nodes = [("hub", GeoPoint(0.0, 0.0), None)]
    edges = []
    for i in range(leaves):
        leaf = f"leaf{i}"
        nodes.append((leaf, GeoPoint(0.1, 0.1 * i), None))
        edges.append(("hub", leaf))
    return build_topology(nodes, edges)


def topology_to_json(t: Topology) -> dict:
    return {
        "nodes": [
            {"id": n, "lat": t.position(n).lat, "lon": t.position(n).lon}
            for n in t.node_ids
        ],
        "edges": [[a, b] for a, b in t.edges],
    }


def write_topology(path: Path, t: Topology) -> Path:
    path.write_text(json.dumps(topology_to_json(t)))
    return path


@pytest.fixture
def triangle_json(tmp_path: Path) -> Path:
    payload = {
        "nodes": [
            {"id": "a", "lat": 0.0, "lon": 0.0},
            {"id": "b", "lat": 0.0, "lon": 1.0, "label": "B"},
            {"id": "c", "lat": 1.0, "lon": 0.0},
        ],
        "edges": [["a", "b"], ["b", "c"], ["a", "c"]],
    }
    path = tmp_path / "triangle.json"
    path.write_text(json.dumps(payload))
    return path
