import json
import math

import numpy as np
import pytest

from geoloc.errors import DisconnectedGraph, ParseError, UnknownNode, ValidationError
from geoloc.geo import GeoPoint
from geoloc.topology import (
    UNREACHABLE,
    build_topology,
    eccentricity,
    hop_distances,
    is_connected,
    load_topology,
    multi_source_hop_distances,
)

from conftest import make_cycle_topology, make_path_topology, make_star_topology

GRAPHML_FIVE = """<?xml version="1.0" encoding="utf-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key attr.name="Latitude" attr.type="double" for="node" id="d0"/>
  <key attr.name="Longitude" attr.type="double" for="node" id="d1"/>
  <key attr.name="label" attr.type="string" for="node" id="d2"/>
  <graph edgedefault="undirected">
    <node id="n0"><data key="d0">0.0</data><data key="d1">0.0</data></node>
    <node id="n1"><data key="d0">0.0</data><data key="d1">1.0</data></node>
    <node id="n2"><data key="d0">1.0</data><data key="d1">0.0</data></node>
    <node id="n3"><data key="d0">1.0</data><data key="d1">1.0</data><data key="d2">corner</data></node>
    <node id="n4"><data key="d0">0.5</data><data key="d1">0.5</data></node>
    <edge source="n0" target="n1"/>
    <edge source="n1" target="n2"/>
    <edge source="n2" target="n3"/>
    <edge source="n3" target="n4"/>
    <edge source="n4" target="n0"/>
  </graph>
</graphml>
"""


def test_load_triangle_json(triangle_json):
    t = load_topology(triangle_json)
    assert len(t) == 3
    assert len(t.edges) == 3
    assert t.labels["b"] == "B"
    assert t.position("c") == GeoPoint(1.0, 0.0)


def test_load_rejects_dangling_edge(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "nodes": [{"id": "a", "lat": 0, "lon": 0}],
        "edges": [["a", "ghost"]],
    }))
    with pytest.raises(ValidationError, match="ghost"):
        load_topology(path)


def test_load_rejects_missing_coordinates(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "nodes": [{"id": "a", "lat": 0, "lon": 0}, {"id": "b"}, {"id": "c"}],
        "edges": [],
    }))
    with pytest.raises(ValidationError) as err:
        load_topology(path)
    assert "b" in str(err.value) and "c" in str(err.value)


def test_load_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "nodes": [{"id": "a", "lat": 0, "lon": 0}, {"id": "a", "lat": 1, "lon": 1}],
        "edges": [],
    }))
    with pytest.raises(ValidationError, match="duplicate"):
        load_topology(path)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(ParseError):
        load_topology(path)


def test_load_rejects_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_topology(tmp_path / "absent.json")


def test_self_loop_rejected():
    with pytest.raises(ValidationError, match="self-loop"):
        build_topology([("a", GeoPoint(0, 0), None)], [("a", "a")])


def test_graphml_matches_equivalent_json(tmp_path):
    gpath = tmp_path / "five.graphml"
    gpath.write_text(GRAPHML_FIVE)
    t_graphml = load_topology(gpath)

    jpath = tmp_path / "five.json"
    jpath.write_text(json.dumps({
        "nodes": [
            {"id": "n0", "lat": 0.0, "lon": 0.0},
            {"id": "n1", "lat": 0.0, "lon": 1.0},
            {"id": "n2", "lat": 1.0, "lon": 0.0},
            {"id": "n3", "lat": 1.0, "lon": 1.0, "label": "corner"},
            {"id": "n4", "lat": 0.5, "lon": 0.5},
        ],
        "edges": [["n0", "n1"], ["n1", "n2"], ["n2", "n3"], ["n3", "n4"], ["n4", "n0"]],
    }))
    t_json = load_topology(jpath)

    assert t_graphml.positions == t_json.positions
    assert t_graphml.edges == t_json.edges
    assert t_graphml.labels == t_json.labels


def test_graphml_missing_coordinates(tmp_path):
    broken = GRAPHML_FIVE.replace(
        '<node id="n4"><data key="d0">0.5</data><data key="d1">0.5</data></node>',
        '<node id="n4"></node>',
    )
    path = tmp_path / "broken.graphml"
    path.write_text(broken)
    with pytest.raises(ValidationError, match="n4"):
        load_topology(path)


def test_hop_distances_path():
    t = make_path_topology("abc")
    assert hop_distances(t, "a").dist == {"a": 0, "b": 1, "c": 2}


def test_hop_distances_unreachable():
    t = build_topology(
        [("a", GeoPoint(0, 0), None), ("b", GeoPoint(0, 1), None), ("d", GeoPoint(1, 1), None)],
        [("a", "b")],
    )
    table = hop_distances(t, "a")
    assert table.dist["d"] == UNREACHABLE
    assert not is_connected(t)


def test_hop_distances_cycle_opposite():
    t = make_cycle_topology(4)
    ids = t.node_ids
    table = hop_distances(t, ids[0])
    assert table.dist[ids[2]] == 2


def test_hop_distances_unknown_source():
    t = make_path_topology("ab")
    with pytest.raises(UnknownNode):
        hop_distances(t, "zz")


def _floyd_warshall(t):
    ids = list(t.node_ids)
    idx = {n: i for i, n in enumerate(ids)}
    n = len(ids)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for a, b in t.edges:
        dist[idx[a], idx[b]] = 1.0
        dist[idx[b], idx[a]] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])
    return ids, dist


def test_hop_distances_against_floyd_warshall_oracle():
    from geoloc.simnet import random_geometric_topology

    for seed in (1, 2, 3, 4):
        t = random_geometric_topology(30, seed=seed)
        ids, oracle = _floyd_warshall(t)
        for i, source in enumerate(ids):
            table = hop_distances(t, source)
            for j, other in enumerate(ids):
                assert table.dist[other] == oracle[i, j]


def test_edge_relaxation_property():
    from geoloc.simnet import random_geometric_topology

    t = random_geometric_topology(40, seed=9)
    for source in t.node_ids[:10]:
        table = hop_distances(t, source)
        for a, b in t.edges:
            if math.isfinite(table.dist[a]) and math.isfinite(table.dist[b]):
                assert abs(table.dist[a] - table.dist[b]) <= 1


def test_multi_source_distances():
    t = make_path_topology("abcde")
    dist = multi_source_hop_distances(t, ("a", "e"))
    assert dist == {"a": 0, "b": 1, "c": 2, "d": 1, "e": 0}


def test_eccentricity_path_and_star():
    t = make_path_topology("abc")
    assert eccentricity(t, "b") == 1
    assert eccentricity(t, "a") == 2

    star = make_star_topology(5)
    assert eccentricity(star, "hub") == 1
    for i in range(5):
        assert eccentricity(star, f"leaf{i}") == 2


def test_eccentricity_disconnected():
    t = build_topology(
        [("a", GeoPoint(0, 0), None), ("b", GeoPoint(0, 1), None)],
        [],
    )
    with pytest.raises(DisconnectedGraph):
        eccentricity(t, "a")


def test_duplicate_edges_are_collapsed():
    t = build_topology(
        [("a", GeoPoint(0, 0), None), ("b", GeoPoint(0, 1), None)],
        [("a", "b"), ("b", "a"), ("a", "b")],
    )
    assert t.edges == (("a", "b"),)
