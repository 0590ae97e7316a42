"""Network graph model, file ingestion, and hop-count shortest paths.

Landmark placement optimizes hop distance, so edges are unweighted; node
coordinates are kept for the measurement simulator and for reporting.
Supported file formats: a small JSON schema and the subset of GraphML used
by public backbone datasets (node id plus Latitude/Longitude data keys).
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DisconnectedGraph, ParseError, UnknownNode, ValidationError
from .geo import GeoPoint

UNREACHABLE = math.inf


@dataclass(frozen=True)
class Topology:
    """Undirected graph of geographically placed nodes.

    Immutable after construction; adjacency is precomputed and sorted so
    traversals are deterministic.
    """

    positions: dict[str, GeoPoint]
    edges: tuple[tuple[str, str], ...]
    labels: dict[str, str] = field(default_factory=dict)
    adjacency: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        adj: dict[str, set[str]] = {node: set() for node in self.positions}
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"self-loop on node {a!r}")
            for end in (a, b):
                if end not in self.positions:
                    raise ValidationError(f"edge ({a!r}, {b!r}) references unknown node {end!r}")
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(
            self, "adjacency", {node: tuple(sorted(nbrs)) for node, nbrs in adj.items()}
        )

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.positions))

    def __len__(self) -> int:
        return len(self.positions)

    def position(self, node_id: str) -> GeoPoint:
        try:
            return self.positions[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        if node_id not in self.adjacency:
            raise UnknownNode(f"unknown node {node_id!r}")
        return self.adjacency[node_id]


@dataclass(frozen=True)
class HopDistanceTable:
    """Single-source hop counts; unreachable nodes map to UNREACHABLE."""

    source: str
    dist: dict[str, float]


def build_topology(
    nodes: list[tuple[str, GeoPoint, str | None]],
    edges: list[tuple[str, str]],
) -> Topology:
    """Validate raw node/edge lists and construct a Topology."""
    positions: dict[str, GeoPoint] = {}
    labels: dict[str, str] = {}
    for node_id, point, label in nodes:
        if node_id in positions:
            raise ValidationError(f"duplicate node id {node_id!r}")
        positions[node_id] = point
        if label:
            labels[node_id] = label
    deduped: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for a, b in edges:
        key = (a, b) if a <= b else (b, a)
        if key in seen:
            continue
        seen.add(key)
        deduped.append(key)
    return Topology(positions=positions, edges=tuple(sorted(deduped)), labels=labels)


def _load_json(path: Path) -> Topology:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "nodes" not in raw or "edges" not in raw:
        raise ParseError(f"{path}: expected an object with 'nodes' and 'edges'")

    nodes: list[tuple[str, GeoPoint, str | None]] = []
    missing: list[str] = []
    for entry in raw["nodes"]:
        node_id = str(entry.get("id", ""))
        if not node_id:
            raise ParseError(f"{path}: node without id: {entry!r}")
        if "lat" not in entry or "lon" not in entry:
            missing.append(node_id)
            continue
        try:
            point = GeoPoint(float(entry["lat"]), float(entry["lon"]))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: node {node_id!r} has bad coordinates") from exc
        nodes.append((node_id, point, entry.get("label")))
    if missing:
        raise ValidationError(f"{path}: nodes missing coordinates: {', '.join(sorted(missing))}")

    edges = []
    for pair in raw["edges"]:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ParseError(f"{path}: edge must be a two-element list, got {pair!r}")
        edges.append((str(pair[0]), str(pair[1])))
    return build_topology(nodes, edges)


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _load_graphml(path: Path) -> Topology:
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise ParseError(f"{path}: invalid XML: {exc}") from exc
    root = tree.getroot()

    # Map GraphML key ids to attribute names so we can find Latitude/Longitude.
    key_names: dict[str, str] = {}
    for elem in root.iter():
        if _strip_ns(elem.tag) == "key":
            key_id = elem.get("id")
            name = elem.get("attr.name") or elem.get("yfiles.type") or key_id
            if key_id:
                key_names[key_id] = name or key_id

    nodes: list[tuple[str, GeoPoint, str | None]] = []
    edges: list[tuple[str, str]] = []
    missing: list[str] = []
    for elem in root.iter():
        tag = _strip_ns(elem.tag)
        if tag == "node":
            node_id = elem.get("id")
            if node_id is None:
                raise ParseError(f"{path}: <node> without id")
            attrs: dict[str, str] = {}
            for data in elem:
                if _strip_ns(data.tag) != "data":
                    continue
                name = key_names.get(data.get("key", ""), data.get("key", ""))
                attrs[name] = (data.text or "").strip()
            lat_text = attrs.get("Latitude")
            lon_text = attrs.get("Longitude")
            if not lat_text or not lon_text:
                missing.append(node_id)
                continue
            try:
                point = GeoPoint(float(lat_text), float(lon_text))
            except ValueError as exc:
                raise ParseError(f"{path}: node {node_id!r} has bad coordinates") from exc
            nodes.append((node_id, point, attrs.get("label")))
        elif tag == "edge":
            src = elem.get("source")
            dst = elem.get("target")
            if src is None or dst is None:
                raise ParseError(f"{path}: <edge> without source/target")
            edges.append((src, dst))
    if missing:
        raise ValidationError(f"{path}: nodes missing coordinates: {', '.join(sorted(missing))}")
    return build_topology(nodes, edges)


def load_topology(path: str | Path, fmt: str | None = None) -> Topology:
    """Load a topology file; format is inferred from the suffix unless given.

    Raises ParseError for malformed files and ValidationError for structural
    problems (duplicate ids, dangling edges, nodes without coordinates).
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"topology file not found: {path}")
    if fmt is None:
        fmt = "graphml" if path.suffix.lower() == ".graphml" else "json"
    if fmt == "json":
        return _load_json(path)
    if fmt in ("graphml", "graphml-subset"):
        return _load_graphml(path)
    raise ParseError(f"unknown topology format {fmt!r}")


def hop_distances(t: Topology, source: str) -> HopDistanceTable:
    """Single-source shortest hop counts (breadth-first search)."""
    if source not in t.positions:
        raise UnknownNode(f"unknown node {source!r}")
    dist: dict[str, float] = {node: UNREACHABLE for node in t.positions}
    dist[source] = 0
    queue = deque([source])
    while queue:
        here = queue.popleft()
        for nbr in t.adjacency[here]:
            if dist[nbr] > dist[here] + 1:
                dist[nbr] = dist[here] + 1
                queue.append(nbr)
    return HopDistanceTable(source=source, dist=dist)


def multi_source_hop_distances(t: Topology, sources: tuple[str, ...] | list[str]) -> dict[str, float]:
    """Hop count from every node to its closest source (multi-source BFS)."""
    dist: dict[str, float] = {node: UNREACHABLE for node in t.positions}
    queue: deque[str] = deque()
    for source in sources:
        if source not in t.positions:
            raise UnknownNode(f"unknown node {source!r}")
        dist[source] = 0
        queue.append(source)
    while queue:
        here = queue.popleft()
        for nbr in t.adjacency[here]:
            if dist[nbr] > dist[here] + 1:
                dist[nbr] = dist[here] + 1
                queue.append(nbr)
    return dist


def eccentricity(t: Topology, v: str) -> int:
    """Maximum hop distance from v to any node; requires a connected graph."""
    table = hop_distances(t, v)
    worst = max(table.dist.values())
    if worst is UNREACHABLE or math.isinf(worst):
        unreachable = sorted(n for n, d in table.dist.items() if math.isinf(d))
        raise DisconnectedGraph(f"nodes unreachable from {v!r}: {', '.join(unreachable)}")
    return int(worst)


def is_connected(t: Topology) -> bool:
    if len(t) == 0:
        return True
    first = t.node_ids[0]
    table = hop_distances(t, first)
    return all(not math.isinf(d) for d in table.dist.values())
