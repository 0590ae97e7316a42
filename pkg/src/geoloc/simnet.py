"""Synthetic measurement generation standing in for real probing.

The forward model mirrors the delay decomposition used by the calibration
side: one-way deterministic delay is road distance at 225,000 km/s plus the
per-hop and response-processing allowances; every RTT sample adds a
non-negative stochastic draw on top. Hop counts are reported per protocol,
with some protocols under-reporting to model non-responding routers; taking
the per-protocol minimum and then the cross-protocol maximum recovers the
true count.

All randomness derives from (seed, landmark, target), so measurements are
reproducible regardless of generation order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distcurve import (
    HOP_DELAY_MS,
    PROCESSING_DELAY_MS,
    DistanceProvider,
    RouteCache,
    TrainingPair,
    corrected_latency,
    road_distance,
)
from .errors import UnattachableTarget, ValidationError
from .geo import GeoPoint, orthodromic_distance
from .placement import LandmarkSet
from .topology import Topology, hop_distances

SIGNAL_SPEED_KM_PER_S = 225_000.0
DEFAULT_PROBES = 10
DEFAULT_ATTACH_RADIUS_KM = 1000.0

# (hop offset, probability the offset applies per probe); icmp reports the
# true count, udp/tcp occasionally miss filtered routers.
DEFAULT_PROTOCOLS: dict[str, tuple[int, float]] = {
    "icmp": (0, 0.0),
    "udp": (-1, 0.2),
    "tcp": (-2, 0.2),
}


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic delay model; fully determined by the seed."""

    stochastic_mean_ms: float = 0.0
    per_hop_jitter_ms: float = 0.0
    seed: int = 0
    protocols: dict[str, tuple[int, float]] = field(
        default_factory=lambda: dict(DEFAULT_PROTOCOLS)
    )

    def __post_init__(self) -> None:
        if self.stochastic_mean_ms < 0 or self.per_hop_jitter_ms < 0:
            raise ValidationError("noise parameters must be non-negative")
        if not self.protocols:
            raise ValidationError("at least one protocol is required")


@dataclass(frozen=True)
class Measurement:
    """RTT samples and per-protocol hop counts for one (landmark, target) probe."""

    landmark_id: str
    target_id: str
    rtt_samples: tuple[float, ...]
    hops_by_protocol: dict[str, tuple[int, ...]]
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if not self.rtt_samples or any(s <= 0 for s in self.rtt_samples):
            raise ValidationError("rtt samples must be positive")
        if not self.hops_by_protocol:
            raise ValidationError("at least one protocol is required")


def pair_rng(seed: int, landmark_id: str, target_id: str) -> np.random.Generator:
    """Deterministic generator for one (landmark, target) pair."""
    digest = hashlib.sha256(f"{landmark_id}|{target_id}".encode()).digest()
    return np.random.default_rng([seed, int.from_bytes(digest[:8], "little")])


def nearest_node(t: Topology, point: GeoPoint) -> tuple[str, float]:
    """Closest topology node to a position and its distance in km."""
    best_id = ""
    best_km = math.inf
    for node in t.node_ids:
        km = orthodromic_distance(point, t.position(node))
        if km < best_km:
            best_km = km
            best_id = node
    return best_id, best_km


def simulate_measurement(
    t: Topology,
    landmark: str,
    target: GeoPoint,
    noise: NoiseModel,
    provider: DistanceProvider,
    cache: RouteCache | None = None,
    *,
    target_id: str = "",
    probes: int = DEFAULT_PROBES,
    attach_radius_km: float = DEFAULT_ATTACH_RADIUS_KM,
    last_mile_extra_ms: float = 0.0,
) -> Measurement:
    """Simulate probing one target from one landmark.

    The target attaches to its nearest topology node, which fixes the hop
    count; the last mile contributes road distance but no extra hops.
    """
    attach_node, attach_km = nearest_node(t, target)
    if attach_km > attach_radius_km:
        raise UnattachableTarget(
            f"target {attach_km:.1f} km from nearest node {attach_node!r} "
            f"(limit {attach_radius_km} km)"
        )
    hops = hop_distances(t, landmark).dist[attach_node]
    if math.isinf(hops):
        raise UnattachableTarget(f"node {attach_node!r} unreachable from {landmark!r}")
    hops = int(hops)

    km = road_distance(provider, t.position(landmark), target, cache=cache).km
    one_way_ms = (
        km / SIGNAL_SPEED_KM_PER_S * 1000.0
        + HOP_DELAY_MS * hops
        + PROCESSING_DELAY_MS
        + last_mile_extra_ms
    )

    rng = pair_rng(noise.seed, landmark, target_id or f"{target.lat:.6f},{target.lon:.6f}")
    samples = []
    for _ in range(probes):
        stochastic = float(rng.exponential(noise.stochastic_mean_ms)) if noise.stochastic_mean_ms > 0 else 0.0
        if noise.per_hop_jitter_ms > 0 and hops > 0:
            stochastic += float(rng.uniform(0.0, noise.per_hop_jitter_ms, size=hops).sum())
        samples.append(2.0 * one_way_ms + stochastic)

    hops_by_protocol: dict[str, tuple[int, ...]] = {}
    for proto in sorted(noise.protocols):
        offset, prob = noise.protocols[proto]
        reported = []
        for _ in range(probes):
            h = hops
            if prob > 0 and rng.random() < prob:
                h = max(0, hops + offset)
            reported.append(h)
        hops_by_protocol[proto] = tuple(reported)

    return Measurement(
        landmark_id=landmark,
        target_id=target_id,
        rtt_samples=tuple(samples),
        hops_by_protocol=hops_by_protocol,
    )


def select_measurement(m: Measurement) -> tuple[float, int]:
    """Reduce a measurement to (minimal RTT, truthful hop count).

    The hop count is the maximum over protocols of each protocol's minimum,
    countering per-protocol under-reporting.
    """
    rtt_min = min(m.rtt_samples)
    hop_count = max(min(hops) for hops in m.hops_by_protocol.values())
    return rtt_min, hop_count


def generate_training_set(
    t: Topology,
    landmarks: LandmarkSet,
    noise: NoiseModel,
    provider: DistanceProvider,
    cache: RouteCache | None = None,
    *,
    probes: int = DEFAULT_PROBES,
) -> list[TrainingPair]:
    """Measure every ordered landmark pair and pair latencies with road distances."""
    if landmarks.k < 2:
        raise ValidationError("training needs at least two landmarks")
    pairs: list[TrainingPair] = []
    for a in landmarks.members:
        for b in landmarks.members:
            if a == b:
                continue
            m = simulate_measurement(
                t, a, t.position(b), noise, provider, cache=cache,
                target_id=b, probes=probes,
            )
            rtt_min, hops = select_measurement(m)
            latency = corrected_latency(rtt_min, hops).ms
            km = road_distance(provider, t.position(a), t.position(b), cache=cache).km
            if km <= 0:
                continue
            pairs.append(TrainingPair(latency_ms=latency, distance_km=km, endpoints=(a, b)))
    return pairs


# --- persistence -------------------------------------------------------------

def write_measurements(path: str | Path, measurements: list[Measurement]) -> None:
    """One Measurement per JSON line."""
    with Path(path).open("w") as fh:
        for m in measurements:
            fh.write(
                json.dumps(
                    {
                        "landmark_id": m.landmark_id,
                        "target_id": m.target_id,
                        "rtt_samples": list(m.rtt_samples),
                        "hops_by_protocol": {k: list(v) for k, v in sorted(m.hops_by_protocol.items())},
                        "timestamp": m.timestamp,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_measurements(path: str | Path) -> list[Measurement]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        out.append(
            Measurement(
                landmark_id=raw["landmark_id"],
                target_id=raw["target_id"],
                rtt_samples=tuple(raw["rtt_samples"]),
                hops_by_protocol={k: tuple(v) for k, v in raw["hops_by_protocol"].items()},
                timestamp=raw.get("timestamp", 0.0),
            )
        )
    return out


def write_training_csv(path: str | Path, pairs: list[TrainingPair]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["latency_ms", "distance_km", "lm_a", "lm_b"])
        for pair in pairs:
            writer.writerow([repr(pair.latency_ms), repr(pair.distance_km), *pair.endpoints])


def read_training_csv(path: str | Path) -> list[TrainingPair]:
    pairs = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            pairs.append(
                TrainingPair(
                    latency_ms=float(row["latency_ms"]),
                    distance_km=float(row["distance_km"]),
                    endpoints=(row["lm_a"], row["lm_b"]),
                )
            )
    return pairs


# --- synthetic worlds ---------------------------------------------------------

def random_geometric_topology(
    n: int,
    seed: int,
    lat_range: tuple[float, float] = (-1.0, 1.0),
    lon_range: tuple[float, float] = (-1.0, 1.0),
    degree_target: int = 3,
) -> Topology:
    """Connected random topology with nodes spread over a lat/lon box.

    Each node links to its `degree_target` nearest neighbors; any remaining
    components are joined by their closest node pair, so the result is
    always connected and deterministic for a given seed.
    """
    from .topology import build_topology

    rng = np.random.default_rng([seed, n])
    width = max(2, len(str(n - 1)))
    ids = [f"n{i:0{width}d}" for i in range(n)]
    lats = rng.uniform(lat_range[0], lat_range[1], size=n)
    lons = rng.uniform(lon_range[0], lon_range[1], size=n)
    points = {ids[i]: GeoPoint(float(lats[i]), float(lons[i])) for i in range(n)}

    edges: set[tuple[str, str]] = set()
    for i, a in enumerate(ids):
        dists = sorted(
            (orthodromic_distance(points[a], points[b]), b) for b in ids if b != a
        )
        for _, b in dists[:degree_target]:
            edges.add((a, b) if a < b else (b, a))

    # Union-find over the nearest-neighbor edges, then bridge components.
    parent = {node: node for node in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        parent[find(a)] = find(b)

    for a, b in edges:
        union(a, b)
    while True:
        roots = {find(node) for node in ids}
        if len(roots) == 1:
            break
        groups: dict[str, list[str]] = {}
        for node in ids:
            groups.setdefault(find(node), []).append(node)
        ordered = sorted(groups.values(), key=lambda g: g[0])
        base = ordered[0]
        best = None
        for other in ordered[1:]:
            for a in base:
                for b in other:
                    km = orthodromic_distance(points[a], points[b])
                    if best is None or km < best[0]:
                        best = (km, a, b)
        assert best is not None
        _, a, b = best
        edges.add((a, b) if a < b else (b, a))
        union(a, b)

    return build_topology(
        nodes=[(node, points[node], None) for node in ids],
        edges=sorted(edges),
    )
