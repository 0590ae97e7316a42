"""Landmark placement: k-center heuristics on the topology graph.

The production placer (`place_landmarks`) seeds a greedy farthest-point
(Gonzalez 2-approximation) initialization from a central orientation node,
then iteratively shifts each landmark to an adjacent graph node whenever
the move improves the placement score. The score is lexicographic: the
maximum hop distance of any node to its closest landmark is the major
criterion, the mean hop distance the minor one.

`brute_force_kcenter` is the exhaustive oracle used to verify the
2-approximation bound, and `free_place_center` is the continuous variant
that places a single center on a shrinking coordinate grid (used by the
estimator to condense intersection clouds).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, EmptyPointSet, KTooLarge, TooLargeForBruteForce
from .geo import GeoPoint, distances_from_km, normalize_lon
from .topology import Topology, hop_distances, is_connected, multi_source_hop_distances

BRUTE_FORCE_GUARD = 10_000_000

# Hard bound on accepted hill-climbing moves in free placement; each move
# strictly improves the objective, so this only guards adversarial inputs.
_MAX_FREE_MOVES = 100_000


@dataclass(frozen=True)
class PlacementScore:
    """Placement quality: (max hop, mean hop) over the closest-landmark assignment."""

    max_dist: int
    mean_dist: float

    def as_tuple(self) -> tuple[int, float]:
        return (self.max_dist, self.mean_dist)

    def better_than(self, other: "PlacementScore") -> bool:
        """Strict lexicographic improvement: lower max wins, mean breaks ties."""
        return self.as_tuple() < other.as_tuple()


@dataclass(frozen=True)
class LandmarkSet:
    """Chosen landmark node ids in insertion order (order drives refinement)."""

    members: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise ValueError(f"duplicate landmark ids: {self.members}")

    @property
    def k(self) -> int:
        return len(self.members)

    def to_json(self, t: Topology) -> list[dict]:
        return [
            {"id": m, "lat": t.position(m).lat, "lon": t.position(m).lon}
            for m in self.members
        ]


def score_placement(t: Topology, members: tuple[str, ...] | list[str]) -> PlacementScore:
    """Score a landmark set over the whole topology."""
    dist = multi_source_hop_distances(t, tuple(members))
    values = list(dist.values())
    worst = max(values)
    if math.isinf(worst):
        raise DisconnectedGraph("some nodes cannot reach any landmark")
    return PlacementScore(max_dist=int(worst), mean_dist=sum(values) / len(values))


def orientation_center(t: Topology) -> str:
    """Node minimizing eccentricity; ties broken by mean hop distance, then id."""
    if len(t) == 0:
        raise DisconnectedGraph("empty topology")
    if not is_connected(t):
        raise DisconnectedGraph("topology is not connected")
    best: tuple[int, float, str] | None = None
    for node in t.node_ids:
        dist = hop_distances(t, node).dist
        values = list(dist.values())
        key = (int(max(values)), sum(values) / len(values), node)
        if best is None or key < best:
            best = key
    assert best is not None
    return best[2]


def _farthest(dist: dict[str, float], exclude: set[str]) -> str:
    """Node with the largest distance value; ties go to the smallest id."""
    best_node = ""
    best_dist = -1.0
    for node in sorted(dist):
        if node in exclude:
            continue
        if dist[node] > best_dist:
            best_dist = dist[node]
            best_node = node
    return best_node


def init_2approx(t: Topology, k: int) -> LandmarkSet:
    """Greedy farthest-point initialization seeded from the orientation center.

    The orientation node only decides where the first landmark goes (the node
    farthest from it) and is discarded afterwards; remaining landmarks are
    placed at the node farthest from the set chosen so far.
    """
    if k < 1:
        raise KTooLarge(f"need at least one landmark, got k={k}")
    if k > len(t):
        raise KTooLarge(f"k={k} exceeds the {len(t)} available nodes")
    center = orientation_center(t)

    members: list[str] = []
    first = _farthest(hop_distances(t, center).dist, exclude=set())
    members.append(first)
    nearest = dict(hop_distances(t, first).dist)
    while len(members) < k:
        nxt = _farthest(nearest, exclude=set(members))
        members.append(nxt)
        for node, d in hop_distances(t, nxt).dist.items():
            if d < nearest[node]:
                nearest[node] = d
    return LandmarkSet(members=tuple(members))


def refine_step(t: Topology, lms: LandmarkSet) -> tuple[LandmarkSet, bool]:
    """One refinement sweep: each landmark may shift to one free neighbor node.

    Landmarks are visited in insertion order. A shift is accepted only if it
    strictly improves the score; candidate neighbors are evaluated against
    the score after all previously accepted shifts in this sweep.
    """
    members = list(lms.members)
    changed = False
    for idx in range(len(members)):
        current_score = score_placement(t, members)
        occupied = set(members)
        best_move: tuple[PlacementScore, str] | None = None
        for nbr in t.neighbors(members[idx]):
            if nbr in occupied:
                continue
            trial = members.copy()
            trial[idx] = nbr
            trial_score = score_placement(t, trial)
            if not trial_score.better_than(current_score):
                continue
            if best_move is None or trial_score.as_tuple() < best_move[0].as_tuple() or (
                trial_score.as_tuple() == best_move[0].as_tuple() and nbr < best_move[1]
            ):
                best_move = (trial_score, nbr)
        if best_move is not None:
            members[idx] = best_move[1]
            changed = True
    return LandmarkSet(members=tuple(members)), changed


def place_landmarks(t: Topology, k: int) -> tuple[LandmarkSet, PlacementScore]:
    """Full placement: greedy initialization plus refinement to a fixed point.

    Each accepted shift strictly improves the lexicographic score over a
    finite state space, so the loop terminates; the result never scores
    worse than the initialization, preserving the factor-2 bound of the
    greedy start.
    """
    lms = init_2approx(t, k)
    while True:
        lms, changed = refine_step(t, lms)
        if not changed:
            break
    return lms, score_placement(t, lms.members)


def brute_force_kcenter(t: Topology, k: int) -> tuple[LandmarkSet, PlacementScore]:
    """Exhaustive k-center optimum; guard rejects > 10^7 combinations."""
    n = len(t)
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} invalid for {n} nodes")
    if math.comb(n, k) > BRUTE_FORCE_GUARD:
        raise TooLargeForBruteForce(f"C({n},{k}) exceeds the {BRUTE_FORCE_GUARD} guard")
    if not is_connected(t):
        raise DisconnectedGraph("topology is not connected")

    ids = list(t.node_ids)
    index = {node: i for i, node in enumerate(ids)}
    dist = np.full((n, n), np.inf)
    for node in ids:
        row = hop_distances(t, node).dist
        for other, d in row.items():
            dist[index[node], index[other]] = d

    best: tuple[int, float, tuple[str, ...]] | None = None
    for combo in itertools.combinations(range(n), k):
        nearest = dist[list(combo)].min(axis=0)
        key = (int(nearest.max()), float(nearest.mean()), tuple(ids[i] for i in combo))
        if best is None or key < best:
            best = key
    assert best is not None
    return (
        LandmarkSet(members=best[2]),
        PlacementScore(max_dist=best[0], mean_dist=best[1]),
    )


_NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


def _mean_distance_km(candidate: GeoPoint, points: list[GeoPoint]) -> float:
    return float(distances_from_km(candidate, points).mean())


def free_place_center(
    points: list[GeoPoint],
    e0: float | None = None,
    e_min: float = 0.001,
) -> GeoPoint:
    """Place a single center minimizing mean great-circle distance to points.

    Hill-climbs over the 8 grid neighbors at spacing e (degrees), starting
    from the coordinate-wise mean; when no neighbor improves, the grid is
    bisected (e := e/2) until e falls below e_min.
    """
    if not points:
        raise EmptyPointSet("cannot place a center for zero points")
    if e_min <= 0:
        raise ValueError(f"e_min must be positive, got {e_min}")

    lats = [p.lat for p in points]
    lons = [p.lon for p in points]
    if e0 is None:
        diag = math.hypot(max(lats) - min(lats), max(lons) - min(lons))
        e0 = max(diag / 2.0, 2.0 * e_min)
    if e0 <= e_min:
        raise ValueError(f"e0 ({e0}) must exceed e_min ({e_min})")

    current = GeoPoint(sum(lats) / len(lats), normalize_lon(sum(lons) / len(lons)))
    current_cost = _mean_distance_km(current, points)
    e = e0
    moves = 0
    while e >= e_min and moves < _MAX_FREE_MOVES:
        best_cost = current_cost
        best_point = None
        for dlat, dlon in _NEIGHBOR_OFFSETS:
            lat = min(90.0, max(-90.0, current.lat + dlat * e))
            candidate = GeoPoint(lat, normalize_lon(current.lon + dlon * e))
            cost = _mean_distance_km(candidate, points)
            if cost < best_cost:
                best_cost = cost
                best_point = candidate
        if best_point is None:
            e /= 2.0
        else:
            current = best_point
            current_cost = best_cost
            moves += 1
    return current
