"""Circle intersection geometry in the scaled degree plane.

Each probing landmark contributes a circle (center at its plane position,
radius from its latency-distance curve). Pairwise intersection covers four
configurations:

* two crossing circles yield both intersection points (no arbitration here;
  the wrong one is filtered later when the cloud condenses),
* tangent circles yield the single touching point,
* disjoint circles are enlarged, both radii by the same factor, until they
  touch externally,
* one circle containing the other shrinks only the larger radius until they
  touch internally.

Applied radius scale factors are recorded on every result. Pair ordering and
point ordering are normalized so the cloud is deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import CoincidentCenters, TooFewCircles, ValidationError
from .geo import PlanarPoint, point_from_plane

DEFAULT_EPS_DEG = 1e-6


class IntersectCase(Enum):
    DISJOINT_ADJUSTED = "disjoint_adjusted"
    CONTAINED_ADJUSTED = "contained_adjusted"
    TANGENT = "tangent"
    TWO_POINTS = "two_points"
    COINCIDENT_DEGENERATE = "coincident_degenerate"


@dataclass(frozen=True)
class LaterationCircle:
    """A landmark's constraint circle in the degree plane."""

    landmark_id: str
    center: PlanarPoint
    radius: float
    source_km: float = 0.0

    def __post_init__(self) -> None:
        if self.radius < 0 or not math.isfinite(self.radius):
            raise ValidationError(f"circle radius must be finite and >= 0, got {self.radius}")

    def scaled(self, factor: float) -> "LaterationCircle":
        return LaterationCircle(
            landmark_id=self.landmark_id,
            center=self.center,
            radius=self.radius * factor,
            source_km=self.source_km * factor,
        )


@dataclass(frozen=True)
class IntersectionResult:
    case: IntersectCase
    points: tuple[PlanarPoint, ...]
    # Radius scale factor applied per landmark id (1.0 when untouched).
    adjustment: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CloudPoint:
    point: PlanarPoint
    origin: tuple[str, str]


@dataclass
class PointCloud:
    """All pairwise intersection points, each traceable to its circle pair."""

    points: list[CloudPoint]
    skipped_pairs: int = 0

    def __len__(self) -> int:
        return len(self.points)


def _along(a: PlanarPoint, b: PlanarPoint, dist_from_a: float, d: float) -> PlanarPoint:
    """Point at dist_from_a from a on the ray a -> b (center distance d)."""
    return PlanarPoint(
        a.x + (b.x - a.x) * dist_from_a / d,
        a.y + (b.y - a.y) * dist_from_a / d,
    )


def intersect(c1: LaterationCircle, c2: LaterationCircle, eps: float = DEFAULT_EPS_DEG) -> IntersectionResult:
    """Intersect two circles; see the module docstring for the case rules.

    Raises CoincidentCenters when centers and radii agree within eps (the
    pair carries no information and is skipped by the cloud builder).
    """
    # Canonical operand order keeps results identical under argument swap.
    a, b = sorted((c1, c2), key=lambda c: c.landmark_id)
    dx = b.center.x - a.center.x
    dy = b.center.y - a.center.y
    d = math.hypot(dx, dy)
    r1, r2 = a.radius, b.radius

    if d <= eps:
        if abs(r1 - r2) <= eps:
            raise CoincidentCenters(
                f"circles {a.landmark_id!r} and {b.landmark_id!r} coincide within eps"
            )
        # Concentric but unequal: no direction for the tangency point.
        return IntersectionResult(case=IntersectCase.COINCIDENT_DEGENERATE, points=())

    outer = r1 + r2
    inner = abs(r1 - r2)

    if outer <= eps:
        # Two distinct zero-radius circles: no scaling can join them.
        return IntersectionResult(case=IntersectCase.COINCIDENT_DEGENERATE, points=())

    if abs(d - outer) <= eps and outer > 0:
        # Near-external tangency: resolve exactly like the disjoint case so
        # the returned point lies on the (minutely) adjusted circles.
        s = d / outer
        point = _along(a.center, b.center, r1 * s, d)
        return IntersectionResult(
            case=IntersectCase.TANGENT,
            points=(point,),
            adjustment={a.landmark_id: s, b.landmark_id: s},
        )
    if abs(d - inner) <= eps and inner > eps:
        big, small = (a, b) if r1 >= r2 else (b, a)
        new_radius = d + small.radius
        factor = new_radius / big.radius
        point = _along(big.center, small.center, new_radius, d)
        return IntersectionResult(
            case=IntersectCase.TANGENT,
            points=(point,),
            adjustment={big.landmark_id: factor, small.landmark_id: 1.0},
        )

    if d > outer:
        # Disjoint: grow both radii by the same factor to external tangency.
        s = d / outer
        point = _along(a.center, b.center, r1 * s, d)
        return IntersectionResult(
            case=IntersectCase.DISJOINT_ADJUSTED,
            points=(point,),
            adjustment={a.landmark_id: s, b.landmark_id: s},
        )

    if d < inner:
        # Contained: shrink only the larger radius to internal tangency.
        big, small = (a, b) if r1 >= r2 else (b, a)
        new_radius = d + small.radius
        factor = new_radius / big.radius
        point = _along(big.center, small.center, new_radius, d)
        return IntersectionResult(
            case=IntersectCase.CONTAINED_ADJUSTED,
            points=(point,),
            adjustment={big.landmark_id: factor, small.landmark_id: 1.0},
        )

    # Proper crossing: two points, mirrored across the center line.
    along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h = math.sqrt(max(0.0, r1 * r1 - along * along))
    mx = a.center.x + along * dx / d
    my = a.center.y + along * dy / d
    ox = -dy / d * h
    oy = dx / d * h
    points = sorted([PlanarPoint(mx + ox, my + oy), PlanarPoint(mx - ox, my - oy)])
    return IntersectionResult(
        case=IntersectCase.TWO_POINTS,
        points=tuple(points),
        adjustment={a.landmark_id: 1.0, b.landmark_id: 1.0},
    )


def build_point_cloud(
    circles: list[LaterationCircle],
    eps: float = DEFAULT_EPS_DEG,
    drop_contained: bool = False,
) -> PointCloud:
    """Intersect every unordered circle pair into one cloud.

    Degenerate pairs are skipped and counted. `drop_contained` discards
    contained-circle pairs instead of adjusting them (ablation switch used
    by the evaluation harness).
    """
    if len(circles) < 2:
        raise TooFewCircles(f"need >= 2 circles, got {len(circles)}")
    ordered = sorted(circles, key=lambda c: c.landmark_id)
    points: list[CloudPoint] = []
    skipped = 0
    for a, b in itertools.combinations(ordered, 2):
        try:
            result = intersect(a, b, eps=eps)
        except CoincidentCenters:
            skipped += 1
            continue
        if drop_contained and result.case is IntersectCase.CONTAINED_ADJUSTED:
            skipped += 1
            continue
        if not result.points:
            skipped += 1
            continue
        origin = (a.landmark_id, b.landmark_id)
        points.extend(CloudPoint(point=p, origin=origin) for p in result.points)
    return PointCloud(points=points, skipped_pairs=skipped)


def cloud_to_geojson(cloud: PointCloud, ref_lat: float) -> dict:
    """Cloud points as a GeoJSON FeatureCollection (inverse plane transform)."""
    features = []
    for cp in cloud.points:
        gp = point_from_plane(cp.point, ref_lat)
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [gp.lon, gp.lat]},
                "properties": {"origin": list(cp.origin)},
            }
        )
    return {"type": "FeatureCollection", "features": features}
