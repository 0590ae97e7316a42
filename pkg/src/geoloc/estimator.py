"""Self-tuning of circle radii and filtering of the intersection cloud.

Measurement variation inflates all radii roughly uniformly, so the tuner
shrinks every radius by 1% per step while the cloud's cohesion (sum of the
pairwise distances strictly below their median) keeps strictly decreasing,
then reverts the failing step. The filter then repeatedly re-centers the
cloud and discards the farthest point until fewer points remain than
landmarks probed; the final center is the location estimate and the spread
of the retained points its expected error.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCloud, TooFewCircles, TooFewPoints, ValidationError
from .geo import GeoPoint, distances_from_km, pairwise_distances_km, point_from_plane
from .lateration import DEFAULT_EPS_DEG, LaterationCircle, PointCloud, build_point_cloud
from .placement import free_place_center

SHRINK_PER_STEP = 0.99
DEFAULT_SHRINK_CAP = 200


@dataclass(frozen=True)
class EstimatorParams:
    """Knobs for the localization pipeline."""

    eps: float = DEFAULT_EPS_DEG
    e_min: float = 0.001
    shrink_cap: int = DEFAULT_SHRINK_CAP
    drop_contained: bool = False


@dataclass
class TuningTrace:
    """Accepted shrink steps with their cohesion values."""

    iterations: list[tuple[int, float]] = field(default_factory=list)
    final_scale: float = 1.0
    baseline_cohesion: float | None = None
    capped: bool = False

    @property
    def accepted_steps(self) -> int:
        return len(self.iterations)


@dataclass
class Estimate:
    """Final location with its expected error and the pipeline's audit trail."""

    location: GeoPoint
    error_radius_km: float
    cloud_history: list[int]
    tuning: TuningTrace | None = None
    retained: list[GeoPoint] = field(default_factory=list)
    removed: list[GeoPoint] = field(default_factory=list)


def _cloud_geopoints(cloud: PointCloud, ref_lat: float) -> list[GeoPoint]:
    return [point_from_plane(cp.point, ref_lat) for cp in cloud.points]


def cohesion(cloud: PointCloud, ref_lat: float) -> float:
    """Sum of pairwise point distances strictly below their median, in km."""
    if len(cloud) < 2:
        raise TooFewPoints(f"cohesion needs >= 2 points, got {len(cloud)}")
    dists = pairwise_distances_km(_cloud_geopoints(cloud, ref_lat))
    median = statistics.median(dists.tolist())
    return float(dists[dists < median].sum())


def self_tune(
    circles: list[LaterationCircle],
    ref_lat: float,
    eps: float = DEFAULT_EPS_DEG,
    shrink_cap: int = DEFAULT_SHRINK_CAP,
    drop_contained: bool = False,
) -> tuple[list[LaterationCircle], TuningTrace]:
    """Shrink all radii by 1% per step while cohesion strictly decreases.

    The first non-improving step is reverted. Returns the tuned circles and
    the acceptance trace; `capped` flags traces that ran into the step limit.
    """
    if len(circles) < 2:
        raise TooFewCircles(f"self-tuning needs >= 2 circles, got {len(circles)}")

    def cohesion_at(scale: float) -> float | None:
        scaled = [c.scaled(scale) for c in circles]
        cloud = build_point_cloud(scaled, eps=eps, drop_contained=drop_contained)
        if len(cloud) < 2:
            return None
        return cohesion(cloud, ref_lat)

    trace = TuningTrace()
    current = cohesion_at(1.0)
    trace.baseline_cohesion = current
    if current is None:
        return list(circles), trace

    accepted = 0
    for step in range(1, shrink_cap + 1):
        candidate = cohesion_at(SHRINK_PER_STEP**step)
        if candidate is None or candidate >= current:
            break
        current = candidate
        accepted = step
        trace.iterations.append((step, candidate))

    trace.capped = 0 < shrink_cap == accepted
    trace.final_scale = SHRINK_PER_STEP**accepted
    tuned = [c.scaled(trace.final_scale) for c in circles]
    return tuned, trace


def filter_and_estimate(
    cloud: PointCloud,
    n_landmarks: int,
    e_min: float,
    ref_lat: float,
) -> Estimate:
    """Condense the cloud to fewer points than landmarks and read off the center.

    Each round recomputes the free-placement center and removes the single
    farthest point. The error radius is the distance from the final center
    to the farthest retained point.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot estimate from an empty cloud")
    if n_landmarks < 2:
        raise ValidationError(f"need >= 2 landmarks, got {n_landmarks}")

    points = _cloud_geopoints(cloud, ref_lat)
    history = [len(points)]
    removed: list[GeoPoint] = []
    while len(points) >= n_landmarks:
        center = free_place_center(points, e_min=e_min)
        far_idx = int(np.argmax(distances_from_km(center, points)))
        removed.append(points.pop(far_idx))
        history.append(len(points))

    center = free_place_center(points, e_min=e_min)
    error_radius = float(distances_from_km(center, points).max())
    return Estimate(
        location=center,
        error_radius_km=error_radius,
        cloud_history=history,
        retained=points,
        removed=removed,
    )


def localize(
    circles: list[LaterationCircle],
    n_landmarks: int,
    ref_lat: float,
    params: EstimatorParams = EstimatorParams(),
) -> Estimate:
    """Full pipeline: self-tune radii, rebuild the cloud, filter, estimate."""
    if len(circles) < 2:
        raise TooFewCircles(f"localization needs >= 2 circles, got {len(circles)}")
    tuned, trace = self_tune(
        circles,
        ref_lat,
        eps=params.eps,
        shrink_cap=params.shrink_cap,
        drop_contained=params.drop_contained,
    )
    cloud = build_point_cloud(tuned, eps=params.eps, drop_contained=params.drop_contained)
    estimate = filter_and_estimate(cloud, n_landmarks, params.e_min, ref_lat)
    estimate.tuning = trace
    return estimate


# --- exports ----------------------------------------------------------------

def estimate_summary(estimate: Estimate) -> dict:
    """Compact JSON summary of an estimate."""
    return {
        "lat": estimate.location.lat,
        "lon": estimate.location.lon,
        "error_km": estimate.error_radius_km,
        "tuning_steps": estimate.tuning.accepted_steps if estimate.tuning else 0,
        "cloud_sizes": estimate.cloud_history,
    }


def estimate_to_geojson(estimate: Estimate) -> dict:
    """Estimate point, error circle, and retained/removed layers as GeoJSON."""
    from .geo import destination_point

    features: list[dict] = [
        {
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [estimate.location.lon, estimate.location.lat],
            },
            "properties": {
                "layer": "estimate",
                "error_km": estimate.error_radius_km,
            },
        }
    ]
    if estimate.error_radius_km > 0:
        ring = []
        for bearing in range(0, 361, 6):
            p = destination_point(estimate.location, float(bearing % 360), estimate.error_radius_km)
            ring.append([p.lon, p.lat])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"layer": "error_circle"},
            }
        )
    for layer, pts in (("retained", estimate.retained), ("removed", estimate.removed)):
        for p in pts:
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
                    "properties": {"layer": layer},
                }
            )
    return {"type": "FeatureCollection", "features": features}
