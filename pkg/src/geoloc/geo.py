"""Geodesy primitives: great-circle distances and the local degree-plane transform.

All positions are WGS-agnostic spherical lat/lon in degrees. Distances on the
sphere use the haversine formula with the mean Earth radius. The lateration
plane converts km radii to degrees with the fixed 113.325 km/degree spacing
and pre-scales longitudes by cos(ref_lat) so the plane is locally isotropic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ValidationError

EARTH_RADIUS_KM = 6371.0

# Degree spacing used when converting curve distances into plane radii.
# Deliberately distinct from the haversine arc length of one degree
# (2*pi*R/360 = 111.195 km); see the module docstring of `lateration`.
KM_PER_DEG = 113.325

# Beyond this the cos(ref_lat) longitude scaling degenerates.
MAX_PLANE_REF_LAT = 89.0


@dataclass(frozen=True)
class GeoPoint:
    """A position on Earth: lat in [-90, 90], lon in (-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError(f"non-finite coordinates: ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError(f"latitude out of range: {self.lat}")
        if not -180.0 < self.lon <= 180.0:
            raise ValidationError(f"longitude out of range: {self.lon}")


class PlanarPoint(NamedTuple):
    """A point in the scaled degree plane (x = lon * cos(ref_lat), y = lat)."""

    x: float
    y: float


@dataclass(frozen=True)
class PlanarCircle:
    """A circle in the degree plane; radius is in latitude-degrees."""

    center: PlanarPoint
    radius: float


def normalize_lon(lon: float) -> float:
    """Wrap a longitude into (-180, 180]."""
    wrapped = math.fmod(lon, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def orthodromic_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in km (haversine)."""
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def pairwise_distances_km(points: list[GeoPoint]) -> np.ndarray:
    """Condensed upper-triangle haversine distances for a point list.

    Returns a 1-D array of the C(n, 2) pairwise distances in km, ordered as
    (0,1), (0,2), ..., (n-2, n-1). Vectorized for large clouds.
    """
    n = len(points)
    if n < 2:
        return np.empty(0)
    lat = np.radians(np.array([p.lat for p in points]))
    lon = np.radians(np.array([p.lon for p in points]))
    iu, ju = np.triu_indices(n, k=1)
    dlat = lat[ju] - lat[iu]
    dlon = lon[ju] - lon[iu]
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat[iu]) * np.cos(lat[ju]) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def distances_from_km(origin: GeoPoint, points: list[GeoPoint]) -> np.ndarray:
    """Haversine distances in km from one origin to each point (vectorized)."""
    if not points:
        return np.empty(0)
    lat0 = math.radians(origin.lat)
    lon0 = math.radians(origin.lon)
    lat = np.radians(np.array([p.lat for p in points]))
    lon = np.radians(np.array([p.lon for p in points]))
    h = np.sin((lat - lat0) / 2.0) ** 2 + math.cos(lat0) * np.cos(lat) * np.sin((lon - lon0) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def km_per_degree_lat() -> float:
    """Degree spacing along a meridian in the lateration plane (constant)."""
    return KM_PER_DEG


def km_per_degree_lon(lat: float) -> float:
    """Degree spacing along a parallel; shrinks toward the poles."""
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"latitude out of range: {lat}")
    return KM_PER_DEG * math.cos(math.radians(lat))


def _check_ref_lat(ref_lat: float) -> None:
    if abs(ref_lat) >= MAX_PLANE_REF_LAT:
        raise ValidationError(
            f"plane transform degenerate near the poles (|ref_lat| must be < {MAX_PLANE_REF_LAT})"
        )


def point_to_plane(point: GeoPoint, ref_lat: float) -> PlanarPoint:
    """Project a GeoPoint into the locally isotropic degree plane."""
    _check_ref_lat(ref_lat)
    return PlanarPoint(point.lon * math.cos(math.radians(ref_lat)), point.lat)


def point_from_plane(p: PlanarPoint, ref_lat: float) -> GeoPoint:
    """Inverse of :func:`point_to_plane`."""
    _check_ref_lat(ref_lat)
    lon = p.x / math.cos(math.radians(ref_lat))
    lat = min(90.0, max(-90.0, p.y))
    return GeoPoint(lat, normalize_lon(lon))


def to_plane(point: GeoPoint, km_radius: float, ref_lat: float) -> PlanarCircle:
    """Build a plane circle from a center position and a km radius.

    The radius is converted at the fixed 113.325 km/degree spacing; the center
    longitude is pre-scaled by cos(ref_lat), where ref_lat is normally the
    mean latitude of the probing landmarks.
    """
    if km_radius < 0 or not math.isfinite(km_radius):
        raise ValidationError(f"radius must be finite and >= 0, got {km_radius}")
    return PlanarCircle(point_to_plane(point, ref_lat), km_radius / KM_PER_DEG)


def destination_point(origin: GeoPoint, bearing_deg: float, km: float) -> GeoPoint:
    """Point reached from origin along an initial bearing for a given distance."""
    delta = km / EARTH_RADIUS_KM
    theta = math.radians(bearing_deg)
    lat1 = math.radians(origin.lat)
    lon1 = math.radians(origin.lon)
    lat2 = math.asin(
        math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    )
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * math.sin(lat2),
    )
    return GeoPoint(math.degrees(lat2), normalize_lon(math.degrees(lon2)))
