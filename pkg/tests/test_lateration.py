import itertools
import math

import numpy as np
import pytest

from geoloc.errors import CoincidentCenters, TooFewCircles, ValidationError
from geoloc.geo import PlanarPoint
from geoloc.lateration import (
    IntersectCase,
    LaterationCircle,
    build_point_cloud,
    cloud_to_geojson,
    intersect,
)


def circle(cid, x, y, r):
    return LaterationCircle(landmark_id=cid, center=PlanarPoint(x, y), radius=r)


def on_circle(point, c, factor=1.0, tol=1e-9):
    d = math.hypot(point.x - c.center.x, point.y - c.center.y)
    return abs(d - c.radius * factor) <= tol


def test_external_tangency():
    res = intersect(circle("a", 0, 0, 1), circle("b", 2, 0, 1))
    assert res.case is IntersectCase.TANGENT
    assert res.points == (PlanarPoint(1.0, 0.0),)


def test_internal_tangency():
    res = intersect(circle("a", 0, 0, 2), circle("b", 0, 0.5, 1.5))
    assert res.case is IntersectCase.TANGENT
    assert res.points == (PlanarPoint(0.0, 2.0),)


def test_two_point_intersection_345():
    res = intersect(circle("a", 0, 0, 5), circle("b", 6, 0, 5))
    assert res.case is IntersectCase.TWO_POINTS
    assert res.points == (PlanarPoint(3.0, -4.0), PlanarPoint(3.0, 4.0))


def test_contained_adjustment():
    res = intersect(circle("a", 0, 0, 2), circle("b", 0, 0.5, 1))
    assert res.case is IntersectCase.CONTAINED_ADJUSTED
    assert res.points == (PlanarPoint(0.0, 1.5),)
    assert res.adjustment == {"a": pytest.approx(0.75), "b": 1.0}


def test_disjoint_adjustment():
    res = intersect(circle("a", 0, 0, 2), circle("b", 10, 0, 3))
    assert res.case is IntersectCase.DISJOINT_ADJUSTED
    assert res.points == (PlanarPoint(4.0, 0.0),)
    assert res.adjustment == {"a": pytest.approx(2.0), "b": pytest.approx(2.0)}


def test_disjoint_scales_both_radii_equally():
    rng = np.random.default_rng(41)
    for _ in range(100):
        r1, r2 = float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2))
        gap = float(rng.uniform(0.1, 5))
        c1 = circle("a", 0, 0, r1)
        c2 = circle("b", r1 + r2 + gap, 0, r2)
        res = intersect(c1, c2)
        assert res.case is IntersectCase.DISJOINT_ADJUSTED
        assert res.adjustment["a"] == res.adjustment["b"]


def test_points_lie_on_possibly_adjusted_circles():
    rng = np.random.default_rng(43)
    for _ in range(300):
        c1 = circle("a", float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)), float(rng.uniform(0.05, 4)))
        c2 = circle("b", float(rng.uniform(-5, 5)), float(rng.uniform(-5, 5)), float(rng.uniform(0.05, 4)))
        try:
            res = intersect(c1, c2)
        except CoincidentCenters:
            continue
        for point in res.points:
            assert on_circle(point, c1, res.adjustment.get("a", 1.0))
            assert on_circle(point, c2, res.adjustment.get("b", 1.0))


def test_intersect_symmetric_under_argument_swap():
    rng = np.random.default_rng(47)
    for _ in range(200):
        c1 = circle("a", float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)), float(rng.uniform(0.1, 3)))
        c2 = circle("b", float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)), float(rng.uniform(0.1, 3)))
        r1 = intersect(c1, c2)
        r2 = intersect(c2, c1)
        assert r1.case is r2.case
        assert r1.points == r2.points
        assert r1.adjustment == r2.adjustment


def test_coincident_circles_raise():
    with pytest.raises(CoincidentCenters):
        intersect(circle("a", 1, 1, 2), circle("b", 1, 1, 2))


def test_concentric_unequal_degenerate():
    res = intersect(circle("a", 1, 1, 2), circle("b", 1, 1, 0.5))
    assert res.case is IntersectCase.COINCIDENT_DEGENERATE
    assert res.points == ()


def test_zero_radius_circle_still_intersects():
    # zero radius is a legal degenerate circle: the pair resolves through the
    # containment adjustment onto the zero-radius center
    res = intersect(circle("a", 0, 0, 2), circle("b", 0.5, 0, 0))
    assert res.case is IntersectCase.CONTAINED_ADJUSTED
    assert res.points == (PlanarPoint(0.5, 0.0),)


def test_negative_radius_rejected():
    with pytest.raises(ValidationError):
        circle("a", 0, 0, -1)


def test_cloud_two_circles():
    cloud = build_point_cloud([circle("a", 0, 0, 5), circle("b", 6, 0, 5)])
    assert len(cloud) == 2
    assert cloud.skipped_pairs == 0
    assert all(cp.origin == ("a", "b") for cp in cloud.points)


def test_cloud_three_circles_through_common_point():
    # three circles constructed through (1, 1)
    target = PlanarPoint(1.0, 1.0)
    centers = [PlanarPoint(0.0, 0.0), PlanarPoint(3.0, 0.5), PlanarPoint(1.5, 3.0)]
    circles = [
        circle(f"c{i}", c.x, c.y, math.hypot(target.x - c.x, target.y - c.y))
        for i, c in enumerate(centers)
    ]
    cloud = build_point_cloud(circles)
    hits = [
        cp.point
        for cp in cloud.points
        if math.hypot(cp.point.x - target.x, cp.point.y - target.y) < 1e-6
    ]
    assert len(hits) == 3


def test_cloud_skips_degenerate_pairs():
    circles = [circle("a", 0, 0, 1), circle("b", 0, 0, 1), circle("c", 5, 0, 4.5)]
    cloud = build_point_cloud(circles)
    assert cloud.skipped_pairs == 1
    # pairs (a, c) and (b, c) both contribute
    origins = {cp.origin for cp in cloud.points}
    assert origins == {("a", "c"), ("b", "c")}


def test_cloud_size_bound():
    rng = np.random.default_rng(53)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        circles = [
            circle(f"c{i}", float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)), float(rng.uniform(0.2, 3)))
            for i in range(n)
        ]
        cloud = build_point_cloud(circles)
        n_pairs = n * (n - 1) // 2
        assert len(cloud) <= 2 * n_pairs
        assert len(cloud) + 2 * cloud.skipped_pairs >= n_pairs


def test_cloud_requires_two_circles():
    with pytest.raises(TooFewCircles):
        build_point_cloud([circle("a", 0, 0, 1)])


def test_cloud_drop_contained_mode():
    circles = [circle("a", 0, 0, 3), circle("b", 0.2, 0, 0.5), circle("c", 2.5, 0, 1.0)]
    full = build_point_cloud(circles)
    dropped = build_point_cloud(circles, drop_contained=True)
    contained_origins = {
        tuple(sorted((a.landmark_id, b.landmark_id)))
        for a, b in itertools.combinations(circles, 2)
        if intersect(a, b).case is IntersectCase.CONTAINED_ADJUSTED
    }
    assert contained_origins
    assert len(dropped) < len(full)
    assert all(cp.origin not in contained_origins for cp in dropped.points)


def test_cloud_geojson_export():
    cloud = build_point_cloud([circle("a", 0, 0, 5), circle("b", 6, 0, 5)])
    geo = cloud_to_geojson(cloud, ref_lat=0.0)
    assert geo["type"] == "FeatureCollection"
    assert len(geo["features"]) == 2
    feature = geo["features"][0]
    assert feature["geometry"]["type"] == "Point"
    assert feature["properties"]["origin"] == ["a", "b"]
    lon, lat = feature["geometry"]["coordinates"]
    assert (lon, lat) in ((3.0, -4.0), (3.0, 4.0))
