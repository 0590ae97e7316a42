"""Figure rendering for the report outputs of the CLI.

Every command that writes delimited or JSON results also drops a PNG next
to them. Rendering is headless (Agg) and free of timestamps so report
directories stay byte-stable across reruns.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimator import Estimate
from .geo import GeoPoint
from .lateration import LaterationCircle, PointCloud
from .placement import LandmarkSet
from .topology import Topology

_DPI = 120


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_placement_figure(
    t: Topology, landmarks: LandmarkSet, path: str | Path, title: str = "Landmark placement"
) -> None:
    fig, ax = plt.subplots(figsize=(7, 6))
    for a, b in t.edges:
        pa, pb = t.position(a), t.position(b)
        ax.plot([pa.lon, pb.lon], [pa.lat, pb.lat], color="0.8", lw=0.8, zorder=1)
    lons = [t.position(n).lon for n in t.node_ids]
    lats = [t.position(n).lat for n in t.node_ids]
    ax.scatter(lons, lats, s=18, color="0.4", zorder=2, label="nodes")
    lm_lons = [t.position(m).lon for m in landmarks.members]
    lm_lats = [t.position(m).lat for m in landmarks.members]
    ax.scatter(lm_lons, lm_lats, s=90, marker="*", color="crimson", zorder=3, label="landmarks")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(title)
    ax.legend(loc="best")
    _save(fig, Path(path))


def save_curves_figure(
    curves: list,
    training: dict[str, list],
    path: str | Path,
) -> None:
    """Fitted curves over their training scatter; one panel for all landmarks."""
    fig, ax = plt.subplots(figsize=(7, 5))
    cmap = plt.get_cmap("tab10")
    for i, curve in enumerate(curves):
        color = cmap(i % 10)
        pairs = training.get(curve.landmark_id, [])
        if pairs:
            ax.scatter(
                [p.latency_ms for p in pairs],
                [p.distance_km for p in pairs],
                s=14,
                color=color,
                alpha=0.5,
            )
            lat_min = min(p.latency_ms for p in pairs)
            lat_max = max(p.latency_ms for p in pairs)
        else:
            lat_min, lat_max = 0.1, 50.0
        xs = np.linspace(lat_min, lat_max, 200)
        ys = [curve.predict_km(x) for x in xs]
        ax.plot(xs, ys, color=color, lw=1.5, label=curve.landmark_id)
    ax.set_xlabel("corrected latency (ms)")
    ax.set_ylabel("road distance (km)")
    ax.set_title("Latency-distance curves")
    ax.legend(loc="best", fontsize=8)
    _save(fig, Path(path))


def save_localization_figure(
    circles: list[LaterationCircle],
    cloud: PointCloud,
    estimate: Estimate,
    ref_lat: float,
    path: str | Path,
    truth: GeoPoint | None = None,
) -> None:
    """Plane view of the constraint circles, cloud, and final estimate."""
    fig, ax = plt.subplots(figsize=(7, 7))
    for circle in circles:
        ax.add_patch(
            plt.Circle(
                (circle.center.x, circle.center.y),
                circle.radius,
                fill=False,
                color="steelblue",
                lw=1.0,
                alpha=0.7,
            )
        )
        ax.plot(circle.center.x, circle.center.y, "^", color="steelblue", ms=7)
    if cloud.points:
        xs = [cp.point.x for cp in cloud.points]
        ys = [cp.point.y for cp in cloud.points]
        ax.scatter(xs, ys, s=12, color="0.5", alpha=0.6, label="intersections")
    from .geo import point_to_plane

    est_plane = point_to_plane(estimate.location, ref_lat)
    ax.plot(est_plane.x, est_plane.y, "o", color="crimson", ms=9, label="estimate")
    if truth is not None:
        truth_plane = point_to_plane(truth, ref_lat)
        ax.plot(truth_plane.x, truth_plane.y, "x", color="black", ms=9, label="truth")
    ax.set_aspect("equal")
    ax.set_xlabel("plane x (deg)")
    ax.set_ylabel("plane y (deg)")
    ax.set_title("Localization")
    ax.legend(loc="best")
    ax.autoscale_view()
    _save(fig, Path(path))


def save_eval_figures(deviations: dict[str, list[float]], out_dir: str | Path) -> list[Path]:
    """Deviation bars per target and the deviation CDF, one series per run."""
    out_dir = Path(out_dir)
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    n_series = len(deviations)
    width = 0.8 / n_series
    for i, (name, values) in enumerate(sorted(deviations.items())):
        xs = np.arange(len(values)) + (i - (n_series - 1) / 2) * width
        ax.bar(xs, values, width=width, label=name)
    ax.set_xlabel("target index")
    ax.set_ylabel("deviation (km)")
    ax.set_title("Per-target deviation")
    ax.legend(loc="best")
    bars_path = out_dir / "eval_deviations.png"
    _save(fig, bars_path)
    written.append(bars_path)

    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for name, values in sorted(deviations.items()):
        xs = np.sort(np.array(values))
        ys = np.arange(1, len(xs) + 1) / len(xs)
        ax.step(xs, ys, where="post", label=name)
    ax.set_xlabel("deviation (km)")
    ax.set_ylabel("fraction of targets")
    ax.set_ylim(0, 1.02)
    ax.set_title("Deviation CDF")
    ax.legend(loc="best")
    cdf_path = out_dir / "eval_cdf.png"
    _save(fig, cdf_path)
    written.append(cdf_path)
    return written
