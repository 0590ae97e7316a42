"""Latency-measurement IP geolocation pipeline.

Library + CLI covering optimized landmark placement on a network topology,
latency-distance curve calibration, multilateration with radius self-tuning,
and iterative cloud filtering to a final location estimate, validated
against a synthetic measurement simulator with known ground truth.
"""

from .distcurve import (
    LatencyDistanceCurve,
    TrainingPair,
    corrected_latency,
    fit_curve,
    latency_to_distance,
    road_distance,
)
from .estimator import Estimate, EstimatorParams, TuningTrace, localize
from .geo import GeoPoint, PlanarCircle, PlanarPoint, orthodromic_distance, to_plane
from .lateration import (
    IntersectCase,
    IntersectionResult,
    LaterationCircle,
    PointCloud,
    build_point_cloud,
    intersect,
)
from .placement import (
    LandmarkSet,
    PlacementScore,
    brute_force_kcenter,
    free_place_center,
    place_landmarks,
)
from .simnet import Measurement, NoiseModel, generate_training_set, simulate_measurement
from .topology import Topology, load_topology

__version__ = "0.1.0"

__all__ = [
    "Estimate",
    "EstimatorParams",
    "GeoPoint",
    "IntersectCase",
    "IntersectionResult",
    "LandmarkSet",
    "LatencyDistanceCurve",
    "LaterationCircle",
    "Measurement",
    "NoiseModel",
    "PlacementScore",
    "PlanarCircle",
    "PlanarPoint",
    "PointCloud",
    "Topology",
    "TrainingPair",
    "TuningTrace",
    "brute_force_kcenter",
    "build_point_cloud",
    "corrected_latency",
    "fit_curve",
    "free_place_center",
    "generate_training_set",
    "intersect",
    "latency_to_distance",
    "load_topology",
    "localize",
    "orthodromic_distance",
    "place_landmarks",
    "road_distance",
    "simulate_measurement",
    "to_plane",
]
