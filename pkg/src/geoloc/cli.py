"""Config-driven pipeline runner.

Subcommands mirror the pipeline stages and chain through files in the
output directory:

    place     choose landmark nodes on the topology
    simulate  emit landmark-to-landmark measurements and the training table
    fit       fit one latency-distance curve per landmark
    locate    localize one target from simulated measurements
    eval      end-to-end accuracy table over random ground-truth targets

Every command is deterministic given the config and seed; exit codes are
stable for scripting (0 ok, 2 config error, 3 data error, 4 algorithm error).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import viz
from .distcurve import (
    DetourFactorProvider,
    HttpRouteProvider,
    LatencyDistanceCurve,
    RouteCache,
    TrainingPair,
    corrected_latency,
    fit_curve,
    latency_to_distance,
    load_curve,
    road_distance,
    save_curve,
)
from .errors import (
    ConfigError,
    DegenerateData,
    DomainError,
    EmptyCloud,
    EmptyPointSet,
    GeolocError,
    InsufficientData,
    KTooLarge,
    ParseError,
    UnattachableTarget,
    UnknownNode,
    ValidationError,
)
from .estimator import EstimatorParams, estimate_summary, estimate_to_geojson, localize
from .geo import GeoPoint, orthodromic_distance, to_plane
from .lateration import LaterationCircle, build_point_cloud, cloud_to_geojson
from .placement import LandmarkSet, init_2approx, place_landmarks, score_placement
from .simnet import (
    NoiseModel,
    generate_training_set,
    read_measurements,
    select_measurement,
    simulate_measurement,
    write_measurements,
    write_training_csv,
)
from .topology import Topology, load_topology

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ALGORITHM = 4

_DATA_ERRORS = (
    ParseError,
    ValidationError,
    UnknownNode,
    InsufficientData,
    DegenerateData,
    EmptyPointSet,
    EmptyCloud,
    UnattachableTarget,
)


@dataclass
class ProviderConfig:
    mode: str = "offline-detour"
    detour_factor: float = 1.2
    base_url: str | None = None
    cache_path: str | None = None
    timeout_s: float = 2.0


@dataclass
class NoiseConfig:
    stochastic_mean_ms: float = 0.0
    per_hop_jitter_ms: float = 0.0


@dataclass
class SimulatorConfig:
    probes: int = 10
    attach_radius_km: float = 1000.0
    last_mile_extra_ms: float = 0.0


@dataclass
class EvalConfig:
    n_targets: int = 10
    within_km: float = 50.0
    target_margin: float = 0.2
    compare_k: int | None = None
    compare_placement: bool = False


@dataclass
class PipelineConfig:
    topology_path: str = ""
    topology_format: str | None = None
    k: int = 5
    seed: int = 0
    out_dir: str = "out"
    fit_scale: float = 1.0
    locate_target: str | None = None
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        if not self.topology_path:
            raise ConfigError("config requires topology.path")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.estimator.e_min <= 0:
            raise ConfigError(f"estimator.e_min must be > 0, got {self.estimator.e_min}")
        if not 0 < self.fit_scale <= 1.5:
            raise ConfigError(f"fit.lc must be in (0, 1.5], got {self.fit_scale}")
        if self.provider.mode not in ("offline-detour", "http"):
            raise ConfigError(f"unknown provider mode {self.provider.mode!r}")
        if self.provider.mode == "http" and not self.provider.base_url:
            raise ConfigError("http provider requires provider.base_url")


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    try:
        topo = raw.get("topology", {})
        cfg = PipelineConfig(
            topology_path=str(topo.get("path", "")),
            topology_format=topo.get("format"),
            k=int(raw.get("k", 5)),
            seed=int(raw.get("seed", 0)),
            out_dir=str(raw.get("out_dir", "out")),
            fit_scale=float(raw.get("fit", {}).get("lc", 1.0)),
            locate_target=raw.get("locate", {}).get("target"),
            noise=NoiseConfig(**raw.get("noise", {})),
            provider=ProviderConfig(**raw.get("provider", {})),
            simulator=SimulatorConfig(**raw.get("simulator", {})),
            estimator=EstimatorParams(**raw.get("estimator", {})),
            eval=EvalConfig(**raw.get("eval", {})),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return cfg


def _build_provider(cfg: PipelineConfig):
    if cfg.provider.mode == "http":
        provider = HttpRouteProvider(cfg.provider.base_url or "", timeout_s=cfg.provider.timeout_s)
    else:
        provider = DetourFactorProvider(cfg.provider.detour_factor)
    cache = RouteCache(cfg.provider.cache_path) if cfg.provider.cache_path else None
    return provider, cache


def _noise_model(cfg: PipelineConfig) -> NoiseModel:
    return NoiseModel(
        stochastic_mean_ms=cfg.noise.stochastic_mean_ms,
        per_hop_jitter_ms=cfg.noise.per_hop_jitter_ms,
        seed=cfg.seed,
    )


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_landmarks(path: Path) -> LandmarkSet:
    if not path.exists():
        raise ParseError(f"landmark file not found: {path} (run `place` first)")
    raw = json.loads(path.read_text())
    return LandmarkSet(members=tuple(entry["id"] for entry in raw["members"]))


def _score_payload(t: Topology, lms: LandmarkSet) -> dict:
    score = score_placement(t, lms.members)
    return {
        "members": lms.to_json(t),
        "max_dist": score.max_dist,
        "mean_dist": score.mean_dist,
    }


# --- subcommands -------------------------------------------------------------

def cmd_place(cfg: PipelineConfig) -> int:
    t = load_topology(cfg.topology_path, cfg.topology_format)
    out = Path(cfg.out_dir)
    lms, score = place_landmarks(t, cfg.k)
    greedy = init_2approx(t, cfg.k)

    _write_json(
        out / "landmarks.json",
        {
            "k": cfg.k,
            "members": lms.to_json(t),
            "score": {"max_dist": score.max_dist, "mean_dist": score.mean_dist},
        },
    )
    _write_json(
        out / "placement_report.json",
        {
            "k": cfg.k,
            "refined": _score_payload(t, lms),
            "greedy_init": _score_payload(t, greedy),
        },
    )
    viz.save_placement_figure(t, lms, out / "placement.png")
    print(f"placed {cfg.k} landmarks: max {score.max_dist} hops, mean {score.mean_dist:.3f}")
    return EXIT_OK


def cmd_simulate(cfg: PipelineConfig, landmarks_path: str | None = None) -> int:
    t = load_topology(cfg.topology_path, cfg.topology_format)
    out = Path(cfg.out_dir)
    lms = _load_landmarks(Path(landmarks_path or out / "landmarks.json"))
    provider, cache = _build_provider(cfg)
    noise = _noise_model(cfg)

    measurements = []
    for a in lms.members:
        for b in lms.members:
            if a == b:
                continue
            measurements.append(
                simulate_measurement(
                    t, a, t.position(b), noise, provider, cache=cache,
                    target_id=b, probes=cfg.simulator.probes,
                    attach_radius_km=cfg.simulator.attach_radius_km,
                    last_mile_extra_ms=cfg.simulator.last_mile_extra_ms,
                )
            )
    pairs = generate_training_set(
        t, lms, noise, provider, cache=cache, probes=cfg.simulator.probes
    )
    out.mkdir(parents=True, exist_ok=True)
    write_measurements(out / "measurements.jsonl", measurements)
    write_training_csv(out / "training.csv", pairs)
    print(f"simulated {len(measurements)} measurements, {len(pairs)} training pairs")
    return EXIT_OK


def cmd_fit(
    cfg: PipelineConfig,
    landmarks_path: str | None = None,
    measurements_path: str | None = None,
) -> int:
    t = load_topology(cfg.topology_path, cfg.topology_format)
    out = Path(cfg.out_dir)
    lms = _load_landmarks(Path(landmarks_path or out / "landmarks.json"))
    provider, cache = _build_provider(cfg)
    noise = _noise_model(cfg)

    if measurements_path:
        pairs = []
        for m in read_measurements(measurements_path):
            rtt_min, hops = select_measurement(m)
            latency = corrected_latency(rtt_min, hops).ms
            km = road_distance(
                provider, t.position(m.landmark_id), t.position(m.target_id), cache=cache
            ).km
            if km <= 0:
                continue
            pairs.append(
                TrainingPair(latency_ms=latency, distance_km=km, endpoints=(m.landmark_id, m.target_id))
            )
    else:
        pairs = generate_training_set(
            t, lms, noise, provider, cache=cache, probes=cfg.simulator.probes
        )

    by_landmark: dict[str, list] = {m: [] for m in lms.members}
    for pair in pairs:
        if pair.endpoints[0] in by_landmark:
            by_landmark[pair.endpoints[0]].append(pair)

    curves_dir = out / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)
    fitted: list[LatencyDistanceCurve] = []
    skipped: dict[str, str] = {}
    for lm in lms.members:
        try:
            curve = fit_curve(by_landmark[lm], landmark_id=lm)
        except (InsufficientData, DegenerateData) as exc:
            skipped[lm] = str(exc)
            continue
        fitted.append(curve)
        save_curve(curves_dir / f"{lm}.json", curve, scale=cfg.fit_scale)

    _write_json(
        out / "fit_report.json",
        {
            "fitted": [c.landmark_id for c in fitted],
            "skipped": skipped,
            "residuals": {c.landmark_id: c.residual for c in fitted},
            "lc": cfg.fit_scale,
        },
    )
    if fitted:
        viz.save_curves_figure(fitted, by_landmark, out / "curves.png")
    for lm, reason in sorted(skipped.items()):
        print(f"skipped {lm}: {reason}", file=sys.stderr)
    print(f"fitted {len(fitted)} curves ({len(skipped)} skipped)")
    return EXIT_OK


def _build_circles(
    t: Topology,
    lms: LandmarkSet,
    curves: dict[str, tuple[LatencyDistanceCurve, float]],
    target: GeoPoint,
    target_id: str,
    cfg: PipelineConfig,
    provider,
    cache,
    noise: NoiseModel,
) -> tuple[list[LaterationCircle], float]:
    """Simulate probes and convert them to constraint circles; returns ref_lat."""
    ref_lat = statistics.fmean(t.position(m).lat for m in lms.members)
    circles = []
    for lm in lms.members:
        if lm not in curves:
            raise ParseError(f"no curve for landmark {lm!r} (run `fit` first)")
        curve, scale = curves[lm]
        m = simulate_measurement(
            t, lm, target, noise, provider, cache=cache,
            target_id=target_id, probes=cfg.simulator.probes,
            attach_radius_km=cfg.simulator.attach_radius_km,
            last_mile_extra_ms=cfg.simulator.last_mile_extra_ms,
        )
        rtt_min, hops = select_measurement(m)
        latency = corrected_latency(rtt_min, hops).ms
        try:
            km = latency_to_distance(curve, latency, scale=scale)
        except DomainError:
            # Below the curve's calibrated domain the monotone extension of
            # the zero-clamp applies: the target is closer than any training
            # pair, so the constraint degenerates to a zero-radius circle.
            km = 0.0
        plane = to_plane(t.position(lm), km, ref_lat)
        circles.append(
            LaterationCircle(
                landmark_id=lm, center=plane.center, radius=plane.radius, source_km=km
            )
        )
    return circles, ref_lat


def _load_curves(curves_dir: Path, lms: LandmarkSet) -> dict[str, tuple[LatencyDistanceCurve, float]]:
    curves = {}
    for lm in lms.members:
        path = curves_dir / f"{lm}.json"
        if path.exists():
            curves[lm] = load_curve(path)
    if not curves:
        raise ParseError(f"no curves found under {curves_dir} (run `fit` first)")
    return curves


def _parse_target(text: str) -> GeoPoint:
    try:
        lat_text, lon_text = text.split(",")
        return GeoPoint(float(lat_text), float(lon_text))
    except (ValueError, ValidationError) as exc:
        raise ConfigError(f"invalid target {text!r}; expected 'lat,lon'") from exc


def cmd_locate(
    cfg: PipelineConfig,
    target_text: str | None = None,
    landmarks_path: str | None = None,
    curves_dir: str | None = None,
) -> int:
    target_text = target_text or cfg.locate_target
    if not target_text:
        raise ConfigError("locate requires --target 'lat,lon'")
    target = _parse_target(target_text)

    t = load_topology(cfg.topology_path, cfg.topology_format)
    out = Path(cfg.out_dir)
    lms = _load_landmarks(Path(landmarks_path or out / "landmarks.json"))
    curves = _load_curves(Path(curves_dir or out / "curves"), lms)
    provider, cache = _build_provider(cfg)
    noise = _noise_model(cfg)

    circles, ref_lat = _build_circles(
        t, lms, curves, target, "target", cfg, provider, cache, noise
    )
    estimate = localize(circles, len(circles), ref_lat, cfg.estimator)
    cloud = build_point_cloud(
        [c.scaled(estimate.tuning.final_scale if estimate.tuning else 1.0) for c in circles],
        eps=cfg.estimator.eps,
        drop_contained=cfg.estimator.drop_contained,
    )

    _write_json(out / "estimate.json", estimate_summary(estimate))
    _write_json(out / "estimate.geojson", estimate_to_geojson(estimate))
    _write_json(out / "cloud.geojson", cloud_to_geojson(cloud, ref_lat))
    _write_json(
        out / "tuning.json",
        {
            "baseline_cohesion": estimate.tuning.baseline_cohesion if estimate.tuning else None,
            "iterations": estimate.tuning.iterations if estimate.tuning else [],
            "final_scale": estimate.tuning.final_scale if estimate.tuning else 1.0,
            "capped": estimate.tuning.capped if estimate.tuning else False,
        },
    )
    viz.save_localization_figure(circles, cloud, estimate, ref_lat, out / "locate.png", truth=target)
    print(
        f"estimate {estimate.location.lat:.5f},{estimate.location.lon:.5f} "
        f"error radius {estimate.error_radius_km:.2f} km"
    )
    return EXIT_OK


def _sample_targets(t: Topology, n: int, margin: float, seed: int) -> list[GeoPoint]:
    """Ground-truth positions inside the shrunk bounding box of the topology."""
    lats = [t.position(n_).lat for n_ in t.node_ids]
    lons = [t.position(n_).lon for n_ in t.node_ids]
    lat_lo, lat_hi = min(lats), max(lats)
    lon_lo, lon_hi = min(lons), max(lons)
    lat_pad = (lat_hi - lat_lo) * margin
    lon_pad = (lon_hi - lon_lo) * margin
    rng = np.random.default_rng([seed, 7_919])
    return [
        GeoPoint(
            float(rng.uniform(lat_lo + lat_pad, lat_hi - lat_pad)),
            float(rng.uniform(lon_lo + lon_pad, lon_hi - lon_pad)),
        )
        for _ in range(n)
    ]


def _run_pipeline(
    cfg: PipelineConfig,
    t: Topology,
    k: int,
    placement: str,
    targets: list[GeoPoint],
    provider,
    cache,
) -> list[dict]:
    """Place landmarks, fit curves, and localize every target."""
    noise = _noise_model(cfg)
    if placement == "greedy":
        lms = init_2approx(t, k)
    else:
        lms, _ = place_landmarks(t, k)
    pairs = generate_training_set(t, lms, noise, provider, cache=cache, probes=cfg.simulator.probes)
    by_landmark: dict[str, list] = {m: [] for m in lms.members}
    for pair in pairs:
        by_landmark[pair.endpoints[0]].append(pair)
    curves = {}
    for lm in lms.members:
        curves[lm] = (fit_curve(by_landmark[lm], landmark_id=lm), cfg.fit_scale)

    rows = []
    for idx, truth in enumerate(targets):
        circles, ref_lat = _build_circles(
            t, lms, curves, truth, f"target-{idx}", cfg, provider, cache, noise
        )
        estimate = localize(circles, len(circles), ref_lat, cfg.estimator)
        rows.append(
            {
                "target_index": idx,
                "true_lat": truth.lat,
                "true_lon": truth.lon,
                "est_lat": estimate.location.lat,
                "est_lon": estimate.location.lon,
                "deviation_km": orthodromic_distance(truth, estimate.location),
                "error_radius_km": estimate.error_radius_km,
                "tuning_steps": estimate.tuning.accepted_steps if estimate.tuning else 0,
            }
        )
    return rows


def _summarize(rows: list[dict], within_km: float) -> dict:
    deviations = [r["deviation_km"] for r in rows]
    return {
        "targets": len(rows),
        "mean_km": statistics.fmean(deviations),
        "median_km": statistics.median(deviations),
        "variance_km2": statistics.pvariance(deviations),
        "within_km": within_km,
        "fraction_within": sum(1 for d in deviations if d <= within_km) / len(deviations),
    }


def cmd_eval(cfg: PipelineConfig, n_targets: int | None = None) -> int:
    t = load_topology(cfg.topology_path, cfg.topology_format)
    out = Path(cfg.out_dir)
    provider, cache = _build_provider(cfg)
    n = n_targets or cfg.eval.n_targets
    targets = _sample_targets(t, n, cfg.eval.target_margin, cfg.seed)

    runs: list[tuple[str, int, str]] = [(f"k{cfg.k}", cfg.k, "refined")]
    if cfg.eval.compare_k:
        runs.append((f"k{cfg.eval.compare_k}", cfg.eval.compare_k, "refined"))
    if cfg.eval.compare_placement:
        runs.append((f"greedy_k{cfg.k}", cfg.k, "greedy"))

    results: dict[str, list[dict]] = {}
    for label, k, placement in runs:
        results[label] = _run_pipeline(cfg, t, k, placement, targets, provider, cache)

    out.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    labels = [label for label, _, _ in runs]
    with (out / "eval.csv").open("w", newline="") as fh:
        writer = _csv.writer(fh)
        header = ["target_index", "true_lat", "true_lon"]
        for label in labels:
            header += [
                f"{label}_est_lat",
                f"{label}_est_lon",
                f"{label}_deviation_km",
                f"{label}_error_radius_km",
                f"{label}_tuning_steps",
            ]
        writer.writerow(header)
        for idx in range(len(targets)):
            row = [idx, repr(targets[idx].lat), repr(targets[idx].lon)]
            for label in labels:
                r = results[label][idx]
                row += [
                    repr(r["est_lat"]),
                    repr(r["est_lon"]),
                    repr(r["deviation_km"]),
                    repr(r["error_radius_km"]),
                    r["tuning_steps"],
                ]
            writer.writerow(row)

    _write_json(
        out / "eval_summary.json",
        {label: _summarize(results[label], cfg.eval.within_km) for label in labels},
    )
    viz.save_eval_figures(
        {label: [r["deviation_km"] for r in results[label]] for label in labels}, out
    )
    for label in labels:
        s = _summarize(results[label], cfg.eval.within_km)
        print(
            f"{label}: mean {s['mean_km']:.2f} km, median {s['median_km']:.2f} km, "
            f"{s['fraction_within'] * 100:.0f}% within {cfg.eval.within_km:.0f} km"
        )
    return EXIT_OK


# --- entry point ---------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoloc",
        description="Latency-measurement geolocation pipeline on a simulated network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override output directory")
        p.add_argument("--k", type=int, help="override landmark count")
        p.add_argument("--topology", help="override topology path")

    p = sub.add_parser("place", help="choose landmark nodes")
    common(p)

    p = sub.add_parser("simulate", help="emit measurements and the training table")
    common(p)
    p.add_argument("--landmarks", help="landmark file (default: <out>/landmarks.json)")

    p = sub.add_parser("fit", help="fit latency-distance curves")
    common(p)
    p.add_argument("--landmarks", help="landmark file (default: <out>/landmarks.json)")
    p.add_argument("--measurements", help="measurement JSONL instead of fresh simulation")

    p = sub.add_parser("locate", help="localize one target")
    common(p)
    p.add_argument("--target", help="ground-truth position 'lat,lon'")
    p.add_argument("--landmarks", help="landmark file (default: <out>/landmarks.json)")
    p.add_argument("--curves", help="curve directory (default: <out>/curves)")

    p = sub.add_parser("eval", help="end-to-end accuracy over random targets")
    common(p)
    p.add_argument("--n-targets", type=int, help="override eval.n_targets")
    return parser


def _apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.k is not None:
        cfg.k = args.k
    if args.topology:
        cfg.topology_path = args.topology
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    stage = args.command
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        cfg.validate()
        if stage == "place":
            return cmd_place(cfg)
        if stage == "simulate":
            return cmd_simulate(cfg, landmarks_path=args.landmarks)
        if stage == "fit":
            return cmd_fit(cfg, landmarks_path=args.landmarks, measurements_path=args.measurements)
        if stage == "locate":
            return cmd_locate(
                cfg, target_text=args.target, landmarks_path=args.landmarks, curves_dir=args.curves
            )
        if stage == "eval":
            return cmd_eval(cfg, n_targets=args.n_targets)
        raise ConfigError(f"unknown command {stage!r}")
    except (ConfigError, KTooLarge) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GeolocError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_ALGORITHM


if __name__ == "__main__":
    sys.exit(main())
