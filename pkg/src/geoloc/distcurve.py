"""Per-landmark latency to distance conversion.

Measured round-trip times are reduced to one-way propagation latency by
removing fixed per-hop and response-processing allowances, then mapped to a
road-network distance through the landmark's fitted logarithmic curve

    distance_km = p * ln(q * latency_ms + n) + m

Curves are trained on landmark-to-landmark measurements paired with road
distances from a pluggable provider. A multiplicative scale factor (stored
as "lc" in curve files, default 1.0) shifts the whole curve to counter the
systematic overestimation of backbone-calibrated curves.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Protocol

import numpy as np

from .errors import (
    DegenerateData,
    DomainError,
    FitDiverged,
    InsufficientData,
    ValidationError,
)
from .geo import GeoPoint, orthodromic_distance

HOP_DELAY_MS = 0.055          # average per-hop forwarding allowance
PROCESSING_DELAY_MS = 0.11    # response generation at the final router
MIN_LATENCY_MS = 0.001        # clamp floor for implausibly small results
FALLBACK_DETOUR = 1.10        # road estimate when the provider has no route
MAX_SCALE = 1.5

_FIT_Q_STARTS = (0.01, 0.1, 1.0, 10.0)
_FIT_N_STARTS = (0.5, 1.0, 2.0)


class CorrectedLatency(NamedTuple):
    ms: float
    clamped: bool


def corrected_latency(rtt_min_ms: float, hop_count: int) -> CorrectedLatency:
    """One-way latency: RTT/2 minus per-hop and processing allowances.

    Non-positive results are clamped to MIN_LATENCY_MS and flagged; they
    signal an implausible measurement rather than an error.
    """
    if rtt_min_ms <= 0:
        raise ValidationError(f"rtt must be positive, got {rtt_min_ms}")
    if hop_count < 0:
        raise ValidationError(f"hop count must be >= 0, got {hop_count}")
    value = rtt_min_ms / 2.0 - HOP_DELAY_MS * hop_count - PROCESSING_DELAY_MS
    if value <= 0:
        return CorrectedLatency(MIN_LATENCY_MS, True)
    return CorrectedLatency(value, False)


@dataclass(frozen=True)
class TrainingPair:
    """One calibration sample: corrected latency vs road distance."""

    latency_ms: float
    distance_km: float
    endpoints: tuple[str, str]

    def __post_init__(self) -> None:
        if self.latency_ms <= 0:
            raise ValidationError(f"training latency must be > 0, got {self.latency_ms}")
        if self.distance_km <= 0:
            raise ValidationError(f"training distance must be > 0, got {self.distance_km}")


@dataclass(frozen=True)
class LatencyDistanceCurve:
    """Fitted logarithmic latency-distance model for one landmark."""

    landmark_id: str
    p: float
    q: float
    n: float
    m: float
    residual: float = 0.0

    def arg(self, latency_ms: float) -> float:
        return self.q * latency_ms + self.n

    def predict_km(self, latency_ms: float) -> float:
        """Raw curve value (unscaled, not clamped)."""
        a = self.arg(latency_ms)
        if a <= 0:
            raise DomainError(
                f"latency {latency_ms} ms outside curve domain (q*latency+n = {a:.6g})"
            )
        return self.p * math.log(a) + self.m

    def canonical(self) -> "LatencyDistanceCurve":
        """Gauge-fixed parameters with |n| scaled to 1.

        (p, q, n, m) and (p, cq, cn, m - p ln c) describe the same curve for
        any c > 0; normalizing n makes fitted parameters comparable.
        """
        if self.n == 0:
            return self
        c = 1.0 / abs(self.n)
        return replace(self, q=self.q * c, n=self.n * c, m=self.m - self.p * math.log(c))


def latency_to_distance(
    curve: LatencyDistanceCurve, latency_ms: float, scale: float = 1.0
) -> float:
    """Scaled curve distance in km, clamped below at zero."""
    if not 0 < scale <= MAX_SCALE:
        raise ValidationError(f"scale factor must be in (0, {MAX_SCALE}], got {scale}")
    return scale * max(0.0, curve.predict_km(latency_ms))


def _linear_pm(u: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    """Least-squares (p, m) for d ~ p*u + m."""
    a = np.column_stack([u, np.ones_like(u)])
    sol, *_ = np.linalg.lstsq(a, d, rcond=None)
    return float(sol[0]), float(sol[1])


def _sse(theta: np.ndarray, lat: np.ndarray, d: np.ndarray) -> float:
    p, q, n, m = theta
    arg = q * lat + n
    if np.any(arg <= 0):
        return math.inf
    return float(np.sum((d - (p * np.log(arg) + m)) ** 2))


def _gauss_newton(theta: np.ndarray, lat: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, float]:
    """Damped Gauss-Newton refinement of (p, q, n, m)."""
    lam = 1e-3
    sse = _sse(theta, lat, d)
    for _ in range(200):
        p, q, n, m = theta
        arg = q * lat + n
        resid = d - (p * np.log(arg) + m)
        jac = np.column_stack([np.log(arg), p * lat / arg, p / arg, np.ones_like(lat)])
        jtj = jac.T @ jac
        jtr = jac.T @ resid
        stepped = False
        for _ in range(25):
            damp = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                delta = np.linalg.solve(damp, jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = theta + delta
            trial_sse = _sse(trial, lat, d)
            if trial_sse < sse:
                theta = trial
                improved = sse - trial_sse
                sse = trial_sse
                lam = max(lam / 3.0, 1e-14)
                stepped = True
                if improved <= 1e-15 * (sse + 1e-30):
                    return theta, sse
                break
            lam *= 10.0
            if lam > 1e14:
                return theta, sse
        if not stepped:
            return theta, sse
    return theta, sse


def fit_curve(data: list[TrainingPair], landmark_id: str = "") -> LatencyDistanceCurve:
    """Fit the four curve parameters by least squares.

    Multi-start over coarse (q, n) grids with (p, m) solved linearly at each
    start, refined by damped Gauss-Newton. The winning start must keep the
    curve increasing (p*q > 0) and its argument positive over the data range.
    """
    if len(data) < 4:
        raise InsufficientData(f"need >= 4 training pairs, got {len(data)}")
    lat = np.array([pair.latency_ms for pair in data])
    d = np.array([pair.distance_km for pair in data])
    if float(np.ptp(lat)) == 0.0:
        raise DegenerateData("all training latencies are equal")

    # Candidates valid over all positive latencies (n > 0) are preferred over
    # ones valid only across the training range: targets may sit closer to a
    # landmark than any training pair, and the curve must stay evaluable there.
    best: tuple[float, np.ndarray] | None = None
    best_narrow: tuple[float, np.ndarray] | None = None
    for q0 in _FIT_Q_STARTS:
        for n0 in _FIT_N_STARTS:
            u = np.log(q0 * lat + n0)
            p0, m0 = _linear_pm(u, d)
            if p0 == 0.0:
                continue
            theta0 = np.array([p0, q0, n0, m0])
            theta, sse = _gauss_newton(theta0, lat, d)
            p, q, n, _ = theta
            if p * q <= 0 or np.any(q * lat + n <= 0):
                continue
            if q > 0 and n > 0:
                if best is None or sse < best[0]:
                    best = (sse, theta)
            elif best_narrow is None or sse < best_narrow[0]:
                best_narrow = (sse, theta)
    if best is None:
        best = best_narrow
    if best is None:
        raise FitDiverged("no start converged to a valid increasing curve")
    sse, theta = best
    return LatencyDistanceCurve(
        landmark_id=landmark_id,
        p=float(theta[0]),
        q=float(theta[1]),
        n=float(theta[2]),
        m=float(theta[3]),
        residual=sse,
    )


# --- road distances --------------------------------------------------------

class DistanceProvider(Protocol):
    """Road-network distance source; must be safe for concurrent queries."""

    provider_id: str

    def route_km(self, a: GeoPoint, b: GeoPoint) -> float:
        """Road distance in km, or raise/return non-finite when unroutable."""
        ...


class DetourFactorProvider:
    """Offline provider: great-circle distance times a fixed detour factor.

    Lets the whole pipeline run without network access; the factor models
    how much longer cable-following roads are than the straight line.
    """

    def __init__(self, factor: float = 1.2):
        if factor <= 0 or not math.isfinite(factor):
            raise ValidationError(f"detour factor must be positive, got {factor}")
        self.factor = factor
        self.provider_id = f"detour-{factor:g}"
        self.calls = 0

    def route_km(self, a: GeoPoint, b: GeoPoint) -> float:
        self.calls += 1
        return self.factor * orthodromic_distance(a, b)


class HttpRouteProvider:
    """Routing client for an OSRM-compatible HTTP endpoint.

    Issues GET {base_url}/route/v1/driving/{lon1},{lat1};{lon2},{lat2} and
    reads the first route's distance in meters. Failures propagate to the
    caller, which falls back to the detour estimate.
    """

    def __init__(self, base_url: str, timeout_s: float = 2.0):
        if not base_url:
            raise ValidationError("http provider requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.provider_id = f"http-{self.base_url}"
        self.calls = 0

    def route_km(self, a: GeoPoint, b: GeoPoint) -> float:
        import requests

        self.calls += 1
        url = f"{self.base_url}/route/v1/driving/{a.lon:.6f},{a.lat:.6f};{b.lon:.6f},{b.lat:.6f}"
        resp = requests.get(url, params={"overview": "false"}, timeout=self.timeout_s)
        resp.raise_for_status()
        body = resp.json()
        routes = body.get("routes") or []
        if routes and "distance" in routes[0]:
            return float(routes[0]["distance"]) / 1000.0
        if "distance" in body:
            return float(body["distance"]) / 1000.0
        raise ValueError("response carries no route distance")


class RouteCache:
    """Append-only JSONL cache of provider responses, keyed by rounded coords."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, float] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._entries[record["key"]] = float(record["km"])

    @staticmethod
    def key_for(a: GeoPoint, b: GeoPoint, provider_id: str) -> str:
        return f"{a.lat:.5f},{a.lon:.5f}|{b.lat:.5f},{b.lon:.5f}|{provider_id}"

    def get(self, key: str) -> float | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, km: float) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = km
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                fh.write(json.dumps({"key": key, "km": km}) + "\n")


class RoadDistance(NamedTuple):
    km: float
    fallback: bool


def road_distance(
    provider: DistanceProvider,
    a: GeoPoint,
    b: GeoPoint,
    cache: RouteCache | None = None,
) -> RoadDistance:
    """Road distance between two points, with a flagged great-circle fallback.

    Successful provider responses are cached; provider errors or non-finite
    results yield orthodromic distance plus 10%, flagged as fallback.
    """
    if a == b:
        return RoadDistance(0.0, False)
    key = RouteCache.key_for(a, b, provider.provider_id) if cache else None
    if cache and key is not None:
        hit = cache.get(key)
        if hit is not None:
            return RoadDistance(hit, False)
    try:
        km = provider.route_km(a, b)
        if not math.isfinite(km) or km < 0:
            raise ValueError(f"provider returned invalid distance {km}")
    except Exception:
        return RoadDistance(FALLBACK_DETOUR * orthodromic_distance(a, b), True)
    if cache and key is not None:
        cache.put(key, km)
    return RoadDistance(km, False)


# --- persistence -----------------------------------------------------------

def save_curve(path: str | Path, curve: LatencyDistanceCurve, scale: float = 1.0) -> None:
    payload = {
        "landmark_id": curve.landmark_id,
        "p": curve.p,
        "q": curve.q,
        "n": curve.n,
        "m": curve.m,
        "lc": scale,
        "residual": curve.residual,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_curve(path: str | Path) -> tuple[LatencyDistanceCurve, float]:
    raw = json.loads(Path(path).read_text())
    curve = LatencyDistanceCurve(
        landmark_id=str(raw["landmark_id"]),
        p=float(raw["p"]),
        q=float(raw["q"]),
        n=float(raw["n"]),
        m=float(raw["m"]),
        residual=float(raw.get("residual", 0.0)),
    )
    return curve, float(raw.get("lc", 1.0))
