"""Walkability pipeline: annulus pairing, footpath discrepancies, worst-k selection
and per-point unwalkability scores."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from walkgap.errors import InvalidInputError, NoCoverageError, NoRouteError, ParseError
from walkgap.geo import EARTH, EarthModel, GeoPoint, haversine_distance, haversine_matrix
from walkgap.grid import GridDestination
from walkgap.ingest import AmenityOrigin
from walkgap.routing.base import RouteRequest, RoutingBackend, Waypoint

logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE_KM = 1e-6
AGGREGATIONS = ("mean", "max", "weighted", "nearest")


@dataclass(frozen=True)
class AnalysisParams:
    annulus_min_km: float = 1.5
    annulus_max_km: float = 2.0
    top_k: int = 5
    walkability_radius_km: float = 2.0

    def __post_init__(self):
        if not 0 <= self.annulus_min_km < self.annulus_max_km:
            raise InvalidInputError(
                f"need 0 <= annulus_min < annulus_max, got {self.annulus_min_km}, {self.annulus_max_km}")
        if self.top_k < 1:
            raise InvalidInputError(f"top_k must be >= 1, got {self.top_k}")
        if not self.walkability_radius_km > 0:
            raise InvalidInputError("walkability radius must be positive")


@dataclass(frozen=True)
class CandidatePair:
    origin_id: int
    dest_id: int
    euclidean_km: float


@dataclass(frozen=True)
class RoutedPair:
    pair: CandidatePair
    footpath_km: float
    waypoints: Tuple[Waypoint, ...]

    @property
    def discrepancy_km(self) -> float:
        return self.footpath_km - self.pair.euclidean_km

    @property
    def origin_id(self) -> int:
        return self.pair.origin_id

    @property
    def dest_id(self) -> int:
        return self.pair.dest_id


@dataclass
class DiscrepancyResult:
    routed: List[RoutedPair] = field(default_factory=list)
    unrouted: List[Tuple[CandidatePair, str]] = field(default_factory=list)


def pair_candidates(origins: Sequence[AmenityOrigin], dests: Sequence[GridDestination],
                    params: AnalysisParams = AnalysisParams(), earth: EarthModel = EARTH) -> List[CandidatePair]:
    """All (origin, destination) pairs with great-circle distance in (min, max]."""
    if not origins or not dests:
        return []
    origins = sorted(origins, key=lambda o: o.id)
    dests = sorted(dests, key=lambda d: d.id)
    d = haversine_matrix([o.point.lat for o in origins], [o.point.lon for o in origins],
                         [g.point.lat for g in dests], [g.point.lon for g in dests], earth)
    mask = (d > params.annulus_min_km) & (d <= params.annulus_max_km)
    out = []
    for i, j in zip(*np.nonzero(mask)):  # row-major: origin order, then destination order
        out.append(CandidatePair(origins[i].id, dests[j].id, float(d[i, j])))
    return out


def compute_discrepancies(pairs: Sequence[CandidatePair], backend: RoutingBackend,
                          origins: Iterable[AmenityOrigin], dests: Iterable[GridDestination],
                          parallelism: int = 4) -> DiscrepancyResult:
    """Route every pair and attach footpath length and waypoints.

    Unreachable pairs and pairs whose footpath undercuts the great circle
    are reported in ``unrouted`` with a reason. Transport and API errors
    propagate. Output order is sorted by (origin id, dest id).
    """
    if parallelism < 1:
        raise InvalidInputError("parallelism must be >= 1")
    opts = {o.id: o.point for o in origins}
    dpts = {d.id: d.point for d in dests}
    ordered = sorted(pairs, key=lambda p: (p.origin_id, p.dest_id))

    def one(pair: CandidatePair):
        req = RouteRequest(opts[pair.origin_id], dpts[pair.dest_id])
        try:
            return backend.route(req)
        except NoRouteError as exc:
            return exc

    if parallelism == 1 or len(ordered) <= 1:
        outcomes = [one(p) for p in ordered]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(one, ordered))

    result = DiscrepancyResult()
    for pair, outcome in zip(ordered, outcomes):
        if isinstance(outcome, NoRouteError):
            result.unrouted.append((pair, f"no route: {outcome}"))
            continue
        routed = RoutedPair(pair, outcome.total_km, outcome.waypoints)
        if routed.discrepancy_km < -NEGATIVE_TOLERANCE_KM:
            logger.warning("backend inconsistency for %s: footpath %.6f < euclidean %.6f",
                           pair, outcome.total_km, pair.euclidean_km)
            result.unrouted.append((pair, "backend inconsistency: footpath shorter than great circle"))
            continue
        result.routed.append(routed)
    return result


def top_k_per_origin(routed: Iterable[RoutedPair], k: int) -> List[RoutedPair]:
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    groups: Dict[int, List[RoutedPair]] = defaultdict(list)
    for r in routed:
        groups[r.origin_id].append(r)
    out = []
    for oid in sorted(groups):
        ranked = sorted(groups[oid], key=lambda r: (-r.discrepancy_km, r.dest_id))
        out.extend(ranked[:k])
    return out


def unwalkability_score(point: GeoPoint, origins: Sequence[AmenityOrigin], backend: RoutingBackend,
                        params: AnalysisParams = AnalysisParams(), aggregation: str = "mean",
                        earth: EarthModel = EARTH) -> float:
    """Aggregate footpath-minus-straight-line detour (km) from ``point`` to nearby amenities.

    Amenities within ``params.walkability_radius_km`` are routed directly from
    the point. ``aggregation`` is one of mean, max, weighted (importance-weighted
    mean) or nearest (detour to the closest amenity only).
    """
    if aggregation not in AGGREGATIONS:
        raise InvalidInputError(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")
    nearby = [(haversine_distance(point, o.point, earth), o) for o in origins]
    nearby = sorted((x for x in nearby if x[0] <= params.walkability_radius_km), key=lambda x: (x[0], x[1].id))
    if aggregation == "nearest":
        nearby = nearby[:1]

    detours, weights = [], []
    for euclid, amenity in nearby:
        try:
            route = backend.route(RouteRequest(point, amenity.point))
        except NoRouteError:
            continue
        detours.append(route.total_km - euclid)
        weights.append(amenity.importance_weight)
    if not detours:
        raise NoCoverageError(f"no routable amenity within {params.walkability_radius_km} km of {point}")

    if aggregation == "max":
        score = max(detours)
    elif aggregation == "weighted":
        score = float(np.average(detours, weights=weights))
    else:
        score = float(np.mean(detours))
    return max(score, 0.0)


# --- intermediate CSV artifacts --------------------------------------------

CANDIDATE_HEADER = ["origin_id", "origin_name", "origin_lat", "origin_lon",
                    "dest_id", "dest_lat", "dest_lon", "euclidean_km"]
ROUTED_HEADER = CANDIDATE_HEADER + ["footpath_km", "discrepancy_km", "steps"]
UNROUTED_HEADER = ["origin_id", "dest_id", "euclidean_km", "reason"]


def _f6(x: float) -> str:
    return f"{x:.6f}"


def encode_waypoints(waypoints: Sequence[Waypoint]) -> str:
    """``"0:lat,lon;1:lat,lon;..."`` with 6-decimal coordinates."""
    return ";".join(f"{w.label}:{w.point.lat:.6f},{w.point.lon:.6f}" for w in waypoints)


def decode_waypoints(text: str) -> Tuple[Waypoint, ...]:
    out = []
    if not text:
        return ()
    for chunk in text.split(";"):
        label, coords = chunk.split(":", 1)
        lat, lon = coords.split(",")
        out.append(Waypoint(int(label), GeoPoint(float(lat), float(lon))))
    return tuple(out)


def _writer(sink):
    return csv.writer(sink, lineterminator="\n")


def _pair_cells(p: CandidatePair, origins: Mapping[int, AmenityOrigin], dests: Mapping[int, GridDestination]):
    o, d = origins[p.origin_id], dests[p.dest_id]
    return [p.origin_id, o.name, _f6(o.point.lat), _f6(o.point.lon),
            p.dest_id, _f6(d.point.lat), _f6(d.point.lon), _f6(p.euclidean_km)]


def write_candidates_csv(pairs, origins, dests, sink) -> int:
    om = {o.id: o for o in origins}
    dm = {d.id: d for d in dests}
    w = _writer(sink)
    w.writerow(CANDIDATE_HEADER)
    for p in pairs:
        w.writerow(_pair_cells(p, om, dm))
    return len(pairs)


def write_routed_csv(routed, origins, dests, sink) -> int:
    om = {o.id: o for o in origins}
    dm = {d.id: d for d in dests}
    w = _writer(sink)
    w.writerow(ROUTED_HEADER)
    for r in routed:
        w.writerow(_pair_cells(r.pair, om, dm) + [_f6(r.footpath_km), _f6(r.discrepancy_km),
                                                   encode_waypoints(r.waypoints)])
    return len(routed)


def write_unrouted_csv(unrouted, sink) -> int:
    w = _writer(sink)
    w.writerow(UNROUTED_HEADER)
    for pair, reason in unrouted:
        w.writerow([pair.origin_id, pair.dest_id, _f6(pair.euclidean_km), reason])
    return len(unrouted)


def read_routed_csv(source) -> List[RoutedPair]:
    """Read back a routed/top-k CSV written by :func:`write_routed_csv`."""
    text = source if isinstance(source, str) else source.read()
    reader = csv.DictReader(io.StringIO(text, newline=""))
    missing = [c for c in ROUTED_HEADER if c not in (reader.fieldnames or [])]
    if missing:
        raise ParseError(f"routed CSV missing columns {missing}")
    out = []
    for row in reader:
        try:
            pair = CandidatePair(int(row["origin_id"]), int(row["dest_id"]), float(row["euclidean_km"]))
            out.append(RoutedPair(pair, float(row["footpath_km"]), decode_waypoints(row["steps"])))
        except (ValueError, InvalidInputError) as exc:
            raise ParseError(f"bad routed row: {exc}", line=reader.line_num) from exc
    return out
