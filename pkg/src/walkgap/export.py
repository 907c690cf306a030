"""Writers for normalized datasets, the long-format viz CSV, and GeoJSON.

The viz CSV is one row per drawable point: origins ("point"), destination
grid ("random grid"), circle vertices ("Circle"), and path waypoints
(label "point" with a ``path_order``). Coordinates are written with six
decimals and distances with three, so output is byte-stable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from walkgap.errors import InvalidInputError
from walkgap.geo import GeoPoint, circle_polygon
from walkgap.grid import GridDestination
from walkgap.ingest import AddressPoint, AmenityOrigin, HouseRecord

VIZ_HEADER = ["PointID", "Latitude", "Longitude", "weight", "label", "path_order", "travel_length_km"]
LABEL_POINT, LABEL_CIRCLE, LABEL_GRID = "point", "Circle", "random grid"


def _writer(sink):
    return csv.writer(sink, lineterminator="\n")


def _num(x: float) -> str:
    return f"{float(x):g}" if float(x).is_integer() else repr(float(x))


# --- normalized datasets ----------------------------------------------------

def write_addresses_csv(records: Iterable[AddressPoint], sink) -> int:
    w = _writer(sink)
    w.writerow(["Id", "Latitude", "Longitude"])
    n = 0
    for r in records:
        w.writerow([r.id, repr(r.point.lat), repr(r.point.lon)])
        n += 1
    return n


def write_amenities_csv(origins: Iterable[AmenityOrigin], sink) -> int:
    w = _writer(sink)
    w.writerow(["Name", "Latitude", "Longitude", "Commercial-Delivery-Points", "Section", "Category"])
    n = 0
    for o in sorted(origins, key=lambda o: o.id):
        w.writerow([o.name, repr(o.point.lat), repr(o.point.lon), o.delivery_points,
                    o.section_code, o.category.value])
        n += 1
    return n


def write_houses_csv(houses: Iterable[HouseRecord], sink) -> int:
    w = _writer(sink)
    w.writerow(["Latitude", "Longitude", "Address", "Type", "Price"])
    n = 0
    for h in houses:
        w.writerow([repr(h.point.lat), repr(h.point.lon), h.address,
                    "New" if h.dwelling_type == 1 else "SecondHand", repr(h.price_eur)])
        n += 1
    return n


def write_grid_csv(grid: Iterable[GridDestination], sink) -> int:
    w = _writer(sink)
    w.writerow(["id", "Latitude", "Longitude"])
    n = 0
    for g in grid:
        w.writerow([g.id, repr(g.point.lat), repr(g.point.lon)])
        n += 1
    return n


# --- circles ---------------------------------------------------------------

@dataclass(frozen=True)
class CircleParams:
    scale: float = 0.1
    step_deg: float = 15.0
    sizing: str = "discrepancy"  # or "importance"

    def __post_init__(self):
        if not self.scale >= 0:
            raise InvalidInputError("circle scale must be nonnegative")
        if self.sizing not in ("discrepancy", "importance"):
            raise InvalidInputError(f"unknown circle sizing {self.sizing!r}")


def origin_circles(origins: Sequence[AmenityOrigin], routed_pairs, params: CircleParams = CircleParams()
                   ) -> List[Tuple[AmenityOrigin, float, List[GeoPoint]]]:
    """One open circle per origin: ``(origin, radius_km, vertices)``.

    With discrepancy sizing the radius is ``scale`` times the origin's largest
    discrepancy (zero if it has no routed pairs).
    """
    worst: Dict[int, float] = {}
    for r in routed_pairs:
        worst[r.origin_id] = max(worst.get(r.origin_id, 0.0), r.discrepancy_km)
    out = []
    for o in sorted(origins, key=lambda o: o.id):
        size = worst.get(o.id, 0.0) if params.sizing == "discrepancy" else o.importance_weight
        radius = params.scale * max(size, 0.0)
        out.append((o, radius, circle_polygon(o.point, radius, params.step_deg)))
    return out


# --- viz CSV ----------------------------------------------------------------

def write_viz_csv(origins: Sequence[AmenityOrigin], grid: Sequence[GridDestination], routed_pairs,
                  circle_params: CircleParams, sink) -> int:
    """Long-format table for dashboard tools. Returns the number of data rows written."""
    w = _writer(sink)
    w.writerow(VIZ_HEADER)
    rows = 0
    by_id = {o.id: o for o in origins}

    def emit(pid, p: GeoPoint, weight, label, order="", length=0.0):
        nonlocal rows
        w.writerow([pid, f"{p.lat:.6f}", f"{p.lon:.6f}", _num(weight), label, order, f"{length:.3f}"])
        rows += 1

    for origin, _radius, ring in origin_circles(origins, routed_pairs, circle_params):
        emit(origin.name, origin.point, origin.importance_weight, LABEL_POINT)
        for v in ring:
            emit(origin.name, v, origin.importance_weight, LABEL_CIRCLE)
    for g in sorted(grid, key=lambda g: g.id):
        emit(f"grid-{g.id}", g.point, 0, LABEL_GRID)
    for r in sorted(routed_pairs, key=lambda r: (r.origin_id, r.dest_id)):
        o = by_id[r.origin_id]
        pid = f"{o.name}|grid-{r.dest_id}"
        for wp in r.waypoints:
            emit(pid, wp.point, o.importance_weight, LABEL_POINT, wp.label, r.footpath_km)
    return rows


def viz_row_count(n_origins: int, circle_vertices: int, n_grid: int, waypoint_counts: Iterable[int]) -> int:
    return n_origins * (1 + circle_vertices) + n_grid + sum(waypoint_counts)


# --- GeoJSON ----------------------------------------------------------------

def _pos(p: GeoPoint) -> List[float]:
    return [p.lon, p.lat]


def geojson_document(routed_pairs, origins: Sequence[AmenityOrigin], circles) -> dict:
    by_id = {o.id: o for o in origins}
    features = []
    for o in sorted(origins, key=lambda o: o.id):
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": _pos(o.point)},
            "properties": {"kind": "origin", "origin_id": o.id, "name": o.name,
                           "category": o.category.value, "importance": o.importance_weight},
        })
    for origin, radius, ring in circles:
        if not ring:
            continue
        closed = [_pos(p) for p in ring] + [_pos(ring[0])]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [closed]},
            "properties": {"kind": "circle", "origin_id": origin.id, "radius_km": radius},
        })
    for r in sorted(routed_pairs, key=lambda r: (r.origin_id, r.dest_id)):
        o = by_id.get(r.origin_id)
        line = [_pos(w.point) for w in r.waypoints]
        if len(line) == 1:
            line = line * 2  # LineString needs two positions
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": line},
            "properties": {"kind": "footpath", "origin_id": r.origin_id,
                           "origin_name": o.name if o else None, "dest_id": r.dest_id,
                           "euclidean_km": r.pair.euclidean_km, "footpath_km": r.footpath_km,
                           "discrepancy_km": r.discrepancy_km},
        })
    return {"type": "FeatureCollection", "features": features}


def write_geojson(routed_pairs, origins: Sequence[AmenityOrigin], circles, sink) -> int:
    doc = geojson_document(routed_pairs, origins, circles)
    sink.write(json.dumps(doc, separators=(",", ":"), ensure_ascii=False))
    sink.write("\n")
    return len(doc["features"])
