"""Regular destination grid over the study area, with optional polygon clipping."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from walkgap.errors import InvalidInputError, ParseError
from walkgap.geo import BoundingBox, GeoPoint


@dataclass(frozen=True)
class GridDestination:
    id: int
    point: GeoPoint


@dataclass(frozen=True)
class GridSpec:
    bbox: BoundingBox
    lat_step: float
    lon_step: float

    def __post_init__(self):
        for name in ("lat_step", "lon_step"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {v}")


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    # np.arange over [lo, hi); a zero-width extent still yields the single value lo
    if hi <= lo:
        return np.array([lo])
    return lo + step * np.arange(math.ceil((hi - lo) / step))


def axis_counts(spec: GridSpec) -> tuple:
    b = spec.bbox
    return len(_axis(b.min_lat, b.max_lat, spec.lat_step)), len(_axis(b.min_lon, b.max_lon, spec.lon_step))


def generate_grid(spec: GridSpec, jitter: float = 0.0, seed: Optional[int] = None) -> List[GridDestination]:
    """Row-major (latitude outer, longitude inner) lattice of destinations.

    ``jitter`` is a fraction of the step size; each point is displaced by a
    seeded uniform offset in ``[-jitter/2, jitter/2] * step``. Off by default.
    """
    b = spec.bbox
    lats = _axis(b.min_lat, b.max_lat, spec.lat_step)
    lons = _axis(b.min_lon, b.max_lon, spec.lon_step)
    rng = np.random.default_rng(seed) if jitter else None
    out = []
    for lat in lats:
        for lon in lons:
            la, lo = float(lat), float(lon)
            if rng is not None:
                la += float(rng.uniform(-0.5, 0.5)) * jitter * spec.lat_step
                lo += float(rng.uniform(-0.5, 0.5)) * jitter * spec.lon_step
                la = min(max(la, -90.0), 90.0)
                lo = min(max(lo, -180.0), 180.0)
            out.append(GridDestination(len(out), GeoPoint(la, lo)))
    return out


def _on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint, eps: float = 1e-12) -> bool:
    cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon)
    if abs(cross) > eps:
        return False
    return (min(a.lon, b.lon) - eps <= p.lon <= max(a.lon, b.lon) + eps
            and min(a.lat, b.lat) - eps <= p.lat <= max(a.lat, b.lat) + eps)


def point_in_polygon(p: GeoPoint, ring: Sequence[GeoPoint]) -> bool:
    """Even-odd ray cast in (lon, lat) plane; boundary points count as inside."""
    n = len(ring)
    inside = False
    j = n - 1
    for i in range(n):
        a, b = ring[i], ring[j]
        if _on_segment(p, a, b):
            return True
        if (a.lat > p.lat) != (b.lat > p.lat):
            x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat)
            if p.lon < x:
                inside = not inside
        j = i
    return inside


def clip_to_polygon(grid: Sequence[GridDestination], boundary: Sequence[GeoPoint]) -> List[GridDestination]:
    ring = list(boundary)
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring = ring[:-1]
    if len(ring) < 3:
        raise InvalidInputError(f"boundary ring needs at least 3 distinct vertices, got {len(ring)}")
    return [g for g in grid if point_in_polygon(g.point, ring)]


def load_boundary_geojson(path: str) -> List[GeoPoint]:
    """First (outer) ring of the first Polygon found in a GeoJSON file."""
    with open(path, "rb") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid GeoJSON: {exc.msg}", source=path, line=exc.lineno, column=exc.colno) from exc

    def find(obj):
        t = obj.get("type") if isinstance(obj, dict) else None
        if t == "Polygon":
            return obj["coordinates"][0]
        if t == "MultiPolygon":
            return obj["coordinates"][0][0]
        if t == "Feature":
            return find(obj.get("geometry") or {})
        if t == "FeatureCollection":
            for f in obj.get("features", []):
                r = find(f)
                if r is not None:
                    return r
        return None

    ring = find(doc)
    if ring is None:
        raise ParseError("no Polygon geometry found", source=path)
    return [GeoPoint(float(lat), float(lon)) for lon, lat, *_ in ring]


def read_grid_csv(source) -> List[GridDestination]:
    """Read a grid file written by :func:`walkgap.export.write_grid_csv`."""
    text = source if isinstance(source, str) else source.read()
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if not reader.fieldnames or not {"id", "Latitude", "Longitude"} <= set(reader.fieldnames):
        raise ParseError("grid CSV needs columns id, Latitude, Longitude")
    out = []
    for row in reader:
        try:
            out.append(GridDestination(int(row["id"]), GeoPoint(float(row["Latitude"]), float(row["Longitude"]))))
        except (ValueError, InvalidInputError) as exc:
            raise ParseError(f"bad grid row: {exc}", line=reader.line_num) from exc
    return out
