"""Great-circle geometry on a spherical earth.

Bearings are degrees clockwise from true north. All public functions take
and return decimal degrees; radians are used internally only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from walkgap.errors import InvalidInputError


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        lat, lon = self.lat, self.lon
        if not (isinstance(lat, (int, float)) and isinstance(lon, (int, float))):
            raise InvalidInputError(f"coordinates must be numbers, got ({lat!r}, {lon!r})")
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InvalidInputError(f"non-finite coordinate ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise InvalidInputError(f"latitude {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise InvalidInputError(f"longitude {lon} outside [-180, 180]")
        # normalise ints so equality/hash/formatting behave uniformly
        object.__setattr__(self, "lat", float(lat))
        object.__setattr__(self, "lon", float(lon))

    @classmethod
    def is_valid(cls, lat, lon) -> bool:
        try:
            cls(lat, lon)
        except InvalidInputError:
            return False
        return True


@dataclass(frozen=True)
class EarthModel:
    radius_km: float = 6371.0

    def __post_init__(self):
        if not (math.isfinite(self.radius_km) and self.radius_km > 0):
            raise InvalidInputError(f"earth radius must be positive, got {self.radius_km}")


EARTH = EarthModel()


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def __post_init__(self):
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise InvalidInputError(f"inverted bounding box {self}")

    def contains(self, p: GeoPoint) -> bool:
        return self.min_lat <= p.lat <= self.max_lat and self.min_lon <= p.lon <= self.max_lon


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def haversine_distance(a: GeoPoint, b: GeoPoint, earth: EarthModel = EARTH) -> float:
    """Great-circle distance in km between two points."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2.0 * earth.radius_km * math.asin(math.sqrt(_clamp(h, 0.0, 1.0)))


def haversine_matrix(lat1, lon1, lat2, lon2, earth: EarthModel = EARTH) -> np.ndarray:
    """Pairwise distances (km) between two coordinate sets, shape (len(lat1), len(lat2))."""
    phi1 = np.radians(np.asarray(lat1, dtype=float))[:, None]
    phi2 = np.radians(np.asarray(lat2, dtype=float))[None, :]
    lam1 = np.asarray(lon1, dtype=float)[:, None]
    lam2 = np.asarray(lon2, dtype=float)[None, :]
    dlam = np.radians(lam2 - lam1)
    h = np.sin((phi2 - phi1) / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2.0 * earth.radius_km * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def normalize_lon(lon: float) -> float:
    out = math.fmod(lon + 180.0, 360.0)
    if out < 0:
        out += 360.0
    out -= 180.0
    # keep +180 input as +180 rather than wrapping to -180
    if out == -180.0 and lon > 0:
        return 180.0
    return out


def destination_point(origin: GeoPoint, bearing_deg: float, distance_km: float,
                      earth: EarthModel = EARTH) -> GeoPoint:
    """Point reached by travelling ``distance_km`` from ``origin`` along ``bearing_deg``."""
    if not math.isfinite(distance_km) or distance_km < 0:
        raise InvalidInputError(f"distance must be a nonnegative number, got {distance_km}")
    if not math.isfinite(bearing_deg):
        raise InvalidInputError(f"bearing must be finite, got {bearing_deg}")
    if distance_km == 0:
        return origin
    theta = math.radians(bearing_deg % 360.0)
    delta = distance_km / earth.radius_km
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    phi2 = math.asin(_clamp(sin_phi2, -1.0, 1.0))
    lam2 = lam1 + math.atan2(math.sin(theta) * math.sin(delta) * math.cos(phi1),
                             math.cos(delta) - math.sin(phi1) * math.sin(phi2))
    lat2 = _clamp(math.degrees(phi2), -90.0, 90.0)
    return GeoPoint(lat2, normalize_lon(math.degrees(lam2)))


def circle_polygon(center: GeoPoint, radius_km: float, step_deg: float = 15.0,
                   earth: EarthModel = EARTH) -> List[GeoPoint]:
    """Vertices of a geodesic circle at bearings 0, step, ..., 360-step.

    The ring is open: the 0/360 vertex is not repeated.
    """
    if not math.isfinite(step_deg) or step_deg <= 0:
        raise InvalidInputError(f"step must be positive, got {step_deg}")
    count = 360.0 / step_deg
    n = round(count)
    if n < 1 or abs(count - n) > 1e-9:
        raise InvalidInputError(f"step {step_deg} does not divide 360 evenly")
    if radius_km < 0:
        raise InvalidInputError(f"radius must be nonnegative, got {radius_km}")
    return [destination_point(center, i * step_deg, radius_km, earth) for i in range(n)]


def bounding_box(points: Iterable[GeoPoint]) -> BoundingBox:
    pts: Sequence[GeoPoint] = list(points)
    if not pts:
        raise InvalidInputError("bounding box of an empty point set")
    lats = [p.lat for p in pts]
    lons = [p.lon for p in pts]
    return BoundingBox(min(lats), max(lats), min(lons), max(lons))
