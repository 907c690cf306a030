from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Tuple

from walkgap.errors import InvalidInputError
from walkgap.geo import GeoPoint


@dataclass(frozen=True)
class RouteRequest:
    origin: GeoPoint
    destination: GeoPoint
    mode: str = "walking"
    units: str = "metric"

    def __post_init__(self):
        if (self.mode, self.units) != ("walking", "metric"):
            raise InvalidInputError(f"only walking/metric routing is supported, got {self.mode}/{self.units}")

    def key(self) -> str:
        """Cache key: endpoints rounded to 6 decimals plus travel mode."""
        o, d = self.origin, self.destination
        return f"{o.lat:.6f},{o.lon:.6f}|{d.lat:.6f},{d.lon:.6f}|{self.mode}"


@dataclass(frozen=True)
class Waypoint:
    label: int
    point: GeoPoint


@dataclass(frozen=True)
class Route:
    total_km: float
    waypoints: Tuple[Waypoint, ...]

    def __post_init__(self):
        if not self.total_km >= 0:
            raise InvalidInputError(f"route length must be nonnegative, got {self.total_km}")
        for i, w in enumerate(self.waypoints):
            if w.label != i:
                raise InvalidInputError(f"waypoint labels must run 0..n-1, got {w.label} at {i}")

    @classmethod
    def from_points(cls, total_km: float, points) -> "Route":
        return cls(float(total_km), tuple(Waypoint(i, p) for i, p in enumerate(points)))

    @property
    def points(self):
        return [w.point for w in self.waypoints]


class RoutingBackend(Protocol):
    def route(self, request: RouteRequest) -> Route: ...
