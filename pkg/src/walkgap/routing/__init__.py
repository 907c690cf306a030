"""Pedestrian routing backends.

Two interchangeable backends share the ``route(request) -> Route`` surface:
:class:`~walkgap.routing.directions.HttpDirectionsBackend` talks to a
directions web API; :class:`~walkgap.routing.synthetic.SyntheticBackend`
runs Dijkstra over an offline street lattice.
"""

from walkgap.routing.base import Route, RouteRequest, RoutingBackend, Waypoint
from walkgap.routing.directions import (
    HttpDirectionsBackend,
    RateLimiter,
    ResponseCache,
    parse_directions_json,
)
from walkgap.routing.synthetic import StreetGraph, SyntheticBackend, lattice_graph, shortest_path


def route(backend: RoutingBackend, request: RouteRequest) -> Route:
    return backend.route(request)


__all__ = [
    "Route", "RouteRequest", "RoutingBackend", "Waypoint",
    "HttpDirectionsBackend", "RateLimiter", "ResponseCache", "parse_directions_json",
    "StreetGraph", "SyntheticBackend", "lattice_graph", "shortest_path", "route",
]
