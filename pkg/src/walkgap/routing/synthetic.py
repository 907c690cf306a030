"""Offline street-graph router used in place of a directions API.

Nodes are points, edges are undirected with haversine length. Origin and
destination are snapped to their nearest node (ties to the lowest id); the
access and egress legs between the request endpoints and the snapped nodes
are included in the route so that a route never beats the great circle.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Tuple

import numpy as np

from walkgap.errors import InvalidInputError, NoRouteError, ParseError
from walkgap.geo import EARTH, EarthModel, GeoPoint, haversine_distance, haversine_matrix
from walkgap.routing.base import Route, RouteRequest

Edge = Tuple[int, int]


def _norm(edge) -> Edge:
    i, j = int(edge[0]), int(edge[1])
    return (i, j) if i <= j else (j, i)


@dataclass
class StreetGraph:
    nodes: List[GeoPoint]
    edges: List[Edge]
    removed: FrozenSet[Edge] = field(default_factory=frozenset)
    earth: EarthModel = EARTH

    def __post_init__(self):
        n = len(self.nodes)
        self.edges = [_norm(e) for e in self.edges]
        self.removed = frozenset(_norm(e) for e in self.removed)
        self._adj: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise InvalidInputError(f"bad edge ({i}, {j}) for {n} nodes")
            if (i, j) in self.removed:
                continue
            w = haversine_distance(self.nodes[i], self.nodes[j], self.earth)
            if not w > 0:
                raise InvalidInputError(f"edge ({i}, {j}) has zero length")
            self._adj[i].append((j, w))
            self._adj[j].append((i, w))
        for nbrs in self._adj:
            nbrs.sort()
        self._lat = np.array([p.lat for p in self.nodes])
        self._lon = np.array([p.lon for p in self.nodes])

    def neighbors(self, i: int) -> List[Tuple[int, float]]:
        return self._adj[i]

    def active_edges(self) -> List[Tuple[int, int, float]]:
        return [(i, j, w) for i in range(len(self.nodes)) for j, w in self._adj[i] if i < j]

    def without(self, extra_removed: Iterable[Edge]) -> "StreetGraph":
        return StreetGraph(self.nodes, self.edges, self.removed | {_norm(e) for e in extra_removed}, self.earth)

    def snap(self, p: GeoPoint) -> int:
        if not self.nodes:
            raise InvalidInputError("empty street graph")
        d = haversine_matrix([p.lat], [p.lon], self._lat, self._lon, self.earth)[0]
        return int(np.argmin(d))  # argmin returns the first, i.e. lowest id, on ties

    # -- serialization --
    def to_json(self) -> dict:
        return {
            "nodes": [[p.lat, p.lon] for p in self.nodes],
            "edges": [list(e) for e in self.edges],
            "removed": [list(e) for e in sorted(self.removed)],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "StreetGraph":
        try:
            nodes = [GeoPoint(float(a), float(b)) for a, b in doc["nodes"]]
            return cls(nodes, [tuple(e) for e in doc["edges"]], frozenset(tuple(e) for e in doc.get("removed", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"invalid street graph document: {exc}") from exc

    @classmethod
    def load(cls, path: str) -> "StreetGraph":
        with open(path, "rb") as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, source=path, line=exc.lineno, column=exc.colno) from exc

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, separators=(",", ":"))
            fh.write("\n")


def lattice_graph(south_west: GeoPoint, rows: int, cols: int, lat_step: float, lon_step: float,
                  removed: Iterable[Edge] = ()) -> StreetGraph:
    """Rectangular street lattice; node id = row * cols + col, row 0 southernmost."""
    nodes = [GeoPoint(south_west.lat + r * lat_step, south_west.lon + c * lon_step)
             for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return StreetGraph(nodes, edges, frozenset(removed))


def _dijkstra(graph: StreetGraph, source: int) -> List[float]:
    dist = [math.inf] * len(graph.nodes)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in graph.neighbors(u):
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def node_path(graph: StreetGraph, source: int, target: int) -> Tuple[float, List[int]]:
    """Shortest node sequence from ``source`` to ``target``.

    Among equal-length paths the lexicographically smallest id sequence wins:
    walk forward from the source, always taking the lowest-id neighbour that
    still lies on some shortest path (checked against distances to target).
    """
    if source == target:
        return 0.0, [source]
    to_target = _dijkstra(graph, target)
    total = to_target[source]
    if math.isinf(total):
        raise NoRouteError(f"no path between nodes {source} and {target}")
    tol = 1e-12 * (1.0 + total)
    path = [source]
    u, travelled = source, 0.0
    while u != target:
        for v, w in graph.neighbors(u):  # sorted by id
            if abs(travelled + w + to_target[v] - total) <= tol and v not in path:
                path.append(v)
                travelled += w
                u = v
                break
        else:  # pragma: no cover - unreachable with consistent distances
            raise RuntimeError("failed to reconstruct shortest path")
    return total, path


def shortest_path(graph: StreetGraph, origin: GeoPoint, destination: GeoPoint) -> Route:
    s = graph.snap(origin)
    t = graph.snap(destination)
    length, ids = node_path(graph, s, t)
    pts = [graph.nodes[i] for i in ids]
    access = haversine_distance(origin, pts[0], graph.earth)
    egress = haversine_distance(pts[-1], destination, graph.earth)
    if access > 0:
        pts.insert(0, origin)
    if egress > 0:
        pts.append(destination)
    return Route.from_points(access + length + egress, pts)


class SyntheticBackend:
    """Routing backend over a :class:`StreetGraph`. Never touches the network."""

    def __init__(self, graph: StreetGraph):
        self.graph = graph

    def route(self, request: RouteRequest) -> Route:
        return shortest_path(self.graph, request.origin, request.destination)
