"""Directions web API client with an on-disk response cache and a rate limiter.

The response schema is the common ``routes[].legs[]`` layout: the first leg
carries the total ``distance.value`` in metres plus ``start_location``, and
``steps[].end_location`` give the ordered waypoints.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from pathlib import Path
from typing import Callable, Optional

import requests

from walkgap.errors import (
    ApiStatusError,
    ConfigurationError,
    DecodeError,
    InvalidInputError,
    NoRouteError,
    TransportError,
)
from walkgap.geo import GeoPoint
from walkgap.routing.base import Route, RouteRequest

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://maps.googleapis.com/maps/api/directions/json"

# Statuses meaning "the request was fine, there is just no walking route".
NO_ROUTE_STATUSES = frozenset({"ZERO_RESULTS", "NOT_FOUND"})
# Statuses whose responses are deterministic and therefore safe to cache.
CACHEABLE_STATUSES = frozenset({"OK"}) | NO_ROUTE_STATUSES


def _get(obj, key, path):
    try:
        return obj[key]
    except (KeyError, IndexError, TypeError):
        raise DecodeError(f"directions response missing field {path!r}", field=path) from None


def _point(loc, path) -> GeoPoint:
    try:
        return GeoPoint(float(_get(loc, "lat", path + ".lat")), float(_get(loc, "lng", path + ".lng")))
    except (InvalidInputError, ValueError, TypeError) as exc:
        raise DecodeError(f"bad coordinate at {path!r}: {exc}", field=path) from None


def response_status(body: bytes) -> str:
    try:
        doc = json.loads(body)
    except (ValueError, UnicodeDecodeError) as exc:
        raise DecodeError(f"directions response is not JSON: {exc}") from None
    status = _get(doc, "status", "status")
    if not isinstance(status, str):
        raise DecodeError("status field is not a string", field="status")
    return status


def parse_directions_json(body: bytes) -> Route:
    """Turn a raw directions response into a :class:`Route`.

    Raises NoRouteError for ZERO_RESULTS/NOT_FOUND, ApiStatusError for any
    other non-OK status and DecodeError for structurally incomplete bodies.
    """
    status = response_status(body)
    doc = json.loads(body)
    if status in NO_ROUTE_STATUSES:
        raise NoRouteError(f"no walking route ({status})", status=status)
    if status != "OK":
        raise ApiStatusError(status, doc.get("error_message", "") if isinstance(doc, dict) else "")

    routes = _get(doc, "routes", "routes")
    route0 = _get(routes, 0, "routes[0]")
    legs = _get(route0, "legs", "routes[0].legs")
    leg = _get(legs, 0, "routes[0].legs[0]")
    metres = _get(_get(leg, "distance", "legs[0].distance"), "value", "legs[0].distance.value")
    try:
        total_km = float(metres) / 1000.0
    except (TypeError, ValueError):
        raise DecodeError("distance.value is not numeric", field="legs[0].distance.value") from None

    points = [_point(_get(leg, "start_location", "legs[0].start_location"), "legs[0].start_location")]
    for i, step in enumerate(_get(leg, "steps", "legs[0].steps")):
        path = f"legs[0].steps[{i}].end_location"
        points.append(_point(_get(step, "end_location", path), path))
    return Route.from_points(total_km, points)


class RateLimiter:
    """Spaces calls at least ``1/rate`` seconds apart. Thread safe.

    ``clock`` and ``sleep`` are injectable so tests can run on simulated time.
    """

    def __init__(self, rate_per_s: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if not rate_per_s > 0:
            raise InvalidInputError(f"rate must be positive, got {rate_per_s}")
        self.interval = 1.0 / rate_per_s
        self.clock = clock
        self.sleep = sleep
        self._next = None
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self.clock()
            slot = now if self._next is None else max(now, self._next)
            self._next = slot + self.interval
        wait = slot - now
        if wait > 0:
            self.sleep(wait)


class ResponseCache:
    """One file per request: ``<dir>/<sha256(key)>.json`` holding the raw body."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def path_for(self, key: str) -> Path:
        return self.directory / (hashlib.sha256(key.encode("utf-8")).hexdigest() + ".json")

    def get(self, key: str) -> Optional[bytes]:
        p = self.path_for(key)
        try:
            return p.read_bytes()
        except FileNotFoundError:
            return None

    def put(self, key: str, body: bytes) -> None:
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(body)
                os.replace(tmp, self.path_for(key))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

    def __contains__(self, key: str) -> bool:
        return self.path_for(key).exists()


class HttpDirectionsBackend:
    def __init__(self, api_key: Optional[str], base_url: str = DEFAULT_BASE_URL,
                 cache: Optional[ResponseCache] = None, rate_limiter: Optional[RateLimiter] = None,
                 session: Optional[requests.Session] = None, max_attempts: int = 3,
                 backoff_s: float = 0.5, timeout_s: float = 30.0,
                 sleep: Callable[[float], None] = time.sleep):
        if not api_key:
            raise ConfigurationError("the http backend needs an API key")
        if max_attempts < 1:
            raise InvalidInputError("max_attempts must be >= 1")
        self.api_key = api_key
        self.base_url = base_url
        self.cache = cache
        self.rate_limiter = rate_limiter
        self.session = session or requests.Session()
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.sleep = sleep
        self.network_calls = 0
        self.cache_hits = 0
        self._count_lock = threading.Lock()

    def _params(self, req: RouteRequest) -> dict:
        return {
            "origin": f"{req.origin.lat:.6f},{req.origin.lon:.6f}",
            "destination": f"{req.destination.lat:.6f},{req.destination.lon:.6f}",
            "mode": req.mode,
            "units": req.units,
            "key": self.api_key,
        }

    def _fetch(self, req: RouteRequest) -> bytes:
        last: Optional[Exception] = None
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(self.backoff_s * 2 ** (attempt - 1))
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            with self._count_lock:
                self.network_calls += 1
            logger.info("fetch %s (attempt %d)", req.key(), attempt + 1)
            try:
                resp = self.session.get(self.base_url, params=self._params(req), timeout=self.timeout_s)
            except requests.RequestException as exc:
                last = exc
                logger.warning("transport error for %s: %s", req.key(), exc)
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last = TransportError(f"HTTP {resp.status_code}")
                logger.warning("HTTP %d for %s", resp.status_code, req.key())
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code} from directions API")
            return resp.content
        raise TransportError(f"directions request failed after {self.max_attempts} attempts: {last}")

    def route(self, request: RouteRequest) -> Route:
        key = request.key()
        if self.cache is not None:
            body = self.cache.get(key)
            if body is not None:
                with self._count_lock:
                    self.cache_hits += 1
                logger.debug("cache hit %s", key)
                return parse_directions_json(body)
        body = self._fetch(request)
        status = response_status(body)
        if self.cache is not None and status in CACHEABLE_STATUSES:
            if status == "OK":
                route = parse_directions_json(body)  # validate before persisting
                self.cache.put(key, body)
                return route
            self.cache.put(key, body)
        return parse_directions_json(body)
