"""Run configuration. Precedence: CLI flag > environment > config file > default."""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from walkgap.errors import ConfigurationError, WalkgapError
from walkgap.geo import GeoPoint
from walkgap.routing.directions import DEFAULT_BASE_URL

ENV_PREFIX = "WALKGAP_"


@dataclass
class Config:
    cache_dir: str = ".walkgap-cache"
    api_base_url: str = DEFAULT_BASE_URL
    api_key_env: str = "WALKGAP_API_KEY"
    api_key: Optional[str] = None
    graph: Optional[str] = None
    # Conventional Dublin reference point; override for other cities.
    city_centre: Tuple[float, float] = (53.3472, -6.2592)
    annulus_min_km: float = 1.5
    annulus_max_km: float = 2.0
    top_k: int = 5
    walkability_radius_km: float = 2.0
    circle_scale: float = 0.1
    circle_step_deg: float = 15.0
    circle_sizing: str = "discrepancy"
    parallelism: int = 4
    aggregation: str = "mean"
    rate_limit_per_s: float = 10.0
    type_coding: str = "reference"

    def validate(self) -> "Config":
        positive = ("annulus_max_km", "walkability_radius_km", "circle_step_deg", "rate_limit_per_s")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.annulus_min_km < 0 or self.annulus_min_km >= self.annulus_max_km:
            raise ConfigurationError("need 0 <= annulus_min_km < annulus_max_km")
        if self.circle_scale < 0:
            raise ConfigurationError("circle_scale must be nonnegative")
        if self.top_k < 1 or self.parallelism < 1:
            raise ConfigurationError("top_k and parallelism must be >= 1")
        try:
            GeoPoint(*self.city_centre)
        except (WalkgapError, TypeError) as exc:
            raise ConfigurationError(f"bad city_centre {self.city_centre!r}: {exc}") from None
        return self

    @property
    def centre_point(self) -> GeoPoint:
        return GeoPoint(*self.city_centre)

    def resolve_api_key(self, env: Mapping[str, str] = os.environ) -> Optional[str]:
        return env.get(self.api_key_env) or self.api_key


def _coerce(name: str, value):
    f = {f.name: f for f in dataclasses.fields(Config)}[name]
    default = f.default
    try:
        if name == "city_centre":
            if isinstance(value, str):
                value = [v for v in value.replace(";", ",").split(",")]
            lat, lon = value
            return (float(lat), float(lon))
        if isinstance(default, bool):
            return str(value).lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return None if value is None else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for {name}: {value!r} ({exc})") from None


def load_config(path: Optional[str] = None, env: Mapping[str, str] = os.environ,
                overrides: Optional[Mapping[str, object]] = None) -> Config:
    names = [f.name for f in dataclasses.fields(Config)]
    values = {}
    if path:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid config file {path}: {exc}") from None
        unknown = sorted(set(doc) - set(names))
        if unknown:
            raise ConfigurationError(f"unknown config keys in {path}: {unknown}")
        values.update({k: _coerce(k, v) for k, v in doc.items()})
    for name in names:
        if name == "api_key":
            continue  # read through api_key_env at use time
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(name, raw)
    for name, v in (overrides or {}).items():
        if v is not None:
            values[name] = _coerce(name, v)
    return Config(**values).validate()
