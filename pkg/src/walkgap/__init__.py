"""Walkability gap analysis: straight-line vs. footpath distance, geodata export, and
a weighted-least-squares house price model."""

from walkgap.geo import EarthModel, GeoPoint, BoundingBox, haversine_distance

__version__ = "0.1.0"

__all__ = ["EarthModel", "GeoPoint", "BoundingBox", "haversine_distance", "__version__"]
