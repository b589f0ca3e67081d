"""Geospatial helper: haversine great-circle distance in statute miles."""

from __future__ import annotations

import math

EARTH_RADIUS_MILES = 3958.8


def great_circle_distance(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Distance in miles between two (latitude, longitude) points in degrees."""
    if lat1 == lat2 and lon1 == lon2:
        return 0.0
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_MILES * math.asin(min(1.0, math.sqrt(a)))
