"""Great-circle distance checks against an independent formula."""

from hypothesis import given, settings
from hypothesis import strategies as st

from portsim.geo import EARTH_RADIUS_MILES, great_circle_distance
from oracles import derived, spherical_law_of_cosines_miles

lat = st.floats(min_value=-89.0, max_value=89.0, allow_nan=False)
lon = st.floats(min_value=-180.0, max_value=180.0, allow_nan=False)


def test_zero_distance_same_point():
    assert great_circle_distance(34.05, -118.24, 34.05, -118.24) == 0.0


def test_one_degree_of_longitude_at_equator():
    # Oracle: one degree of arc is radius * pi / 180
    # = 3958.8 * 0.017453292... = 69.0933 miles.
    derived("geo.great_circle.one_degree")
    import math

    oracle = EARTH_RADIUS_MILES * math.pi / 180.0
    d = great_circle_distance(0.0, 0.0, 0.0, 1.0)
    assert abs(d - 69.09) < 0.01
    assert abs(d - oracle) < 1e-9


@given(lat, lon, lat, lon)
@settings(max_examples=100, deadline=None)
def test_symmetry(lat1, lon1, lat2, lon2):
    assert great_circle_distance(lat1, lon1, lat2, lon2) == great_circle_distance(
        lat2, lon2, lat1, lon1
    )


@given(lat, lon, lat, lon)
@settings(max_examples=100, deadline=None)
def test_agrees_with_law_of_cosines(lat1, lon1, lat2, lon2):
    # The law-of-cosines formula is numerically poor near zero distance,
    # so compare with a mixed tolerance.
    d = great_circle_distance(lat1, lon1, lat2, lon2)
    ref = spherical_law_of_cosines_miles(lat1, lon1, lat2, lon2)
    assert abs(d - ref) < 1e-6 * max(1.0, ref) + 0.05


def test_known_city_pair():
    # Los Angeles to Chicago, roughly 1,745 miles by great circle.
    d = great_circle_distance(34.05, -118.24, 41.88, -87.63)
    assert 1700 < d < 1800
