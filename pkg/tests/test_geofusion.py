from collections import Counter
import datetime
import math

import numpy as np
import pytest

from firerisk.config import JoinConfig
from firerisk.exceptions import PreconditionError
from firerisk.geofusion import EARTH_RADIUS_KM, KM_PER_DEGREE, StationIndex, \
    fuse, haversine_km, idw, match_ndvi, read_fused, stations_within, \
    write_fused
from firerisk.ingest import utc_stamp
from firerisk.records import REGIONS, FireEvent, FusedRecord, NdviSample, \
    WeatherDay, WeatherValues

DAY = datetime.date(2019, 11, 20)


def station_day(station_id, lat, lon, day=DAY, tmin=10.0, tmax=30.0,
                prcp=0.0, wspd=10.0, region='NSW'):
    return WeatherDay(station_id, region, lat, lon, day, tmin, tmax,
                      (tmin + tmax) / 2, prcp, wspd)


def event_at(lat, lon, day=DAY, frp=20.0):
    return FireEvent(lat, lon, utc_stamp(day, 120), frp, 80)


def test_haversine_one_degree_of_latitude():
    assert haversine_km((0.0, 0.0), (1.0, 0.0)) == pytest.approx(KM_PER_DEGREE)
    assert haversine_km((-33.0, 151.0), (-33.0, 151.0)) == 0.0


def test_haversine_against_the_spherical_law_of_cosines():
    sydney, melbourne = (-33.87, 151.21), (-37.81, 144.96)
    p1, p2 = math.radians(sydney[0]), math.radians(melbourne[0])
    dlon = math.radians(melbourne[1] - sydney[1])
    expected = EARTH_RADIUS_KM * math.acos(
        math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2)
        * math.cos(dlon))
    assert haversine_km(sydney, melbourne) == pytest.approx(expected,
                                                            rel=1e-6)
    assert haversine_km(melbourne, sydney) == haversine_km(sydney, melbourne)
    assert haversine_km((0.0, 0.0), (0.0, 180.0)) == pytest.approx(
        math.pi * EARTH_RADIUS_KM)


def test_stations_within_sorts_by_distance():
    index = StationIndex(['far', 'here', 'near'],
                         [-33.0 + 4.0 / KM_PER_DEGREE, -33.0,
                          -33.0 + 1.0 / KM_PER_DEGREE],
                         [151.0, 151.0, 151.0], 5.0)
    hits = stations_within(index, (-33.0, 151.0))
    assert [station for station, _ in hits] == ['here', 'near', 'far']
    assert hits[0][1] == 0.0
    assert stations_within(index, (-20.0, 140.0)) == []
    assert [s for s, _ in stations_within(index, (-33.0, 151.0), 2.0)] == \
        ['here', 'near']


def test_idw_worked_example():
    assert idw([(1.0, 0.0), (2.0, 30.0)], power=2.0) == 6.0


def test_idw_identities():
    rng = np.random.default_rng(3)
    assert idw([(4.2, 17.5)]) == 17.5
    assert idw([(0.0, 3.0), (1.0, 9.0)]) == 3.0
    for _ in range(10000):
        n = int(rng.integers(1, 6))
        kinds = rng.integers(0, 4, n)
        distances = np.where(
            kinds == 0, 0.0, np.where(
                kinds == 1, 5e-324 * rng.integers(1, 1000, n), np.where(
                    kinds == 2, 10.0 ** rng.uniform(-300, -100, n),
                    rng.uniform(0.01, 5.0, n))))
        pairs = [(float(d), float(v)) for d, v in
                 zip(distances, rng.normal(0, 10, n))]
        power = float(rng.choice([rng.uniform(0.5, 3.0), 50.0]))
        value = idw(pairs, power=power)
        values = [v for _, v in pairs]
        assert math.isfinite(value)
        assert min(values) <= value <= max(values)
        exact = [v for d, v in pairs if d == 0]
        if exact and n > 1:
            assert value == exact[0]


def test_idw_near_zero_distances():
    assert idw([(1e-200, 1.0), (1.0, 2.0)]) == 1.0
    assert idw([(5e-324, 3.0), (5e-324, 5.0)]) == 4.0
    assert idw([(1.0, 0.0), (2.0, 30.0)], power=2000.0) == 0.0
    assert idw([(0.5, 0.0), (1.0, 30.0)], power=2000.0) == 0.0
    assert idw([(1e200, 0.0), (1e201, 30.0)]) == pytest.approx(
        30.0 / 101.0)


def test_idw_rejects_bad_input():
    with pytest.raises(PreconditionError):
        idw([])
    with pytest.raises(PreconditionError):
        idw([(-1.0, 2.0)])


def test_match_ndvi_window_and_ties():
    samples = [NdviSample(0, 0, DAY - datetime.timedelta(days=4), 0.1),
               NdviSample(0, 0, DAY + datetime.timedelta(days=4), 0.2)]
    assert match_ndvi(samples, DAY) == (0.1, -4)
    far = [NdviSample(0, 0, DAY + datetime.timedelta(days=9), 0.3)]
    assert match_ndvi(far, DAY) is None
    assert match_ndvi(far, DAY, window_days=9) == (0.3, 9)


def test_index_matches_linear_scan():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 300))
        lats = rng.uniform(-40.0, -30.0, n)
        lons = rng.uniform(140.0, 150.0, n)
        index = StationIndex(range(n), lats, lons, 5.0)
        for _ in range(30):
            i = int(rng.integers(n))
            point = (lats[i] + rng.normal(0, 0.03), lons[i]
                     + rng.normal(0, 0.03))
            assert index.within_indices(point) == index.scan(point)


def test_index_near_the_antimeridian():
    index = StationIndex(['a', 'b'], [0.0, 0.0], [179.99, -179.99], 5.0)
    hits = index.within_indices((0.0, 180.0))
    assert sorted(i for i, _ in hits) == [0, 1]


def test_fuse_interpolates_and_matches():
    weather = [station_day('A', -33.0, 151.0, tmax=30.0, wspd=10.0),
               station_day('B', -33.0, 151.0 + 2.0 / (
                   KM_PER_DEGREE * math.cos(math.radians(33.0))),
                   tmax=40.0, wspd=20.0)]
    ndvi = [NdviSample(-33.0, 151.0, DAY - datetime.timedelta(days=3), 0.5)]
    event = event_at(-33.0, 151.0)
    records, summary = fuse([event], weather, ndvi)
    assert len(records) == 1
    record = records[0]
    assert record.weather.tmax == 30.0
    assert record.distance_m == 0.0
    assert record.ndvi == 0.5 and record.ndvi_lag_days == -3
    assert record.region == 'NSW'
    assert summary.kept == 1 and summary.reconciles()


def test_fuse_exclusion_causes():
    weather = [station_day('A', -33.0, 151.0)]
    ndvi = [NdviSample(-33.0, 151.0, DAY, 0.5)]
    events = [event_at(-33.0, 151.0),
              event_at(-20.0, 140.0),
              event_at(-33.0, 151.0, day=DAY + datetime.timedelta(days=1)),
              event_at(-33.0 + 4.0 / KM_PER_DEGREE, 151.0)]
    records, summary = fuse(events, weather, ndvi)
    assert len(records) == 1
    assert summary.counts['no_station'] == 2
    assert summary.counts['no_ndvi'] == 1
    assert summary.rows == 4 and summary.reconciles()


def test_fuse_skips_variables_a_station_did_not_report():
    weather = [station_day('A', -33.0, 151.0, wspd=None),
               station_day('B', -33.0 + 1.0 / KM_PER_DEGREE, 151.0,
                           wspd=12.0)]
    ndvi = [NdviSample(-33.0, 151.0, DAY, 0.5)]
    records, _ = fuse([event_at(-33.0, 151.0)], weather, ndvi)
    assert records[0].weather.wspd == 12.0


def _random_instance(rng):
    n_stations = int(rng.integers(5, 60))
    lats = rng.uniform(-34.0, -33.7, n_stations)
    lons = rng.uniform(150.0, 150.3, n_stations)
    days = [DAY + datetime.timedelta(days=k) for k in range(4)]
    weather = []
    for s in range(n_stations):
        region = str(rng.choice(REGIONS))
        for day in days:
            if rng.random() < 0.25:
                continue
            values = [None if rng.random() < 0.2 else float(v)
                      for v in rng.uniform(0, 40, 5)]
            weather.append(WeatherDay(f'S{s}', region, float(lats[s]),
                                      float(lons[s]), day, *values))
    ndvi = []
    for _ in range(int(rng.integers(5, 40))):
        lat, lon = rng.uniform(-34.0, -33.7), rng.uniform(150.0, 150.3)
        for offset in rng.integers(-12, 16, int(rng.integers(1, 4))):
            ndvi.append(NdviSample(float(lat), float(lon),
                                   DAY + datetime.timedelta(days=int(offset)),
                                   float(rng.uniform(-1, 1))))
    events = [event_at(float(rng.uniform(-34.0, -33.7)),
                       float(rng.uniform(150.0, 150.3)),
                       day=days[int(rng.integers(4))])
              for _ in range(int(rng.integers(1, 150)))]
    return events, weather, ndvi


def brute_force_join(events, weather, ndvi, config):
    """Every event against every station and NDVI location"""
    first = {}
    reports = {}
    for row in weather:
        first.setdefault(row.station_id, row)
        reports.setdefault((row.station_id, row.date), row)
    locations = {}
    for sample in ndvi:
        locations.setdefault((sample.latitude, sample.longitude),
                             []).append(sample)
    records, causes = [], Counter()
    for event in events:
        point = (event.latitude, event.longitude)
        day = event.timestamp.date()
        hits = sorted(
            (haversine_km(point, (row.latitude, row.longitude)), order, sid)
            for order, (sid, row) in enumerate(first.items())
            if (sid, day) in reports)
        hits = [(d, sid) for d, _, sid in hits if d <= config.radius_km]
        if not hits:
            causes['no_station'] += 1
            continue
        interpolated = []
        for name in WeatherValues._fields:
            pairs = [(d, getattr(reports[(sid, day)], name))
                     for d, sid in hits
                     if getattr(reports[(sid, day)], name) is not None]
            if not pairs:
                break
            interpolated.append(idw(pairs, config.idw_power))
        if len(interpolated) < len(WeatherValues._fields):
            causes['missing_weather'] += 1
            continue
        near = sorted((haversine_km(point, key), order, key)
                      for order, key in enumerate(locations))
        near = [key for d, _, key in near if d <= config.ndvi_max_km]
        lags = [((s.composite_date - day).days, s) for s in
                locations[near[0]]] if near else []
        if lags:
            lag, sample = min(lags, key=lambda item: (abs(item[0]),
                                                      item[0]))
        if not lags or abs(lag) > config.ndvi_window_days:
            causes['no_ndvi'] += 1
            continue
        d, sid = hits[0]
        records.append(FusedRecord(event, first[sid].region,
                                   WeatherValues(*interpolated), d * 1000.0,
                                   sample.ndvi, lag))
    return tuple(records), causes


@pytest.mark.parametrize('seed', range(50))
def test_join_matches_brute_force(seed):
    events, weather, ndvi = _random_instance(np.random.default_rng(seed))
    config = JoinConfig()
    expected, causes = brute_force_join(events, weather, ndvi, config)
    grid, summary = fuse(events, weather, ndvi, config)
    linear, _ = fuse(events, weather, ndvi, JoinConfig(index='linear'))
    assert grid == expected
    assert linear == expected
    assert summary.counts == causes
    assert summary.reconciles()


def test_fuse_is_independent_of_threads():
    events, weather, ndvi = _random_instance(np.random.default_rng(9))
    one, _ = fuse(events, weather, ndvi, threads=1)
    two, _ = fuse(events, weather, ndvi, threads=2)
    assert one == two


def test_fused_file_round_trip(tmp_path):
    weather = [station_day('A', -33.0, 151.0)]
    ndvi = [NdviSample(-33.0, 151.0, DAY, 0.5)]
    records, _ = fuse([event_at(-33.0, 151.0, frp=55.25)], weather, ndvi)
    path = str(tmp_path / 'fused.csv')
    write_fused(records, path)
    parsed = read_fused(path)
    assert parsed.records == records
