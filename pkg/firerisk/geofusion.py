"""Spatio-temporal join of fire events with station weather and NDVI

Each fire event is matched to the weather stations reporting on its UTC
calendar date within a search radius; every weather variable is
inverse-distance interpolated from the stations that reported it. NDVI comes
from the nearest sample location, taking the composite closest in time
within a +/- window.
"""
from collections import OrderedDict, namedtuple
import logging
import math

import numpy as np
from tqdm import tqdm

from .config import JoinConfig
from .exceptions import PreconditionError, SchemaError
from .ingest import (FIRE_COLUMNS, WEATHER_MEASURES, ParseResult,
                     _blank, _clock, _dates, _numeric, _read_table,
                     fire_frame, utc_stamp, write_frame)
from .parallel import chunk, run_parallel
from .records import (REGIONS, DropSummary, ExclusionSummary, FireEvent,
                      FusedRecord, WeatherValues)

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088
KM_PER_DEGREE = math.pi * EARTH_RADIUS_KM / 180.0

FUSED_COLUMNS = (list(FIRE_COLUMNS) + ['confidence', 'region']
                 + list(WEATHER_MEASURES)
                 + ['distance_m', 'ndvi', 'ndvi_lag_days'])


def haversine_km(a, b):
    """Great-circle distance between two (lat, lon) points in degrees"""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    h = (math.sin((lat2 - lat1) / 2.0) ** 2
         + math.cos(lat1) * math.cos(lat2)
         * math.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


class StationIndex(object):
    """Fixed geographic grid supporting exact radius queries

    Cells are `radius_km` tall in latitude and at least as wide in
    longitude (the longitude cell count divides 360 so cells wrap cleanly at
    the antimeridian). A query visits every cell the spherical cap can touch
    and filters candidates by exact haversine distance.

    Parameters
    ----------
    ids: sequence
        Station identifiers, in index order
    latitudes, longitudes: sequence(float)
    radius_km: float
        Default query radius and cell size
    """
    def __init__(self, ids, latitudes, longitudes, radius_km=5.0):
        if radius_km <= 0:
            raise PreconditionError('radius_km must be positive')
        self.ids = tuple(ids)
        self.latitudes = tuple(float(v) for v in latitudes)
        self.longitudes = tuple(float(v) for v in longitudes)
        self.radius_km = float(radius_km)
        self.lat_cell = min(180.0, self.radius_km / KM_PER_DEGREE)
        self.n_lon_cells = max(1, int(math.floor(360.0 / self.lat_cell)))
        self.lon_cell = 360.0 / self.n_lon_cells
        cells = {}
        for i, (lat, lon) in enumerate(zip(self.latitudes, self.longitudes)):
            cells.setdefault(self._cell(lat, lon), []).append(i)
        self.cells = {key: tuple(value) for key, value in cells.items()}

    def __len__(self):
        return len(self.ids)

    def _row(self, lat):
        return int(math.floor((lat + 90.0) / self.lat_cell))

    def _col(self, lon):
        return int(math.floor((lon + 180.0) / self.lon_cell)) \
            % self.n_lon_cells

    def _cell(self, lat, lon):
        return self._row(lat), self._col(lon)

    def _columns(self, lat, lon, delta):
        phi = math.radians(lat)
        if delta >= math.pi / 2.0 - abs(phi) - 1e-12:
            return range(self.n_lon_cells)
        dlon = math.degrees(math.asin(min(1.0, math.sin(delta)
                                          / math.cos(phi))))
        dlon = dlon * (1.0 + 1e-9) + 1e-9
        if dlon >= 180.0:
            return range(self.n_lon_cells)
        lo = int(math.floor((lon - dlon + 180.0) / self.lon_cell))
        hi = int(math.floor((lon + dlon + 180.0) / self.lon_cell))
        if hi - lo + 1 >= self.n_lon_cells:
            return range(self.n_lon_cells)
        return sorted({c % self.n_lon_cells for c in range(lo, hi + 1)})

    def _candidates(self, point, radius_km):
        lat, lon = point
        delta = radius_km / EARTH_RADIUS_KM
        dlat = math.degrees(delta) * (1.0 + 1e-9) + 1e-9
        rows = range(self._row(max(-90.0, lat - dlat)),
                     self._row(min(90.0, lat + dlat)) + 1)
        columns = self._columns(lat, lon, delta)
        for row in rows:
            for col in columns:
                yield from self.cells.get((row, col), ())

    def _rank(self, point, radius_km, candidates):
        hits = []
        for i in candidates:
            d = haversine_km(point, (self.latitudes[i], self.longitudes[i]))
            if d <= radius_km:
                hits.append((d, i))
        hits.sort()
        return [(i, d) for d, i in hits]

    def within_indices(self, point, radius_km=None):
        """Return [(index, distance_km)] sorted by distance then index"""
        radius_km = self.radius_km if radius_km is None else radius_km
        return self._rank(point, radius_km,
                          self._candidates(point, radius_km))

    def scan(self, point, radius_km=None):
        """Linear-scan counterpart of `within_indices`"""
        radius_km = self.radius_km if radius_km is None else radius_km
        return self._rank(point, radius_km, range(len(self.ids)))


def stations_within(index, p, radius_km=None):
    """Stations within `radius_km` of `p` as [(station_id, distance_km)]"""
    return [(index.ids[i], d) for i, d in index.within_indices(p, radius_km)]


def _weighted_mean(weights, values):
    return (math.fsum(w * v for w, (_, v) in zip(weights, values))
            / math.fsum(weights))


def idw(values, power=2.0):
    """Inverse-distance weighted mean of [(distance_km, value)]

    A zero-distance entry returns its value exactly; the result is clamped
    to the input range.
    """
    values = list(values)
    if not values:
        raise PreconditionError('idw needs at least one (distance, value)')
    if any(d < 0 for d, _ in values):
        raise PreconditionError('idw distances must be non-negative')
    if len(values) == 1:
        return float(values[0][1])
    for d, v in values:
        if d == 0:
            return float(v)
    try:
        estimate = _weighted_mean([d ** -power for d, _ in values], values)
    except (OverflowError, ValueError, ZeroDivisionError):
        estimate = None
    if estimate is None or not math.isfinite(estimate):
        # near-zero or huge distances: weights relative to the largest one
        logs = [-power * math.log(d) for d, _ in values]
        top = max(logs)
        estimate = _weighted_mean([math.exp(w - top) for w in logs], values)
    lo = min(v for _, v in values)
    hi = max(v for _, v in values)
    return float(min(max(estimate, lo), hi))


def match_ndvi(samples, event_date, window_days=8):
    """Pick the composite closest in time to `event_date`

    Returns
    -------
    (ndvi, lag_days) with lag = composite_date - event_date, ties resolved
    toward the earlier composite, or None when nothing lies in the window
    """
    best = None
    for sample in samples:
        lag = (sample.composite_date - event_date).days
        key = (abs(lag), lag)
        if best is None or key < best[0]:
            best = (key, sample)
    if best is None or best[0][0] > window_days:
        return None
    return best[1].ndvi, best[0][1]


_JoinContext = namedtuple('_JoinContext',
                          'stations, regions, lookup, ndvi_index, '
                          'ndvi_groups, config')


def _station_table(weather):
    """First-seen coordinates and region per station id"""
    table = OrderedDict()
    lookup = {}
    for day in weather:
        if day.station_id not in table:
            table[day.station_id] = (day.latitude, day.longitude, day.region)
        elif table[day.station_id][:2] != (day.latitude, day.longitude):
            logger.debug('station %s reported at two locations; keeping the '
                         'first', day.station_id)
        lookup.setdefault((day.station_id, day.date), day)
    return table, lookup


def _ndvi_groups(ndvi):
    groups = OrderedDict()
    for sample in ndvi:
        groups.setdefault((sample.latitude, sample.longitude),
                          []).append(sample)
    return groups


def build_context(weather, ndvi, config):
    table, lookup = _station_table(weather)
    lats = [v[0] for v in table.values()]
    lons = [v[1] for v in table.values()]
    stations = StationIndex(list(table), lats, lons, config.radius_km)
    regions = tuple(v[2] for v in table.values())
    groups = _ndvi_groups(ndvi)
    ndvi_index = StationIndex(range(len(groups)),
                              [k[0] for k in groups], [k[1] for k in groups],
                              config.ndvi_max_km)
    return _JoinContext(stations, regions, lookup, ndvi_index,
                        tuple(tuple(g) for g in groups.values()), config)


def _query(index, point, radius, config):
    if config.index == 'linear':
        return index.scan(point, radius)
    return index.within_indices(point, radius)


def fuse_event(event, context):
    """Fuse one event; returns a FusedRecord or an exclusion cause string"""
    config = context.config
    point = (event.latitude, event.longitude)
    day = event.timestamp.date()
    stations = context.stations
    hits = [(i, d) for i, d in _query(stations, point, config.radius_km,
                                      config)
            if (stations.ids[i], day) in context.lookup]
    if not hits:
        return 'no_station'
    interpolated = []
    for name in WEATHER_MEASURES:
        pairs = []
        for i, d in hits:
            value = getattr(context.lookup[(stations.ids[i], day)], name)
            if value is not None:
                pairs.append((d, value))
        if not pairs:
            return 'missing_weather'
        interpolated.append(idw(pairs, config.idw_power))
    locations = _query(context.ndvi_index, point, config.ndvi_max_km, config)
    if not locations:
        return 'no_ndvi'
    matched = match_ndvi(context.ndvi_groups[locations[0][0]], day,
                         config.ndvi_window_days)
    if matched is None:
        return 'no_ndvi'
    nearest, distance_km = hits[0]
    return FusedRecord(event, context.regions[nearest],
                       WeatherValues(*interpolated), distance_km * 1000.0,
                       matched[0], matched[1])


def _fuse_chunk(events, context):
    return [fuse_event(event, context)
            for event in tqdm(events, desc='fuse', leave=False,
                              disable=None)]


def fuse(events, weather, ndvi, config=None, threads=1):
    """Join fire events with interpolated weather and matched NDVI

    Parameters
    ----------
    events: sequence(FireEvent)
    weather: sequence(WeatherDay)
    ndvi: sequence(NdviSample)
    config: JoinConfig, optional
    threads: int
        Events are processed in contiguous partitions; output order always
        equals input order

    Returns
    -------
    (tuple(FusedRecord), ExclusionSummary)
    """
    config = config or JoinConfig()
    events = list(events)
    context = build_context(weather, ndvi, config)
    partitions = chunk(events, max(1, threads) * 4)
    results = run_parallel(_fuse_chunk,
                           [(part, context) for part in partitions], threads)
    summary = ExclusionSummary('fuse')
    summary.rows = len(events)
    fused = []
    for part in results:
        for outcome in part:
            if isinstance(outcome, str):
                summary.add(outcome)
            else:
                fused.append(outcome)
    summary.kept = len(fused)
    logger.info('fused %d of %d events; excluded %s', summary.kept,
                summary.rows, dict(summary.counts))
    return tuple(fused), summary


def fused_frame(records):
    frame = fire_frame([r.event for r in records])
    frame['region'] = [r.region for r in records]
    for name in WEATHER_MEASURES:
        frame[name] = [getattr(r.weather, name) for r in records]
    frame['distance_m'] = [r.distance_m for r in records]
    frame['ndvi'] = [r.ndvi for r in records]
    frame['ndvi_lag_days'] = [r.ndvi_lag_days for r in records]
    return frame[FUSED_COLUMNS]


def write_fused(records, path):
    write_frame(fused_frame(records), path)


def read_fused(path):
    """Read a normalized fused-records file back into FusedRecord tuples"""
    frame, n_malformed = _read_table(path, FUSED_COLUMNS)
    drops = DropSummary('fused')
    drops.rows = len(frame) + n_malformed
    drops.add('malformed', n_malformed)
    region = frame['region'].astype(str).str.strip().str.upper()
    unknown = sorted(set(region[(region != '') & ~region.isin(REGIONS)]))
    if unknown:
        raise SchemaError(f'{path}: unknown region code(s) {unknown}')
    numbers = {name: _numeric(frame[name])
               for name in ('latitude', 'longitude', 'frp', 'distance_m',
                            'ndvi', 'ndvi_lag_days')
               + tuple(WEATHER_MEASURES)}
    dates = _dates(frame['acq_date'])
    clock = _clock(frame['acq_time'])
    required = [c for c in FUSED_COLUMNS if c != 'confidence']
    bad = _blank(frame, required) | dates.isna().to_numpy() | (clock < 0)
    for values in numbers.values():
        bad |= ~np.isfinite(values)
    drops.add('invalid', int(bad.sum()))
    confidence = _numeric(frame['confidence'])
    records = []
    for i in np.flatnonzero(~bad):
        stamp = utc_stamp(dates.iloc[i].date(), int(clock[i]))
        conf = None if np.isnan(confidence[i]) else int(confidence[i])
        event = FireEvent(float(numbers['latitude'][i]),
                          float(numbers['longitude'][i]), stamp,
                          float(numbers['frp'][i]), conf)
        weather = WeatherValues(*(float(numbers[name][i])
                                  for name in WEATHER_MEASURES))
        records.append(FusedRecord(event, region.iloc[i], weather,
                                   float(numbers['distance_m'][i]),
                                   float(numbers['ndvi'][i]),
                                   int(numbers['ndvi_lag_days'][i])))
    drops.kept = len(records)
    return ParseResult(tuple(records), drops)
