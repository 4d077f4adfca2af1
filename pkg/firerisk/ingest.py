"""Parsers for the three input file families

Each parser returns a `ParseResult` of immutable records plus a
`DropSummary`. Rows are never imputed: a row that cannot be turned into a
valid record is counted under exactly one cause and skipped. Only problems
visible in the header (and unknown weather region codes) abort a parse.
"""
from collections import namedtuple
import csv
import datetime
import logging
import os

import numpy as np
import pandas as pd

from .exceptions import SchemaError
from .records import (AUSTRALIA_LAT, AUSTRALIA_LON, DEFAULT_WINDOW, REGIONS,
                      DropSummary, FireEvent, NdviSample, WeatherDay)

logger = logging.getLogger(__name__)

FIRE_COLUMNS = ('latitude', 'longitude', 'acq_date', 'acq_time', 'frp')
WEATHER_COLUMNS = ('station_id', 'region', 'latitude', 'longitude', 'date',
                   'tmin', 'tmax', 'tavg', 'prcp', 'wspd')
WEATHER_IDENTITY = WEATHER_COLUMNS[:5]
WEATHER_MEASURES = WEATHER_COLUMNS[5:]
NDVI_COLUMNS = ('latitude', 'longitude', 'composite_date', 'ndvi')

COMPOSITE_DAYS = 16

ParseResult = namedtuple('ParseResult', 'records, drops')


def _read_table(path, required):
    """Read a delimited file as strings, counting malformed lines

    Returns
    -------
    frame: pd.DataFrame
        Lower-cased, stripped column names; every cell a string
    n_malformed: int
        Lines with more fields than the header
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'input file not found: {path}')
    malformed = []

    def skip_bad_line(fields):
        malformed.append(fields)
        return None

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False,
                            engine='python', index_col=False,
                            on_bad_lines=skip_bad_line,
                            quoting=csv.QUOTE_NONE,
                            encoding='utf-8-sig', encoding_errors='replace')
    except pd.errors.EmptyDataError:
        raise SchemaError(f'{path}: missing header row')
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    for column in required:
        if column not in frame.columns:
            raise SchemaError(f"{path}: missing required column '{column}'")
    frame = frame.fillna('')
    return frame, len(malformed)


def _blank(frame, columns):
    mask = np.zeros(len(frame), dtype=bool)
    for column in columns:
        mask |= frame[column].astype(str).str.strip().eq('').to_numpy()
    return mask


def _numeric(series):
    return pd.to_numeric(series.astype(str).str.strip(),
                         errors='coerce').to_numpy(dtype=float)


def _dates(series):
    parsed = pd.to_datetime(series.astype(str).str.strip(),
                            format='%Y-%m-%d', errors='coerce')
    return parsed


def _assign(drops, remaining, mask, cause):
    """Count rows of `mask` still remaining under `cause`, then drop them"""
    hit = remaining & mask
    drops.add(cause, int(hit.sum()))
    return remaining & ~hit


def _start(frame, n_malformed, source):
    drops = DropSummary(source)
    drops.rows = len(frame) + n_malformed
    drops.add('malformed', n_malformed)
    return drops, np.ones(len(frame), dtype=bool)


def _finish(drops, records, path):
    drops.kept = len(records)
    if drops.dropped:
        logger.info('%s: kept %d of %d rows, dropped %s', path, drops.kept,
                    drops.rows, dict(drops.counts))
    return ParseResult(tuple(records), drops)


def _clock(series):
    """Parse HHMM strings; returns minutes after midnight or -1"""
    text = series.astype(str).str.strip()
    ok = text.str.fullmatch(r'\d{1,4}').to_numpy(dtype=bool)
    padded = text.where(ok, '0000').str.zfill(4)
    hours = padded.str[:2].astype(int).to_numpy()
    minutes = padded.str[2:].astype(int).to_numpy()
    ok &= (hours < 24) & (minutes < 60)
    return np.where(ok, hours * 60 + minutes, -1)


def utc_stamp(day, minutes):
    return (datetime.datetime(day.year, day.month, day.day,
                              tzinfo=datetime.timezone.utc)
            + datetime.timedelta(minutes=minutes))


def _confidence(frame):
    if 'confidence' not in frame.columns:
        return [None] * len(frame)
    values = _numeric(frame['confidence'])
    out = []
    for value in values:
        if np.isfinite(value) and value == int(value) and 0 <= value <= 100:
            out.append(int(value))
        else:
            out.append(None)
    return out


def parse_fire_events(path):
    """Parse a FIRMS-style fire detection export

    Parameters
    ----------
    path: str
        Delimited text with at least `latitude, longitude, acq_date,
        acq_time, frp`; `confidence` is optional, `brightness` and any other
        column are discarded

    Returns
    -------
    ParseResult with a tuple of FireEvent
    """
    frame, n_malformed = _read_table(path, FIRE_COLUMNS)
    drops, remaining = _start(frame, n_malformed, 'fire_events')

    lat = _numeric(frame['latitude'])
    lon = _numeric(frame['longitude'])
    frp = _numeric(frame['frp'])
    dates = _dates(frame['acq_date'])
    clock = _clock(frame['acq_time'])
    confidence = _confidence(frame)

    remaining = _assign(drops, remaining, _blank(frame, FIRE_COLUMNS),
                        'missing')
    unparseable = (np.isnan(lat) | np.isnan(lon) | np.isnan(frp)
                   | dates.isna().to_numpy() | (clock < 0))
    remaining = _assign(drops, remaining, unparseable, 'unparseable')
    with np.errstate(invalid='ignore'):
        invalid = ~np.isfinite(frp) | (frp < 0)
        inside = ((lat >= AUSTRALIA_LAT[0]) & (lat <= AUSTRALIA_LAT[1])
                  & (lon >= AUSTRALIA_LON[0]) & (lon <= AUSTRALIA_LON[1]))
    remaining = _assign(drops, remaining, invalid, 'invalid')
    remaining = _assign(drops, remaining, ~inside, 'out_of_bounds')

    records = []
    for i in np.flatnonzero(remaining):
        stamp = utc_stamp(dates.iloc[i].date(), int(clock[i]))
        records.append(FireEvent(float(lat[i]), float(lon[i]), stamp,
                                 float(frp[i]), confidence[i]))
    return _finish(drops, records, path)


def parse_weather(path, window=DEFAULT_WINDOW):
    """Parse a Meteostat-style daily station export

    Identity columns are required per row; measurement cells may be blank
    and are then carried as None so the join can interpolate each variable
    from the stations that did report it.

    Parameters
    ----------
    path: str
    window: tuple(datetime.date, datetime.date)
        Inclusive study window; rows outside are dropped

    Returns
    -------
    ParseResult with a tuple of WeatherDay
    """
    frame, n_malformed = _read_table(path, WEATHER_COLUMNS)
    drops, remaining = _start(frame, n_malformed, 'weather')

    region = frame['region'].astype(str).str.strip().str.upper()
    unknown = sorted(set(region[(region != '') & ~region.isin(REGIONS)]))
    if unknown:
        raise SchemaError(f'{path}: unknown region code(s) {unknown}; '
                          f'expected one of {list(REGIONS)}')

    lat = _numeric(frame['latitude'])
    lon = _numeric(frame['longitude'])
    dates = _dates(frame['date'])
    measures = {name: _numeric(frame[name]) for name in WEATHER_MEASURES}
    blank = {name: _blank(frame, [name]) for name in WEATHER_MEASURES}

    remaining = _assign(drops, remaining, _blank(frame, WEATHER_IDENTITY),
                        'missing')
    unparseable = np.isnan(lat) | np.isnan(lon) | dates.isna().to_numpy()
    for name in WEATHER_MEASURES:
        unparseable |= ~blank[name] & np.isnan(measures[name])
    remaining = _assign(drops, remaining, unparseable, 'unparseable')
    with np.errstate(invalid='ignore'):
        bounds = ~((np.abs(lat) <= 90) & (np.abs(lon) <= 180))
        invalid = np.zeros(len(frame), dtype=bool)
        for name in WEATHER_MEASURES:
            invalid |= ~blank[name] & ~np.isfinite(measures[name])
        invalid |= ~blank['prcp'] & (measures['prcp'] < 0)
        invalid |= ~blank['wspd'] & (measures['wspd'] < 0)
        inconsistent = (~blank['tmin'] & ~blank['tmax']
                        & (measures['tmin'] > measures['tmax']))
    remaining = _assign(drops, remaining, bounds, 'out_of_bounds')
    remaining = _assign(drops, remaining, invalid, 'invalid')
    remaining = _assign(drops, remaining, inconsistent, 'inconsistent')
    start, end = window
    days = [d.date() if not pd.isna(d) else None for d in dates]
    outside = np.array([d is None or not (start <= d <= end) for d in days])
    remaining = _assign(drops, remaining, outside, 'out_of_window')

    station = frame['station_id'].astype(str).str.strip()
    records = []
    for i in np.flatnonzero(remaining):
        values = [None if blank[name][i] else float(measures[name][i])
                  for name in WEATHER_MEASURES]
        records.append(WeatherDay(station.iloc[i], region.iloc[i],
                                  float(lat[i]), float(lon[i]), days[i],
                                  *values))
    return _finish(drops, records, path)


def composite_start(day):
    """Return the first day of the 16-day composite period containing `day`

    Composite periods restart every year on 1 January (day-of-year 1, 17,
    33, ...), the MODIS vegetation-index convention.
    """
    doy = day.timetuple().tm_yday
    start = ((doy - 1) // COMPOSITE_DAYS) * COMPOSITE_DAYS
    return datetime.date(day.year, 1, 1) + datetime.timedelta(days=start)


def parse_ndvi(path):
    """Parse point-sampled NDVI composites

    Returns
    -------
    ParseResult with a tuple of NdviSample, composite dates normalized to
    the start of their 16-day period
    """
    frame, n_malformed = _read_table(path, NDVI_COLUMNS)
    drops, remaining = _start(frame, n_malformed, 'ndvi')

    lat = _numeric(frame['latitude'])
    lon = _numeric(frame['longitude'])
    ndvi = _numeric(frame['ndvi'])
    dates = _dates(frame['composite_date'])

    remaining = _assign(drops, remaining, _blank(frame, NDVI_COLUMNS),
                        'missing')
    unparseable = (np.isnan(lat) | np.isnan(lon) | np.isnan(ndvi)
                   | dates.isna().to_numpy())
    remaining = _assign(drops, remaining, unparseable, 'unparseable')
    with np.errstate(invalid='ignore'):
        bounds = ~((np.abs(lat) <= 90) & (np.abs(lon) <= 180))
        out_of_range = ~((ndvi >= -1.0) & (ndvi <= 1.0))
    remaining = _assign(drops, remaining, bounds, 'out_of_bounds')
    remaining = _assign(drops, remaining, out_of_range, 'out_of_range')

    records = [NdviSample(float(lat[i]), float(lon[i]),
                          composite_start(dates.iloc[i].date()),
                          float(ndvi[i]))
               for i in np.flatnonzero(remaining)]
    return _finish(drops, records, path)


def write_frame(frame, path):
    """Write a frame with the package's delimited-text conventions"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, na_rep='', lineterminator='\n')


def fire_frame(records):
    return pd.DataFrame({
        'latitude': [r.latitude for r in records],
        'longitude': [r.longitude for r in records],
        'acq_date': [r.timestamp.date().isoformat() for r in records],
        'acq_time': [f'{r.timestamp.hour:02d}{r.timestamp.minute:02d}'
                     for r in records],
        'frp': [r.frp for r in records],
        'confidence': pd.array([r.confidence for r in records],
                               dtype='Int64'),
    }, columns=list(FIRE_COLUMNS) + ['confidence'])


def write_fire_events(records, path):
    write_frame(fire_frame(records), path)


def write_weather(records, path):
    frame = pd.DataFrame([r._asdict() for r in records],
                         columns=list(WEATHER_COLUMNS))
    frame['date'] = [r.date.isoformat() for r in records]
    for name in WEATHER_MEASURES:
        frame[name] = frame[name].astype(float)
    write_frame(frame, path)


def write_ndvi(records, path):
    frame = pd.DataFrame({
        'latitude': [r.latitude for r in records],
        'longitude': [r.longitude for r in records],
        'composite_date': [r.composite_date.isoformat() for r in records],
        'ndvi': [r.ndvi for r in records],
    }, columns=list(NDVI_COLUMNS))
    write_frame(frame, path)
