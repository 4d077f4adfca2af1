"""Synthetic fire-risk data with a planted signal

Generator, in draw order from `numpy.random.default_rng(seed)`:

1. month ~ U{1..12}, year ~ U{2015..2023}, day ~ U{1..28},
   acquisition minute ~ U{0..1439}, region ~ REGIONS with fixed weights.
2. tmax = 22 + 8 cos(2 pi (month - 1) / 12) + N(0, 4);
   diurnal range ~ Gamma(4, 3); tmin = tmax - range; tavg = (tmin + tmax) / 2.
3. prcp = 0 with probability 0.6, else Exponential(4) mm;
   wspd ~ Gamma(3, 5) km/h; ndvi = clip(N(0.45, 0.15), -1, 1).
4. c = 0.8 z(range) + 0.6 z(wspd) - 0.7 z(log1p(prcp)) - 0.5 z(ndvi)
       + 0.4 z(range) z(wspd) + 0.5 cos(2 pi (month - 1) / 12),
   z() the sample standardization; s = z(c).
5. P(high) = expit(b + signal * s), b solved so the mean probability equals
   `ratio`; high ~ Bernoulli(P(high)).
6. frp = U(1, 40) for low rows and 40.01 + Exponential(60) for high rows.

With `signal = 0` every row has the same probability, so no model can beat
an AUC of 0.5 on held-out rows. A `ratio` below 1 - labels.cap_quantile
lets the FRP cap fall under the 40 MW threshold.
"""
import datetime
import logging
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .config import SynthConfig
from .geofusion import KM_PER_DEGREE
from .ingest import COMPOSITE_DAYS, composite_start, utc_stamp
from .records import (AUSTRALIA_LAT, AUSTRALIA_LON, REGIONS, FireEvent,
                      FusedRecord, NdviSample, WeatherDay, WeatherValues)

logger = logging.getLogger(__name__)

REGION_WEIGHTS = (0.22, 0.24, 0.10, 0.04, 0.08, 0.18, 0.12, 0.02)

# rough centroids used to place synthetic detections
REGION_CENTERS = {'WA': (-26.0, 121.0), 'QLD': (-22.0, 145.0),
                  'VIC': (-37.0, 144.5), 'TAS': (-42.0, 146.5),
                  'SA': (-31.0, 136.0), 'NSW': (-32.5, 147.0),
                  'NT': (-19.5, 133.0), 'ACT': (-35.4, 149.0)}


def _zscore(values):
    std = values.std()
    if std == 0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def seasonal(month):
    return np.cos(2.0 * math.pi * (np.asarray(month) - 1) / 12.0)


def draw_weather(rng, month):
    """Weather measures for the given months (steps 2 and 3)"""
    n = len(month)
    tmax = 22.0 + 8.0 * seasonal(month) + rng.normal(0.0, 4.0, n)
    diurnal = rng.gamma(4.0, 3.0, n)
    tmin = tmax - diurnal
    wet = rng.random(n) >= 0.6
    prcp = np.where(wet, rng.exponential(4.0, n), 0.0)
    wspd = rng.gamma(3.0, 5.0, n)
    ndvi = np.clip(rng.normal(0.45, 0.15, n), -1.0, 1.0)
    return {'tmin': tmin, 'tmax': tmax, 'tavg': (tmin + tmax) / 2.0,
            'prcp': prcp, 'wspd': wspd, 'ndvi': ndvi}


def risk_score(diurnal, wspd, prcp, ndvi, month):
    """Standardized planted combination (step 4)"""
    zr, zw = _zscore(diurnal), _zscore(wspd)
    combination = 0.8 * zr + 0.6 * zw - 0.7 * _zscore(np.log1p(prcp)) \
        - 0.5 * _zscore(ndvi) + 0.4 * zr * zw + 0.5 * seasonal(month)
    return _zscore(combination)


def risk_probability(score, ratio, signal):
    """P(high) with the intercept solved for the target mean (step 5)"""
    if not 0 < ratio < 1:
        raise ValueError('ratio must lie in (0, 1)')
    score = np.asarray(score, dtype=float)
    intercept = brentq(
        lambda b: expit(b + signal * score).mean() - ratio, -60.0, 60.0,
        xtol=1e-14)
    return expit(intercept + signal * score)


def draw_frp(rng, high):
    n = len(high)
    low_frp = rng.uniform(1.0, 40.0, n)
    high_frp = 40.01 + rng.exponential(60.0, n)
    return np.where(high, high_frp, low_frp)


def _place(rng, regions, spread=1.5):
    lat = np.array([REGION_CENTERS[r][0] for r in regions])
    lon = np.array([REGION_CENTERS[r][1] for r in regions])
    lat = np.clip(lat + rng.normal(0.0, spread, len(regions)),
                  AUSTRALIA_LAT[0] + 0.5, AUSTRALIA_LAT[1] - 0.5)
    lon = np.clip(lon + rng.normal(0.0, spread, len(regions)),
                  AUSTRALIA_LON[0] + 0.5, AUSTRALIA_LON[1] - 0.5)
    return lat, lon


def synth_fused(config=None, seed=0):
    """Synthetic fused records

    Parameters
    ----------
    config: SynthConfig
        n_rows, ratio and signal
    seed: int

    Returns
    -------
    tuple(FusedRecord)
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(seed)
    n = config.n_rows
    month = rng.integers(1, 13, n)
    year = rng.integers(2015, 2024, n)
    day = rng.integers(1, 29, n)
    minute = rng.integers(0, 1440, n)
    regions = np.asarray(REGIONS)[rng.choice(len(REGIONS), size=n,
                                             p=REGION_WEIGHTS)]
    weather = draw_weather(rng, month)
    score = risk_score(weather['tmax'] - weather['tmin'], weather['wspd'],
                       weather['prcp'], weather['ndvi'], month)
    high = rng.random(n) < risk_probability(score, config.ratio,
                                            config.signal)
    frp = draw_frp(rng, high)
    lat, lon = _place(rng, regions)
    distance = rng.uniform(0.0, 5000.0, n)
    lag = rng.integers(-8, 9, n)
    confidence = rng.integers(0, 101, n)
    records = []
    for i in range(n):
        stamp = utc_stamp(datetime.date(int(year[i]), int(month[i]),
                                        int(day[i])), int(minute[i]))
        event = FireEvent(float(lat[i]), float(lon[i]), stamp, float(frp[i]),
                          int(confidence[i]))
        values = WeatherValues(*(float(weather[name][i])
                                 for name in WeatherValues._fields))
        records.append(FusedRecord(event, str(regions[i]), values,
                                   float(distance[i]),
                                   float(weather['ndvi'][i]), int(lag[i])))
    logger.info('synthesized %d fused rows, %d high', n, int(high.sum()))
    return tuple(records)


def synth_raw(config=None, seed=0, year=2019):
    """Raw (fire, weather, NDVI) records that fuse into a labelled dataset

    Every detection lies within 3 km of a station and has NDVI composites at
    its own location for the composite periods on both sides of its date, so
    every event fuses.

    Returns
    -------
    (fire events, weather days, NDVI samples)
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(seed)
    n_stations = max(8, config.n_events // 25)
    station_regions = [REGIONS[i % len(REGIONS)] for i in range(n_stations)]
    lat, lon = _place(rng, station_regions, spread=3.0)
    lat = lat + 0.6 * (np.arange(n_stations) // len(REGIONS))
    first = datetime.date(year, 1, 1)
    days = [first + datetime.timedelta(days=d)
            for d in range((datetime.date(year + 1, 1, 1) - first).days)]
    months = np.array([d.month for d in days])
    weather = []
    tables = {}
    for s in range(n_stations):
        values = draw_weather(rng, months)
        tables[s] = values
        station_id = f'SYN{s:04d}'
        for d, day in enumerate(days):
            weather.append(WeatherDay(
                station_id, station_regions[s], float(lat[s]), float(lon[s]),
                day, *(float(values[name][d])
                       for name in WeatherValues._fields)))
    n = config.n_events
    station = rng.integers(0, n_stations, n)
    day_index = rng.integers(0, len(days), n)
    bearing = rng.uniform(0.0, 2.0 * math.pi, n)
    reach = rng.uniform(0.0, 3.0, n)
    ev_lat = lat[station] + reach * np.cos(bearing) / KM_PER_DEGREE
    ev_lon = lon[station] + reach * np.sin(bearing) \
        / (KM_PER_DEGREE * np.cos(np.radians(lat[station])))
    ndvi_values = np.clip(rng.normal(0.45, 0.15, (n, 2)), -1.0, 1.0)
    pick = {name: np.array([tables[s][name][d] for s, d in
                            zip(station, day_index)])
            for name in ('tmin', 'tmax', 'prcp', 'wspd')}
    score = risk_score(pick['tmax'] - pick['tmin'], pick['wspd'],
                       pick['prcp'], ndvi_values[:, 0], months[day_index])
    high = rng.random(n) < risk_probability(score, config.ratio,
                                            config.signal)
    frp = draw_frp(rng, high)
    minute = rng.integers(0, 1440, n)
    confidence = rng.integers(0, 101, n)
    events, ndvi = [], []
    for i in range(n):
        day = days[day_index[i]]
        events.append(FireEvent(float(ev_lat[i]), float(ev_lon[i]),
                                utc_stamp(day, int(minute[i])),
                                float(frp[i]), int(confidence[i])))
        start = composite_start(day)
        following = composite_start(start
                                    + datetime.timedelta(days=COMPOSITE_DAYS))
        for composite, value in ((start, ndvi_values[i, 0]),
                                 (following, ndvi_values[i, 1])):
            ndvi.append(NdviSample(float(ev_lat[i]), float(ev_lon[i]),
                                   composite, float(value)))
    logger.info('synthesized raw trio: %d events, %d station-days, '
                '%d NDVI samples', len(events), len(weather), len(ndvi))
    return tuple(events), tuple(weather), tuple(ndvi)
