from collections import Counter, namedtuple
import datetime

# One satellite fire detection. `timestamp` is a timezone-aware UTC datetime.
FireEvent = namedtuple('FireEvent',
                       'latitude, longitude, timestamp, frp, confidence')

# One station-day. Measurement fields are float or None when the station did
# not report the variable on that date.
WeatherDay = namedtuple('WeatherDay',
                        'station_id, region, latitude, longitude, date, '
                        'tmin, tmax, tavg, prcp, wspd')

NdviSample = namedtuple('NdviSample',
                        'latitude, longitude, composite_date, ndvi')

WeatherValues = namedtuple('WeatherValues', 'tmin, tmax, tavg, prcp, wspd')

FusedRecord = namedtuple('FusedRecord',
                         'event, region, weather, distance_m, ndvi, '
                         'ndvi_lag_days')

WEATHER_VARIABLES = WeatherValues._fields

REGIONS = ('WA', 'QLD', 'VIC', 'TAS', 'SA', 'NSW', 'NT', 'ACT')

# Australia bounding box applied to fire detections
AUSTRALIA_LAT = (-44.0, -10.0)
AUSTRALIA_LON = (113.0, 154.0)

DEFAULT_WINDOW = (datetime.date(2015, 1, 1), datetime.date(2023, 12, 31))


class CountSummary(object):
    """Per-cause counter reconciling kept rows with the rows read

    Parameters
    ----------
    source: str
        Name of the file family or stage the counts belong to
    """
    def __init__(self, source):
        self.source = source
        self.rows = 0
        self.kept = 0
        self.counts = Counter()

    def add(self, cause, n=1):
        if n:
            self.counts[cause] += n

    @property
    def dropped(self):
        return sum(self.counts.values())

    def reconciles(self):
        return self.kept + self.dropped == self.rows

    def to_dict(self):
        return {'source': self.source,
                'rows': self.rows,
                'kept': self.kept,
                'dropped': self.dropped,
                'causes': dict(sorted(self.counts.items()))}

    def __repr__(self):
        return (f'<{self.__class__.__name__} {self.source}: '
                f'{self.kept}/{self.rows} kept, {dict(self.counts)}>')


class DropSummary(CountSummary):
    """Rows a parser discarded, keyed by cause"""


class ExclusionSummary(CountSummary):
    """Fire events the join could not fuse, keyed by cause"""
