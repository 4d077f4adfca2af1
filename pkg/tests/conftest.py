import datetime
import os

import numpy as np
import pytest

from firerisk.records import FireEvent, FusedRecord, WeatherValues
from firerisk.ingest import utc_stamp


@pytest.fixture
def write_text(tmp_path):
    """Write `text` to `name` under a temporary directory; returns the path"""
    def write(name, text):
        path = os.path.join(tmp_path, name)
        with open(path, 'w') as f:
            f.write(text)
        return path
    return write


def make_fused(n, seed=0, high_fraction=0.3):
    """Fused records with a weather-driven FRP, for featurize/resample tests
    """
    rng = np.random.default_rng(seed)
    regions = ('WA', 'QLD', 'VIC', 'TAS', 'SA', 'NSW', 'NT', 'ACT')
    records = []
    for i in range(n):
        month = int(rng.integers(1, 13))
        tmax = float(20 + 10 * rng.random())
        tmin = tmax - float(5 + 10 * rng.random())
        prcp = float(rng.exponential(2.0)) if rng.random() < 0.4 else 0.0
        wspd = float(rng.gamma(3.0, 5.0))
        high = rng.random() < high_fraction
        frp = float(41 + rng.exponential(50)) if high \
            else float(1 + 38 * rng.random())
        stamp = utc_stamp(datetime.date(2019, month, 1 + i % 28), 600)
        event = FireEvent(-30.0 + rng.random(), 140.0 + rng.random(), stamp,
                          frp, 80)
        weather = WeatherValues(tmin, tmax, (tmin + tmax) / 2, prcp, wspd)
        records.append(FusedRecord(event, regions[i % len(regions)], weather,
                                   float(4000 * rng.random()),
                                   float(rng.uniform(0.1, 0.8)),
                                   int(rng.integers(-8, 9))))
    return tuple(records)


@pytest.fixture
def fused_records():
    return make_fused(200)
