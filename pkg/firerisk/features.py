"""Feature engineering, FRP capping, risk labels and the train/test split

Feature matrices are written as comma separated text preceded by one
manifest line::

    #manifest=<sha256 of the feature order>

followed by a header row of the feature names plus `frp_capped` and
`label`. Labels are stored as class indices; class names travel in the
run metadata and in every model artifact.
"""
from collections import namedtuple
import hashlib
import logging
import math
import os

import numpy as np
import pandas as pd

from .exceptions import ManifestError, PreconditionError, SchemaError
from .processors import StandardScaler
from .records import WEATHER_VARIABLES

logger = logging.getLogger(__name__)

# NSW is the reference category and gets no column
DUMMY_REGIONS = ('WA', 'QLD', 'VIC', 'TAS', 'SA')

FEATURES = ('diurnal_range', 'wspd', 'month_sin', 'month_cos',
            'ndvi_scaled', 'wspd_prcp', 'ndvi_prcp', 'range_prcp') \
    + tuple(f'region_{r}' for r in DUMMY_REGIONS) + ('distance_m',)
RAW_WEATHER = ('tmin', 'tmax', 'tavg', 'prcp')
TARGET_COLUMNS = ('frp_capped', 'label')

# Columns standardized with train-set mean/std; month encodings and region
# dummies stay as they are.
CONTINUOUS = ('diurnal_range', 'wspd', 'ndvi_scaled', 'wspd_prcp',
              'ndvi_prcp', 'range_prcp', 'distance_m') + RAW_WEATHER

FeatureRow = namedtuple('FeatureRow', FEATURES + TARGET_COLUMNS)

LabelScheme = namedtuple('LabelScheme', 'mode, thresholds, class_names')

SplitSpec = namedtuple('SplitSpec', 'test_fraction, seed')

FeatureMatrix = namedtuple('FeatureMatrix',
                           'X, y, frp, features, manifest')

FeatureSet = namedtuple('FeatureSet',
                        'train, test, features, scaler, cap, scheme')

TWO_CLASS = LabelScheme('two_class', (40.0,), ('low', 'high'))

_EXACT = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


def feature_names(raw_weather=False):
    return FEATURES + RAW_WEATHER if raw_weather else FEATURES


def feature_manifest(features):
    """SHA-256 over the ordered feature names"""
    text = '\n'.join(features)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _snap(values):
    values = np.asarray(values, dtype=float)
    distance = np.abs(values[..., None] - _EXACT)
    nearest = distance.argmin(axis=-1)
    close = distance.min(axis=-1) < 1e-12
    return np.where(close, _EXACT[nearest], values)


def encode_month(month):
    """Cyclic encoding of a calendar month

    Parameters
    ----------
    month: int or array-like of int
        Month number, 1 to 12

    Returns
    -------
    (sin, cos) of 2*pi*month/12; values within 1e-12 of 0, +-0.5 or +-1
    are returned exactly
    """
    months = np.asarray(month)
    if months.size and (np.any(months != np.floor(months))
                        or months.min() < 1 or months.max() > 12):
        raise PreconditionError(f'month must be in 1..12, got {month!r}')
    angle = 2.0 * math.pi * months.astype(float) / 12.0
    sin, cos = _snap(np.sin(angle)), _snap(np.cos(angle))
    if months.ndim == 0:
        return float(sin), float(cos)
    return sin, cos


def cap_percentile(values, q=0.99):
    """Cap values at their q-quantile

    The quantile interpolates linearly between order statistics.

    Returns
    -------
    (cap_value, capped array)
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise PreconditionError('cannot cap an empty list of values')
    if not np.all(np.isfinite(values)):
        raise PreconditionError('capping needs finite values')
    cap = float(np.quantile(values, q))
    return cap, apply_cap(values, cap)


def apply_cap(values, cap):
    return np.minimum(np.asarray(values, dtype=float), cap)


def label_scheme(config=None):
    """LabelScheme from a LabelConfig; defaults to the 40 MW two-class cut"""
    if config is None:
        return TWO_CLASS
    if config.mode == 'two_class':
        thresholds = tuple(config.thresholds or TWO_CLASS.thresholds)
        names = TWO_CLASS.class_names
    else:
        thresholds = tuple(config.thresholds)
        names = ('low', 'medium', 'high')
    if config.class_names is not None:
        names = tuple(config.class_names)
    return LabelScheme(config.mode, thresholds, names)


def label(frp_capped, scheme=TWO_CLASS):
    """Risk class index; a value equal to a threshold falls in the lower class
    """
    frp = np.asarray(frp_capped, dtype=float)
    classes = np.searchsorted(np.asarray(scheme.thresholds), frp, side='left')
    if classes.ndim == 0:
        return int(classes)
    return classes.astype(np.int64)


def engineer_frame(records, raw_weather=False):
    """Unscaled engineered features of fused records

    `ndvi_scaled` holds the raw NDVI until the scaler is applied. The
    returned frame also carries `frp`.
    """
    n = len(records)
    weather = {name: np.array([getattr(r.weather, name) for r in records],
                              dtype=float).reshape(n)
               for name in WEATHER_VARIABLES}
    months = np.array([r.event.timestamp.month for r in records],
                      dtype=int).reshape(n)
    month_sin, month_cos = encode_month(months)
    ndvi = np.array([r.ndvi for r in records], dtype=float).reshape(n)
    diurnal = weather['tmax'] - weather['tmin']
    prcp = weather['prcp']
    frame = pd.DataFrame({
        'diurnal_range': diurnal,
        'wspd': weather['wspd'],
        'month_sin': month_sin,
        'month_cos': month_cos,
        'ndvi_scaled': ndvi,
        'wspd_prcp': weather['wspd'] * prcp,
        'ndvi_prcp': ndvi * prcp,
        'range_prcp': diurnal * prcp,
    })
    regions = np.array([r.region for r in records], dtype=object)
    for region in DUMMY_REGIONS:
        frame[f'region_{region}'] = (regions == region).astype(float)
    frame['distance_m'] = np.array([r.distance_m for r in records],
                                   dtype=float).reshape(n)
    if raw_weather:
        for name in RAW_WEATHER:
            frame[name] = weather[name]
    frame['frp'] = np.array([r.event.frp for r in records],
                            dtype=float).reshape(n)
    return frame


def fit_scaler(train, features=FEATURES):
    """Fit a StandardScaler on the continuous columns of the train rows"""
    columns = [c for c in features if c in CONTINUOUS]
    return StandardScaler(columns).fit(train)


def apply_scaler(frame, scaler):
    return scaler.process(frame)


def engineer(fused, scaler, scheme=TWO_CLASS, cap=None, raw_weather=False):
    """FeatureRow of one fused record under fitted scaler parameters"""
    frame = apply_scaler(engineer_frame([fused], raw_weather), scaler)
    frp = frame['frp'].to_numpy()
    frp_capped = apply_cap(frp, cap)[0] if cap is not None else frp[0]
    row = frame.iloc[0]
    values = [float(row[name]) for name in FEATURES]
    return FeatureRow(*values, float(frp_capped), label(frp_capped, scheme))


def split(labels, split_spec):
    """Stratified train/test partition of row indices

    Each class contributes round(n_c * test_fraction) rows to the test
    side, clipped to [1, n_c - 1].

    Returns
    -------
    (train indices, test indices), both sorted
    """
    labels = np.asarray(labels)
    if not 0 < split_spec.test_fraction < 1:
        raise PreconditionError('test_fraction must lie in (0, 1)')
    rng = np.random.default_rng(split_spec.seed)
    test = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise PreconditionError(
                f'class {cls!r} has {len(members)} row(s); a stratified '
                f'split needs at least 2')
        n_test = int(np.floor(len(members) * split_spec.test_fraction + 0.5))
        n_test = min(max(n_test, 1), len(members) - 1)
        test.append(rng.permutation(members)[:n_test])
    test = np.sort(np.concatenate(test)) if test else np.array([], int)
    train = np.setdiff1d(np.arange(len(labels)), test)
    return train, test


def featurize(records, labels_config=None, split_spec=SplitSpec(0.2, 0),
              cap_quantile=0.99, raw_weather=False):
    """Fused records to scaled train/test frames

    The FRP cap is taken over all fused rows before labelling; the scaler
    sees only the train partition.
    """
    scheme = label_scheme(labels_config)
    features = feature_names(raw_weather)
    frame = engineer_frame(records, raw_weather)
    if len(frame) == 0:
        raise PreconditionError('no fused records to featurize')
    cap, capped = cap_percentile(frame['frp'].to_numpy(), cap_quantile)
    frame['frp_capped'] = capped
    frame['label'] = label(capped, scheme)
    frame = frame.drop(columns='frp')
    train_idx, test_idx = split(frame['label'].to_numpy(), split_spec)
    train = frame.iloc[train_idx].reset_index(drop=True)
    test = frame.iloc[test_idx].reset_index(drop=True)
    scaler = fit_scaler(train, features)
    train, test = apply_scaler(train, scaler), apply_scaler(test, scaler)
    logger.info('featurized %d rows (train %d, test %d), frp cap %.4f',
                len(frame), len(train), len(test), cap)
    columns = list(features) + list(TARGET_COLUMNS)
    return FeatureSet(train[columns], test[columns], features, scaler, cap,
                      scheme)


def write_features(frame, path, features):
    """Write a feature matrix with its manifest line"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    columns = list(features) + [c for c in TARGET_COLUMNS if c in frame]
    with open(path, 'w', newline='') as f:
        f.write(f'#manifest={feature_manifest(features)}\n')
        frame[columns].to_csv(f, index=False, lineterminator='\n',
                              float_format='%.17g')


def read_features(path):
    """Read a feature matrix file

    Returns
    -------
    FeatureMatrix; `y` and `frp` are None when the file has no label columns

    Raises
    ------
    ManifestError when the manifest line disagrees with the header
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as f:
        first = f.readline().rstrip('\n')
        if not first.startswith('#manifest='):
            raise SchemaError(f'{path}: missing #manifest= line')
        manifest = first[len('#manifest='):]
        frame = pd.read_csv(f, dtype=float, keep_default_na=False,
                            na_values=[''])
    features = tuple(c for c in frame.columns if c not in TARGET_COLUMNS)
    got = feature_manifest(features)
    if got != manifest:
        raise ManifestError(manifest, got)
    X = frame[list(features)].to_numpy(dtype=float)
    y = frame['label'].to_numpy().astype(np.int64) \
        if 'label' in frame else None
    frp = frame['frp_capped'].to_numpy(dtype=float) \
        if 'frp_capped' in frame else None
    return FeatureMatrix(X, y, frp, features, manifest)


def write_matrix(X, y, path, features, frp=None):
    """Write a numpy feature matrix (e.g. a resampled train set)"""
    frame = pd.DataFrame(np.asarray(X, dtype=float), columns=list(features))
    if frp is not None:
        frame['frp_capped'] = frp
    if y is not None:
        frame['label'] = np.asarray(y, dtype=np.int64)
    write_features(frame, path, features)
