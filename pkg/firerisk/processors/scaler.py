import warnings

import numpy as np

from .core import BaseProcessor


class StandardScaler(BaseProcessor):
    """Standardize selected frame columns to zero mean, unit variance

    Columns with zero (or non-finite) standard deviation pass through
    unchanged and raise a warning.

    Parameters
    ----------
    columns: list(str)
        Columns to scale; every other column is left untouched
    """
    def __init__(self, columns):
        self.columns = list(columns)
        self.mean_ = None
        self.scale_ = None
        self.n_fit_rows_ = 0

    def fit(self, frame):
        values = frame[self.columns].to_numpy(dtype=float)
        if len(values) == 0:
            mean = np.zeros(len(self.columns))
            std = np.zeros(len(self.columns))
        else:
            mean = values.mean(axis=0)
            std = values.std(axis=0)
        degenerate = ~np.isfinite(std) | (std == 0)
        for name in np.asarray(self.columns)[degenerate]:
            warnings.warn(f'column {name!r} has zero variance on the '
                          f'training rows; passed through unscaled')
        self.mean_ = np.where(degenerate, 0.0, mean)
        self.scale_ = np.where(degenerate, 1.0, std)
        self.n_fit_rows_ = len(values)
        return self

    def process(self, frame):
        out = frame.copy()
        values = frame[self.columns].to_numpy(dtype=float)
        out[self.columns] = (values - self.mean_) / self.scale_
        return out

    def invert(self, frame):
        out = frame.copy()
        values = frame[self.columns].to_numpy(dtype=float)
        out[self.columns] = values * self.scale_ + self.mean_
        return out

    def to_dict(self):
        return {'columns': list(self.columns),
                'mean': [float(v) for v in self.mean_],
                'scale': [float(v) for v in self.scale_],
                'n_fit_rows': int(self.n_fit_rows_)}

    @classmethod
    def from_dict(cls, data):
        scaler = cls(data['columns'])
        scaler.mean_ = np.asarray(data['mean'], dtype=float)
        scaler.scale_ = np.asarray(data['scale'], dtype=float)
        scaler.n_fit_rows_ = data.get('n_fit_rows', 0)
        return scaler
