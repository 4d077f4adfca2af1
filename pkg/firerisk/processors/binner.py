import numpy as np

from .core import BaseProcessor


class QuantileBinner(BaseProcessor):
    """Map each feature to integer bins for histogram split finding

    A feature with at most `n_bins` distinct training values gets one bin
    per value, cut at the midpoints, so histogram splits equal exact splits.
    Otherwise cuts sit on linearly interpolated quantiles. A value x falls in
    bin b when edges[b - 1] < x <= edges[b].

    Parameters
    ----------
    n_bins: int or None
        Maximum bins per feature; None always bins losslessly
    """
    def __init__(self, n_bins=255):
        self.n_bins = n_bins
        self.edges_ = None

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.edges_ = []
        for f in range(X.shape[1]):
            distinct = np.unique(X[:, f])
            if self.n_bins is None or len(distinct) <= self.n_bins:
                mid = (distinct[:-1] + distinct[1:]) / 2.0
                edges = np.where(mid >= distinct[1:], distinct[:-1], mid)
            else:
                levels = np.linspace(0.0, 1.0, self.n_bins + 1)[1:-1]
                edges = np.unique(np.quantile(X[:, f], levels))
                edges = edges[edges < distinct[-1]]
            self.edges_.append(edges)
        return self

    @property
    def n_bins_per_feature(self):
        return np.array([len(e) + 1 for e in self.edges_])

    def process(self, X):
        X = np.asarray(X, dtype=float)
        widest = int(self.n_bins_per_feature.max()) if self.edges_ else 1
        if widest <= 256:
            dtype = np.uint8
        elif widest <= 65536:
            dtype = np.uint16
        else:
            dtype = np.uint32
        bins = np.empty(X.shape, dtype=dtype)
        for f, edges in enumerate(self.edges_):
            bins[:, f] = np.searchsorted(edges, X[:, f], side='left')
        return bins

    def threshold(self, feature, bin_index):
        """Raw-value threshold equivalent to `bin <= bin_index`"""
        return float(self.edges_[feature][bin_index])

    def to_dict(self):
        return {'n_bins': self.n_bins,
                'edges': [[float(v) for v in e] for e in self.edges_]}

    @classmethod
    def from_dict(cls, data):
        binner = cls(data['n_bins'])
        binner.edges_ = [np.asarray(e, dtype=float) for e in data['edges']]
        return binner
