import numpy as np

from .core import BaseModel


class PriorModel(BaseModel):
    """Predicts the training class frequencies for every row

    Its argmax is the majority class, which makes it the reference every
    trained model is compared with.
    """
    family = 'prior'

    def __init__(self, seed=0, log_dir=None):
        super(PriorModel, self).__init__(seed, log_dir)
        self.prior_ = None

    def fit(self, X, y, **kwargs):
        X, index = self._prepare(X, y)
        counts = np.bincount(index, minlength=len(self.classes_))
        self.prior_ = counts / counts.sum()
        return self

    def predict_proba(self, X):
        self._check_fitted()
        n = len(np.asarray(X))
        return np.tile(self.prior_, (n, 1))

    def get_state(self):
        state = self._base_state()
        state['prior'] = [float(p) for p in self.prior_]
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.prior_ = np.asarray(state['prior'], dtype=float)
        return self
