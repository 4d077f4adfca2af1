from abc import ABC, abstractmethod
import inspect

import numpy as np

from ..exceptions import PreconditionError


class BaseModel(ABC):
    """Abstract class for classifiers

    You need to inherit this class and implement `fit`, `predict_proba`,
    `get_state` and `set_state`. Constructor arguments are the model's
    hyperparameters; `get_params` reads them back by name.

    Parameters
    ----------
    seed: int
        Seed of every random draw made during `fit`
    log_dir: str, optional
        Directory for tensorboard training curves; nothing is written when
        it is None
    """
    family = None

    def __init__(self, seed=0, log_dir=None):
        super(BaseModel, self).__init__()
        self.seed = seed
        self.log_dir = log_dir
        self.classes_ = None
        self.flags_ = []

    @classmethod
    def _param_names(cls):
        names = []
        for klass in cls.__mro__:
            if '__init__' not in vars(klass):
                continue
            signature = inspect.signature(klass.__init__)
            for name in list(signature.parameters)[1:]:
                if name not in names and name not in ('log_dir', 'kwargs'):
                    names.append(name)
        return names

    def get_params(self):
        return {name: getattr(self, name) for name in self._param_names()}

    def _prepare(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2:
            raise PreconditionError('X must be a 2-D matrix')
        if len(X) == 0 or len(X) != len(y):
            raise PreconditionError(
                f'need |X| = |y| > 0, got {len(X)} and {len(y)}')
        self.classes_ = np.unique(y)
        self.flags_ = []
        return X, np.searchsorted(self.classes_, y)

    def _check_fitted(self):
        if self.classes_ is None:
            raise PreconditionError(
                f'{self.__class__.__name__} is not fitted yet')

    @abstractmethod
    def fit(self, X, y, **kwargs):
        raise NotImplementedError

    @abstractmethod
    def predict_proba(self, X):
        raise NotImplementedError

    def predict(self, X, threshold=None):
        """Class labels; a binary model with `threshold` predicts the second
        class when its probability is at least the threshold"""
        proba = self.predict_proba(X)
        if threshold is not None and len(self.classes_) == 2:
            index = (proba[:, 1] >= threshold).astype(int)
        else:
            index = np.argmax(proba, axis=1)
        return self.classes_[index]

    @abstractmethod
    def get_state(self):
        """Learned parameters as plain JSON-compatible values"""
        raise NotImplementedError

    @abstractmethod
    def set_state(self, state):
        raise NotImplementedError

    def _base_state(self):
        return {'classes': [int(c) for c in self.classes_],
                'flags': list(self.flags_)}

    def _set_base_state(self, state):
        self.classes_ = np.asarray(state['classes'], dtype=np.int64)
        self.flags_ = list(state.get('flags', []))
