from abc import ABC, abstractmethod


class BaseProcessor(ABC):
    """Abstract class for column transforms fitted on training data

    `fit` learns parameters from the training partition only; `process`
    applies them to any partition.
    """
    def fit(self, X):
        return self

    @abstractmethod
    def process(self, X):
        raise NotImplementedError

    def fit_process(self, X):
        return self.fit(X).process(X)

    def to_dict(self):
        raise NotImplementedError

    @classmethod
    def from_dict(cls, data):
        raise NotImplementedError
