"""Persisted models

An artifact is one JSON document with sorted keys::

    {"schema_version": 1, "family": "forest", "hyperparameters": {...},
     "parameters": {...}, "features": [...], "manifest": "<sha256>",
     "classes": ["low", "high"], "threshold": 0.47, "flags": []}

Loading and saving again reproduces the file byte for byte.
"""
import json
import os

import numpy as np

from ..exceptions import ManifestError, SchemaError
from ..features import feature_manifest

SCHEMA_VERSION = 1


def _plain(value):
    """numpy scalars and tuples to JSON-native values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ModelArtifact(object):
    """A fitted model bound to its feature manifest and class names

    Parameters
    ----------
    family: str
        Registered model family
    hyperparameters: dict
    parameters: dict
        Learned state as returned by the model's `get_state`
    features: list(str)
        Feature order the model was trained on
    classes: list(str)
        Class names in probability-column order
    threshold: float, optional
        Decision threshold on the last class probability (binary runs)
    flags: list(str)
        Fit warnings such as 'not_converged'
    """
    def __init__(self, family, hyperparameters, parameters, features,
                 classes, threshold=None, flags=(),
                 schema_version=SCHEMA_VERSION):
        self.family = family
        self.hyperparameters = _plain(hyperparameters)
        self.parameters = _plain(parameters)
        self.features = list(features)
        self.classes = list(classes)
        self.threshold = None if threshold is None else float(threshold)
        self.flags = list(flags)
        self.schema_version = schema_version
        self._model = None

    @property
    def manifest(self):
        return feature_manifest(self.features)

    @classmethod
    def from_model(cls, model, features, class_names, threshold=None):
        return cls(model.family, model.get_params(), model.get_state(),
                   features, class_names, threshold, model.flags_)

    def to_dict(self):
        return {'schema_version': self.schema_version,
                'family': self.family,
                'hyperparameters': self.hyperparameters,
                'parameters': self.parameters,
                'features': self.features,
                'manifest': self.manifest,
                'classes': self.classes,
                'threshold': self.threshold,
                'flags': self.flags}

    @classmethod
    def from_dict(cls, data):
        if data.get('schema_version') != SCHEMA_VERSION:
            raise SchemaError(f'unsupported artifact schema version '
                              f'{data.get("schema_version")!r}')
        artifact = cls(data['family'], data['hyperparameters'],
                       data['parameters'], data['features'], data['classes'],
                       data.get('threshold'), data.get('flags', ()))
        if data.get('manifest') != artifact.manifest:
            raise ManifestError(data.get('manifest'), artifact.manifest)
        return artifact

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + '\n'

    def save(self, path):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write(self.dumps())

    def to_model(self):
        """Rebuild the fitted model (cached)"""
        if self._model is None:
            from . import make_model
            model = make_model(self.family, self._constructor_params())
            self._model = model.set_state(self.parameters)
        return self._model

    def _constructor_params(self):
        from . import FAMILIES
        _, fixed = FAMILIES[self.family]
        return {k: v for k, v in self.hyperparameters.items()
                if k not in fixed}

    def check_features(self, features):
        if features is None:
            return
        features = list(features)
        if features != self.features:
            raise ManifestError(','.join(self.features), ','.join(features))

    def predict_proba(self, X, features=None):
        self.check_features(features)
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.features):
            raise ManifestError(f'{len(self.features)} features',
                                f'{X.shape[-1]} columns')
        return self.to_model().predict_proba(X)

    def predict(self, X, features=None):
        """Class indices, applying the stored threshold on binary models"""
        proba = self.predict_proba(X, features)
        if self.threshold is not None and proba.shape[1] == 2:
            return (proba[:, 1] >= self.threshold).astype(np.int64)
        return np.argmax(proba, axis=1)


def load_artifact(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f'{path}: not a model artifact ({exc})')
    return ModelArtifact.from_dict(data)
