"""Stacked generalization

Base learners are cross-fit over stratified folds; the held-out class
probabilities of every learner (without the first, redundant class column)
form the meta-features of a logistic-regression meta learner. Resampling,
when configured, runs on each fold's training rows only. The final base
learners are refit on the whole (resampled) training set.
"""
import logging

import numpy as np

from ..config import ResampleConfig
from ..models import BaseModel, LogisticRegression, make_model
from ..parallel import derive_seed, run_parallel
from ..resample import smote_tomek
from .folds import fold_indices, stratified_kfold

logger = logging.getLogger(__name__)


def full_proba(model, X, n_classes):
    """Probabilities with one column per class index, zeros where the model
    never saw the class"""
    proba = model.predict_proba(X)
    if proba.shape[1] == n_classes:
        return proba
    out = np.zeros((len(proba), n_classes))
    out[:, np.asarray(model.classes_, dtype=np.int64)] = proba
    return out


def resample_rows(X, y, resample, seed):
    """SMOTE-Tomek a training split with a per-split seed; None skips"""
    if resample is None:
        return X, y
    config = ResampleConfig(**dict(resample, seed=seed))
    result = smote_tomek(X, y, config)
    return result.X, result.y


def fit_fold(family, params, X, y, train, held_out, resample, seed,
             n_classes):
    """Fit one base learner on a fold's training rows; held-out probabilities
    """
    X_fit, y_fit = resample_rows(X[train], y[train], resample, seed)
    model = make_model(family, params, seed=seed)
    model.fit(X_fit, y_fit)
    return full_proba(model, X[held_out], n_classes)


def fit_full(family, params, X, y, resample, seed):
    X_fit, y_fit = resample_rows(X, y, resample, seed)
    return make_model(family, params, seed=seed).fit(X_fit, y_fit)


def meta_features(probabilities):
    """Stack per-learner probability blocks, dropping the first class"""
    return np.hstack([proba[:, 1:] for proba in probabilities])


class StackedModel(BaseModel):
    """Stacking ensemble with a logistic-regression meta learner

    Parameters
    ----------
    base_learners: list of (family, params)
        At least two registered families with their hyperparameters
    meta_l2: float
        L2 strength of the meta learner
    n_folds: int
        Folds of the out-of-fold cross-fit
    resample: dict, optional
        ResampleConfig fields; applied inside every fold and to the final
        refit
    """
    family = 'stack'

    def __init__(self, base_learners=(('forest', {}), ('gbdt_leaf_wise', {})),
                 meta_l2=1.0, n_folds=5, resample=None, seed=0,
                 log_dir=None):
        super(StackedModel, self).__init__(seed, log_dir)
        self.base_learners = [(family, dict(params))
                              for family, params in base_learners]
        if len(self.base_learners) < 2:
            raise ValueError('a stack needs at least two base learners')
        self.meta_l2 = meta_l2
        self.n_folds = n_folds
        self.resample = None if resample is None else dict(resample)
        self.base_models_ = None
        self.meta_model_ = None
        self.folds_ = None
        self.oof_meta_ = None
        self.oof_proba_ = None

    def fit(self, X, y, threads=1, **kwargs):
        X, index = self._prepare(X, y)
        n_classes = len(self.classes_)
        self.folds_ = stratified_kfold(index, self.n_folds, self.seed)
        splits = fold_indices(self.folds_, self.n_folds)
        tasks = []
        for b, (family, params) in enumerate(self.base_learners):
            for f, (train, held_out) in enumerate(splits):
                tasks.append((family, params, X, index, train, held_out,
                              self.resample, derive_seed(self.seed, b, f),
                              n_classes))
        held = run_parallel(fit_fold, tasks, threads)
        probabilities = []
        for b in range(len(self.base_learners)):
            proba = np.zeros((len(X), n_classes))
            for f, (_, held_out) in enumerate(splits):
                proba[held_out] = held[b * self.n_folds + f]
            probabilities.append(proba)
        self.oof_meta_ = meta_features(probabilities)
        self.meta_model_ = LogisticRegression(l2=self.meta_l2).fit(
            self.oof_meta_, index)
        self.oof_proba_ = self._cross_fit_meta(splits, index, n_classes)
        self.base_models_ = run_parallel(
            fit_full,
            [(family, params, X, index, self.resample,
              derive_seed(self.seed, b))
             for b, (family, params) in enumerate(self.base_learners)],
            threads)
        self.flags_ = sorted(set(self.meta_model_.flags_).union(
            *[m.flags_ for m in self.base_models_]))
        logger.info('stack of %s fitted on %d rows',
                    [family for family, _ in self.base_learners], len(X))
        return self

    def _cross_fit_meta(self, splits, index, n_classes):
        """Out-of-fold stack probabilities for threshold selection"""
        proba = np.zeros((len(index), n_classes))
        for train, held_out in splits:
            meta = LogisticRegression(l2=self.meta_l2).fit(
                self.oof_meta_[train], index[train])
            proba[held_out] = full_proba(meta, self.oof_meta_[held_out],
                                         n_classes)
        return proba

    def predict_proba(self, X):
        self._check_fitted()
        n_classes = len(self.classes_)
        features = meta_features([full_proba(m, X, n_classes)
                                  for m in self.base_models_])
        return full_proba(self.meta_model_, features, n_classes)

    def get_state(self):
        state = self._base_state()
        state['base'] = [{'family': model.family,
                          'hyperparameters': model.get_params(),
                          'state': model.get_state()}
                         for model in self.base_models_]
        state['meta'] = self.meta_model_.get_state()
        return state

    def set_state(self, state):
        from ..models import FAMILIES
        self._set_base_state(state)
        self.base_models_ = []
        for entry in state['base']:
            _, fixed = FAMILIES[entry['family']]
            params = {k: v for k, v in entry['hyperparameters'].items()
                      if k not in fixed}
            model = make_model(entry['family'], params)
            self.base_models_.append(model.set_state(entry['state']))
        self.meta_model_ = LogisticRegression(l2=self.meta_l2).set_state(
            state['meta'])
        return self
