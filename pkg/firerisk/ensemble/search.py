"""Randomized hyperparameter search with stratified k-fold scoring

A distribution is one of

* a list: values drawn uniformly, e.g. ``learning_rate = [0.01, 0.05, 0.1]``
* a table ``{low, high, log = false, type = "float"}``: a uniform (or
  log-uniform) draw; ``type = "int"`` rounds down to an integer
* anything else: a fixed value
"""
from collections import namedtuple
import copy
import logging

import numpy as np
from tensorboardX import SummaryWriter

from ..exceptions import PreconditionError
from ..metrics import score
from ..models import make_model
from ..parallel import derive_seed, run_parallel
from .core import resample_rows
from .folds import fold_indices, stratified_kfold

logger = logging.getLogger(__name__)

SearchResult = namedtuple('SearchResult', 'best_params, best_score, table')

SearchRow = namedtuple('SearchRow', 'iteration, params, fold_scores, mean')

# Used when search.distributions has no entry for a family
DEFAULT_DISTRIBUTIONS = {
    'gbdt_depth_wise': {'n_estimators': [100, 200],
                        'learning_rate': [0.01, 0.05, 0.1]},
    'gbdt_leaf_wise': {'n_estimators': [100, 200],
                       'learning_rate': [0.01, 0.05, 0.1]},
    'forest': {'n_trees': [100, 200], 'max_features': ['sqrt', 'log2']},
    'mlp': {'hidden_layers': [[100, 100, 50]],
            'activation': ['relu', 'tanh'],
            'l2_alpha': [1e-4, 1e-3, 1e-2]},
    'logistic': {'l2': [0.1, 1.0, 10.0]},
}


def sample_value(distribution, rng):
    if isinstance(distribution, (list, tuple)):
        if len(distribution) == 0:
            raise PreconditionError('empty choice list in search space')
        index = int(rng.integers(len(distribution)))
        return copy.deepcopy(distribution[index])
    if isinstance(distribution, dict) and 'low' in distribution:
        low, high = float(distribution['low']), float(distribution['high'])
        if distribution.get('log', False):
            value = float(np.exp(rng.uniform(np.log(low), np.log(high))))
        else:
            value = float(rng.uniform(low, high))
        if distribution.get('type', 'float') == 'int':
            return int(np.floor(value))
        return value
    return copy.deepcopy(distribution)


def sample_configs(distributions, n_iter, seed):
    """n_iter parameter dicts; parameters are drawn in sorted name order"""
    rng = np.random.default_rng(seed)
    return [{name: sample_value(distributions[name], rng)
             for name in sorted(distributions)} for _ in range(n_iter)]


def _fold_score(family, params, X, y, train, held_out, resample, seed,
                scoring, classes):
    X_fit, y_fit = resample_rows(X[train], y[train], resample, seed)
    model = make_model(family, params, seed=seed).fit(X_fit, y_fit)
    return score(y[held_out], model.predict(X[held_out]), scoring, classes)


def random_search(X, y, search, family, base_params=None, resample=None,
                  threads=1, log_dir=None):
    """Sample configurations and rank them by mean stratified CV score

    Parameters
    ----------
    search: SearchConfig
        n_iter, n_folds, scoring, seed and optional distributions per family
    family: str
    base_params: dict, optional
        Hyperparameters the sampled values are layered over
    resample: dict, optional
        ResampleConfig fields; applied to each fold's training rows only

    Returns
    -------
    SearchResult; the best configuration is the first with the highest mean
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    distributions = search.distributions.get(
        family, DEFAULT_DISTRIBUTIONS.get(family, {}))
    configs = []
    for sampled in sample_configs(distributions, search.n_iter, search.seed):
        params = dict(base_params or {})
        params.update(sampled)
        configs.append(params)
    classes = np.unique(y)
    folds = stratified_kfold(y, search.n_folds, search.seed)
    splits = fold_indices(folds, search.n_folds)
    tasks = [(family, params, X, y, train, held_out, resample,
              derive_seed(search.seed, i, f), search.scoring, classes)
             for i, params in enumerate(configs)
             for f, (train, held_out) in enumerate(splits)]
    scores = run_parallel(_fold_score, tasks, threads)
    table = []
    for i, params in enumerate(configs):
        fold_scores = scores[i * search.n_folds:(i + 1) * search.n_folds]
        table.append(SearchRow(i, params, [float(s) for s in fold_scores],
                               float(np.mean(fold_scores))))
    best = int(np.argmax([row.mean for row in table]))
    if log_dir:
        writer = SummaryWriter(log_dir)
        try:
            for row in table:
                writer.add_scalar(f'search/{family}/mean_score', row.mean,
                                  row.iteration)
        finally:
            writer.close()
    logger.info('%s search: best mean %s %.4f at iteration %d', family,
                search.scoring, table[best].mean, best)
    return SearchResult(table[best].params, table[best].mean, table)


def search_table_rows(family, result):
    """Flat rows for the delimited CV table"""
    rows = []
    for row in result.table:
        entry = {'family': family, 'iteration': row.iteration,
                 'mean': row.mean}
        for f, value in enumerate(row.fold_scores):
            entry[f'fold_{f}'] = value
        entry['params'] = ';'.join(f'{k}={row.params[k]}'
                                   for k in sorted(row.params))
        rows.append(entry)
    return rows
