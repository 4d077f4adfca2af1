import logging

import numpy as np
from tqdm import tqdm

from ..parallel import derive_seed, run_parallel
from .core import BaseModel
from .tree import Tree, class_weight_matrix, grow_tree

logger = logging.getLogger(__name__)


def _fit_tree(X, W, seed, bootstrap, max_depth, min_samples_leaf,
              max_features):
    rng = np.random.default_rng(seed)
    if bootstrap:
        n = len(X)
        draws = np.bincount(rng.integers(0, n, size=n), minlength=n)
        W = W * draws[:, None]
    rows = np.flatnonzero(W.sum(axis=1) > 0)
    return grow_tree(X[rows], W[rows], max_depth, min_samples_leaf,
                     max_features, rng)


class RandomForest(BaseModel):
    """Bagged CART trees with per-split feature subsampling

    Tree t draws its bootstrap sample and its split features from a seed
    derived from (seed, t), so the fitted forest does not depend on how
    many workers built it.

    Parameters
    ----------
    n_trees: int
    max_depth: int, optional
    min_samples_leaf: int
    max_features: int, float, str or None
        'sqrt' (default), 'log2', a count, a fraction or None for all
    bootstrap: bool
    class_weight: 'balanced' or None
    """
    family = 'forest'

    def __init__(self, n_trees=100, max_depth=None, min_samples_leaf=1,
                 max_features='sqrt', bootstrap=True, class_weight=None,
                 seed=0, log_dir=None):
        super(RandomForest, self).__init__(seed, log_dir)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.class_weight = class_weight
        self.trees_ = None

    def fit(self, X, y, sample_weight=None, threads=1, **kwargs):
        X, index = self._prepare(X, y)
        W = class_weight_matrix(index, len(self.classes_), self.class_weight,
                                sample_weight)
        seeds = [derive_seed(self.seed, t) for t in range(self.n_trees)]
        settings = (self.bootstrap, self.max_depth, self.min_samples_leaf,
                    self.max_features)
        if threads <= 1:
            self.trees_ = [_fit_tree(X, W, s, *settings)
                           for s in tqdm(seeds, desc='forest', leave=False,
                                         disable=None)]
        else:
            self.trees_ = run_parallel(_fit_tree,
                                       [(X, W, s) + settings for s in seeds],
                                       threads)
        logger.debug('forest of %d trees, mean depth %.1f', self.n_trees,
                     np.mean([tree.depth() for tree in self.trees_]))
        return self

    def predict_proba(self, X):
        self._check_fitted()
        total = np.zeros((len(np.asarray(X)), len(self.classes_)))
        for tree in self.trees_:
            total += tree.predict_value(X)
        return total / len(self.trees_)

    def get_state(self):
        state = self._base_state()
        state['trees'] = [tree.to_dict() for tree in self.trees_]
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.trees_ = [Tree.from_dict(t) for t in state['trees']]
        return self
