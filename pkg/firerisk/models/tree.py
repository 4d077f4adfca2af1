"""CART classification trees grown on Gini impurity

A split sends rows with x[feature] <= threshold to the left child. Split
search is exact: every midpoint between consecutive distinct values of a
feature is a candidate. Among equal gains the lowest feature index wins,
then the lowest threshold.
"""
from collections import namedtuple

import numpy as np

from ..exceptions import PreconditionError
from .core import BaseModel

# feature is -1 on leaves; value is the class distribution (classification)
# or a one-element raw score (boosting)
TreeNode = namedtuple('TreeNode', 'feature, threshold, left, right, value')

Split = namedtuple('Split', 'gain, feature, threshold')

GAIN_TOLERANCE = 1e-12


class Tree(object):
    """Flattened binary tree; node 0 is the root"""
    def __init__(self, feature, threshold, left, right, value, gain=None):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float).reshape(
            len(self.feature), -1)
        self.gain = np.zeros(len(self.feature)) if gain is None \
            else np.asarray(gain, dtype=float)

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return int((self.feature < 0).sum())

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def nodes(self):
        return [TreeNode(int(f), float(t), int(l), int(r), tuple(v))
                for f, t, l, r, v in zip(self.feature, self.threshold,
                                         self.left, self.right, self.value)]

    def apply(self, X):
        """Leaf index reached by each row"""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while len(active):
            current = node[active]
            go_left = X[active, self.feature[current]] \
                <= self.threshold[current]
            node[active] = np.where(go_left, self.left[current],
                                    self.right[current])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {'feature': self.feature.tolist(),
                'threshold': [float(t) for t in self.threshold],
                'left': self.left.tolist(),
                'right': self.right.tolist(),
                'value': self.value.tolist(),
                'gain': [float(g) for g in self.gain]}

    @classmethod
    def from_dict(cls, data):
        return cls(data['feature'], data['threshold'], data['left'],
                   data['right'], data['value'], data.get('gain'))


class TreeBuilder(object):
    """Accumulates nodes in creation order"""
    def __init__(self):
        self.feature, self.threshold = [], []
        self.left, self.right = [], []
        self.value, self.gain = [], []

    def leaf(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.asarray(value, dtype=float))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def split(self, node, feature, threshold, left, right, gain):
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)
        self.left[node] = left
        self.right[node] = right
        self.gain[node] = float(gain)

    def build(self):
        return Tree(self.feature, self.threshold, self.left, self.right,
                    np.vstack(self.value), self.gain)


def gini(counts):
    """Gini impurity of (weighted) class counts along the last axis"""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1)
    with np.errstate(invalid='ignore', divide='ignore'):
        p = counts / total[..., None]
        impurity = 1.0 - (p ** 2).sum(axis=-1)
    return np.where(total > 0, impurity, 0.0)


def midpoint(low, high):
    mid = (low + high) / 2.0
    return low if mid >= high else mid


def best_split(X, W, features, min_samples_leaf=1):
    """Best Gini split of a node

    Parameters
    ----------
    X: np.ndarray, shape (n, F)
    W: np.ndarray, shape (n, K)
        Per-row class weights (one-hot label times sample weight)
    features: iterable of int
        Candidate features in ascending order
    min_samples_leaf: int
        Minimum number of rows on either side

    Returns
    -------
    Split or None when no candidate satisfies the constraints
    """
    n = len(X)
    total = W.sum(axis=0)
    w_total = total.sum()
    parent = gini(total)
    positions = np.arange(1, n)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind='stable')
        xs = X[order, f]
        left = np.cumsum(W[order], axis=0)[:-1]
        right = total - left
        valid = (xs[:-1] < xs[1:]) & (positions >= min_samples_leaf) \
            & (n - positions >= min_samples_leaf)
        if not valid.any():
            continue
        child = (left.sum(axis=1) * gini(left)
                 + right.sum(axis=1) * gini(right)) / w_total
        gain = np.where(valid, parent - child, -np.inf)
        top = gain.max()
        i = int(np.flatnonzero(gain >= top - GAIN_TOLERANCE)[0])
        if best is None or gain[i] > best.gain + GAIN_TOLERANCE:
            best = Split(float(gain[i]), int(f), midpoint(xs[i], xs[i + 1]))
    return best


def n_split_features(max_features, n_features):
    """Number of features drawn per split"""
    if max_features is None or max_features == 'all':
        return n_features
    if max_features == 'sqrt':
        return max(1, int(np.sqrt(n_features)))
    if max_features == 'log2':
        return max(1, int(np.log2(n_features)))
    if isinstance(max_features, float):
        if not 0 < max_features <= 1:
            raise PreconditionError('a fractional max_features must lie in '
                                    '(0, 1]')
        return max(1, int(max_features * n_features))
    if isinstance(max_features, int) and max_features >= 1:
        return min(n_features, max_features)
    raise PreconditionError(f'unsupported max_features {max_features!r}')


def grow_tree(X, W, max_depth=None, min_samples_leaf=1, max_features=None,
              rng=None):
    """Greedy depth-first CART growth

    Impure nodes split whenever a valid candidate exists, also at zero
    gain. Leaves hold the weighted class distribution of their rows.
    """
    n, n_features = X.shape
    n_draw = n_split_features(max_features, n_features)
    builder = TreeBuilder()

    def distribution(rows):
        counts = W[rows].sum(axis=0)
        return counts / counts.sum()

    root = builder.leaf(distribution(np.arange(n)))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        counts = W[rows].sum(axis=0)
        if (counts > 0).sum() <= 1 or len(rows) < 2 * min_samples_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if n_draw < n_features:
            features = np.sort(rng.choice(n_features, n_draw, replace=False))
        else:
            features = range(n_features)
        split = best_split(X[rows], W[rows], features, min_samples_leaf)
        if split is None:
            continue
        go_left = X[rows, split.feature] <= split.threshold
        left_rows, right_rows = rows[go_left], rows[~go_left]
        left = builder.leaf(distribution(left_rows))
        right = builder.leaf(distribution(right_rows))
        builder.split(node, split.feature, split.threshold, left, right,
                      split.gain)
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.build()


def class_weight_matrix(index, n_classes, class_weight=None,
                        sample_weight=None):
    """One-hot label matrix scaled by class and sample weights"""
    n = len(index)
    W = np.zeros((n, n_classes))
    W[np.arange(n), index] = 1.0
    if class_weight == 'balanced':
        counts = np.bincount(index, minlength=n_classes)
        with np.errstate(divide='ignore'):
            per_class = np.where(counts > 0, n / (n_classes * counts), 0.0)
        W *= per_class[None, :]
    elif class_weight is not None:
        raise PreconditionError(f'unsupported class_weight {class_weight!r}')
    if sample_weight is not None:
        W *= np.asarray(sample_weight, dtype=float)[:, None]
    return W


class DecisionTree(BaseModel):
    """Single CART classifier

    Parameters
    ----------
    max_depth: int, optional
    min_samples_leaf: int
    max_features: int, float, str or None
        Features drawn per split; None uses all of them
    class_weight: 'balanced' or None
        'balanced' weights each class by n / (K * n_class)
    """
    family = 'tree'

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None,
                 class_weight=None, seed=0, log_dir=None):
        super(DecisionTree, self).__init__(seed, log_dir)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.class_weight = class_weight
        self.tree_ = None

    def fit(self, X, y, sample_weight=None, **kwargs):
        X, index = self._prepare(X, y)
        W = class_weight_matrix(index, len(self.classes_), self.class_weight,
                                sample_weight)
        rows = np.flatnonzero(W.sum(axis=1) > 0)
        self.tree_ = grow_tree(X[rows], W[rows], self.max_depth,
                               self.min_samples_leaf, self.max_features,
                               np.random.default_rng(self.seed))
        return self

    def predict_proba(self, X):
        self._check_fitted()
        return self.tree_.predict_value(X)

    def get_state(self):
        state = self._base_state()
        state['tree'] = self.tree_.to_dict()
        return state

    def set_state(self, state):
        self._set_base_state(state)
        self.tree_ = Tree.from_dict(state['tree'])
        return self
