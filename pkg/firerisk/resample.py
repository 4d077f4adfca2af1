"""SMOTE oversampling and Tomek-link cleaning of a training partition

Distances are Euclidean in the standardized feature space. Region dummies
are treated as real values, so synthetic rows may carry fractional dummies.
"""
from collections import Counter, namedtuple
import logging
import math
import warnings

import numpy as np
from scipy.spatial import cKDTree

from .config import ResampleConfig
from .exceptions import PreconditionError
from .parallel import derive_seed

logger = logging.getLogger(__name__)

ResampleResult = namedtuple('ResampleResult', 'X, y, summary')


def class_counts(y):
    return dict(sorted(Counter(np.asarray(y).tolist()).items()))


def majority_class(y):
    """Most frequent label; ties go to the lowest label"""
    counts = class_counts(y)
    best = max(counts.values())
    return min(c for c, n in counts.items() if n == best)


def _target_count(ratio, n_majority):
    return int(math.ceil(round(ratio * n_majority, 9)))


def _minority_neighbors(X, k, threads):
    """k nearest same-class neighbors of every row, excluding the row"""
    tree = cKDTree(X)
    _, index = tree.query(X, k=k + 1, workers=threads)
    index = np.atleast_2d(index)
    neighbors = np.empty((len(X), k), dtype=np.int64)
    for i, row in enumerate(index):
        others = row[row != i]
        neighbors[i] = others[:k]
    return neighbors


def smote(X, y, config=None, threads=1):
    """Oversample every non-majority class to ceil(target_ratio * majority)

    Original rows come first and unchanged; synthetic rows follow, class
    by class. A synthetic row is x + u * (x_nn - x) with u ~ U(0, 1) and
    x_nn one of the k nearest neighbors of x within its class.

    Parameters
    ----------
    X: array-like, shape (n, F)
    y: array-like, shape (n,)
    config: ResampleConfig
    threads: int
        Workers for the neighbor search; the output does not depend on it

    Returns
    -------
    (X', y')
    """
    config = config or ResampleConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(y) == 0:
        raise PreconditionError('cannot resample an empty training set')
    counts = class_counts(y)
    major = majority_class(y)
    target = _target_count(config.target_ratio, counts[major])
    k = config.k_neighbors
    position = {cls: i for i, cls in enumerate(np.unique(y).tolist())}
    new_X, new_y = [X], [y]
    for cls, n_cls in counts.items():
        n_new = target - n_cls
        if cls == major or n_new <= 0:
            continue
        if n_cls <= k:
            raise PreconditionError(
                f'class {cls!r} has {n_cls} rows; SMOTE needs more than '
                f'k_neighbors={k}, try resample.k_neighbors={n_cls - 1}'
                if n_cls > 1 else
                f'class {cls!r} has {n_cls} row; SMOTE needs at least 2')
        members = X[y == cls]
        neighbors = _minority_neighbors(members, k, threads)
        rng = np.random.default_rng(derive_seed(config.seed, position[cls]))
        base = rng.integers(0, n_cls, size=n_new)
        pick = rng.integers(0, k, size=n_new)
        u = rng.random(n_new)
        partner = members[neighbors[base, pick]]
        origin = members[base]
        new_X.append(origin + u[:, None] * (partner - origin))
        new_y.append(np.full(n_new, cls, dtype=y.dtype))
    if len(new_X) == 1:
        warnings.warn('SMOTE found nothing to synthesize; classes already '
                      'meet the target ratio')
        return X.copy(), y.copy()
    return np.vstack(new_X), np.concatenate(new_y)


def nearest_other(X, threads=1):
    """Index of each row's nearest other row; ties go to the lowest index"""
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 2:
        return np.full(n, -1, dtype=np.int64)
    tree = cKDTree(X)
    k = min(3, n)
    dist, index = tree.query(X, k=k, workers=threads)
    nearest = np.empty(n, dtype=np.int64)
    for i in range(n):
        keep = index[i] != i
        found_self = not keep.all()
        others, d = index[i][keep], dist[i][keep]
        if not found_self:
            others, d = others[:-1], d[:-1]
        if len(others) == 1 or d[0] < d[1]:
            if found_self:
                nearest[i] = others[0]
                continue
        # tie on the nearest distance: collect every candidate exactly
        radius = d[0] * (1 + 1e-9) + 1e-300
        candidates = np.array(sorted(tree.query_ball_point(X[i], radius)))
        candidates = candidates[candidates != i]
        exact = np.sqrt(((X[candidates] - X[i]) ** 2).sum(axis=1))
        nearest[i] = candidates[exact == exact.min()].min()
    return nearest


def tomek_links(X, y, threads=1):
    """Mutual nearest-neighbor pairs with opposite labels

    Returns
    -------
    Sorted list of (i, j) with i < j
    """
    y = np.asarray(y)
    nearest = nearest_other(X, threads)
    links = []
    for i, j in enumerate(nearest):
        if j > i and nearest[j] == i and y[i] != y[j]:
            links.append((i, int(j)))
    return links


def _removable(links, y, policy, major):
    remove = set()
    for i, j in links:
        if policy == 'remove_both':
            remove.update((i, j))
        else:
            remove.update(m for m in (i, j) if y[m] == major)
    return remove


def remove_tomek_links(X, y, policy='remove_majority', major=None,
                       threads=1):
    """Drop link members until no removable link is left

    Under `remove_majority` only members of `major` (the majority class of
    the data before oversampling) are dropped.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if major is None:
        major = majority_class(y)
    keep = np.arange(len(y))
    while True:
        links = tomek_links(X[keep], y[keep], threads)
        remove = _removable(links, y[keep], policy, major)
        if not remove:
            break
        mask = np.ones(len(keep), dtype=bool)
        mask[sorted(remove)] = False
        keep = keep[mask]
    return X[keep], y[keep]


def smote_tomek(X, y, config=None, threads=1):
    """SMOTE followed by Tomek-link removal under `config.tomek_policy`

    Returns
    -------
    ResampleResult(X, y, summary) where summary holds class counts before,
    after SMOTE and after cleaning
    """
    config = config or ResampleConfig()
    y = np.asarray(y)
    before = class_counts(y)
    major = majority_class(y)
    X_s, y_s = smote(X, y, config, threads)
    after_smote = class_counts(y_s)
    X_t, y_t = remove_tomek_links(X_s, y_s, config.tomek_policy, major,
                                  threads)
    summary = {'before': before, 'after_smote': after_smote,
               'after_tomek': class_counts(y_t)}
    logger.info('smote-tomek class counts %s -> %s -> %s', before,
                after_smote, summary['after_tomek'])
    return ResampleResult(X_t, y_t, summary)
