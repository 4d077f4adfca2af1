import numpy as np

from ..exceptions import PreconditionError


def stratified_kfold(labels, k, seed=0):
    """Fold id of every row with class proportions kept per fold

    Each class is shuffled and dealt round-robin over the folds, starting
    where the previous class stopped, so per-class counts differ by at most
    one between folds and so do fold sizes.

    Parameters
    ----------
    labels: array-like
    k: int
        Number of folds, at least 2
    seed: int

    Returns
    -------
    np.ndarray of fold ids in [0, k)
    """
    labels = np.asarray(labels)
    if k < 2:
        raise PreconditionError('need at least two folds')
    rng = np.random.default_rng(seed)
    folds = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise PreconditionError(
                f'class {cls!r} has {len(members)} row(s), fewer than the '
                f'{k} folds requested')
        shuffled = rng.permutation(members)
        folds[shuffled] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return folds


def fold_indices(folds, k):
    """(train rows, held-out rows) of each fold in order"""
    return [(np.flatnonzero(folds != f), np.flatnonzero(folds == f))
            for f in range(k)]
