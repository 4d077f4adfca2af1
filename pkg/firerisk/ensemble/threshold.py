from collections import namedtuple

import numpy as np

from ..exceptions import LeakageError, PreconditionError

ThresholdResult = namedtuple('ThresholdResult', 'threshold, f1, curve')


def threshold_grid(step=0.01, low=0.01, high=0.99):
    n = int(round((high - low) / step)) + 1
    return np.round(low + step * np.arange(n), 10)


def f1_at(probs, labels, threshold):
    """F1 of the positive class when predicting positive at p >= threshold"""
    predicted = probs >= threshold
    tp = int((predicted & labels).sum())
    fp = int((predicted & ~labels).sum())
    fn = int((~predicted & labels).sum())
    if tp == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def optimize_threshold(probs, labels, step=0.01, low=0.01, high=0.99):
    """Grid threshold maximizing the positive-class F1

    Ties go to the lowest threshold.

    Parameters
    ----------
    probs: array-like
        Probability of the positive (high-risk) class
    labels: array-like
        1 for positive rows, 0 otherwise

    Returns
    -------
    ThresholdResult(threshold, f1, curve) with curve a list of
    (threshold, F1) pairs over the whole grid
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if len(probs) != len(labels):
        raise PreconditionError('probabilities and labels differ in length')
    if np.any((probs < 0) | (probs > 1)):
        raise PreconditionError('probabilities must lie in [0, 1]')
    if labels.all() or not labels.any():
        raise PreconditionError('threshold search needs both classes')
    grid = threshold_grid(step, low, high)
    scores = np.array([f1_at(probs, labels, t) for t in grid])
    best = int(np.argmax(scores))
    curve = [(float(t), float(s)) for t, s in zip(grid, scores)]
    return ThresholdResult(float(grid[best]), float(scores[best]), curve)


def check_threshold_source(source):
    """Refuse to tune the decision threshold on the test partition"""
    if source == 'test':
        raise LeakageError('choosing the decision threshold on the test '
                           'partition leaks test labels; use threshold.source '
                           '= "oof" or "validation"')
    if source not in ('oof', 'validation'):
        raise PreconditionError(f'unknown threshold source {source!r}')
