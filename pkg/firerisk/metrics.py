"""Classification metrics and feature diagnostics

Precision of a class that is never predicted is reported as 0 and the
class is listed in `ClassificationReport.zero_division`.
"""
from collections import namedtuple

import numpy as np
from scipy.stats import rankdata

from .exceptions import PreconditionError

VIF_INFINITE = float('inf')
_R2_CEILING = 1.0 - 1e-12

Averages = namedtuple('Averages', 'precision, recall, f1')
RocCurve = namedtuple('RocCurve', 'fpr, tpr, thresholds')


def _check_lengths(labels, predictions):
    if len(labels) != len(predictions):
        raise PreconditionError(f'labels and predictions differ in length: '
                                f'{len(labels)} vs {len(predictions)}')


def confusion(labels, predictions, classes):
    """Count matrix; entry (i, j) counts rows of true class i predicted j"""
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    _check_lengths(labels, predictions)
    classes = list(classes)
    position = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    try:
        true_index = np.array([position[c] for c in labels.tolist()],
                              dtype=np.int64)
        pred_index = np.array([position[c] for c in predictions.tolist()],
                              dtype=np.int64)
    except KeyError as exc:
        raise PreconditionError(f'label {exc.args[0]!r} is not one of '
                                f'{classes}')
    matrix = np.zeros((k, k), dtype=np.int64)
    np.add.at(matrix, (true_index, pred_index), 1)
    return matrix


def normalize_rows(matrix):
    """Row percentages; rows of absent classes stay all-zero"""
    matrix = np.asarray(matrix, dtype=float)
    totals = matrix.sum(axis=1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        percent = np.where(totals > 0, 100.0 * matrix / totals, 0.0)
    return percent


class ClassificationReport(object):
    """Per-class precision/recall/F1/support with accuracy and averages

    Parameters
    ----------
    matrix: np.ndarray, shape (K, K)
        Confusion counts
    class_names: list(str)
    """
    def __init__(self, matrix, class_names):
        self.matrix = np.asarray(matrix, dtype=np.int64)
        self.class_names = list(class_names)
        tp = np.diag(self.matrix).astype(float)
        predicted = self.matrix.sum(axis=0).astype(float)
        self.support = self.matrix.sum(axis=1)
        actual = self.support.astype(float)
        with np.errstate(invalid='ignore', divide='ignore'):
            self.precision = np.where(predicted > 0, tp / predicted, 0.0)
            self.recall = np.where(actual > 0, tp / actual, 0.0)
            both = self.precision + self.recall
            self.f1 = np.where(both > 0,
                               2 * self.precision * self.recall / both, 0.0)
        self.zero_division = [name for name, p in zip(self.class_names,
                                                      predicted) if p == 0]
        self.total = int(self.support.sum())
        self.accuracy = float(tp.sum() / self.total) if self.total else 0.0
        self.macro = Averages(float(self.precision.mean()),
                              float(self.recall.mean()),
                              float(self.f1.mean()))
        weights = actual / self.total if self.total else actual
        self.weighted = Averages(float((weights * self.precision).sum()),
                                 float((weights * self.recall).sum()),
                                 float((weights * self.f1).sum()))

    @property
    def normalized(self):
        return normalize_rows(self.matrix)

    def to_dict(self):
        return {
            'class_names': self.class_names,
            'classes': {name: {'precision': float(p), 'recall': float(r),
                               'f1': float(f), 'support': int(s)}
                        for name, p, r, f, s in zip(
                            self.class_names, self.precision, self.recall,
                            self.f1, self.support)},
            'accuracy': self.accuracy,
            'macro_avg': self.macro._asdict(),
            'weighted_avg': self.weighted._asdict(),
            'confusion': self.matrix.tolist(),
            'confusion_row_percent': self.normalized.tolist(),
            'zero_division': self.zero_division,
            'total': self.total,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['confusion'], data['class_names'])

    def to_text(self, title=None):
        """Aligned table: one row per class, then accuracy and averages"""
        width = max([len(n) for n in self.class_names] + [12])
        lines = []
        if title:
            lines.append(title)
        lines.append(f'{"":>{width}}  {"precision":>9}  {"recall":>9}  '
                     f'{"f1-score":>9}  {"support":>9}')
        for name, p, r, f, s in zip(self.class_names, self.precision,
                                    self.recall, self.f1, self.support):
            lines.append(f'{name:>{width}}  {p:9.2f}  {r:9.2f}  {f:9.2f}  '
                         f'{s:9d}')
        lines.append('')
        lines.append(f'{"accuracy":>{width}}  {"":>9}  {"":>9}  '
                     f'{self.accuracy:9.2f}  {self.total:9d}')
        for label, avg in (('macro avg', self.macro),
                           ('weighted avg', self.weighted)):
            lines.append(f'{label:>{width}}  {avg.precision:9.2f}  '
                         f'{avg.recall:9.2f}  {avg.f1:9.2f}  '
                         f'{self.total:9d}')
        if self.zero_division:
            lines.append(f'precision set to 0 for never-predicted '
                         f'class(es): {", ".join(self.zero_division)}')
        return '\n'.join(lines) + '\n'


def report(labels, predictions, classes=None, class_names=None):
    """ClassificationReport of predictions against labels

    Parameters
    ----------
    classes: list, optional
        Label values in report order; defaults to the sorted union
    class_names: list(str), optional
        Display names; defaults to str(class)
    """
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    _check_lengths(labels, predictions)
    if classes is None:
        classes = sorted(set(labels.tolist()) | set(predictions.tolist()))
    if class_names is None:
        class_names = [str(c) for c in classes]
    return ClassificationReport(confusion(labels, predictions, classes),
                                class_names)


def _binary(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    _check_lengths(labels, scores)
    positive = labels == 1 if labels.dtype != bool else labels
    n_pos = int(positive.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise PreconditionError('ROC analysis needs both classes present')
    return scores, positive, n_pos, n_neg


def roc_auc(scores, labels):
    """Area under the ROC curve from the rank-sum statistic

    Equals the probability that a random positive outscores a random
    negative, ties counting one half. Labels are 0/1 (or bool).
    """
    scores, positive, n_pos, n_neg = _binary(scores, labels)
    ranks = rankdata(scores, method='average')
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels):
    """ROC points at every distinct score, from (0, 0) to (1, 1)"""
    scores, positive, n_pos, n_neg = _binary(scores, labels)
    order = np.argsort(-scores, kind='stable')
    ranked = scores[order]
    hits = positive[order]
    tp = np.cumsum(hits)
    fp = np.cumsum(~hits)
    last = np.r_[np.flatnonzero(ranked[1:] != ranked[:-1]), len(ranked) - 1]
    fpr = np.r_[0.0, fp[last] / n_neg]
    tpr = np.r_[0.0, tp[last] / n_pos]
    thresholds = np.r_[np.inf, ranked[last]]
    return RocCurve(fpr, tpr, thresholds)


def vif(X):
    """Variance inflation factor of every column

    VIF_j = 1 / (1 - R^2_j), R^2_j from least squares of column j on the
    other columns plus an intercept. R^2 >= 1 - 1e-12 (exact collinearity,
    or a constant column) gives VIF_INFINITE.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise PreconditionError('VIF needs at least two columns')
    n, p = X.shape
    if n <= p:
        raise PreconditionError(f'VIF needs more rows than columns, got '
                                f'{n} x {p}')
    result = np.empty(p)
    for j in range(p):
        target = X[:, j]
        design = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        residual = target - design @ coef
        total = ((target - target.mean()) ** 2).sum()
        if total == 0:
            result[j] = VIF_INFINITE
            continue
        r2 = 1.0 - (residual @ residual) / total
        result[j] = VIF_INFINITE if r2 >= _R2_CEILING else 1.0 / (1.0 - r2)
    return result


def vif_table(X, names):
    """(name, VIF) pairs sorted by VIF, largest first"""
    values = vif(X)
    order = sorted(range(len(names)), key=lambda j: (-values[j], j))
    return [(names[j], float(values[j])) for j in order]


def correlation_matrix(X):
    """Pearson correlations

    Returns
    -------
    (matrix, constant) where `constant` flags zero-variance columns; their
    off-diagonal correlations are 0 and the diagonal is 1 throughout
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise PreconditionError('correlation needs at least two rows')
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    constant = norms == 0
    safe = np.where(constant, 1.0, norms)
    matrix = (centered.T @ centered) / np.outer(safe, safe)
    matrix[constant, :] = 0.0
    matrix[:, constant] = 0.0
    matrix = np.clip(matrix, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return matrix, constant


def score(labels, predictions, scoring='macro_f1', classes=None):
    """Single-number score used by the hyperparameter search

    'high_recall' is the recall of the last class in `classes`.
    """
    result = report(labels, predictions, classes)
    if scoring == 'macro_f1':
        return result.macro.f1
    if scoring == 'accuracy':
        return result.accuracy
    if scoring == 'high_recall':
        return float(result.recall[-1])
    raise PreconditionError(f'unknown scoring {scoring!r}')
