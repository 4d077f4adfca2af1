import itertools

import numpy as np
import pytest

from firerisk.exceptions import PreconditionError
from firerisk.metrics import VIF_INFINITE, ClassificationReport, \
    confusion, correlation_matrix, report, roc_auc, roc_curve, score, vif, \
    vif_table


def counting_oracle(labels, predictions, classes):
    out = {}
    for c in classes:
        tp = sum(1 for t, p in zip(labels, predictions) if t == c and p == c)
        fp = sum(1 for t, p in zip(labels, predictions) if t != c and p == c)
        fn = sum(1 for t, p in zip(labels, predictions) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) \
            if precision + recall else 0.0
        out[c] = (precision, recall, f1, tp + fn)
    return out


@pytest.mark.parametrize('n_classes', [2, 3])
def test_report_matches_counting_oracle(n_classes):
    rng = np.random.default_rng(n_classes)
    labels = rng.integers(0, n_classes, 1000).tolist()
    predictions = rng.integers(0, n_classes, 1000).tolist()
    classes = list(range(n_classes))
    result = report(labels, predictions, classes)
    oracle = counting_oracle(labels, predictions, classes)
    for k, c in enumerate(classes):
        precision, recall, f1, support = oracle[c]
        assert result.precision[k] == pytest.approx(precision, abs=1e-12)
        assert result.recall[k] == pytest.approx(recall, abs=1e-12)
        assert result.f1[k] == pytest.approx(f1, abs=1e-12)
        assert result.support[k] == support
    accuracy = np.mean(np.array(labels) == np.array(predictions))
    assert result.accuracy == pytest.approx(accuracy, abs=1e-12)
    assert result.macro.f1 == pytest.approx(
        np.mean([oracle[c][2] for c in classes]), abs=1e-12)
    weights = np.array([oracle[c][3] for c in classes]) / 1000
    assert result.weighted.precision == pytest.approx(
        (weights * [oracle[c][0] for c in classes]).sum(), abs=1e-12)
    weighted_recall = (weights * [oracle[c][1] for c in classes]).sum()
    assert result.weighted.recall == pytest.approx(weighted_recall, abs=1e-12)
    assert result.weighted.recall == pytest.approx(accuracy, abs=1e-12)


def test_confusion_counts_and_row_percentages():
    matrix = confusion([0, 0, 1, 1, 2], [0, 1, 1, 1, 0], [0, 1, 2])
    assert matrix.tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 0]]
    result = ClassificationReport(matrix, ['low', 'medium', 'high'])
    assert result.normalized[0].tolist() == [50.0, 50.0, 0.0]
    assert result.normalized[1].tolist() == [0.0, 100.0, 0.0]


def test_confusion_rejects_unknown_labels():
    with pytest.raises(PreconditionError):
        confusion([0, 5], [0, 0], [0, 1])
    with pytest.raises(PreconditionError):
        confusion([0, 1], [0], [0, 1])


def test_never_predicted_class_has_zero_precision():
    result = report([0, 1, 1, 0], [0, 0, 0, 0], [0, 1], ['low', 'high'])
    assert result.precision[1] == 0.0
    assert result.f1[1] == 0.0
    assert result.zero_division == ['high']
    assert 'never-predicted' in result.to_text()


def test_two_class_counts_at_benchmark_scale():
    # 49357 low at 90% recall; 2759 high at 47% recall
    low_hit, high_hit = 44421, 1297
    matrix = [[low_hit, 49357 - low_hit], [2759 - high_hit, high_hit]]
    result = ClassificationReport(matrix, ['low', 'high'])
    assert result.recall[0] == pytest.approx(0.90, abs=1e-3)
    assert result.recall[1] == pytest.approx(0.47, abs=1e-3)
    assert result.precision[1] == pytest.approx(0.20, abs=0.01)
    assert result.accuracy == pytest.approx(0.87, abs=0.01)
    assert result.macro.f1 == pytest.approx(0.61, abs=0.01)
    assert result.weighted.recall == pytest.approx(result.accuracy)


def test_weighted_recall_skips_classes_without_support():
    matrix = [[3, 1, 0], [0, 0, 0], [1, 0, 5]]
    result = ClassificationReport(matrix, ['low', 'medium', 'high'])
    assert result.recall.tolist() == [0.75, 0.0, pytest.approx(5 / 6)]
    assert result.weighted.recall == pytest.approx(
        0.4 * 0.75 + 0.6 * 5 / 6)
    assert result.weighted.recall == pytest.approx(0.8)
    empty = ClassificationReport(np.zeros((2, 2), dtype=int), ['low', 'high'])
    assert empty.weighted.recall == 0.0 and empty.accuracy == 0.0



def test_report_text_and_dict():
    result = report([0, 1, 1], [0, 1, 0], [0, 1], ['low', 'high'])
    text = result.to_text('stack')
    assert text.splitlines()[0] == 'stack'
    assert 'macro avg' in text and 'weighted avg' in text
    data = result.to_dict()
    assert data['classes']['high']['support'] == 2
    assert ClassificationReport.from_dict(data).to_dict() == data


def pair_oracle(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0
                for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


@pytest.mark.parametrize('tied', [False, True])
def test_auc_matches_pair_concordance(tied):
    rng = np.random.default_rng(int(tied))
    for n in (2, 30, 500):
        labels = np.r_[0, 1, rng.integers(0, 2, n - 2)]
        scores = rng.integers(0, 4, n).astype(float) if tied \
            else rng.random(n)
        auc = roc_auc(scores, labels)
        assert auc == pytest.approx(pair_oracle(scores, labels), abs=1e-12)
        assert roc_auc(-scores, labels) == pytest.approx(1.0 - auc,
                                                         abs=1e-12)


def test_auc_needs_both_classes():
    with pytest.raises(PreconditionError):
        roc_auc([0.1, 0.2], [1, 1])


def test_roc_curve_area_equals_auc():
    rng = np.random.default_rng(4)
    labels = rng.integers(0, 2, 200)
    scores = np.round(rng.random(200), 1)
    curve = roc_curve(scores, labels)
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    area = np.sum(np.diff(curve.fpr) * (curve.tpr[1:] + curve.tpr[:-1]) / 2)
    assert area == pytest.approx(roc_auc(scores, labels), abs=1e-12)


def ols_vif(X):
    n, p = X.shape
    out = []
    for j in range(p):
        A = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        y = X[:, j]
        beta = np.linalg.solve(A.T @ A, A.T @ y)
        residual = y - A @ beta
        r2 = 1 - residual @ residual / ((y - y.mean()) ** 2).sum()
        out.append(1 / (1 - r2))
    return np.array(out)


def test_vif_matches_least_squares():
    X = np.random.default_rng(5).normal(size=(50, 4))
    X[:, 3] += 0.8 * X[:, 0]
    assert np.allclose(vif(X), ols_vif(X), rtol=1e-6, atol=0)


def test_vif_duplicate_and_orthogonal_columns():
    X = np.random.default_rng(6).normal(size=(40, 3))
    X[:, 2] = X[:, 0]
    values = vif(X)
    assert values[0] == VIF_INFINITE and values[2] == VIF_INFINITE
    orthogonal = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1],
                           [-1, 1, 1], [-1, 1, -1], [-1, -1, 1],
                           [-1, -1, -1]], dtype=float)
    assert np.allclose(vif(orthogonal), 1.0, atol=1e-9)


def test_vif_preconditions_and_table():
    with pytest.raises(PreconditionError):
        vif(np.ones((10, 1)))
    with pytest.raises(PreconditionError):
        vif(np.ones((3, 3)))
    X = np.random.default_rng(7).normal(size=(30, 3))
    X[:, 1] += 2 * X[:, 2]
    table = vif_table(X, ['a', 'b', 'c'])
    assert [name for name, _ in table][-1] == 'a'
    assert table[0][1] >= table[1][1] >= table[2][1]


def test_correlation_matches_covariance_formula():
    X = np.random.default_rng(8).normal(size=(100, 5))
    matrix, constant = correlation_matrix(X)
    assert np.allclose(matrix, np.corrcoef(X, rowvar=False), atol=1e-12)
    assert not constant.any()


def test_correlation_with_a_constant_column():
    X = np.column_stack([np.arange(5.0), np.ones(5), np.arange(5.0) ** 2])
    matrix, constant = correlation_matrix(X)
    assert constant.tolist() == [False, True, False]
    assert matrix[1].tolist() == [0.0, 1.0, 0.0]
    assert np.allclose(matrix, matrix.T)


def test_scores():
    labels, predictions = [0, 0, 1, 1], [0, 1, 1, 1]
    assert score(labels, predictions, 'accuracy') == 0.75
    assert score(labels, predictions, 'high_recall') == 1.0
    assert score(labels, predictions, 'macro_f1') == pytest.approx(
        (2 / 3 + 0.8) / 2)
    with pytest.raises(PreconditionError):
        score(labels, predictions, 'auc')
