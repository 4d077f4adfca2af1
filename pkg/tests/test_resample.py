import math

import numpy as np
import pytest

from firerisk.config import ResampleConfig
from firerisk.exceptions import PreconditionError
from firerisk.resample import class_counts, majority_class, nearest_other, \
    remove_tomek_links, smote, smote_tomek, tomek_links


def imbalanced(n_major=60, n_minor=15, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0.0, 1.0, (n_major, 3)),
                   rng.normal(1.5, 1.0, (n_minor, 3))])
    y = np.array([0] * n_major + [1] * n_minor)
    return X, y


def on_some_segment(point, members, tol=1e-9):
    for a in members:
        for b in members:
            direction = b - a
            norm = direction @ direction
            lam = 0.0 if norm == 0 else (point - a) @ direction / norm
            lam = min(max(lam, 0.0), 1.0)
            if np.abs(point - (a + lam * direction)).max() <= tol:
                return True
    return False


def test_smote_reaches_the_target_count():
    X, y = imbalanced()
    X_s, y_s = smote(X, y, ResampleConfig(target_ratio=0.5, seed=3))
    assert class_counts(y_s) == {0: 60, 1: 30}
    X_s, y_s = smote(X, y, ResampleConfig(target_ratio=1.0, seed=3))
    assert class_counts(y_s) == {0: 60, 1: 60}


def test_smote_target_rounds_up():
    X, y = imbalanced(n_major=61)
    _, y_s = smote(X, y, ResampleConfig(target_ratio=0.5))
    assert class_counts(y_s)[1] == math.ceil(0.5 * 61)


def test_synthetic_rows_are_convex_combinations():
    X, y = imbalanced()
    X_s, y_s = smote(X, y, ResampleConfig(seed=1))
    assert np.array_equal(X_s[:len(X)], X)
    assert np.array_equal(y_s[:len(y)], y)
    members = X[y == 1]
    for row in X_s[len(X):]:
        assert on_some_segment(row, members)


def test_smote_needs_more_rows_than_neighbors():
    X, y = imbalanced(n_minor=5)
    with pytest.raises(PreconditionError, match='k_neighbors'):
        smote(X, y, ResampleConfig(k_neighbors=5))


def test_smote_warns_when_balanced():
    X, y = imbalanced(n_major=20, n_minor=20)
    with pytest.warns(UserWarning):
        X_s, y_s = smote(X, y)
    assert np.array_equal(X_s, X)


def test_smote_is_seeded():
    X, y = imbalanced()
    a = smote(X, y, ResampleConfig(seed=9))
    b = smote(X, y, ResampleConfig(seed=9))
    c = smote(X, y, ResampleConfig(seed=10))
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


def test_smote_seed_follows_the_class_position():
    X, y = imbalanced()
    expected = smote(X, y, ResampleConfig(seed=4))
    for labels in (np.where(y == 1, 7.5, 0.25),
                   np.where(y == 1, 10 ** 12, -3),
                   np.where(y == 1, 'high', 'disputed')):
        X_s, y_s = smote(X, labels, ResampleConfig(seed=4))
        assert np.array_equal(X_s, expected[0])
        assert np.array_equal(y_s == labels[-1], expected[1] == 1)


def test_majority_ties_go_to_the_lowest_label():
    assert majority_class([2, 2, 1, 1, 3]) == 1


def test_nearest_other_ties():
    X = np.array([[0.0], [1.0], [-1.0], [5.0]])
    assert nearest_other(X).tolist() == [1, 0, 0, 1]


def test_nearest_other_with_duplicates():
    X = np.array([[0.0], [0.0], [0.0], [2.0]])
    assert nearest_other(X).tolist() == [1, 0, 0, 0]


def test_tomek_links_by_hand():
    X = np.array([[0.0], [1.0], [5.0], [6.0], [10.0], [10.5]])
    y = np.array([0, 1, 0, 0, 1, 0])
    assert tomek_links(X, y) == [(0, 1), (4, 5)]


def test_remove_both_leaves_no_links():
    X, y = imbalanced(seed=4)
    X_r, y_r = remove_tomek_links(X, y, 'remove_both')
    assert tomek_links(X_r, y_r) == []


def test_remove_majority_keeps_every_minority_row():
    X, y = imbalanced(seed=4)
    X_r, y_r = remove_tomek_links(X, y, 'remove_majority')
    assert class_counts(y_r)[1] == 15
    assert tomek_links(X_r, y_r) == []


def test_smote_tomek_summary_and_thread_independence():
    X, y = imbalanced(n_major=80, n_minor=20, seed=2)
    config = ResampleConfig(target_ratio=1.0, seed=5,
                            tomek_policy='remove_both')
    one = smote_tomek(X, y, config, threads=1)
    two = smote_tomek(X, y, config, threads=2)
    assert np.array_equal(one.X, two.X)
    assert np.array_equal(one.y, two.y)
    assert one.summary['before'] == {0: 80, 1: 20}
    assert one.summary['after_smote'] == {0: 80, 1: 80}
    assert one.summary['after_tomek'] == class_counts(one.y)
    assert tomek_links(one.X, one.y) == []
