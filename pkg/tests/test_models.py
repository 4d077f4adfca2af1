import json

import numpy as np
import pytest
from scipy.special import expit

from firerisk.exceptions import PreconditionError
from firerisk.models import FAMILIES, DecisionTree, GradientBoostedTrees, \
    LogisticRegression, MLPClassifier, PriorModel, RandomForest, make_model
from firerisk.models.gbdt import logistic_loss
from firerisk.models.logistic import loss_and_gradient
from firerisk.models.tree import GAIN_TOLERANCE, best_split, gini, \
    n_split_features


def blobs(n=200, n_features=3, seed=0, n_classes=2):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, n_classes, n)
    X = rng.normal(size=(n, n_features)) + y[:, None]
    return X, y


def exhaustive_split(X, W, min_samples_leaf=1):
    """Every feature and midpoint, scored from scratch"""
    total = W.sum(axis=0)
    parent = gini(total)
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for low, high in zip(values[:-1], values[1:]):
            threshold = (low + high) / 2.0
            left = X[:, f] <= threshold
            if min(left.sum(), (~left).sum()) < min_samples_leaf:
                continue
            wl, wr = W[left].sum(axis=0), W[~left].sum(axis=0)
            gain = parent - (wl.sum() * gini(wl) + wr.sum() * gini(wr)) \
                / total.sum()
            if best is None or gain > best[0] + GAIN_TOLERANCE:
                best = (gain, f, threshold)
    return best


def test_best_split_matches_exhaustive_search():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(4, 40))
        X = rng.normal(size=(n, 3))
        y = rng.integers(0, 2, n)
        W = np.eye(2)[y]
        found = best_split(X, W, range(3), min_samples_leaf=2)
        expected = exhaustive_split(X, W, min_samples_leaf=2)
        if expected is None:
            assert found is None
            continue
        assert found.gain == pytest.approx(expected[0])
        assert found.feature == expected[1]
        assert found.threshold == expected[2]


def test_best_split_without_candidates():
    X = np.ones((5, 2))
    W = np.eye(2)[[0, 1, 0, 1, 0]]
    assert best_split(X, W, range(2)) is None


@pytest.mark.parametrize('max_features, expected', [
    (None, 16), ('sqrt', 4), ('log2', 4), (0.5, 8), (3, 3), (40, 16),
])
def test_split_feature_counts(max_features, expected):
    assert n_split_features(max_features, 16) == expected


def test_decision_tree_fits_training_data():
    X, y = blobs(100)
    tree = DecisionTree().fit(X, y)
    assert (tree.predict(X) == y).all()
    proba = tree.predict_proba(X)
    assert np.allclose(proba.sum(axis=1), 1.0)
    shallow = DecisionTree(max_depth=2).fit(X, y)
    assert shallow.tree_.depth() <= 2


def test_decision_tree_sample_weight_zero_drops_rows():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    tree = DecisionTree().fit(X, y, sample_weight=[1, 1, 1, 0])
    assert tree.tree_.threshold[0] == 1.5


def test_forest_is_seeded_and_thread_independent():
    X, y = blobs(150, seed=2)
    one = RandomForest(n_trees=12, seed=4).fit(X, y, threads=1)
    two = RandomForest(n_trees=12, seed=4).fit(X, y, threads=2)
    other = RandomForest(n_trees=12, seed=5).fit(X, y)
    assert np.array_equal(one.predict_proba(X), two.predict_proba(X))
    assert not np.array_equal(one.predict_proba(X), other.predict_proba(X))
    assert np.allclose(one.predict_proba(X).sum(axis=1), 1.0)


def boosting_stump(x, raw, y, l2, lr):
    """One depth-1 boosting round on a sorted single feature"""
    p = expit(raw)
    g, h = p - y, p * (1.0 - p)
    G, H = g.sum(), h.sum()
    best = None
    for i in range(1, len(x)):
        gl, hl = g[:i].sum(), h[:i].sum()
        gr, hr = G - gl, H - hl
        gain = 0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2)
                      - G * G / (H + l2))
        if best is None or gain > best[0] + GAIN_TOLERANCE:
            best = (gain, i, -lr * gl / (hl + l2), -lr * gr / (hr + l2))
    _, i, left, right = best
    threshold = (x[i - 1] + x[i]) / 2.0
    return threshold, np.where(x <= threshold, left, right)


def test_two_boosting_rounds_by_hand():
    x = np.arange(8, dtype=float)
    y = np.array([0, 0, 0, 1, 0, 1, 1, 1], dtype=float)
    model = GradientBoostedTrees(n_estimators=2, learning_rate=0.5,
                                 max_depth=1, l2_lambda=1.0, n_bins=None,
                                 min_samples_leaf=1, min_child_weight=0.0)
    model.fit(x[:, None], y)
    assert model.init_scores_ == [0.0]
    raw = np.zeros(8)
    for tree in model.trees_[0]:
        threshold, step = boosting_stump(x, raw, y, 1.0, 0.5)
        assert tree.threshold[0] == threshold
        raw = raw + step
    assert model.trees_[0][0].threshold[0] == 2.5
    assert np.allclose(model.decision_function(x[:, None]), raw,
                       atol=1e-12)
    assert model.train_loss_[-1] == pytest.approx(logistic_loss(raw, y))


def test_training_loss_never_increases():
    X, y = blobs(300, seed=3)
    for growth in ('depth_wise', 'leaf_wise'):
        model = GradientBoostedTrees(growth=growth, n_estimators=25,
                                     max_depth=3).fit(X, y)
        assert len(model.train_loss_) == 26
        assert np.all(np.diff(model.train_loss_) <= 1e-12)


def test_histogram_splits_equal_exact_splits():
    rng = np.random.default_rng(6)
    X = rng.integers(0, 10, size=(200, 3)).astype(float)
    y = (X[:, 0] + rng.normal(0, 2, 200) > 5).astype(int)
    binned = GradientBoostedTrees(n_estimators=10, n_bins=255).fit(X, y)
    exact = GradientBoostedTrees(n_estimators=10, n_bins=None).fit(X, y)
    assert np.allclose(binned.decision_function(X),
                       exact.decision_function(X), atol=1e-12)


def test_leaf_wise_respects_the_leaf_limit():
    X, y = blobs(300, seed=8)
    model = GradientBoostedTrees(growth='leaf_wise', n_estimators=3,
                                 max_leaves=5, max_depth=None,
                                 min_samples_leaf=1).fit(X, y)
    assert all(tree.n_leaves <= 5 for tree in model.trees_[0])


def test_early_stopping_keeps_the_best_round():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(300, 4))
    y = rng.integers(0, 2, 300)
    model = GradientBoostedTrees(n_estimators=200, early_stopping_rounds=3,
                                 min_samples_leaf=1, seed=1).fit(X, y)
    losses = model.validation_losses_[0]
    assert len(losses) < 201
    assert len(model.trees_[0]) == int(np.argmin(losses))


def test_gbdt_multiclass_probabilities():
    X, y = blobs(240, seed=5, n_classes=3)
    model = GradientBoostedTrees(n_estimators=5).fit(X, y)
    proba = model.predict_proba(X)
    assert proba.shape == (240, 3)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert len(model.trees_) == 3


def test_gbdt_needs_two_classes():
    with pytest.raises(PreconditionError):
        GradientBoostedTrees().fit(np.ones((5, 1)), np.zeros(5))


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 3))
    target = rng.integers(0, 2, 20).astype(float)
    params = rng.normal(size=4)
    _, grad = loss_and_gradient(params, X, target, 0.7)
    eps = 1e-6
    for i in range(4):
        step = np.zeros(4)
        step[i] = eps
        numeric = (loss_and_gradient(params + step, X, target, 0.7)[0]
                   - loss_and_gradient(params - step, X, target, 0.7)[0]) \
            / (2 * eps)
        assert numeric == pytest.approx(grad[i], abs=1e-6)


def test_logistic_fit():
    X, y = blobs(200, seed=1)
    model = LogisticRegression(l2=0.1).fit(X, y)
    assert model.converged_
    assert (model.predict(X) == y).mean() > 0.7
    X3, y3 = blobs(200, seed=1, n_classes=3)
    proba = LogisticRegression().fit(X3, y3).predict_proba(X3)
    assert np.allclose(proba.sum(axis=1), 1.0)


def test_mlp_gradient_matches_finite_differences():
    X = np.array([[0.1, -0.4], [0.7, 0.2], [-0.3, 0.9], [0.5, -0.8]])
    index = np.array([0, 1, 1, 0])
    model = MLPClassifier(hidden_layers=(3,), activation='tanh',
                          l2_alpha=0.3, seed=2)
    model.initialize(2, 2)
    params = model.get_flat_params()
    _, grad = model.loss_and_gradient(X, index)
    eps = 1e-6
    for i in range(len(params)):
        step = np.zeros(len(params))
        step[i] = eps
        model.set_flat_params(params + step)
        up, _ = model.loss_and_gradient(X, index)
        model.set_flat_params(params - step)
        down, _ = model.loss_and_gradient(X, index)
        assert (up - down) / (2 * eps) == pytest.approx(grad[i], abs=1e-4)
    model.set_flat_params(params)


def test_mlp_flags_an_unfinished_fit():
    X, y = blobs(60, seed=4)
    with pytest.warns(UserWarning, match='max_epochs'):
        model = MLPClassifier(hidden_layers=(4,), max_epochs=3,
                              batch_size=16).fit(X, y)
    assert model.flags_ == ['not_converged']
    assert len(model.loss_history_) == 3
    again = MLPClassifier(hidden_layers=(4,), max_epochs=3, batch_size=16)
    with pytest.warns(UserWarning):
        again.fit(X, y)
    assert np.array_equal(model.predict_proba(X), again.predict_proba(X))


def test_mlp_rejects_bad_layers():
    with pytest.raises(PreconditionError):
        MLPClassifier(hidden_layers=())
    with pytest.raises(PreconditionError):
        MLPClassifier(activation='sigmoid')


def test_prior_predicts_class_frequencies():
    X = np.zeros((10, 2))
    y = np.array([0] * 7 + [1] * 3)
    model = PriorModel().fit(X, y)
    assert model.predict_proba(X[:2]).tolist() == [[0.7, 0.3], [0.7, 0.3]]
    assert (model.predict(X) == 0).all()


def test_threshold_prediction():
    X, y = blobs(100, seed=9)
    model = LogisticRegression().fit(X, y)
    proba = model.predict_proba(X)[:, 1]
    assert np.array_equal(model.predict(X, threshold=0.3),
                          (proba >= 0.3).astype(int))


SMALL = {
    'prior': {},
    'tree': {'max_depth': 4},
    'forest': {'n_trees': 5},
    'gbdt_depth_wise': {'n_estimators': 5},
    'gbdt_leaf_wise': {'n_estimators': 5},
    'logistic': {},
    'mlp': {'hidden_layers': (4,), 'max_epochs': 3},
}


@pytest.mark.filterwarnings('ignore::UserWarning')
@pytest.mark.parametrize('family', sorted(SMALL))
def test_state_survives_json(family):
    X, y = blobs(120, seed=7)
    model = make_model(family, SMALL[family], seed=3).fit(X, y)
    state = json.loads(json.dumps(model.get_state()))
    restored = make_model(family, SMALL[family]).set_state(state)
    assert np.allclose(restored.predict_proba(X), model.predict_proba(X),
                       atol=1e-12)
    assert restored.flags_ == model.flags_


def test_make_model_fixes_growth_and_family():
    model = make_model('gbdt_leaf_wise', {'n_estimators': 3}, seed=9)
    assert model.growth == 'leaf_wise'
    assert model.family == 'gbdt_leaf_wise'
    assert model.seed == 9
    assert set(SMALL) <= set(FAMILIES)
    with pytest.raises(KeyError):
        make_model('svm')


def test_tree_edge_cases():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    xor = np.array([0, 1, 1, 0])
    tree = DecisionTree(max_depth=2).fit(X, xor)
    assert (tree.predict(X) == xor).all()
    pure = DecisionTree().fit(X, np.ones(4, dtype=int))
    assert pure.tree_.n_nodes == 1
    assert pure.predict_proba(X).tolist() == [[1.0]] * 4
    line = np.array([[0.0], [0.2], [0.8], [1.0]])
    stump = DecisionTree().fit(line, [0, 0, 1, 1])
    assert stump.tree_.depth() == 1
    assert stump.tree_.threshold[0] == 0.5


def test_degenerate_forest_is_a_tree():
    X, y = blobs(80, seed=11)
    forest = RandomForest(n_trees=1, max_features=None, bootstrap=False,
                          seed=3).fit(X, y)
    tree = DecisionTree().fit(X, y)
    assert np.array_equal(forest.predict_proba(X), tree.predict_proba(X))


def test_gbdt_without_learning_keeps_the_prior():
    X, y = blobs(100, seed=12)
    model = GradientBoostedTrees(n_estimators=3, learning_rate=0.0).fit(X, y)
    p = y.mean()
    assert np.allclose(model.decision_function(X), np.log(p / (1 - p)))
    raw = model.decision_function(X[:5])
    assert np.allclose(model.predict_proba(X[:5])[:, 1], expit(raw))


def test_logistic_limits():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(200, 2))
    y = np.tile([0, 1], 100)
    model = LogisticRegression(l2=1e4).fit(X, y)
    assert np.abs(model.predict_proba(X)[:, 1] - 0.5).max() < 0.05
    line = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    separated = LogisticRegression(l2=1.0).fit(line, [0, 0, 1, 1])
    assert np.isfinite(separated.coef_).all()
    assert separated.predict(line).tolist() == [0, 0, 1, 1]
