import numpy as np
import pandas as pd
import pytest

from firerisk.processors import QuantileBinner, StandardScaler


def test_scaler_standardizes_selected_columns():
    frame = pd.DataFrame({'a': [1.0, 2.0, 3.0, 4.0], 'b': [5.0] * 4,
                          'c': [1.0, 0.0, 1.0, 0.0]})
    with pytest.warns(UserWarning, match="'b'"):
        scaler = StandardScaler(['a', 'b']).fit(frame)
    out = scaler.process(frame)
    assert out['a'].mean() == pytest.approx(0.0)
    assert out['a'].std(ddof=0) == pytest.approx(1.0)
    assert out['b'].tolist() == [5.0] * 4
    assert out['c'].tolist() == frame['c'].tolist()
    assert np.allclose(scaler.invert(out)['a'], frame['a'])


def test_scaler_state_round_trip():
    frame = pd.DataFrame({'a': [1.0, 3.0, 8.0]})
    scaler = StandardScaler(['a']).fit(frame)
    restored = StandardScaler.from_dict(scaler.to_dict())
    assert restored.process(frame).equals(scaler.process(frame))


def test_binner_is_lossless_below_the_bin_budget():
    X = np.array([[0.0], [1.0], [1.0], [3.0]])
    binner = QuantileBinner(n_bins=4).fit(X)
    assert binner.edges_[0].tolist() == [0.5, 2.0]
    assert binner.process(X)[:, 0].tolist() == [0, 1, 1, 2]
    assert binner.threshold(0, 1) == 2.0


def test_binner_respects_the_bin_budget():
    X = np.random.default_rng(0).normal(size=(1000, 3))
    binner = QuantileBinner(n_bins=16).fit(X)
    bins = binner.process(X)
    assert bins.dtype == np.uint8
    assert (binner.n_bins_per_feature <= 16).all()
    assert bins.max() < 16
    for f in range(3):
        order = np.argsort(X[:, f])
        assert np.all(np.diff(bins[order, f].astype(int)) >= 0)


def test_binner_without_budget_keeps_every_value():
    X = np.arange(300, dtype=float).reshape(-1, 1)
    binner = QuantileBinner(n_bins=None).fit(X)
    assert binner.n_bins_per_feature.tolist() == [300]
    assert binner.process(X).dtype == np.uint16
    assert len(np.unique(binner.process(X))) == 300
