from __future__ import annotations

import hashlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import straight_cor, straight_rmse
from vigil.errors import LengthMismatch, UnevenSessions, ZeroVariance
from vigil.evaluation import ZERO_VARIANCE, confusion, cor, five_fold, rmse, session_bounds


def test_metrics_match_straight_line_oracles():
    r = np.random.default_rng(0)
    for _ in range(200):
        n = int(r.integers(2, 60))
        y, p = r.uniform(0, 1, n), r.uniform(0, 1, n)
        assert abs(rmse(y, p) - straight_rmse(y, p)) <= 1e-12
        assert abs(cor(y, p) - straight_cor(y, p)) <= 1e-12


def test_metric_hand_cases():
    assert rmse([0, 0, 0, 0], [1, 1, 1, 1]) == 1.0
    assert rmse([0.2, 0.4], [0.2, 0.4]) == 0.0
    assert cor([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-15)
    assert cor([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ZeroVariance):
        cor([1, 2, 3], [0.5, 0.5, 0.5])
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0), st.integers(0, 1000))
def test_cor_affine_invariant(a, b, seed):
    r = np.random.default_rng(seed)
    y, p = r.uniform(0, 1, 30), r.uniform(0, 1, 30)
    assert cor(y, a * p + b) == pytest.approx(cor(y, p), abs=1e-12)


class Memo:
    def __init__(self, value):
        self.value = value

    def predict(self, X, lengths=None):
        return self.value(X)


def test_perfect_and_constant_predictors():
    r = np.random.default_rng(1)
    X = r.uniform(0, 1, (100, 1))
    y = X[:, 0].copy()
    perfect = five_fold(X, y, lambda Xt, yt, L: Memo(lambda Z: Z[:, 0]))
    assert perfect.cor == pytest.approx(1.0) and max(perfect.fold_rmse) == 0.0
    const = five_fold(X, y, lambda Xt, yt, L: Memo(lambda Z: np.full(len(Z), 0.5)))
    assert const.cor is None and const.cor_status == ZERO_VARIANCE
    assert const.rmse_all == pytest.approx(np.sqrt(np.mean((y - 0.5) ** 2)))
    assert const.to_json()["cor"] is None


def test_no_test_rows_reach_training():
    r = np.random.default_rng(2)
    X = r.uniform(0, 1, (53, 3))
    y = r.uniform(0, 1, 53)
    digest = lambda row: hashlib.sha256(row.tobytes()).hexdigest()
    seen = []

    def fit(Xt, yt, lengths):
        seen.append({digest(row) for row in Xt})
        assert sum(lengths) == len(Xt)
        return Memo(lambda Z: np.full(len(Z), yt.mean()))

    rep = five_fold(X, y, fit)
    for (a, b), train in zip(rep.sessions, seen):
        assert train.isdisjoint(digest(row) for row in X[a:b])
        assert len(train) == 53 - (b - a)
    assert rep.train_sessions[0] == [1, 2, 3, 4]


def test_session_bounds():
    assert session_bounds(885) == [(0, 177), (177, 354), (354, 531), (531, 708), (708, 885)]
    sizes = [b - a for a, b in session_bounds(887)]
    assert sum(sizes) == 887 and max(sizes) - min(sizes) == 1
    with pytest.raises(UnevenSessions):
        session_bounds(30, lengths=[4, 6, 6, 7, 7])
    with pytest.raises(UnevenSessions):
        session_bounds(3)


def test_confusion_identity_and_extremes():
    t = np.array([0.1, 0.2, 0.5, 0.6, 0.8, 0.9])
    assert np.array_equal(confusion(t, t).matrix, np.eye(3))
    g = confusion(np.zeros(4), np.ones(4))
    assert g.matrix[2, 0] == 1.0
    assert np.all(np.isnan(g.matrix[:2]))
    assert g.to_json()["matrix"][0] == [None, None, None]


def test_confusion_hand_count():
    truth = [0.1] * 8 + [0.5] * 6 + [0.9] * 6
    pred = [0.1] * 6 + [0.5] * 2 + [0.5] * 3 + [0.1] * 2 + [0.9] + [0.9] * 5 + [0.5]
    g = confusion(pred, truth)
    assert g.counts.tolist() == [[6, 2, 0], [2, 3, 1], [0, 1, 5]]
    assert np.allclose(g.matrix.sum(axis=1), 1.0)
    assert g.matrix[0, 0] == 0.75
