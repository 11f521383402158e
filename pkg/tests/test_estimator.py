import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from bwcast.estimator import LSTMForecaster
from bwcast.hyperopt import HyperPoint
from bwcast.preprocess import window_panel


def data():
    y = np.sin(2 * np.pi * np.arange(120) / 12)[:, None] * 0.4 + 0.5
    t = window_panel(y, 6, 2, 1, 1)
    return t.X3, t.Y2


def test_get_params_and_clone():
    est = LSTMForecaster(units=(8,), epochs=2)
    params = est.get_params()
    assert params["units"] == (8,) and params["epochs"] == 2
    assert clone(est).get_params() == params


def test_fit_predict_score():
    X, y = data()
    est = LSTMForecaster(units=(8,), msteps=2, epochs=3, random_state=1).fit(X, y)
    pred = est.predict(X)
    assert pred.shape == (len(X), 2, 1)
    assert est.score(X, y) <= 0
    assert len(est.history_) == 3
    again = LSTMForecaster(units=(8,), msteps=2, epochs=3, random_state=1).fit(X, y)
    assert again.predict(X).tobytes() == pred.tobytes()


def test_input_validation():
    X, y = data()
    est = LSTMForecaster(units=(4,), msteps=2, epochs=1)
    with pytest.raises(NotFittedError):
        est.predict(X)
    with pytest.raises(ValueError, match="rows"):
        est.fit(X, y[:-1])
    bad = X.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        est.fit(bad, y)
    est.fit(X, y)
    with pytest.raises(ValueError, match="features"):
        est.predict(np.zeros((2, 6, 3)))


def test_from_point():
    p = HyperPoint({"units1": 12, "units2": 7, "lr": 0.01, "nepochs": 60, "bs": 16, "nlayers": 2})
    est = LSTMForecaster.from_point(p, msteps=1)
    assert est.units == (12, 7) and est.epochs == 60 and est.batch_size == 16 and est.learning_rate == 0.01
