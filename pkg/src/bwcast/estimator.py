"""scikit-learn compatible wrapper around the encoder-decoder LSTM."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .hyperopt import HyperPoint
from .nn.model import ForecastModel, ModelSpec
from .nn.train import TrainConfig, train


def _check_windows(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3:
        raise ValueError(f"X must be (rows, nlags, features) or (rows, nlags); got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or infinite values")
    return X


class LSTMForecaster(RegressorMixin, BaseEstimator):
    """Encoder-decoder LSTM regressor over lag windows.

    ``X`` is ``(rows, nlags, features)``; ``y`` is ``(rows,)``,
    ``(rows, msteps)`` or ``(rows, msteps, targets)``. ``predict`` always
    returns ``(rows, msteps, targets)``.
    """

    def __init__(self, units=(256, 128), variant="vanilla", activation="tanh", msteps=1,
                 decoder_units=None, epochs=50, batch_size=8, learning_rate=1e-3, optimizer="adam",
                 validation_split=0.2, loss="mse", clip=5.0, random_state=0):
        self.units = units
        self.variant = variant
        self.activation = activation
        self.msteps = msteps
        self.decoder_units = decoder_units
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.validation_split = validation_split
        self.loss = loss
        self.clip = clip
        self.random_state = random_state

    @classmethod
    def from_point(cls, point: HyperPoint, **kwargs) -> LSTMForecaster:
        """Build from a hyperparameter point (units*, lr, nepochs, bs, nlayers)."""
        return cls(units=point.units, learning_rate=point["lr"], epochs=int(point["nepochs"]),
                   batch_size=int(point["bs"]), **kwargs)

    def _targets(self, y, rows):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != rows:
            raise ValueError(f"X has {rows} rows but y has {y.shape[0]}")
        return y.reshape(rows, self.msteps, -1)

    def fit(self, X, y):
        X = _check_windows(X)
        Y = self._targets(y, len(X))
        spec = ModelSpec(units=tuple(self.units), nlags=X.shape[1], input_dim=X.shape[2],
                         output_dim=Y.shape[2], msteps=self.msteps, variant=self.variant,
                         activation=self.activation, decoder_units=self.decoder_units)
        config = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                             learning_rate=self.learning_rate, optimizer=self.optimizer,
                             validation_split=self.validation_split, loss=self.loss,
                             seed=self.random_state, clip=self.clip)
        self.model_ = train(spec, X, Y, config)
        self.history_ = self.model_.history
        self.n_features_in_ = X.shape[2]
        return self

    @classmethod
    def from_model(cls, model: ForecastModel) -> LSTMForecaster:
        s = model.spec
        est = cls(units=s.units, variant=s.variant, activation=s.activation, msteps=s.msteps,
                  decoder_units=s.decoder_units)
        est.model_ = model
        est.history_ = model.history
        est.n_features_in_ = s.input_dim
        return est

    @property
    def spec(self) -> ModelSpec:
        check_is_fitted(self)
        return self.model_.spec

    def predict(self, X):
        check_is_fitted(self)
        X = _check_windows(X)
        if X.shape[2] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[2]} features, model was fitted with {self.n_features_in_}")
        return self.model_.predict(X)

    def score(self, X, y, sample_weight=None):
        """Negative mean absolute error (higher is better)."""
        pred = self.predict(X)
        return -float(np.mean(np.abs(pred - self._targets(y, len(pred)))))
