"""Normalization, chronological splitting and supervised windowing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DataError
from .timeseries import Dataset, ParallelDataset

__all__ = [
    "NORM_METHODS",
    "Normalizer",
    "SupervisedTensors",
    "denormalize",
    "fit_normalizer",
    "make_supervised",
    "normalize",
    "train_test_split",
    "window_panel",
]

NORM_METHODS = ("min-max", "z-score", "tanh")
TANH_SCALE = 0.01


class Normalizer(TransformerMixin, BaseEstimator):
    """Per-column min-max, z-score or tanh scaling.

    The tanh method maps ``x`` to ``0.5 * (tanh(0.01 * (x - mean) / std) + 1)``.
    Standard deviations use the population convention (denominator ``n``).
    """

    def __init__(self, method="min-max"):
        self.method = method

    def fit(self, X, y=None):
        if self.method not in NORM_METHODS:
            raise ValueError(f"unknown normalization {self.method!r}; choose from {NORM_METHODS}")
        X = check_array(X, ensure_2d=False, dtype=float)
        X = X.reshape(len(X), -1)
        self.n_features_in_ = X.shape[1]
        if self.method == "min-max":
            self.min_ = X.min(axis=0)
            self.max_ = X.max(axis=0)
            bad = np.flatnonzero(~(self.max_ > self.min_))
        else:
            self.mean_ = X.mean(axis=0)
            self.std_ = X.std(axis=0)
            bad = np.flatnonzero(~(self.std_ > 0))
        if bad.size:
            raise DataError(f"constant feature at column {int(bad[0])}; cannot apply {self.method} scaling")
        return self

    def _params(self, columns):
        check_is_fitted(self)
        cols = slice(None) if columns is None else list(columns)
        if self.method == "min-max":
            return self.min_[cols], self.max_[cols]
        return self.mean_[cols], self.std_[cols]

    def transform(self, X, columns=None):
        """Scale ``X``; ``columns`` picks which fitted columns ``X``'s columns correspond to."""
        X = np.asarray(X, dtype=float)
        a, b = self._params(columns)
        if self.method == "min-max":
            return (X - a) / (b - a)
        z = (X - a) / b
        if self.method == "z-score":
            return z
        return 0.5 * (np.tanh(TANH_SCALE * z) + 1.0)

    def inverse_transform(self, X, columns=None):
        X = np.asarray(X, dtype=float)
        a, b = self._params(columns)
        if self.method == "min-max":
            return X * (b - a) + a
        if self.method == "z-score":
            return X * b + a
        if np.any((X <= 0) | (X >= 1)):
            raise DataError("tanh denormalize: values out of range (0, 1)")
        return np.arctanh(2.0 * X - 1.0) / TANH_SCALE * b + a

    def get_state(self) -> dict:
        check_is_fitted(self)
        if self.method == "min-max":
            return {"min": self.min_, "max": self.max_}
        return {"mean": self.mean_, "std": self.std_}

    @classmethod
    def from_state(cls, method, state) -> Normalizer:
        norm = cls(method)
        for key, value in state.items():
            setattr(norm, f"{key}_", np.asarray(value, dtype=float))
        norm.n_features_in_ = len(next(iter(state.values())))
        return norm


def _as_matrix(data):
    if isinstance(data, ParallelDataset):
        return data.to_panel()
    if isinstance(data, Dataset):
        return data.to_array()
    return np.asarray(data, dtype=float)


def fit_normalizer(data, method="min-max") -> Normalizer:
    try:
        return Normalizer(method).fit(_as_matrix(data))
    except DataError as exc:
        if isinstance(data, Dataset):
            col = int(str(exc).split("column ")[1].split(";")[0])
            raise DataError(f"constant feature {data.names[col]!r}; cannot apply {method} scaling") from exc
        raise


def normalize(data, normalizer: Normalizer) -> np.ndarray:
    return normalizer.transform(_as_matrix(data))


def denormalize(data, normalizer: Normalizer) -> np.ndarray:
    return normalizer.inverse_transform(_as_matrix(data))


def train_test_split(dataset, split_fraction: float = 0.8):
    """Chronological split: the first ``floor(n * split_fraction)`` samples train."""
    if not 0 < split_fraction < 1:
        raise ValueError(f"split must be in (0,1), got {split_fraction}")
    n = dataset.n if isinstance(dataset, (Dataset, ParallelDataset)) else len(dataset)
    n_tr = math.floor(n * split_fraction)
    if isinstance(dataset, Dataset):
        return dataset.slice(0, n_tr), dataset.slice(n_tr, n)
    if isinstance(dataset, ParallelDataset):
        return (ParallelDataset(tuple(d.slice(0, n_tr) for d in dataset.members)),
                ParallelDataset(tuple(d.slice(n_tr, n) for d in dataset.members)))
    return dataset[:n_tr], dataset[n_tr:]


@dataclass(frozen=True, eq=False)
class SupervisedTensors:
    """Windowed inputs/targets in both flattened (2-D) and sequence (3-D) form."""

    X3: np.ndarray  # (N, nlags, m*z)
    Y3: np.ndarray  # (N, msteps, z)
    nlags: int
    msteps: int
    m: int
    z: int

    @property
    def N(self) -> int:
        return self.X3.shape[0]

    @property
    def X2(self) -> np.ndarray:
        return self.X3.reshape(self.N, -1)

    @property
    def Y2(self) -> np.ndarray:
        return self.Y3.reshape(self.N, -1)

    def rows(self, start, stop=None) -> SupervisedTensors:
        return SupervisedTensors(self.X3[start:stop], self.Y3[start:stop], self.nlags, self.msteps, self.m, self.z)


def window_panel(panel, nlags: int, msteps: int, m: int, z: int) -> SupervisedTensors:
    """Window an ``(n, m*z)`` member-major panel whose targets sit at columns ``j*m``."""
    panel = np.asarray(panel, dtype=float)
    if nlags < 1 or msteps < 1:
        raise ValueError("nlags and msteps must be positive")
    n = panel.shape[0]
    if panel.shape[1] != m * z:
        raise DataError(f"panel has {panel.shape[1]} columns, expected m*z={m * z}")
    if n < nlags + msteps:
        raise DataError(f"need n >= nlags + msteps, got {n} < {nlags} + {msteps}")
    N = n - (nlags + msteps - 1)
    starts = np.arange(N)
    X3 = panel[starts[:, None] + np.arange(nlags)[None, :]]
    targets = panel[:, [j * m for j in range(z)]]
    Y3 = targets[starts[:, None] + nlags + np.arange(msteps)[None, :]]
    return SupervisedTensors(np.ascontiguousarray(X3), np.ascontiguousarray(Y3), nlags, msteps, m, z)


def make_supervised(parallel, nlags: int, msteps: int = 1) -> SupervisedTensors:
    if isinstance(parallel, Dataset):
        parallel = ParallelDataset((parallel,))
    return window_panel(parallel.to_panel(), nlags, msteps, parallel.m, parallel.z)
