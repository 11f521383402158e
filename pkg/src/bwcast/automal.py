"""Automated lag selection from stationarity and autocorrelation evidence.

Each target is log-scaled and differenced, then checked with an augmented
Dickey-Fuller test. For stationary targets the first autocorrelation peak
gives the lookback length; otherwise the default lag count is used. With
several parallel targets the per-target choices are combined by majority
vote.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._dftables import DF_TREND_PROBS, DF_TREND_QUANTILES, DF_TREND_SAMPLE_SIZES
from .exceptions import DataError
from .timeseries import Series

__all__ = [
    "AdfResult",
    "AcfResult",
    "AutomalConfig",
    "LagRecommendation",
    "LagSelector",
    "SequenceEvidence",
    "TransformWarning",
    "acf",
    "adf_test",
    "automal",
    "difference",
    "find_peaks",
    "log_transform",
    "majority_vote",
]

MIN_ADF_OBS = 12


class TransformWarning(UserWarning):
    """Raised when a transform has to be skipped for the given data."""


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    used_lag_order: int
    n_effective: int
    is_stationary: bool
    alpha: float = 0.05


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    coefficients: np.ndarray


@dataclass(frozen=True)
class AutomalConfig:
    alpha: float = 0.05
    peak_sensitivity: int = 1
    default_lags: int = 5
    max_acf_lag: int | None = None
    apply_log: bool = True
    apply_diff: bool = True
    acf_on_transformed: bool = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.peak_sensitivity < 1:
            raise ValueError(f"peak_sensitivity must be >= 1, got {self.peak_sensitivity}")
        if self.default_lags < 1:
            raise ValueError(f"default_lags must be >= 1, got {self.default_lags}")
        if self.max_acf_lag is not None and self.max_acf_lag < 1:
            raise ValueError(f"max_acf_lag must be >= 1, got {self.max_acf_lag}")


@dataclass(frozen=True)
class SequenceEvidence:
    name: str
    stationary: bool
    first_peak: int | None
    lags: int
    used_default: bool
    adf: AdfResult | None = None
    log_bypassed: bool = False
    reason: str = ""


@dataclass(frozen=True)
class LagRecommendation:
    lags: int
    per_sequence: list[SequenceEvidence] = field(default_factory=list)
    used_default: bool = False
    note: str = ""


def _as_series(obj, name="target") -> Series:
    if isinstance(obj, Series):
        return obj
    return Series(name, np.asarray(obj, dtype=float))


def log_transform(series) -> Series:
    """Natural log, ``log1p`` when zeros are present, identity (with a warning) on negatives."""
    series = _as_series(series)
    y = series.values
    if y.size and y.min() < 0:
        warnings.warn(
            f"series {series.name!r} has negative values; log transform skipped",
            TransformWarning,
            stacklevel=2,
        )
        return series
    if y.size and y.min() == 0:
        return series.with_values(np.log1p(y))
    return series.with_values(np.log(y))


def difference(series, order: int = 1) -> Series:
    series = _as_series(series)
    if order < 1:
        raise ValueError(f"order must be positive, got {order}")
    if len(series) <= order:
        raise DataError(f"series of length {len(series)} too short for difference of order {order}")
    return Series(series.name, np.diff(series.values, n=order))


def _default_lag_order(n: int) -> int:
    k = int((n - 1) ** (1.0 / 3.0))
    # guard float error at exact cubes
    while (k + 1) ** 3 <= n - 1:
        k += 1
    while k > 0 and k**3 > n - 1:
        k -= 1
    return k


def _df_pvalue(statistic: float, n_effective: int) -> float:
    crit = np.array([
        np.interp(n_effective, DF_TREND_SAMPLE_SIZES, DF_TREND_QUANTILES[:, j])
        for j in range(len(DF_TREND_PROBS))
    ])
    # np.interp clamps to the table ends, i.e. [0.01, 0.99]
    return float(np.interp(statistic, crit, DF_TREND_PROBS))


def adf_test(series, alpha: float = 0.05, lag_order: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with constant and linear trend.

    Regresses ``dy_t`` on ``[1, t, y_{t-1}, dy_{t-1} .. dy_{t-k}]`` with
    ``k = floor((n-1)^(1/3))`` unless ``lag_order`` is given. The p-value is
    interpolated from the trend-case Dickey-Fuller quantile table and clamped
    to [0.01, 0.99].
    """
    series = _as_series(series)
    y = series.values
    if np.isnan(y).any():
        raise DataError("adf_test: series contains missing values")
    n = y.size
    k = _default_lag_order(n) if lag_order is None else int(lag_order)
    dy = np.diff(y)
    n_eff = dy.size - k
    if n_eff < MIN_ADF_OBS:
        raise DataError(f"adf_test: series too short ({n_eff} observations after trimming {k} lags, need {MIN_ADF_OBS})")

    resp = dy[k:]
    cols = [np.arange(1, n_eff + 1, dtype=float), y[k:n - 1]]
    cols += [dy[k - i:dy.size - i] for i in range(1, k + 1)]
    # Centering every regressor folds the intercept out and unit-norm scaling
    # keeps the solve well conditioned; the t-ratio of gamma is unchanged by both.
    Z = np.column_stack(cols)
    Z = Z - Z.mean(axis=0)
    norms = np.linalg.norm(Z, axis=0)
    p = Z.shape[1] + 1
    if n_eff <= p or np.any(norms == 0):
        raise DataError("adf_test: degenerate regression (singular design matrix)")
    Z = Z / norms
    r = resp - resp.mean()
    scale = np.linalg.norm(r)
    if scale == 0:
        raise DataError("adf_test: degenerate regression (zero residual variance)")
    r = r / scale
    q, R = np.linalg.qr(Z)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * diag.max():
        raise DataError("adf_test: degenerate regression (singular design matrix)")
    beta = np.linalg.solve(R, q.T @ r)
    resid = r - Z @ beta
    rss = float(resid @ resid)
    if rss <= 1e-24:
        raise DataError("adf_test: degenerate regression (zero residual variance)")
    sigma2 = rss / (n_eff - p)
    rinv = np.linalg.inv(R)
    var_gamma = float(rinv[1] @ rinv[1])
    stat = float(beta[1] / math.sqrt(sigma2 * var_gamma))
    pval = _df_pvalue(stat, n_eff)
    return AdfResult(stat, pval, k, n_eff, pval < alpha, alpha)


def acf(series, max_lag: int) -> AcfResult:
    """Sample autocorrelation ``r_0 .. r_max_lag`` (biased, full-sample denominator)."""
    y = _as_series(series).values
    n = y.size
    if not 0 <= max_lag < n:
        raise DataError(f"acf: max_lag={max_lag} must be in [0, {n - 1}]")
    d = y - y.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise DataError("acf: zero variance series")
    coef = np.empty(max_lag + 1)
    coef[0] = 1.0
    for k in range(1, max_lag + 1):
        coef[k] = float(d[: n - k] @ d[k:]) / denom
    return AcfResult(np.arange(max_lag + 1), coef)


def find_peaks(values: Sequence[float], peak_sensitivity: int = 1) -> list[int]:
    """Indices of strict local maxima that also dominate a +/- ``peak_sensitivity`` window."""
    v = np.asarray(values, dtype=float)
    if peak_sensitivity < 1:
        raise ValueError("peak_sensitivity must be >= 1")
    peaks = []
    for p in range(1, v.size - 1):
        if not (v[p] > v[p - 1] and v[p] > v[p + 1]):
            continue
        lo, hi = max(0, p - peak_sensitivity), min(v.size, p + peak_sensitivity + 1)
        if v[p] >= v[lo:hi].max():
            peaks.append(p)
    return peaks


def majority_vote(values: Sequence[int]) -> int:
    """Most frequent value; ties go to the smallest."""
    if len(values) == 0:
        raise ValueError("majority_vote of an empty collection")
    counts = Counter(int(v) for v in values)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def _analyse(target: Series, config: AutomalConfig) -> SequenceEvidence:
    transformed = target
    bypassed = False
    if config.apply_log:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TransformWarning)
            transformed = log_transform(transformed)
        bypassed = any(issubclass(w.category, TransformWarning) for w in caught)
    if config.apply_diff:
        transformed = difference(transformed)

    def fallback(stationary, adf, reason):
        return SequenceEvidence(target.name, stationary, None, config.default_lags, True, adf, bypassed, reason)

    try:
        adf = adf_test(transformed, alpha=config.alpha)
    except DataError as exc:
        if "degenerate" not in str(exc):
            raise
        return fallback(False, None, str(exc))
    if not adf.is_stationary:
        return fallback(False, adf, "non-stationary")

    source = transformed if config.acf_on_transformed else target
    max_lag = config.max_acf_lag if config.max_acf_lag is not None else len(source) // 2
    max_lag = min(max_lag, len(source) - 1)
    try:
        coef = acf(source, max_lag).coefficients
    except DataError as exc:
        return fallback(True, adf, str(exc))
    peaks = find_peaks(coef[1:], config.peak_sensitivity)
    if not peaks:
        return fallback(True, adf, "no autocorrelation peak")
    first = peaks[0] + 1  # coef[1:] is offset by one lag
    return SequenceEvidence(target.name, True, first, first, False, adf, bypassed)


def automal(targets, config: AutomalConfig | None = None) -> LagRecommendation:
    """Recommend a lookback length for one or more parallel target series."""
    config = config or AutomalConfig()
    if isinstance(targets, (Series, np.ndarray)) and not (isinstance(targets, np.ndarray) and targets.ndim == 2):
        targets = [targets]
    elif isinstance(targets, np.ndarray):
        targets = list(targets.T)
    targets = [_as_series(t, f"target{j}") for j, t in enumerate(targets)]
    if not targets:
        raise ValueError("automal needs at least one target series")

    evidence = [_analyse(t, config) for t in targets]
    lags = majority_vote([e.lags for e in evidence])
    all_default = all(e.used_default for e in evidence)
    note = f"recommendation: lags={lags} (statistical starting point, not a tuned optimum)"
    return LagRecommendation(lags, evidence, all_default, note)


class LagSelector(BaseEstimator):
    """Estimator wrapper around :func:`automal`.

    ``fit`` takes an ``(n,)`` target or an ``(n, z)`` matrix of parallel
    targets and stores ``lags_`` and ``recommendation_``.
    """

    def __init__(self, alpha=0.05, peak_sensitivity=1, default_lags=5, max_acf_lag=None,
                 apply_log=True, apply_diff=True, acf_on_transformed=False):
        self.alpha = alpha
        self.peak_sensitivity = peak_sensitivity
        self.default_lags = default_lags
        self.max_acf_lag = max_acf_lag
        self.apply_log = apply_log
        self.apply_diff = apply_diff
        self.acf_on_transformed = acf_on_transformed

    def fit(self, X, y=None):
        if isinstance(X, (list, tuple)) and X and isinstance(X[0], Series):
            targets = list(X)
        else:
            arr = np.asarray(X, dtype=float)
            targets = [arr] if arr.ndim == 1 else list(arr.T)
        config = AutomalConfig(**self.get_params())
        self.recommendation_ = automal(targets, config)
        self.lags_ = self.recommendation_.lags
        return self
