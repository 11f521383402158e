"""Error metrics, persistence baseline, walk-forward forecasting and the repeat-and-median protocol."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._seeding import derive_seed
from .exceptions import DataError

__all__ = [
    "EvaluationReport",
    "PhaseTimer",
    "SplitResult",
    "lower_median",
    "mae",
    "persistence_forecast",
    "repeated_evaluation",
    "rmse",
    "score_split",
    "walk_forward",
]

MODES = ("recursive", "teacher_forced")


def _residuals(y, y_hat):
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValueError("empty input")
    return y_hat - y


def mae(y, y_hat) -> float:
    return float(np.mean(np.abs(_residuals(y, y_hat))))


def rmse(y, y_hat) -> float:
    r = np.abs(_residuals(y, y_hat))
    scale = r.max()
    if scale == 0 or not np.isfinite(scale):
        return float(np.sqrt(np.mean(r**2)))
    # scaling by the largest residual avoids under/overflow when squaring
    return float(scale * np.sqrt(np.mean((r / scale) ** 2)))


def _region(region, n=None):
    if isinstance(region, range):
        if region.step != 1:
            raise ValueError("region must be contiguous")
        return region.start, region.stop
    start, stop = region
    return int(start), int(stop)


def persistence_forecast(series, region) -> np.ndarray:
    """Predict each sample in ``region`` with the sample right before it."""
    values = getattr(series, "values", series)
    values = np.asarray(values, dtype=float)
    start, stop = _region(region)
    if start < 1:
        raise DataError("persistence forecast needs a predecessor sample; region starts at index 0")
    if stop > len(values) or stop <= start:
        raise DataError(f"region [{start}, {stop}) outside series of length {len(values)}")
    return values[start - 1:stop - 1].copy()


def _model_dims(model, nlags, msteps):
    spec = getattr(model, "spec", model)
    nlags = nlags if nlags is not None else getattr(spec, "nlags")
    msteps = msteps if msteps is not None else getattr(spec, "msteps")
    return int(nlags), int(msteps)


@dataclass(frozen=True, eq=False)
class WalkForwardResult:
    origins: np.ndarray  # time index of the first forecast step
    predictions: np.ndarray  # (count, msteps, z), original units
    truth: np.ndarray  # (count, msteps, z), original units


def walk_forward(model, normalizer, panel, region, mode="recursive", target_columns=None,
                 nlags=None, msteps=None) -> WalkForwardResult:
    """Roll one step at a time over ``region`` of a raw ``(n, m*z)`` panel.

    Each window is the ``nlags`` rows before the forecast origin. In
    ``recursive`` mode the target columns of rows inside the region are
    overwritten by the model's own first-step predictions as they are made;
    ``teacher_forced`` always uses observed values. Exogenous columns are
    always observed. ``model.predict`` works in normalized units; results are
    returned denormalized.
    """
    if mode not in MODES:
        raise ValueError(f"unknown walk-forward mode {mode!r}; choose from {MODES}")
    panel = np.asarray(panel, dtype=float)
    if panel.ndim == 1:
        panel = panel[:, None]
    nlags, msteps = _model_dims(model, nlags, msteps)
    cols = list(target_columns) if target_columns is not None else [0]
    start, stop = _region(region)
    if start < nlags:
        raise DataError(f"region starts at {start}, but {nlags} preceding samples are needed to seed the window")
    if stop > len(panel) or stop - start < msteps:
        raise DataError(f"region [{start}, {stop}) too short for msteps={msteps}")

    work = normalizer.transform(panel) if normalizer is not None else panel.copy()
    count = stop - start - msteps + 1
    origins = np.arange(start, start + count)

    if mode == "teacher_forced":
        windows = work[origins[:, None] - nlags + np.arange(nlags)[None, :]]
        pred_n = np.asarray(model.predict(windows), dtype=float)
    else:
        out = []
        for t0 in origins:
            p = np.asarray(model.predict(work[None, t0 - nlags:t0]), dtype=float)[0]
            out.append(p)
            work[t0, cols] = p[0]
        pred_n = np.stack(out)

    if pred_n.shape != (count, msteps, len(cols)):
        raise ValueError(f"model returned {pred_n.shape}, expected {(count, msteps, len(cols))}")
    preds = pred_n if normalizer is None else normalizer.inverse_transform(pred_n, columns=cols)
    steps = origins[:, None] + np.arange(msteps)[None, :]
    truth = panel[:, cols][steps]
    return WalkForwardResult(origins, preds, truth)


@dataclass
class SplitResult:
    """Forecasts for one split. Headline metrics use the first step of every window."""

    name: str
    origins: np.ndarray
    truth: np.ndarray
    predictions: np.ndarray
    baseline: np.ndarray  # persistence forecast for the first step, (count, z)

    @property
    def mae(self) -> float:
        return mae(self.truth[:, 0], self.predictions[:, 0])

    @property
    def rmse(self) -> float:
        return rmse(self.truth[:, 0], self.predictions[:, 0])

    @property
    def baseline_mae(self) -> float:
        return mae(self.truth[:, 0], self.baseline)

    @property
    def baseline_rmse(self) -> float:
        return rmse(self.truth[:, 0], self.baseline)

    def per_step(self) -> list[dict]:
        return [
            {"step": s + 1, "mae": mae(self.truth[:, s], self.predictions[:, s]),
             "rmse": rmse(self.truth[:, s], self.predictions[:, s])}
            for s in range(self.truth.shape[1])
        ]

    def summary(self) -> dict:
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "persistence_mae": self.baseline_mae,
            "persistence_rmse": self.baseline_rmse,
            "forecasts": int(len(self.origins)),
            "per_step": self.per_step(),
        }


def score_split(name, result: WalkForwardResult, panel, target_columns=None) -> SplitResult:
    panel = np.asarray(panel, dtype=float)
    if panel.ndim == 1:
        panel = panel[:, None]
    cols = list(target_columns) if target_columns is not None else [0]
    baseline = panel[result.origins - 1][:, cols]
    return SplitResult(name, result.origins, result.truth, result.predictions, baseline)


class PhaseTimer:
    """Wall-clock timer for named pipeline phases."""

    def __init__(self):
        self._t0 = time.perf_counter()
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name):
        t = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + (time.perf_counter() - t)

    def as_dict(self) -> dict:
        out = dict(self.phases)
        out["total"] = time.perf_counter() - self._t0
        return out


@dataclass
class EvaluationReport:
    splits: dict[str, SplitResult]
    timings: dict[str, float] = field(default_factory=dict)
    repeats: int = 1
    aggregation: str = "median-of-1"
    medians: dict[str, dict[str, float]] | None = None
    repeat_metrics: list[dict] = field(default_factory=list)
    selected_repeat: int = 0
    seed: int | None = None
    config: dict = field(default_factory=dict)
    model: object = None

    def metric(self, split, name) -> float:
        if self.medians is not None:
            return self.medians[split][name]
        return getattr(self.splits[split], name)

    def metrics(self) -> dict:
        return {s: {"mae": self.metric(s, "mae"), "rmse": self.metric(s, "rmse")} for s in self.splits}

    def to_dict(self, include_timings=True) -> dict:
        out = {
            "aggregation": self.aggregation,
            "repeats": self.repeats,
            "selected_repeat": self.selected_repeat,
            "seed": self.seed,
            "splits": {},
        }
        for name, res in self.splits.items():
            summary = res.summary()
            summary["mae"] = self.metric(name, "mae")
            summary["rmse"] = self.metric(name, "rmse")
            summary["selected_repeat_mae"] = res.mae
            summary["selected_repeat_rmse"] = res.rmse
            out["splits"][name] = summary
        out["repeat_metrics"] = self.repeat_metrics
        if include_timings:
            out["timings_seconds"] = dict(self.timings)
        out["config"] = self.config
        return out


def lower_median(values) -> float:
    """Median; even counts take the lower of the two middle values."""
    vals = sorted(values)
    if not vals:
        raise ValueError("median of empty sequence")
    return vals[(len(vals) - 1) // 2]


def repeated_evaluation(run_once: Callable[[int], EvaluationReport], repeats=25, master_seed=0,
                        selection_split="test") -> EvaluationReport:
    """Run ``run_once(seed)`` ``repeats`` times and report per-metric medians.

    The returned splits (predictions) come from the repeat whose
    ``selection_split`` MAE equals the lower median.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    t0 = time.perf_counter()
    runs = []
    for i in range(repeats):
        seed = derive_seed(master_seed, i + 1)
        try:
            runs.append(run_once(seed))
        except Exception as exc:
            raise RuntimeError(f"repeat {i} (seed {seed}) failed: {exc}") from exc
        runs[-1].seed = seed

    split_names = list(runs[0].splits)
    per_repeat = [r.metrics() for r in runs]
    medians = {
        s: {k: lower_median([m[s][k] for m in per_repeat]) for k in ("mae", "rmse")} for s in split_names
    }
    sel_split = selection_split if selection_split in split_names else split_names[-1]
    target = medians[sel_split]["mae"]
    selected = next(i for i, m in enumerate(per_repeat) if m[sel_split]["mae"] == target)

    timings: dict[str, float] = {}
    for r in runs:
        for k, v in r.timings.items():
            if k != "total":
                timings[k] = timings.get(k, 0.0) + v
    timings["total"] = time.perf_counter() - t0
    chosen = runs[selected]
    return EvaluationReport(
        splits=chosen.splits,
        timings=timings,
        repeats=repeats,
        aggregation=f"median-of-{repeats}",
        medians=medians,
        repeat_metrics=[{"repeat": i, "seed": r.seed, **per_repeat[i]} for i, r in enumerate(runs)],
        selected_repeat=selected,
        seed=master_seed,
        config=chosen.config,
        model=chosen.model,
    )
