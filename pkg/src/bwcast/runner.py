"""End-to-end experiment pipeline: configuration, orchestration and report files."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .automal import AutomalConfig, LagRecommendation, automal
from .evaluate import EvaluationReport, PhaseTimer, repeated_evaluation, score_split, walk_forward
from .exceptions import ConfigError, DataError, StageError
from .hyperopt import HyperPoint, TrialLog, bayesian_opt, default_space, random_search, select_best
from .modelio import save_model
from .nn.model import ModelSpec
from .nn.train import TrainConfig, split_rows, train
from .preprocess import NORM_METHODS, Normalizer, window_panel
from .timeseries import ParallelDataset, assemble_parallel, load_csv

OUTPUT_ENV = "BWCAST_OUTPUT_DIR"
DEFAULT_NLAGS = 5
METRICS_FILE = "metrics.json"
PREDICTIONS_FILE = "predictions.csv"
TRIALS_FILE = "trials.csv"
MODEL_FILE = "model.bwm"

_ALIASES = {
    "network": {"vanilla": "vanilla", "vl": "vanilla", "bidirectional": "bidirectional", "bd": "bidirectional"},
    "hyper": {"manual": "manual", "ms": "manual", "random": "random", "rs": "random",
              "bayesian": "bayesian", "boa": "bayesian"},
}


def _default_output() -> str:
    return os.environ.get(OUTPUT_ENV, "bwcast-output")


@dataclass
class RunConfig:
    """Flat run configuration.

    The manual hyperparameter point defaults to units 256/128, lr 0.001,
    50 epochs, batch 8 and two layers.
    """

    inputs: list = field(default_factory=list)
    has_header: bool = True
    nfeatures: int = 1
    nlags: object = DEFAULT_NLAGS
    msteps: int = 1
    norm: str = "min-max"
    network: str = "vanilla"
    act: str = "tanh"
    optimizer: str = "adam"
    split: float = 0.8
    valsplit: float = 0.2
    hyper: str = "random"
    niter: int = 50
    init_points: int = 10
    repeats: int = 25
    seed: int = 0
    output: str = field(default_factory=_default_output)
    # manual point
    units1: int = 256
    units2: int = 128
    units3: int | None = None
    lr: float = 0.001
    nepochs: int = 50
    bs: int = 8
    nlayers: int = 2
    # search ranges
    units_range: list = field(default_factory=lambda: [16, 1024])
    lr_range: list = field(default_factory=lambda: [1e-5, 1e-2])
    nepochs_range: list = field(default_factory=lambda: [50, 100])
    bs_range: list = field(default_factory=lambda: [8, 128])
    nlayers_range: list = field(default_factory=lambda: [1, 3])
    # training / evaluation details
    loss: str = "mse"
    clip: float | None = 5.0
    decoder_units: int | None = None
    walk_forward: str = "recursive"
    normalize_on: str = "full"
    alpha: float = 0.05
    peak_sensitivity: int = 1

    def manual_point(self) -> HyperPoint:
        values = {"units1": self.units1}
        if self.nlayers >= 2:
            values["units2"] = self.units2
        if self.nlayers >= 3:
            if self.units3 is None:
                raise ConfigError("units3 must be set when nlayers = 3")
            values["units3"] = self.units3
        values.update(lr=self.lr, nepochs=self.nepochs, bs=self.bs, nlayers=self.nlayers)
        return HyperPoint(values)

    def space(self):
        return default_space(units=tuple(self.units_range), lr=tuple(self.lr_range),
                             nepochs=tuple(self.nepochs_range), bs=tuple(self.bs_range),
                             nlayers=tuple(self.nlayers_range))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d


def _check(cond, message):
    if not cond:
        raise ConfigError(message)


def _validate(cfg: RunConfig) -> RunConfig:
    for key, table in _ALIASES.items():
        value = str(getattr(cfg, key)).lower()
        _check(value in table, f"{key} must be one of {sorted(set(table.values()))}, got {getattr(cfg, key)!r}")
        setattr(cfg, key, table[value])
    cfg.norm = str(cfg.norm).lower()
    cfg.act = str(cfg.act).lower()
    cfg.optimizer = str(cfg.optimizer).lower()
    if isinstance(cfg.nlags, str):
        _check(cfg.nlags.lower() == "auto" or cfg.nlags.isdigit(), f"nlags must be a positive integer or 'auto', got {cfg.nlags!r}")
        cfg.nlags = "auto" if cfg.nlags.lower() == "auto" else int(cfg.nlags)
    _check(cfg.nlags == "auto" or (isinstance(cfg.nlags, int) and cfg.nlags >= 1), "nlags must be >= 1 or 'auto'")
    _check(cfg.norm in NORM_METHODS, f"norm must be one of {NORM_METHODS}, got {cfg.norm!r}")
    _check(cfg.act in ("tanh", "relu", "sigmoid", "softmax"), f"act must be tanh/relu/sigmoid/softmax, got {cfg.act!r}")
    _check(cfg.optimizer in ("adam", "sgd", "adagrad", "rmsprop"), f"optimizer must be adam/sgd/adagrad/rmsprop, got {cfg.optimizer!r}")
    _check(0 < cfg.split < 1, f"split must be in (0,1), got {cfg.split}")
    _check(0 < cfg.valsplit < 1, f"valsplit must be in (0,1), got {cfg.valsplit}")
    _check(cfg.nfeatures >= 1, f"nfeatures must be >= 1, got {cfg.nfeatures}")
    _check(cfg.msteps >= 1, f"msteps must be >= 1, got {cfg.msteps}")
    _check(cfg.niter >= 1, f"niter must be >= 1, got {cfg.niter}")
    _check(cfg.repeats >= 1, f"repeats must be >= 1, got {cfg.repeats}")
    _check(1 <= cfg.nlayers <= 3, f"nlayers must be in [1,3], got {cfg.nlayers}")
    _check(cfg.lr > 0 and cfg.nepochs >= 0 and cfg.bs >= 1, "lr > 0, nepochs >= 0 and bs >= 1 required")
    _check(cfg.hyper != "bayesian" or 1 <= cfg.init_points < cfg.niter,
           f"init_points must be in [1, niter), got {cfg.init_points} with niter={cfg.niter}")
    _check(cfg.walk_forward in ("recursive", "teacher_forced"), "walk_forward must be 'recursive' or 'teacher_forced'")
    _check(cfg.normalize_on in ("full", "train"), "normalize_on must be 'full' or 'train'")
    _check(cfg.loss in ("mse", "mae"), "loss must be 'mse' or 'mae'")
    _check(0 < cfg.alpha < 1, f"alpha must be in (0,1), got {cfg.alpha}")
    lo, hi = cfg.nlayers_range
    _check(1 <= lo and hi <= 3, f"nlayers_range must lie within [1,3], got {cfg.nlayers_range}")
    try:
        cfg.manual_point()
        cfg.space()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if isinstance(cfg.inputs, (str, Path)):
        cfg.inputs = [cfg.inputs]
    cfg.inputs = [str(p) for p in cfg.inputs]
    return cfg


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(key, value):
    default = RunConfig().__getattribute__(key)
    if isinstance(value, str) and not isinstance(default, str) and key not in ("nlags", "inputs"):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            pass
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true/false, got {value!r}")
    elif isinstance(default, int) and key != "nlags" and not isinstance(default, bool):
        if not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        value = int(value)
    elif isinstance(default, float):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        value = float(value)
    return value


def parse_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a JSON file and/or ``key -> value`` overrides.

    Overrides win over file values. Unknown keys and out-of-range values
    raise :class:`ConfigError`.
    """
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
    raw.update(overrides or {})
    unknown = sorted(set(raw) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = RunConfig()
    for key, value in raw.items():
        setattr(cfg, key, _coerce(key, value) if value is not None else None)
    return _validate(cfg)


@dataclass
class PreparedData:
    parallel: ParallelDataset
    panel: np.ndarray
    normalizer: Normalizer
    nlags: int
    n_train: int
    train_tensors: object
    n_fit_rows: int
    recommendation: LagRecommendation | None = None

    @property
    def target_columns(self):
        return self.parallel.target_columns

    @property
    def validation_region(self):
        return (self.n_fit_rows + self.nlags, self.n_train)

    @property
    def test_region(self):
        return (self.n_train, self.parallel.n)


def prepare(cfg: RunConfig) -> PreparedData:
    if not cfg.inputs:
        raise DataError("no input files given")
    datasets = [load_csv(p, cfg.has_header).select(cfg.nfeatures).interpolated() for p in cfg.inputs]
    parallel = assemble_parallel(datasets)
    rec = None
    nlags = cfg.nlags
    if nlags == "auto":
        rec = automal(parallel.targets, AutomalConfig(alpha=cfg.alpha, peak_sensitivity=cfg.peak_sensitivity,
                                                       default_lags=DEFAULT_NLAGS))
        nlags = rec.lags
    panel = parallel.to_panel()
    n_train = math.floor(parallel.n * cfg.split)
    if n_train < nlags + cfg.msteps or parallel.n - n_train < cfg.msteps:
        raise DataError(
            f"{parallel.n} samples with split={cfg.split} leave {n_train}/{parallel.n - n_train} "
            f"train/test samples; need train >= nlags + msteps = {nlags + cfg.msteps}"
        )
    fit_rows = panel if cfg.normalize_on == "full" else panel[:n_train]
    normalizer = Normalizer(cfg.norm).fit(fit_rows)
    tensors = window_panel(normalizer.transform(panel[:n_train]), nlags, cfg.msteps, parallel.m, parallel.z)
    n_fit = split_rows(tensors.N, cfg.valsplit)
    return PreparedData(parallel, panel, normalizer, nlags, n_train, tensors, n_fit, rec)


def _spec(cfg: RunConfig, data: PreparedData, point: HyperPoint) -> ModelSpec:
    return ModelSpec(units=point.units, nlags=data.nlags, input_dim=data.parallel.m * data.parallel.z,
                     output_dim=data.parallel.z, msteps=cfg.msteps, variant=cfg.network,
                     activation=cfg.act, decoder_units=cfg.decoder_units)


def _train_config(cfg: RunConfig, point: HyperPoint, seed: int) -> TrainConfig:
    return TrainConfig(epochs=int(point["nepochs"]), batch_size=int(point["bs"]), learning_rate=float(point["lr"]),
                       optimizer=cfg.optimizer, validation_split=cfg.valsplit, loss=cfg.loss, seed=seed,
                       clip=cfg.clip)


def fit_and_evaluate(cfg: RunConfig, data: PreparedData, point: HyperPoint, seed: int,
                     splits=("validation", "test")) -> EvaluationReport:
    """Train one model with ``seed`` and walk it forward over the requested splits."""
    timer = PhaseTimer()
    with timer.phase("train"):
        model = train(_spec(cfg, data, point), data.train_tensors.X3, data.train_tensors.Y3,
                      _train_config(cfg, point, seed))
    results = {}
    with timer.phase("evaluate"):
        regions = {"validation": data.validation_region, "test": data.test_region}
        for name in splits:
            wf = walk_forward(model, data.normalizer, data.panel, regions[name], cfg.walk_forward,
                              data.target_columns)
            results[name] = score_split(name, wf, data.panel, data.target_columns)
    return EvaluationReport(results, timings=timer.as_dict(), seed=seed, model=model)


def run_search(cfg: RunConfig, data: PreparedData) -> TrialLog:
    def objective(point, seed):
        rep = fit_and_evaluate(cfg, data, point, seed, splits=("validation",))
        res = rep.splits["validation"]
        return res.mae, res.rmse

    if cfg.hyper == "random":
        return random_search(objective, cfg.space(), cfg.niter, cfg.seed)
    return bayesian_opt(objective, cfg.space(), cfg.niter, cfg.init_points, cfg.seed)


@dataclass
class RunResult:
    report: EvaluationReport
    trials: TrialLog | None
    point: HyperPoint
    files: dict


def run_pipeline(cfg: RunConfig, out_dir=None) -> RunResult:
    """load -> (AutomaL) -> normalize -> split -> window -> (search) -> repeated train/evaluate -> files."""
    timer = PhaseTimer()
    out_dir = Path(out_dir or cfg.output)
    with timer.phase("preprocess"):
        try:
            data = prepare(cfg)
        except (DataError, ValueError) as exc:
            raise StageError("preprocess", exc) from exc

    trials = None
    point = cfg.manual_point()
    if cfg.hyper != "manual":
        with timer.phase("search"):
            trials = run_search(cfg, data)
            try:
                point, _ = select_best(trials)
            except ValueError as exc:
                raise StageError("search", exc) from exc

    try:
        report = repeated_evaluation(lambda seed: fit_and_evaluate(cfg, data, point, seed),
                                     cfg.repeats, cfg.seed)
    except RuntimeError as exc:
        raise StageError("train/evaluate", exc) from exc

    timings = {k: v for k, v in timer.as_dict().items() if k != "total"}
    for k in ("train", "evaluate"):
        timings[k] = report.timings.get(k, 0.0)
    timings["total"] = timer.as_dict()["total"]
    report.timings = timings
    report.config = {
        **cfg.to_dict(),
        "nlags_used": data.nlags,
        "point": point.to_dict(),
        "m": data.parallel.m,
        "z": data.parallel.z,
        "n": data.parallel.n,
        "n_train": data.n_train,
    }
    if data.recommendation is not None:
        report.config["automal"] = data.recommendation.note

    files = emit_report(report, trials, out_dir)
    save_model(report.model, data.normalizer, out_dir / MODEL_FILE, report.config)
    files["model"] = out_dir / MODEL_FILE
    return RunResult(report, trials, point, files)


def emit_report(report: EvaluationReport, trial_log: TrialLog | None, out_dir) -> dict:
    """Write ``metrics.json``, ``predictions.csv`` and, when a search ran, ``trials.csv``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("emit", f"cannot create output directory {out_dir}: {exc}") from exc
    files = {"metrics": out_dir / METRICS_FILE, "predictions": out_dir / PREDICTIONS_FILE}
    try:
        with files["metrics"].open("w", encoding="utf-8") as fh:
            json.dump(_jsonable(report.to_dict()), fh, indent=2)
            fh.write("\n")
        write_predictions(report, files["predictions"])
        if trial_log is not None and len(trial_log):
            files["trials"] = out_dir / TRIALS_FILE
            trial_log.write_csv(files["trials"])
    except OSError as exc:
        raise StageError("emit", exc) from exc
    return files


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def write_predictions(report: EvaluationReport, path) -> None:
    """One row per forecast origin and target member; step-1 values plus extra steps as columns."""
    first = next(iter(report.splits.values()))
    msteps = first.truth.shape[1]
    extra = [f"{kind}_step{s}" for s in range(2, msteps + 1) for kind in ("truth", "prediction")]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "time_index", "member", "truth", "prediction", "persistence"] + extra)
        for name, res in report.splits.items():
            for r, t in enumerate(res.origins):
                for j in range(res.truth.shape[2]):
                    row = [name, int(t), j, repr(float(res.truth[r, 0, j])),
                           repr(float(res.predictions[r, 0, j])), repr(float(res.baseline[r, j]))]
                    for s in range(1, msteps):
                        row += [repr(float(res.truth[r, s, j])), repr(float(res.predictions[r, s, j]))]
                    w.writerow(row)
