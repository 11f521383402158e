from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import DataError
from .losses import LOSSES, compute_loss
from .model import ForecastModel, ModelSpec, init_params, model_backward, model_forward
from .optim import OPTIMIZERS, make_optimizer


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 8
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    validation_split: float = 0.2
    loss: str = "mse"
    seed: int = 0
    clip: float | None = 5.0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")
        if not 0 <= self.validation_split < 1:
            raise ValueError(f"validation_split must be in [0,1), got {self.validation_split}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; choose from {LOSSES}")

    def to_dict(self) -> dict:
        return asdict(self)


def split_rows(n_rows: int, validation_split: float) -> int:
    """Number of leading rows used for fitting; the rest validate."""
    n_fit = int(n_rows * (1.0 - validation_split))
    if validation_split > 0 and n_fit >= n_rows:
        n_fit = n_rows - 1
    if n_fit < 1 or (validation_split > 0 and n_rows - n_fit < 1):
        raise DataError(
            f"{n_rows} windowed rows cannot be split with validation_split={validation_split} "
            "(need at least one training and one validation row)"
        )
    return n_fit


def train(spec: ModelSpec, X3, Y3, config: TrainConfig | None = None) -> ForecastModel:
    """Fit with chronological mini-batches; the last ``validation_split`` rows only validate."""
    config = config or TrainConfig()
    X3 = np.asarray(X3, dtype=float)
    Y3 = np.asarray(Y3, dtype=float)
    if Y3.shape[1:] != (spec.msteps, spec.output_dim):
        raise ValueError(f"targets shape {Y3.shape} does not match msteps={spec.msteps}, output_dim={spec.output_dim}")
    n_fit = split_rows(len(X3), config.validation_split)
    Xtr, Ytr = X3[:n_fit], Y3[:n_fit]
    Xva, Yva = X3[n_fit:], Y3[n_fit:]

    params = init_params(spec, config.seed)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    history = []
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for start in range(0, n_fit, config.batch_size):
            xb = Xtr[start:start + config.batch_size]
            yb = Ytr[start:start + config.batch_size]
            pred, cache = model_forward(spec, params, xb, with_cache=True)
            loss, dpred = compute_loss(config.loss, pred, yb)
            grads = model_backward(spec, params, cache, dpred)
            if config.clip is not None:
                for g in grads.values():
                    np.clip(g, -config.clip, config.clip, out=g)
            opt.step(params, grads)
            total += loss * len(xb)
        record = {"epoch": epoch, "loss": total / n_fit}
        if len(Xva):
            pv = model_forward(spec, params, Xva)
            record["val_loss"] = compute_loss(config.loss, pv, Yva)[0]
            record["val_mae"] = float(np.mean(np.abs(pv - Yva)))
        history.append(record)
    return ForecastModel(spec, params, history)
