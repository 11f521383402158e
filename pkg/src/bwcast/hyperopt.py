"""Hyperparameter search: random search and Gaussian-process Bayesian optimization.

Objectives are called as ``objective(point, seed)`` and return either the
validation MAE or a ``(mae, rmse)`` pair. Lower MAE is better.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.stats import norm

from ._seeding import derive_seed

__all__ = [
    "Dimension",
    "HyperPoint",
    "SearchSpace",
    "Trial",
    "TrialLog",
    "bayesian_opt",
    "default_space",
    "random_search",
    "sample_uniform",
    "select_best",
]


@dataclass(frozen=True)
class Dimension:
    name: str
    low: float
    high: float
    integer: bool = False
    log: bool = False
    # active only when the named dimension's value is >= the threshold
    requires: tuple[str, int] | None = None

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"{self.name}: lower bound {self.low} must be < upper bound {self.high}")
        if self.log and self.low <= 0:
            raise ValueError(f"{self.name}: log-scale bounds must be positive")

    def to_unit(self, value) -> float:
        if self.log:
            lo, hi, v = math.log10(self.low), math.log10(self.high), math.log10(value)
        else:
            lo, hi, v = self.low, self.high, value
        return (v - lo) / (hi - lo)

    def from_unit(self, u):
        u = min(max(float(u), 0.0), 1.0)
        if self.log:
            lo, hi = math.log10(self.low), math.log10(self.high)
            value = 10.0 ** (lo + u * (hi - lo))
        else:
            value = self.low + u * (self.high - self.low)
        if self.integer:
            return int(min(max(round(value), self.low), self.high))
        return float(min(max(value, self.low), self.high))


@dataclass(frozen=True)
class SearchSpace:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate dimension names {names}")
        for d in self.dimensions:
            if d.requires is not None and d.requires[0] not in names:
                raise ValueError(f"{d.name} depends on unknown dimension {d.requires[0]!r}")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    def ordered(self) -> list[Dimension]:
        """Unconditional dimensions first, then conditional ones."""
        return [d for d in self.dimensions if d.requires is None] + [d for d in self.dimensions if d.requires]

    def is_active(self, dim: Dimension, values: Mapping) -> bool:
        if dim.requires is None:
            return True
        name, threshold = dim.requires
        return values[name] >= threshold

    def decode(self, unit: Mapping[str, float]) -> HyperPoint:
        values = {}
        for d in self.ordered():
            if self.is_active(d, values):
                values[d.name] = d.from_unit(unit[d.name])
        return HyperPoint({n: values[n] for n in self.names if n in values})

    def encode(self, point: HyperPoint) -> np.ndarray:
        """Unit-cube coordinates; inactive dimensions map to 0."""
        return np.array([d.to_unit(point[d.name]) if d.name in point else 0.0 for d in self.dimensions])

    def contains(self, point: HyperPoint) -> bool:
        for d in self.dimensions:
            active = self.is_active(d, point.values)
            if active != (d.name in point):
                return False
            if active:
                v = point[d.name]
                if not d.low <= v <= d.high or (d.integer and v != int(v)):
                    return False
        return True


def default_space(units=(16, 1024), lr=(1e-5, 1e-2), nepochs=(50, 100), bs=(8, 128), nlayers=(1, 3)) -> SearchSpace:
    """Seven-dimension LSTM space; ``units2``/``units3`` exist only for 2/3 layers."""
    return SearchSpace((
        Dimension("units1", *units, integer=True),
        Dimension("units2", *units, integer=True, requires=("nlayers", 2)),
        Dimension("units3", *units, integer=True, requires=("nlayers", 3)),
        Dimension("lr", *lr, log=True),
        Dimension("nepochs", *nepochs, integer=True),
        Dimension("bs", *bs, integer=True),
        Dimension("nlayers", *nlayers, integer=True),
    ))


@dataclass(frozen=True)
class HyperPoint:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def units(self) -> tuple[int, ...]:
        nl = int(self.values.get("nlayers", 1))
        return tuple(int(self.values[f"units{k}"]) for k in range(1, nl + 1))

    def to_dict(self) -> dict:
        return dict(self.values)


def sample_uniform(space: SearchSpace, rng_seed) -> HyperPoint:
    """Independent draw: integers inclusive, log dimensions uniform in log10."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    values = {}
    for d in space.ordered():
        if not space.is_active(d, values):
            continue
        if d.integer:
            values[d.name] = int(rng.integers(int(d.low), int(d.high) + 1))
        elif d.log:
            values[d.name] = float(10.0 ** rng.uniform(math.log10(d.low), math.log10(d.high)))
        else:
            values[d.name] = float(rng.uniform(d.low, d.high))
    return HyperPoint({n: values[n] for n in space.names if n in values})


@dataclass
class Trial:
    index: int
    seed: int
    point: HyperPoint
    mae: float
    rmse: float
    seconds: float
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class TrialLog:
    trials: list[Trial] = field(default_factory=list)
    method: str = ""

    @property
    def best_index(self) -> int | None:
        finite = [t for t in self.trials if math.isfinite(t.mae)]
        if not finite:
            return None
        return min(finite, key=lambda t: (t.mae, t.index)).index

    @property
    def best(self) -> Trial | None:
        i = self.best_index
        return None if i is None else self.trials[i]

    def __len__(self):
        return len(self.trials)

    def signature(self) -> list:
        """Everything except wall-clock time, for determinism checks."""
        return [(t.index, t.seed, t.point.values, t.mae, t.rmse, t.error) for t in self.trials]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "seed", "point", "mae", "rmse", "seconds", "error", "best"])
            best = self.best_index
            for t in self.trials:
                w.writerow([t.index, t.seed, json.dumps(t.point.values, sort_keys=True),
                            repr(t.mae), repr(t.rmse), f"{t.seconds:.6f}", t.error or "",
                            int(t.index == best)])


def _evaluate(objective, point, seed, index) -> Trial:
    t0 = time.perf_counter()
    try:
        res = objective(point, seed)
        if isinstance(res, tuple):
            m, r = float(res[0]), float(res[1])
        else:
            m, r = float(res), math.nan
        err = None
        if not math.isfinite(m):
            err, m = "non-finite objective", math.inf
    except Exception as exc:
        m, r, err = math.inf, math.inf, f"{type(exc).__name__}: {exc}"
    return Trial(index, seed, point, m, r, time.perf_counter() - t0, err)


def random_search(objective: Callable, space: SearchSpace, niter=50, master_seed=0) -> TrialLog:
    """Evaluate ``niter`` independent draws; failed evaluations score ``inf`` and the search continues."""
    if niter < 1:
        raise ValueError("niter must be >= 1")
    log = TrialLog(method="random")
    for i in range(niter):
        seed = derive_seed(master_seed, i + 1)
        point = sample_uniform(space, seed)
        log.trials.append(_evaluate(objective, point, seed, i))
    return log


def matern52(A, B, length_scale):
    d = np.sqrt(np.maximum(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1), 0.0)) / length_scale
    s5 = math.sqrt(5.0) * d
    return (1.0 + s5 + 5.0 / 3.0 * d * d) * np.exp(-s5)


LENGTH_SCALES = (0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0)


class _GP:
    """Zero-mean GP on standardized targets with unit signal variance.

    The isotropic length scale is picked from a fixed grid by marginal
    likelihood; noise starts at 1e-6 and is raised tenfold up to 1e-2 when
    the Cholesky factorization fails.
    """

    def __init__(self, X, y, noise=1e-6, max_noise=1e-2):
        self.X = X
        self.mu = y.mean()
        self.sd = y.std() or 1.0
        self.y = (y - self.mu) / self.sd
        best = None
        for ls in LENGTH_SCALES:
            fit = self._factor(ls, noise, max_noise)
            if fit is None:
                continue
            cf, alpha, nz = fit
            lml = -0.5 * self.y @ alpha - np.log(np.diag(cf[0])).sum()
            if best is None or lml > best[0]:
                best = (lml, ls, cf, alpha)
        if best is None:
            raise LinAlgError("kernel matrix not positive definite at any jitter")
        _, self.ls, self.cf, self.alpha = best

    def _factor(self, ls, noise, max_noise):
        K = matern52(self.X, self.X, ls)
        while noise <= max_noise * (1 + 1e-9):
            try:
                cf = cho_factor(K + noise * np.eye(len(K)), lower=True)
                return cf, cho_solve(cf, self.y), noise
            except LinAlgError:
                noise *= 10.0
        return None

    def predict(self, Xs):
        Ks = matern52(Xs, self.X, self.ls)
        mean = Ks @ self.alpha
        v = cho_solve(self.cf, Ks.T)
        var = np.maximum(1.0 - (Ks * v.T).sum(axis=1), 1e-12)
        return mean, np.sqrt(var)


def expected_improvement(mean, std, best, xi=0.0):
    """EI for maximization."""
    z = (mean - best - xi) / std
    return (mean - best - xi) * norm.cdf(z) + std * norm.pdf(z)


def _unit_sample(space, rng):
    return {d.name: float(rng.uniform()) for d in space.dimensions}


def bayesian_opt(objective: Callable, space: SearchSpace, niter=50, init_points=10, master_seed=0,
                 n_candidates=1000) -> TrialLog:
    """GP-EI Bayesian optimization over the unit-cube image of ``space``.

    ``init_points`` random draws seed the surrogate. Each later step fits a
    Matern-5/2 GP to ``-MAE`` of the finite trials, scores ``n_candidates``
    seeded random points by expected improvement, refines the best one by
    coordinate search, and evaluates the decoded (rounded) point.
    """
    if init_points < 1 or niter <= init_points:
        raise ValueError(f"need 1 <= init_points < niter, got init_points={init_points}, niter={niter}")
    log = TrialLog(method="bayesian")
    for i in range(init_points):
        seed = derive_seed(master_seed, i + 1)
        log.trials.append(_evaluate(objective, sample_uniform(space, seed), seed, i))

    for i in range(init_points, niter):
        seed = derive_seed(master_seed, i + 1)
        rng = np.random.default_rng(seed)
        point = _propose(space, log, rng, n_candidates)
        log.trials.append(_evaluate(objective, point, seed, i))
    return log


def _propose(space, log, rng, n_candidates) -> HyperPoint:
    done = [t for t in log.trials if math.isfinite(t.mae)]
    cand = rng.uniform(size=(n_candidates, len(space.dimensions)))
    if len(done) < 2:
        return space.decode(dict(zip(space.names, cand[0])))
    X = np.array([space.encode(t.point) for t in done])
    y = -np.array([t.mae for t in done])
    try:
        gp = _GP(X, y)
    except LinAlgError:
        return space.decode(dict(zip(space.names, cand[0])))
    best_y = (y.max() - gp.mu) / gp.sd

    def canonical(u):
        # snap to what will actually be evaluated so EI sees rounding and inactive dims
        return space.encode(space.decode(dict(zip(space.names, u))))

    def score(U):
        m, s = gp.predict(np.atleast_2d(U))
        return expected_improvement(m, s, best_y)

    snapped = np.array([canonical(u) for u in cand])
    ei = score(snapped)
    x = snapped[int(np.argmax(ei))]
    fx = float(ei.max())
    step = 0.1
    while step >= 0.0125:
        improved = False
        for j in range(x.size):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[j] = min(max(trial[j] + sgn * step, 0.0), 1.0)
                trial = canonical(trial)
                f = float(score(trial)[0])
                if f > fx:
                    x, fx, improved = trial, f, True
        if not improved:
            step /= 2.0
    return space.decode(dict(zip(space.names, x)))


def select_best(trials) -> tuple[HyperPoint, dict]:
    """Lowest validation MAE, earliest on ties."""
    log = trials if isinstance(trials, TrialLog) else TrialLog(list(trials))
    best = log.best
    if best is None:
        raise ValueError("all trials failed; no finite validation MAE")
    n_failed = sum(1 for t in log.trials if not math.isfinite(t.mae))
    return best.point, {"index": best.index, "mae": best.mae, "rmse": best.rmse,
                        "seed": best.seed, "trials": len(log.trials), "failed": n_failed}
