"""Encoder-decoder LSTM forecaster: topology, forward pass and exact gradients."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .activations import ACTIVATIONS
from .lstm import (
    LstmCellParams,
    bidirectional_backward,
    bidirectional_forward,
    lstm_layer_backward,
    lstm_layer_forward,
)

VARIANTS = ("vanilla", "bidirectional")
MAX_LAYERS = 3


@dataclass(frozen=True)
class ModelSpec:
    """Network topology.

    The encoder is a stack of ``len(units)`` LSTM layers (bidirectional
    when ``variant == "bidirectional"``). Its final state is repeated
    ``msteps`` times into a single decoder layer, and a shared linear head
    maps every decoder step to ``output_dim`` values.
    """

    units: tuple[int, ...]
    nlags: int
    input_dim: int = 1
    output_dim: int = 1
    msteps: int = 1
    variant: str = "vanilla"
    activation: str = "tanh"
    decoder_units: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(int(u) for u in self.units))
        if not 1 <= len(self.units) <= MAX_LAYERS:
            raise ValueError(f"nlayers must be in [1, {MAX_LAYERS}], got {len(self.units)}")
        if any(u < 1 for u in self.units):
            raise ValueError(f"units must be positive, got {self.units}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}")
        for name in ("nlags", "input_dim", "output_dim", "msteps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def nlayers(self) -> int:
        return len(self.units)

    @property
    def bidirectional(self) -> bool:
        return self.variant == "bidirectional"

    @property
    def dec_units(self) -> int:
        return self.decoder_units or self.units[-1]

    @property
    def context_dim(self) -> int:
        return self.units[-1] * (2 if self.bidirectional else 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = list(self.units)
        return d

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Ordered parameter names and shapes; init and serialization follow this order."""
        shapes = {}
        in_dim = self.input_dim
        dirs = ("fwd", "bwd") if self.bidirectional else ("",)
        for layer, u in enumerate(self.units):
            for d in dirs:
                prefix = f"enc{layer}.{d}." if d else f"enc{layer}."
                shapes[prefix + "W"] = (in_dim, 4 * u)
                shapes[prefix + "U"] = (u, 4 * u)
                shapes[prefix + "b"] = (4 * u,)
            in_dim = u * len(dirs)
        du = self.dec_units
        shapes["dec.W"] = (self.context_dim, 4 * du)
        shapes["dec.U"] = (du, 4 * du)
        shapes["dec.b"] = (4 * du,)
        shapes["head.W"] = (self.output_dim, du)
        shapes["head.b"] = (self.output_dim,)
        return shapes


def init_params(spec: ModelSpec, seed=0, scale=0.05) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {name: rng.uniform(-scale, scale, size=shape) for name, shape in spec.param_shapes().items()}


def _cell(params, prefix) -> LstmCellParams:
    return LstmCellParams(params[prefix + "W"], params[prefix + "U"], params[prefix + "b"])


@dataclass
class ForwardCache:
    enc: list = field(default_factory=list)
    dec: list = field(default_factory=list)
    dec_out: np.ndarray | None = None
    T: int = 0


def model_forward(spec: ModelSpec, params, X3, with_cache=False):
    """Predict ``(rows, msteps, output_dim)`` from ``(rows, nlags, input_dim)`` windows."""
    x = np.asarray(X3, dtype=float)
    if x.ndim != 3 or x.shape[2] != spec.input_dim:
        raise ValueError(f"expected input of shape (rows, T, {spec.input_dim}), got {x.shape}")
    act = spec.activation
    cache = ForwardCache(T=x.shape[1])
    for layer in range(spec.nlayers):
        last = layer == spec.nlayers - 1
        if spec.bidirectional:
            x, c = bidirectional_forward(
                _cell(params, f"enc{layer}.fwd."), _cell(params, f"enc{layer}.bwd."), x, not last, act
            )
        else:
            x, c = lstm_layer_forward(_cell(params, f"enc{layer}."), x, not last, act)
        cache.enc.append(c)
    dec_in = np.repeat(x[:, None, :], spec.msteps, axis=1)
    hd, cache.dec = lstm_layer_forward(_cell(params, "dec."), dec_in, True, act)
    cache.dec_out = hd
    out = hd @ params["head.W"].T + params["head.b"]
    return (out, cache) if with_cache else out


def model_backward(spec: ModelSpec, params, cache: ForwardCache, d_out) -> dict[str, np.ndarray]:
    """Exact gradients of every parameter given ``d loss / d predictions``, summed over rows."""
    if cache is None or cache.dec_out is None:
        raise ValueError("missing forward cache")
    act = spec.activation
    grads = {}
    hd = cache.dec_out
    grads["head.W"] = np.einsum("bso,bsu->ou", d_out, hd)
    grads["head.b"] = d_out.sum(axis=(0, 1))
    dhd = d_out @ params["head.W"]
    ddec_in, (gW, gU, gb) = lstm_layer_backward(_cell(params, "dec."), dhd, cache.dec, act)
    grads["dec.W"], grads["dec.U"], grads["dec.b"] = gW, gU, gb
    dx = ddec_in.sum(axis=1)

    T = cache.T
    for layer in reversed(range(spec.nlayers)):
        last = layer == spec.nlayers - 1
        if spec.bidirectional:
            pf, pb = _cell(params, f"enc{layer}.fwd."), _cell(params, f"enc{layer}.bwd.")
            dx, gf, gbk = bidirectional_backward(pf, pb, dx, cache.enc[layer], T, not last, act)
            for d, g in (("fwd", gf), ("bwd", gbk)):
                grads[f"enc{layer}.{d}.W"], grads[f"enc{layer}.{d}.U"], grads[f"enc{layer}.{d}.b"] = g
        else:
            p = _cell(params, f"enc{layer}.")
            if last:
                dH = np.zeros(dx.shape[:1] + (T, p.units))
                dH[:, -1] = dx
            else:
                dH = dx
            dx, g = lstm_layer_backward(p, dH, cache.enc[layer], act)
            grads[f"enc{layer}.W"], grads[f"enc{layer}.U"], grads[f"enc{layer}.b"] = g
    return {name: grads[name] for name in params}


@dataclass
class ForecastModel:
    """Trained network: topology, parameters and per-epoch history."""

    spec: ModelSpec
    params: dict[str, np.ndarray]
    history: list[dict] = field(default_factory=list)

    def predict(self, X3) -> np.ndarray:
        return model_forward(self.spec, self.params, X3)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())
