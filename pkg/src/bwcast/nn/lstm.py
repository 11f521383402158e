"""LSTM cell and layer with backpropagation through time.

Gate weights are stacked column-wise in the order forget, input, output,
candidate: ``W`` is ``(input_dim, 4*units)``, ``U`` is ``(units, 4*units)``
and ``b`` is ``(4*units,)``. Gates always use the logistic sigmoid. The
``act`` argument replaces tanh in the candidate and cell-output slots.
No peephole connections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import activation, activation_backward, sigmoid

GATES = ("forget", "input", "output", "candidate")


@dataclass
class LstmCellParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        u = self.U.shape[0]
        if self.U.shape != (u, 4 * u) or self.W.shape[1] != 4 * u or self.b.shape != (4 * u,):
            raise ValueError(
                f"inconsistent LSTM shapes W{self.W.shape} U{self.U.shape} b{self.b.shape}"
            )

    @property
    def units(self) -> int:
        return self.U.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    def gate(self, name):
        """``(W_g, U_g, b_g)`` for one gate, as views into the stacked arrays."""
        k = GATES.index(name)
        sl = slice(k * self.units, (k + 1) * self.units)
        return self.W[:, sl], self.U[:, sl], self.b[sl]

    @classmethod
    def zeros(cls, input_dim, units):
        return cls(np.zeros((input_dim, 4 * units)), np.zeros((units, 4 * units)), np.zeros(4 * units))


def lstm_cell_forward(params: LstmCellParams, x_t, h_prev, c_prev, act="tanh"):
    """One time step; works on a single vector or a ``(batch, dim)`` block."""
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape[-1] != params.input_dim or np.shape(h_prev)[-1] != params.units:
        raise ValueError(
            f"dimension mismatch: x {x_t.shape}, h {np.shape(h_prev)} for input_dim={params.input_dim}, units={params.units}"
        )
    u = params.units
    z = x_t @ params.W + h_prev @ params.U + params.b
    f = sigmoid(z[..., :u])
    i = sigmoid(z[..., u:2 * u])
    o = sigmoid(z[..., 2 * u:3 * u])
    zg = z[..., 3 * u:]
    g = activation(act, zg)
    c = f * c_prev + i * g
    a = activation(act, c)
    h = o * a
    cache = (x_t, h_prev, c_prev, f, i, o, zg, g, c, a)
    return h, c, cache


def lstm_cell_backward(params: LstmCellParams, dh, dc, cache, act="tanh"):
    """Gradients of one step. Returns ``(dx, dh_prev, dc_prev, dW, dU, db)``."""
    x_t, h_prev, c_prev, f, i, o, zg, g, c, a = cache
    do = dh * a
    dc = dc + activation_backward(act, c, a, dh * o)
    df = dc * c_prev
    di = dc * g
    dg = dc * i
    dz = np.concatenate([
        df * f * (1.0 - f),
        di * i * (1.0 - i),
        do * o * (1.0 - o),
        activation_backward(act, zg, g, dg),
    ], axis=-1)
    x2 = np.atleast_2d(x_t)
    h2 = np.atleast_2d(h_prev)
    dz2 = np.atleast_2d(dz)
    dW = x2.T @ dz2
    dU = h2.T @ dz2
    db = dz2.sum(axis=0)
    return dz @ params.W.T, dz @ params.U.T, dc * f, dW, dU, db


def lstm_layer_forward(params: LstmCellParams, sequence, return_sequences=True, act="tanh"):
    """Run a layer over ``(T, dim)`` or ``(batch, T, dim)`` from zero states.

    Returns ``(outputs, caches)``: hidden states for every step, or only the
    last one when ``return_sequences`` is false.
    """
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim < 2 or seq.shape[-2] == 0:
        raise ValueError("empty sequence")
    lead = seq.shape[:-2]
    h = np.zeros(lead + (params.units,))
    c = np.zeros_like(h)
    outs, caches = [], []
    for t in range(seq.shape[-2]):
        h, c, cache = lstm_cell_forward(params, seq[..., t, :], h, c, act)
        outs.append(h)
        caches.append(cache)
    if return_sequences:
        return np.stack(outs, axis=-2), caches
    return h, caches


def lstm_layer_backward(params: LstmCellParams, d_outputs, caches, act="tanh"):
    """BPTT through a layer.

    ``d_outputs`` is the gradient w.r.t. every hidden state ``(..., T, units)``.
    Returns ``(d_sequence, grads)`` with ``grads = (dW, dU, db)``.
    """
    if not caches:
        raise ValueError("missing forward cache")
    T = len(caches)
    dW = np.zeros_like(params.W)
    dU = np.zeros_like(params.U)
    db = np.zeros_like(params.b)
    dh_next = np.zeros(d_outputs.shape[:-2] + (params.units,))
    dc_next = np.zeros_like(dh_next)
    dx = [None] * T
    for t in reversed(range(T)):
        dx_t, dh_next, dc_next, gW, gU, gb = lstm_cell_backward(
            params, d_outputs[..., t, :] + dh_next, dc_next, caches[t], act
        )
        dW += gW
        dU += gU
        db += gb
        dx[t] = dx_t
    return np.stack(dx, axis=-2), (dW, dU, db)


def bidirectional_forward(params_fwd, params_bwd, sequence, return_sequences=False, act="tanh"):
    """Forward pass over the sequence and its time reversal.

    Without ``return_sequences`` the result is ``concat(last forward state,
    last backward state)`` of width ``2*units``. With it, step ``t`` holds the
    forward state at ``t`` next to the backward state aligned to ``t``.
    """
    seq = np.asarray(sequence, dtype=float)
    hf, cf = lstm_layer_forward(params_fwd, seq, True, act)
    hb, cb = lstm_layer_forward(params_bwd, seq[..., ::-1, :], True, act)
    if return_sequences:
        out = np.concatenate([hf, hb[..., ::-1, :]], axis=-1)
    else:
        out = np.concatenate([hf[..., -1, :], hb[..., -1, :]], axis=-1)
    return out, (cf, cb)


def bidirectional_backward(params_fwd, params_bwd, d_out, caches, T, return_sequences=False, act="tanh"):
    cf, cb = caches
    uf = params_fwd.units
    if return_sequences:
        dhf = d_out[..., :uf]
        dhb = d_out[..., uf:][..., ::-1, :]
    else:
        lead = d_out.shape[:-1]
        dhf = np.zeros(lead + (T, uf))
        dhb = np.zeros(lead + (T, params_bwd.units))
        dhf[..., -1, :] = d_out[..., :uf]
        dhb[..., -1, :] = d_out[..., uf:]
    dxf, gf = lstm_layer_backward(params_fwd, dhf, cf, act)
    dxb, gb = lstm_layer_backward(params_bwd, dhb, cb, act)
    return dxf + dxb[..., ::-1, :], gf, gb
