"""Activation functions and their backward passes.

Backward functions take the pre-activation, the forward output and the
upstream gradient, and return the gradient w.r.t. the pre-activation.
Softmax acts over the last axis.
"""

import numpy as np

ACTIVATIONS = ("tanh", "relu", "sigmoid", "softmax")


def sigmoid(x):
    # tanh form is overflow-free and exact at 0
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def softmax(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def activation(kind, x):
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "softmax":
        return softmax(x)
    raise ValueError(f"unknown activation {kind!r}; choose from {ACTIVATIONS}")


def activation_backward(kind, pre, out, dout):
    if kind == "tanh":
        return dout * (1.0 - out * out)
    if kind == "relu":
        return dout * (pre > 0)
    if kind == "sigmoid":
        return dout * out * (1.0 - out)
    if kind == "softmax":
        return out * (dout - (dout * out).sum(axis=-1, keepdims=True))
    raise ValueError(f"unknown activation {kind!r}; choose from {ACTIVATIONS}")
