"""First-order optimizers operating in place on a dict of parameter arrays."""

import numpy as np

OPTIMIZERS = ("adam", "sgd", "adagrad", "rmsprop")
EPS = 1e-7


class SGD:
    def __init__(self, lr=0.01):
        self.lr = lr

    def step(self, params, grads):
        for name, g in grads.items():
            params[name] -= self.lr * g


class Adam:
    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=EPS):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m.get(name, 0.0) * self.beta1 + (1.0 - self.beta1) * g
            v = self.v.get(name, 0.0) * self.beta2 + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class RMSprop:
    def __init__(self, lr=0.001, rho=0.9, eps=EPS):
        self.lr, self.rho, self.eps = lr, rho, eps
        self.v = {}

    def step(self, params, grads):
        for name, g in grads.items():
            v = self.v.get(name, 0.0) * self.rho + (1.0 - self.rho) * g * g
            self.v[name] = v
            params[name] -= self.lr * g / (np.sqrt(v) + self.eps)


class Adagrad:
    def __init__(self, lr=0.01, eps=EPS):
        self.lr, self.eps = lr, eps
        self.acc = {}

    def step(self, params, grads):
        for name, g in grads.items():
            acc = self.acc.get(name, 0.0) + g * g
            self.acc[name] = acc
            params[name] -= self.lr * g / (np.sqrt(acc) + self.eps)


_CLASSES = {"adam": Adam, "sgd": SGD, "adagrad": Adagrad, "rmsprop": RMSprop}


def make_optimizer(kind, learning_rate):
    try:
        return _CLASSES[kind](lr=learning_rate)
    except KeyError:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {OPTIMIZERS}") from None


def optimizer_step(state, kind, params, grads, learning_rate):
    """Functional form: returns ``(new_params, state)``; pass ``state=None`` on the first call."""
    if state is None:
        state = make_optimizer(kind, learning_rate)
    state.lr = learning_rate
    new = {k: np.array(v, dtype=float, copy=True) for k, v in params.items()}
    state.step(new, grads)
    return new, state
