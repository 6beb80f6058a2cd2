"""Adam optimizer over named parameter arrays"""
from collections import OrderedDict
from typing import Dict

import numpy as np

from .const import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from .exceptions import ShapeMismatchError
from .tensor import Tensor


class AdamState(object):
    """Moment estimates and hyper-parameters of an Adam run.

    m and v are created lazily, shaped like the parameter they belong to;
    t counts completed steps.
    """

    def __init__(self, lr: float = 2e-4, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps: float = ADAM_EPS) -> None:
        if lr <= 0.0:
            raise ValueError('learning rate must be positive, got {}'.format(lr))
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError('betas must lie in [0, 1), got {}, {}'.format(beta1, beta2))
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = OrderedDict()  # type: Dict[str, np.ndarray]
        self.v = OrderedDict()  # type: Dict[str, np.ndarray]

    def __repr__(self) -> str:
        return '<AdamState t={} lr={}>'.format(self.t, self.lr)


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray],
              state: AdamState) -> Dict[str, np.ndarray]:
    """One bias-corrected Adam update.

    Advances state (t and the moments) and returns new parameter arrays;
    the arrays in params are left untouched. Parameters are visited in the
    iteration order of params.
    """
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    updated = OrderedDict()  # type: Dict[str, np.ndarray]
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise ShapeMismatchError(value.shape, grad.shape)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(value)
            v = np.zeros_like(value)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v
        updated[name] = value - state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return updated


class Adam(object):
    """Applies adam_step in place to a set of Tensors using their grad buffers."""

    def __init__(self, params: Dict[str, Tensor], lr: float = 2e-4, beta1: float = ADAM_BETA1,
                 beta2: float = ADAM_BETA2, eps: float = ADAM_EPS) -> None:
        self.params = params
        self.state = AdamState(lr, beta1, beta2, eps)

    def step(self) -> None:
        values = OrderedDict((name, t.data) for name, t in self.params.items())
        grads = OrderedDict((name, t.grad) for name, t in self.params.items())
        for name, value in adam_step(values, grads, self.state).items():
            self.params[name].data[...] = value

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()
