"""Tensor: a small dense array with a paired gradient buffer"""
from typing import Any, Tuple

import numpy as np

MAX_RANK = 3
# conv2d weights are out x in x kh x kw
MAX_PARAM_RANK = 4


class Tensor(object):
    """Dense float64 array plus a same-shape gradient accumulator.

    Activations are limited to rank 3; parameters (max_rank=MAX_PARAM_RANK)
    may be rank 4.
    """
    __slots__ = ('data', 'grad')

    def __init__(self, data: Any, max_rank: int = MAX_RANK) -> None:
        data = np.array(data, dtype=np.float64)
        if data.ndim > max_rank:
            raise ValueError('Tensor rank is limited to {}, got shape {}'.format(max_rank, data.shape))
        self.data = data
        self.grad = np.zeros_like(data)

    def __repr__(self) -> str:
        return '<Tensor shape={}>'.format(self.shape)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def accumulate(self, grad: np.ndarray) -> None:
        """Adds grad into the buffer."""
        self.grad += grad
