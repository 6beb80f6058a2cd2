"""Base class of the manual-backprop layers"""
import abc
from collections import OrderedDict
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .const import LayerKind, TwinMode
from .exceptions import NumericalError, ShapeMismatchError
from .tensor import MAX_PARAM_RANK, Tensor
from .utils import make_rng

IntPair = Union[int, Tuple[int, int]]


class LayerSpec(object):
    """Static description of one layer."""
    __slots__ = ('kind', 'in_ch', 'out_ch', 'kernel_size', 'stride', 'dilation', 'init_seed',
                 'twin_mode', 'slope', 'crop')

    def __init__(self, kind: Union[LayerKind, str], in_ch: int = 1, out_ch: int = 1,
                 kernel_size: IntPair = 1, stride: IntPair = 1, dilation: int = 1,
                 init_seed: int = 0, twin_mode: Union[TwinMode, str, None] = None,
                 slope: float = 0.2, crop: bool = False) -> None:
        """Initialize the LayerSpec class.

        Parameters
        ----------
        kind : LayerKind or str
            Layer type
        in_ch, out_ch : int
            Channel counts (features for dense layers)
        kernel_size, stride : int or (int, int)
            Pairs are (time, frequency) for conv2d
        dilation : int
            Dilation of conv1d
        init_seed : int
            Seed of the weight initialization
        twin_mode : TwinMode or str, optional
            Denominator of twin_tconv1d layers ('ones' or 'abs_weight')
        slope : float
            Negative slope of leaky_relu
        crop : bool
            Transposed convolutions keep only the central len(x) * stride samples
        """
        self.kind = LayerKind(kind)
        for name, value in (('in_ch', in_ch), ('out_ch', out_ch), ('dilation', dilation)):
            if value < 1:
                raise ValueError('{} must be positive, got {}'.format(name, value))
        for name, value in (('kernel_size', kernel_size), ('stride', stride)):
            if min(np.atleast_1d(value)) < 1:
                raise ValueError('{} must be positive, got {}'.format(name, value))
        if self.kind is LayerKind.TWIN_TCONV1D:
            twin_mode = TwinMode(twin_mode or TwinMode.ONES)
            if twin_mode is TwinMode.NONE:
                raise ValueError('twin_tconv1d needs twin_mode ones or abs_weight')
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel_size = kernel_size
        self.stride = stride
        self.dilation = dilation
        self.init_seed = init_seed
        self.twin_mode = twin_mode
        self.slope = slope
        self.crop = crop

    def __repr__(self) -> str:
        return '<LayerSpec {} {}->{} k={} s={} d={}>'.format(
            self.kind.value, self.in_ch, self.out_ch, self.kernel_size, self.stride, self.dilation)


class LayerABC(abc.ABC):
    """A differentiable map with explicit forward and backward passes.

    forward caches what backward needs, so calls must alternate per
    instance: forward, then at most one backward for that forward.
    backward adds parameter gradients into each parameter's grad buffer
    and returns the gradient with respect to the input.
    """

    def __init__(self, name: str) -> None:
        self.name = name
        self._params = OrderedDict()  # type: Dict[str, Tensor]
        self._input = None  # type: Optional[Tensor]

    def __repr__(self) -> str:
        return '<{} {}>'.format(type(self).__name__, self.name)

    def add_param(self, key: str, data: np.ndarray) -> Tensor:
        tensor = Tensor(data, max_rank=MAX_PARAM_RANK)
        self._params[key] = tensor
        return tensor

    def parameters(self) -> Dict[str, Tensor]:
        """Parameters keyed by '<layer name>.<param>'."""
        return OrderedDict(('{}.{}'.format(self.name, key), tensor) for key, tensor in self._params.items())

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    @staticmethod
    def init_uniform(seed: int, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
        """uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights drawn from seed."""
        bound = 1.0 / np.sqrt(fan_in)
        return make_rng(seed).uniform(-bound, bound, size=shape)

    def check_input(self, x: Tensor, rank: int, channels: Optional[int] = None) -> np.ndarray:
        if x.data.ndim != rank or (channels is not None and x.data.shape[0] != channels):
            expected = ('{} channels'.format(channels) if channels is not None else '?',
                        'rank {}'.format(rank))
            raise ShapeMismatchError(expected, x.shape)
        self._input = x
        return x.data

    def finish(self, y: np.ndarray) -> Tensor:
        """Wraps a forward result, rejecting non-finite activations."""
        if not np.all(np.isfinite(y)):
            raise NumericalError('non-finite activation in layer {}'.format(self.name))
        return Tensor(y)

    def pass_back(self, grad_input: np.ndarray) -> np.ndarray:
        """Accumulates grad_input into the cached input tensor and returns it."""
        if self._input is None:
            raise RuntimeError('backward called before forward on {}'.format(self.name))
        self._input.accumulate(grad_input)
        return grad_input

    @abc.abstractmethod
    def forward(self, x: Tensor) -> Tensor:
        pass

    @abc.abstractmethod
    def backward(self, grad: np.ndarray) -> np.ndarray:
        pass
