"""Layer implementations: convolutions, transposed and twin convolutions,
dense, activations and the AMP block"""
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .const import LayerKind, TWIN_EPS, TwinMode
from .exceptions import DegenerateKernelError
from .layer_abc import LayerABC, LayerSpec
from .tensor import Tensor


def _pair(value: object) -> Tuple[int, int]:
    if isinstance(value, (tuple, list)):
        return int(value[0]), int(value[1])
    return int(value), int(value)  # type: ignore


class Conv1d(LayerABC):
    """1-D convolution (correlation form), channels x length, same-length zero
    padding at stride 1."""

    def __init__(self, spec: LayerSpec, name: str = 'conv1d') -> None:
        super().__init__(name)
        self.spec = spec
        self.kernel = int(spec.kernel_size)  # type: ignore
        self.stride = int(spec.stride)  # type: ignore
        self.dilation = spec.dilation
        center = (self.kernel - 1) // 2
        self.pad = (center * self.dilation, (self.kernel - 1 - center) * self.dilation)
        self.weight = self.add_param('weight', self.init_uniform(
            spec.init_seed, (spec.out_ch, spec.in_ch, self.kernel), spec.in_ch * self.kernel))
        self.bias = self.add_param('bias', np.zeros(spec.out_ch))
        self._cols = None  # type: np.ndarray

    def output_length(self, length: int) -> int:
        span = self.dilation * (self.kernel - 1) + 1
        return (length + sum(self.pad) - span) // self.stride + 1

    def forward(self, x: Tensor) -> Tensor:
        data = self.check_input(x, 2, self.spec.in_ch)
        padded = np.pad(data, ((0, 0), self.pad))
        n_out = self.output_length(data.shape[1])
        index = (np.arange(n_out) * self.stride)[:, None] + (np.arange(self.kernel) * self.dilation)[None, :]
        self._cols = padded[:, index]
        y = np.tensordot(self.weight.data, self._cols, axes=([1, 2], [0, 2])) + self.bias.data[:, None]
        return self.finish(y)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.weight.accumulate(np.tensordot(grad, self._cols, axes=([1], [1])))
        self.bias.accumulate(grad.sum(axis=1))

        length = self._input.data.shape[1]
        n_out = grad.shape[1]
        grad_cols = np.tensordot(self.weight.data, grad, axes=([0], [0]))
        grad_padded = np.zeros((self.spec.in_ch, length + sum(self.pad)))
        last = self.stride * (n_out - 1) + 1
        for j in range(self.kernel):
            start = j * self.dilation
            grad_padded[:, start:start + last:self.stride] += grad_cols[:, j, :]
        return self.pass_back(grad_padded[:, self.pad[0]:self.pad[0] + length])


class TConv1d(LayerABC):
    """Transposed 1-D convolution, out[o, i*s + j] += x[c, i] * w[c, o, j].

    The full output has (len - 1) * stride + kernel samples; with spec.crop
    only the central len * stride samples are kept.
    """

    def __init__(self, spec: LayerSpec, name: str = 'tconv1d') -> None:
        super().__init__(name)
        self.spec = spec
        self.kernel = int(spec.kernel_size)  # type: ignore
        self.stride = int(spec.stride)  # type: ignore
        if self.kernel < self.stride:
            raise ValueError('kernel {} shorter than stride {}'.format(self.kernel, self.stride))
        self.weight = self.add_param('weight', self.init_uniform(
            spec.init_seed, (spec.in_ch, spec.out_ch, self.kernel), spec.in_ch * self.kernel))
        self.bias = self.add_param('bias', np.zeros(spec.out_ch))

    def full_length(self, length: int) -> int:
        return (length - 1) * self.stride + self.kernel

    def crop_window(self, length: int) -> Tuple[int, int]:
        full = self.full_length(length)
        if not self.spec.crop:
            return 0, full
        start = (full - length * self.stride) // 2
        return start, start + length * self.stride

    def numerator(self, data: np.ndarray) -> np.ndarray:
        length = data.shape[1]
        out = np.zeros((self.spec.out_ch, self.full_length(length)))
        last = self.stride * (length - 1) + 1
        for j in range(self.kernel):
            out[:, j:j + last:self.stride] += self.weight.data[:, :, j].T @ data
        return out

    def numerator_backward(self, grad_full: np.ndarray) -> np.ndarray:
        data = self._input.data
        length = data.shape[1]
        last = self.stride * (length - 1) + 1
        grad_weight = np.zeros_like(self.weight.data)
        grad_input = np.zeros_like(data)
        for j in range(self.kernel):
            piece = grad_full[:, j:j + last:self.stride]
            grad_weight[:, :, j] = data @ piece.T
            grad_input += self.weight.data[:, :, j] @ piece
        self.weight.accumulate(grad_weight)
        return grad_input

    def uncrop(self, grad: np.ndarray) -> np.ndarray:
        length = self._input.data.shape[1]
        start, stop = self.crop_window(length)
        grad_full = np.zeros((self.spec.out_ch, self.full_length(length)))
        grad_full[:, start:stop] = grad
        return grad_full

    def forward(self, x: Tensor) -> Tensor:
        data = self.check_input(x, 2, self.spec.in_ch)
        start, stop = self.crop_window(data.shape[1])
        return self.finish(self.numerator(data)[:, start:stop] + self.bias.data[:, None])

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.bias.accumulate(grad.sum(axis=1))
        return self.pass_back(self.numerator_backward(self.uncrop(grad)))


class TwinTConv1d(TConv1d):
    """Transposed convolution divided by the overlap weight of a twin branch.

    ones: the twin branch counts contributions per output position and is
    constant w.r.t. weights and input. abs_weight: the twin branch sums the
    mean (over input channels) absolute tap of every contribution, so the
    quotient rule reaches the weights through |w|.
    """

    def __init__(self, spec: LayerSpec, name: str = 'twin_tconv1d') -> None:
        super().__init__(spec, name)
        self.twin_mode = TwinMode(spec.twin_mode)
        self._numerator = None  # type: np.ndarray
        self._denominator = None  # type: np.ndarray

    def denominator(self, length: int) -> np.ndarray:
        if self.twin_mode is TwinMode.ONES:
            taps = np.ones((1, self.kernel))
        else:
            taps = np.abs(self.weight.data).mean(axis=0)
        out = np.zeros((taps.shape[0], self.full_length(length)))
        last = self.stride * (length - 1) + 1
        for j in range(self.kernel):
            out[:, j:j + last:self.stride] += taps[:, j:j + 1]
        worst = np.unravel_index(int(np.argmin(out)), out.shape)
        if out[worst] < TWIN_EPS:
            raise DegenerateKernelError(int(worst[1]), float(out[worst]))
        return out

    def forward(self, x: Tensor) -> Tensor:
        data = self.check_input(x, 2, self.spec.in_ch)
        self._numerator = self.numerator(data)
        self._denominator = self.denominator(data.shape[1])
        start, stop = self.crop_window(data.shape[1])
        y = (self._numerator / self._denominator)[:, start:stop] + self.bias.data[:, None]
        return self.finish(y)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.bias.accumulate(grad.sum(axis=1))
        grad_full = self.uncrop(grad)
        grad_input = self.numerator_backward(grad_full / self._denominator)

        if self.twin_mode is TwinMode.ABS_WEIGHT:
            grad_den = -grad_full * self._numerator / self._denominator ** 2
            length = self._input.data.shape[1]
            last = self.stride * (length - 1) + 1
            grad_taps = np.stack([grad_den[:, j:j + last:self.stride].sum(axis=1)
                                  for j in range(self.kernel)], axis=1)
            self.weight.accumulate(np.sign(self.weight.data) * grad_taps[None, :, :] / self.spec.in_ch)
        return self.pass_back(grad_input)


class Dense(LayerABC):
    """Affine map over the first axis: y = W x + b (applied per column for rank 2 input)."""

    def __init__(self, spec: LayerSpec, name: str = 'dense') -> None:
        super().__init__(name)
        self.spec = spec
        self.weight = self.add_param('weight', self.init_uniform(
            spec.init_seed, (spec.out_ch, spec.in_ch), spec.in_ch))
        self.bias = self.add_param('bias', np.zeros(spec.out_ch))

    def forward(self, x: Tensor) -> Tensor:
        if x.data.ndim not in (1, 2) or x.data.shape[0] != self.spec.in_ch:
            raise ValueError('dense layer {} expects {} features, got shape {}'.format(
                self.name, self.spec.in_ch, x.shape))
        self._input = x
        flat = x.data.reshape(self.spec.in_ch, -1)
        y = self.weight.data @ flat + self.bias.data[:, None]
        return self.finish(y.reshape((self.spec.out_ch,) + x.data.shape[1:]))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        flat_grad = grad.reshape(self.spec.out_ch, -1)
        flat = self._input.data.reshape(self.spec.in_ch, -1)
        self.weight.accumulate(flat_grad @ flat.T)
        self.bias.accumulate(flat_grad.sum(axis=1))
        return self.pass_back((self.weight.data.T @ flat_grad).reshape(self._input.data.shape))


class Snake(LayerABC):
    """x + sin(x)^2"""

    def __init__(self, spec: Optional[LayerSpec] = None, name: str = 'snake') -> None:
        super().__init__(name)

    def forward(self, x: Tensor) -> Tensor:
        self._input = x
        return self.finish(x.data + np.sin(x.data) ** 2)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.pass_back(grad * (1.0 + np.sin(2.0 * self._input.data)))


class LeakyReLU(LayerABC):

    def __init__(self, spec: Optional[LayerSpec] = None, name: str = 'leaky_relu') -> None:
        super().__init__(name)
        self.slope = spec.slope if spec is not None else 0.2

    def forward(self, x: Tensor) -> Tensor:
        self._input = x
        return self.finish(np.where(x.data > 0, x.data, self.slope * x.data))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.pass_back(np.where(self._input.data > 0, grad, self.slope * grad))


class Tanh(LayerABC):

    def __init__(self, spec: Optional[LayerSpec] = None, name: str = 'tanh') -> None:
        super().__init__(name)
        self._output = None  # type: np.ndarray

    def forward(self, x: Tensor) -> Tensor:
        self._input = x
        self._output = np.tanh(x.data)
        return self.finish(self._output)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.pass_back(grad * (1.0 - self._output ** 2))


class Conv2d(LayerABC):
    """2-D convolution over channels x frames x bins with (kernel // 2) zero padding."""

    def __init__(self, spec: LayerSpec, name: str = 'conv2d') -> None:
        super().__init__(name)
        self.spec = spec
        self.kernel = _pair(spec.kernel_size)
        self.stride = _pair(spec.stride)
        self.pad = (self.kernel[0] // 2, self.kernel[1] // 2)
        fan_in = spec.in_ch * self.kernel[0] * self.kernel[1]
        self.weight = self.add_param('weight', self.init_uniform(
            spec.init_seed, (spec.out_ch, spec.in_ch) + self.kernel, fan_in))
        self.bias = self.add_param('bias', np.zeros(spec.out_ch))
        self._padded = None  # type: np.ndarray

    def output_shape(self, height: int, width: int) -> Tuple[int, int]:
        return ((height + 2 * self.pad[0] - self.kernel[0]) // self.stride[0] + 1,
                (width + 2 * self.pad[1] - self.kernel[1]) // self.stride[1] + 1)

    def _window(self, a: int, b: int, shape: Tuple[int, int]) -> Tuple[slice, slice, slice]:
        rows = slice(a, a + self.stride[0] * (shape[0] - 1) + 1, self.stride[0])
        cols = slice(b, b + self.stride[1] * (shape[1] - 1) + 1, self.stride[1])
        return slice(None), rows, cols

    def forward(self, x: Tensor) -> Tensor:
        data = self.check_input(x, 3, self.spec.in_ch)
        self._padded = np.pad(data, ((0, 0), (self.pad[0], self.pad[0]), (self.pad[1], self.pad[1])))
        shape = self.output_shape(data.shape[1], data.shape[2])
        y = np.zeros((self.spec.out_ch,) + shape)
        for a in range(self.kernel[0]):
            for b in range(self.kernel[1]):
                piece = self._padded[self._window(a, b, shape)]
                y += np.tensordot(self.weight.data[:, :, a, b], piece, axes=(1, 0))
        return self.finish(y + self.bias.data[:, None, None])

    def backward(self, grad: np.ndarray) -> np.ndarray:
        shape = grad.shape[1:]
        grad_weight = np.zeros_like(self.weight.data)
        grad_padded = np.zeros_like(self._padded)
        for a in range(self.kernel[0]):
            for b in range(self.kernel[1]):
                window = self._window(a, b, shape)
                grad_weight[:, :, a, b] = np.tensordot(grad, self._padded[window], axes=([1, 2], [1, 2]))
                grad_padded[window] += np.tensordot(self.weight.data[:, :, a, b], grad, axes=(0, 0))
        self.weight.accumulate(grad_weight)
        self.bias.accumulate(grad.sum(axis=(1, 2)))
        height, width = self._input.data.shape[1:]
        return self.pass_back(grad_padded[:, self.pad[0]:self.pad[0] + height, self.pad[1]:self.pad[1] + width])


class AmpBlock(LayerABC):
    """Residual stack x <- x + conv_d(snake(x)) over the dilations."""

    def __init__(self, channels: int, kernel_size: int = 3, dilations: Sequence[int] = (1, 3, 5),
                 init_seed: int = 0, name: str = 'amp') -> None:
        super().__init__(name)
        if not len(dilations):
            raise ValueError('AmpBlock needs at least one dilation')
        self.snakes = []  # type: List[Snake]
        self.convs = []  # type: List[Conv1d]
        for i, dilation in enumerate(dilations):
            self.snakes.append(Snake(name='{}.snake{}'.format(name, i)))
            spec = LayerSpec(LayerKind.CONV1D, channels, channels, kernel_size, 1, dilation, init_seed + i)
            self.convs.append(Conv1d(spec, name='{}.conv{}'.format(name, i)))

    def parameters(self) -> Dict[str, Tensor]:
        params = OrderedDict()  # type: Dict[str, Tensor]
        for conv in self.convs:
            params.update(conv.parameters())
        return params

    def zero_grad(self) -> None:
        for conv in self.convs:
            conv.zero_grad()

    def forward(self, x: Tensor) -> Tensor:
        self._input = x
        y = x
        for snake_layer, conv in zip(self.snakes, self.convs):
            y = Tensor(y.data + conv.forward(snake_layer.forward(y)).data)
        return self.finish(y.data)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for snake_layer, conv in zip(reversed(self.snakes), reversed(self.convs)):
            grad = grad + snake_layer.backward(conv.backward(grad))
        return self.pass_back(grad)


_KINDS = {
    LayerKind.CONV1D: Conv1d,
    LayerKind.TCONV1D: TConv1d,
    LayerKind.TWIN_TCONV1D: TwinTConv1d,
    LayerKind.DENSE: Dense,
    LayerKind.SNAKE: Snake,
    LayerKind.LEAKY_RELU: LeakyReLU,
    LayerKind.TANH: Tanh,
    LayerKind.CONV2D: Conv2d,
}


def build_layer(spec: LayerSpec, name: Optional[str] = None) -> LayerABC:
    """Instantiates the layer class for spec.kind."""
    return _KINDS[spec.kind](spec, name or spec.kind.value)


def layer_forward(layer: LayerABC, x: Tensor) -> Tensor:
    return layer.forward(x)


def layer_backward(layer: LayerABC, grad: np.ndarray) -> np.ndarray:
    """Returns the input gradient; parameter gradients are accumulated."""
    return layer.backward(np.asarray(grad, dtype=np.float64))
