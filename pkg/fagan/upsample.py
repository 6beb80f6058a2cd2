"""Reference upsampling arithmetic: transposed and twin convolution, snake,
low-pass FIR filtering and the AMP block."""
from typing import Any, List, Optional, Sequence, Union

import numpy as np
from scipy.signal import firwin

from .const import TWIN_EPS, TwinMode
from .exceptions import DegenerateKernelError
from .utils import as_signal

#: taps of the anti-aliasing filter used by the twin_lowpass pipeline
PIPELINE_TAPS = 255
PIPELINE_BETA = 9.0


class DeconvSpec(object):
    """Kernel, stride and twin denominator mode of a (twin) transposed convolution."""
    __slots__ = ('kernel', 'stride', 'twin_mode')

    def __init__(self, kernel: Any, stride: int,
                 twin_mode: Union[TwinMode, str] = TwinMode.ONES) -> None:
        self.kernel = as_signal(kernel, 'kernel')
        if int(stride) != stride or stride < 1:
            raise ValueError('stride must be a positive integer, got {}'.format(stride))
        if self.kernel.shape[0] < stride:
            raise ValueError('kernel length {} is shorter than stride {}'.format(
                self.kernel.shape[0], stride))
        self.stride = int(stride)
        self.twin_mode = TwinMode(twin_mode)

    def __repr__(self) -> str:
        return '<DeconvSpec taps={} stride={} twin_mode={}>'.format(
            self.kernel.shape[0], self.stride, self.twin_mode.value)


class FirFilter(object):
    """Odd-length symmetric low-pass FIR filter."""
    __slots__ = ('taps', 'cutoff')

    def __init__(self, taps: Any, cutoff: float) -> None:
        taps = as_signal(taps, 'taps')
        if taps.shape[0] % 2 != 1:
            raise ValueError('FIR filter needs an odd number of taps, got {}'.format(taps.shape[0]))
        if np.abs(taps - taps[::-1]).max() > 1e-12:
            raise ValueError('FIR taps are not symmetric')
        self.taps = taps
        self.cutoff = cutoff

    def __repr__(self) -> str:
        return '<FirFilter taps={} cutoff={}>'.format(self.taps.shape[0], self.cutoff)

    @property
    def delay(self) -> int:
        return (self.taps.shape[0] - 1) // 2


def zero_stuff(x: np.ndarray, stride: int) -> np.ndarray:
    """Inserts stride - 1 zeros between consecutive samples (no trailing zeros)."""
    up = np.zeros((x.shape[0] - 1) * stride + 1)
    up[::stride] = x
    return up


def transposed_conv1d(x: Any, spec: DeconvSpec) -> np.ndarray:
    """Plain transposed convolution, out[j] = sum_i x[i] k[j - i*stride].

    The full output of length (len(x) - 1) * stride + len(kernel) is
    returned; twin_mode of spec is not consulted.
    """
    x = as_signal(x, 'x')
    if x.shape[0] == 0:
        raise ValueError('transposed_conv1d needs a non-empty input')
    return np.convolve(zero_stuff(x, spec.stride), spec.kernel)


def twin_denominator(n_inputs: int, spec: DeconvSpec) -> np.ndarray:
    """Per-position overlap weight of the twin branch for an input of n_inputs samples."""
    if spec.twin_mode is TwinMode.NONE:
        raise ValueError('twin_mode none has no denominator')
    if spec.twin_mode is TwinMode.ONES:
        weights = np.ones_like(spec.kernel)
    else:
        weights = np.abs(spec.kernel)
    return np.convolve(zero_stuff(np.ones(n_inputs), spec.stride), weights)


def twin_deconv(x: Any, spec: DeconvSpec) -> np.ndarray:
    """Twin transposed convolution: the plain output divided elementwise by the
    overlap weight of the twin branch.

    Raises DegenerateKernelError if a denominator entry falls below 1e-12,
    which only happens in abs_weight mode with zero taps.
    """
    x = as_signal(x, 'x')
    numerator = transposed_conv1d(x, spec)
    denominator = twin_denominator(x.shape[0], spec)
    worst = int(np.argmin(denominator))
    if denominator[worst] < TWIN_EPS:
        raise DegenerateKernelError(worst, float(denominator[worst]))
    return numerator / denominator


def snake(x: Any) -> np.ndarray:
    """x + sin(x)**2, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    return x + np.sin(x) ** 2


def design_lowpass(cutoff: float, num_taps: int, kaiser_beta: float = 9.0) -> FirFilter:
    """Kaiser-windowed sinc low-pass with unit DC gain.

    Parameters
    ----------
    cutoff : float
        Cutoff frequency in cycles per sample, 0 < cutoff < 0.5
    num_taps : int
        Odd filter length
    kaiser_beta : float, optional
        Kaiser window shape parameter
    """
    if not 0.0 < cutoff < 0.5:
        raise ValueError('cutoff must lie in (0, 0.5), got {}'.format(cutoff))
    if int(num_taps) != num_taps or num_taps < 1 or num_taps % 2 != 1:
        raise ValueError('num_taps must be a positive odd integer, got {}'.format(num_taps))

    taps = firwin(int(num_taps), cutoff, window=('kaiser', kaiser_beta), fs=1.0)
    taps = (taps + taps[::-1]) / 2.0
    return FirFilter(taps / taps.sum(), cutoff)


def apply_fir(x: Any, fir: FirFilter) -> np.ndarray:
    """Zero-phase filtering with reflect-padded edges; output length = input length."""
    x = as_signal(x, 'x')
    if x.shape[0] == 0:
        return x.copy()
    padded = np.pad(x, fir.delay, mode='reflect') if x.shape[0] > 1 else np.full(
        2 * fir.delay + 1, x[0])
    return np.convolve(padded, fir.taps, mode='valid')


def conv1d(x: Any, kernel: Any, dilation: int = 1) -> np.ndarray:
    """Same-length dilated convolution (correlation form) with zero padding.

    y[n] = sum_j kernel[j] * x[n + (j - c) * dilation], c = (len(kernel) - 1) // 2
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if dilation < 1:
        raise ValueError('dilation must be positive, got {}'.format(dilation))
    center = (kernel.shape[0] - 1) // 2
    left = center * dilation
    right = (kernel.shape[0] - 1 - center) * dilation
    padded = np.concatenate([np.zeros(left), x, np.zeros(right)])
    out = np.zeros_like(x)
    for j, tap in enumerate(kernel):
        start = j * dilation
        out += tap * padded[start:start + x.shape[0]]
    return out


def amp_block(x: Any, dilations: Sequence[int], channel_kernels: Any) -> np.ndarray:
    """Residual snake/conv stack, x <- x + conv1d(snake(x), kernel_d, d) per dilation.

    channel_kernels is either one kernel shared by every dilation or a
    sequence with one kernel per dilation.
    """
    if not len(dilations):
        raise ValueError('amp_block needs at least one dilation')
    kernels = np.asarray(channel_kernels, dtype=np.float64)
    if kernels.ndim == 1:
        kernels = np.tile(kernels, (len(dilations), 1))
    if kernels.shape[0] != len(dilations):
        raise ValueError('got {} kernels for {} dilations'.format(kernels.shape[0], len(dilations)))

    y = as_signal(x, 'x')
    for dilation, kernel in zip(dilations, kernels):
        y = y + conv1d(snake(y), kernel, dilation)
    return y


def crop_center(y: Any, length: int) -> np.ndarray:
    """Central length samples of y."""
    y = np.asarray(y)
    if length > y.shape[0]:
        raise ValueError('cannot crop {} samples to {}'.format(y.shape[0], length))
    start = (y.shape[0] - length) // 2
    return y[start:start + length]


def upsample_pipeline(x: Any, spec: DeconvSpec, mode: str = 'twin_lowpass',
                      lowpass: Optional[FirFilter] = None) -> np.ndarray:
    """Upsamples x by spec.stride and crops to len(x) * stride.

    Parameters
    ----------
    x : array_like
        Low-rate signal
    spec : DeconvSpec
        Kernel and stride; the twin modes use spec.twin_mode (ones when it is none)
    mode : str
        'plain' (transposed convolution), 'twin' (twin deconvolution) or
        'twin_lowpass' (twin deconvolution followed by a low-pass at the
        low-rate Nyquist, 0.5 / stride)
    lowpass : FirFilter, optional
        Replaces the default 255-tap Kaiser low-pass
    """
    x = as_signal(x, 'x')
    if mode == 'plain':
        y = transposed_conv1d(x, spec)
    elif mode in ('twin', 'twin_lowpass'):
        if spec.twin_mode is TwinMode.NONE:
            spec = DeconvSpec(spec.kernel, spec.stride, TwinMode.ONES)
        y = twin_deconv(x, spec)
        if mode == 'twin_lowpass':
            y = apply_fir(y, lowpass or design_lowpass(0.5 / spec.stride, PIPELINE_TAPS, PIPELINE_BETA))
    else:
        raise ValueError('unknown upsampling mode {!r}'.format(mode))
    return crop_center(y, x.shape[0] * spec.stride)


def image_frequencies(f0: float, low_rate: float, stride: int, rate: float) -> List[float]:
    """Spectral images of a tone at f0 after upsampling from low_rate by stride.

    Returns m * low_rate +- f0 for m = 1 .. stride, folded into [0, rate / 2],
    deduplicated, sorted and without the fundamental itself.
    """
    images = set()
    for m in range(1, stride + 1):
        for freq in (m * low_rate - f0, m * low_rate + f0):
            folded = abs(freq) % rate
            folded = min(folded, rate - folded)
            if abs(folded - f0) > 1.0:
                images.add(round(folded, 6))
    return sorted(images)
