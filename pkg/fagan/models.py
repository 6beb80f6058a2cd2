"""Toy generator and discriminator topologies built from the manual-backprop layers"""
import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .audio import AudioBuffer
from .const import LayerKind, MR_RI_RESOLUTIONS, SAMPLE_RATE, TwinMode
from .exceptions import ShapeMismatchError, SignalTooShortError
from .layer_abc import LayerABC, LayerSpec
from .layers import AmpBlock, Conv1d, Conv2d, LeakyReLU, Tanh, TConv1d, TwinTConv1d
from .spectral import StftConfig, complex_stft, stft_backward
from .subband import (GROUP_NAMES, PqmfBank, design_pqmf, pqmf_analysis, pqmf_analysis_backward,
                      thirds_grouping, validate_grouping)
from .tensor import Tensor

logger = logging.getLogger(__name__)

UPSAMPLE_FACTOR = 16
STAGE_STRIDE = 4
STAGE_KERNEL = 9
CONV_KERNEL = 7

SignalLike = Union[AudioBuffer, np.ndarray]


def polyphase_split(x: np.ndarray, factor: int = UPSAMPLE_FACTOR) -> np.ndarray:
    """Rearranges x into factor channels, channel p holding x[p::factor].

    This is the generator's conditioning input: a factor-times lower rate
    representation that loses nothing.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] % factor:
        raise ShapeMismatchError('1-D length divisible by {}'.format(factor), x.shape)
    return np.ascontiguousarray(x.reshape(-1, factor).T)


class Network(object):
    """Ordered layer store with flat parameter access."""

    def __init__(self) -> None:
        self.layers = []  # type: List[LayerABC]

    def add(self, layer: LayerABC) -> LayerABC:
        self.layers.append(layer)
        return layer

    def parameters(self) -> Dict[str, Tensor]:
        params = OrderedDict()  # type: Dict[str, Tensor]
        for layer in self.layers:
            params.update(layer.parameters())
        return params

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters().values())

    def get_state(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter array keyed by parameter name."""
        return OrderedDict((name, t.data.copy()) for name, t in self.parameters().items())

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrites parameters from state; names and shapes must match exactly."""
        params = self.parameters()
        missing = set(params) ^ set(state)
        if missing:
            raise KeyError('parameter names differ: {}'.format(sorted(missing)))
        for name, tensor in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.data.shape:
                raise ShapeMismatchError(tensor.data.shape, value.shape)
            tensor.data[...] = value


class ToyGenerator(Network):
    """stem conv, AMP block, two x4 upsampling stages, AMP block, output conv, tanh.

    Parameters
    ----------
    widths : (int, int, int)
        Channel widths after the stem and after each upsampling stage
    dilations : sequence of int
        Dilations of both AMP blocks
    upsampler : str
        'twin' (twin transposed convolution) or 'plain' (transposed convolution)
    twin_mode : TwinMode or str
        Denominator of the twin stages
    seed : int
        Base seed of the weight initialization
    """

    def __init__(self, widths: Sequence[int] = (32, 16, 8), dilations: Sequence[int] = (1, 3, 5),
                 upsampler: str = 'twin', twin_mode: Union[TwinMode, str] = TwinMode.ONES,
                 seed: int = 0) -> None:
        super().__init__()
        if upsampler not in ('twin', 'plain'):
            raise ValueError("upsampler must be 'twin' or 'plain', got {!r}".format(upsampler))
        if len(widths) != 3:
            raise ValueError('widths needs three entries, got {}'.format(widths))
        self.widths = tuple(widths)
        self.upsampler = upsampler
        self.twin_mode = TwinMode(twin_mode)
        c0, c1, c2 = self.widths

        self.add(Conv1d(LayerSpec(LayerKind.CONV1D, UPSAMPLE_FACTOR, c0, CONV_KERNEL, init_seed=seed),
                        'stem'))
        self.add(AmpBlock(c0, dilations=dilations, init_seed=seed + 10, name='amp0'))
        for i, (cin, cout) in enumerate(((c0, c1), (c1, c2))):
            self.add(self._stage(cin, cout, seed + 20 + i, 'up{}'.format(i)))
        self.add(AmpBlock(c2, dilations=dilations, init_seed=seed + 30, name='amp1'))
        self.add(Conv1d(LayerSpec(LayerKind.CONV1D, c2, 1, CONV_KERNEL, init_seed=seed + 40), 'out'))
        self.add(Tanh(name='tanh'))
        logger.debug('built %r with %d parameters', self, self.num_parameters())

    def _stage(self, cin: int, cout: int, seed: int, name: str) -> LayerABC:
        if self.upsampler == 'plain':
            spec = LayerSpec(LayerKind.TCONV1D, cin, cout, STAGE_KERNEL, STAGE_STRIDE,
                             init_seed=seed, crop=True)
            return TConv1d(spec, name)
        spec = LayerSpec(LayerKind.TWIN_TCONV1D, cin, cout, STAGE_KERNEL, STAGE_STRIDE,
                         init_seed=seed, twin_mode=self.twin_mode, crop=True)
        return TwinTConv1d(spec, name)

    def __repr__(self) -> str:
        return '<ToyGenerator widths={} upsampler={}>'.format(self.widths, self.upsampler)

    @property
    def upsample_factor(self) -> int:
        return STAGE_STRIDE ** 2

    def forward(self, x: Tensor) -> np.ndarray:
        """Maps a 16-channel conditioning tensor (16 x frames) to 16 * frames samples."""
        y = x
        for layer in self.layers:
            y = layer.forward(y)
        return y.data[0]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        """Backpropagates d(loss)/d(output samples); returns d(loss)/d(conditioning)."""
        g = np.asarray(grad, dtype=np.float64)[None, :]
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def generate(self, x: SignalLike) -> np.ndarray:
        """Forward pass on the polyphase split of a full-rate signal."""
        samples = x.samples if isinstance(x, AudioBuffer) else x
        return self.forward(Tensor(polyphase_split(samples)))


class DiscriminatorOutput(object):
    """Score map plus the ordered intermediate feature maps of one sub-discriminator."""
    __slots__ = ('name', 'score', 'features')

    def __init__(self, name: str, score: np.ndarray, features: List[np.ndarray]) -> None:
        self.name = name
        self.score = score
        self.features = features

    def __repr__(self) -> str:
        return '<DiscriminatorOutput {} score={}>'.format(self.name, self.score.shape)


class _ConvStack(Network):
    """Convolutions interleaved with leaky ReLUs; the last convolution yields the score."""

    def __init__(self, name: str) -> None:
        super().__init__()
        self.name = name
        self.convs = []  # type: List[LayerABC]
        self.acts = []  # type: List[LeakyReLU]

    def stack(self, conv: LayerABC) -> None:
        act = LeakyReLU(name='{}.act{}'.format(self.name, len(self.acts)))
        self.convs.append(self.add(conv))
        self.acts.append(act)
        self.add(act)

    def run(self, x: Tensor) -> DiscriminatorOutput:
        features = []
        y = x
        for conv, act in zip(self.convs[:-1], self.acts):
            y = act.forward(conv.forward(y))
            features.append(y.data)
        score = self.convs[-1].forward(y).data
        return DiscriminatorOutput(self.name, score, features)

    def run_backward(self, grad_score: np.ndarray, grad_features: Sequence[np.ndarray]) -> np.ndarray:
        g = self.convs[-1].backward(grad_score)
        for i in reversed(range(len(self.acts))):
            if grad_features:
                g = g + grad_features[i]
            g = self.convs[i].backward(self.acts[i].backward(g))
        return g


class GlobalDiscriminator(_ConvStack):
    """2-D conv stack over the stacked real and imaginary STFT planes at one resolution.

    Input planes are 2 x frames x bins; the bin axis is downsampled by 2
    twice.
    """

    def __init__(self, cfg: StftConfig, channels: int = 8, seed: int = 0) -> None:
        super().__init__('global_{}'.format(cfg.window_size))
        self.cfg = cfg
        self._n_samples = 0
        plan = (
            (2, channels, (3, 9), (1, 1)),
            (channels, channels, (3, 9), (1, 2)),
            (channels, channels, (3, 9), (1, 2)),
            (channels, channels, (3, 3), (1, 1)),
            (channels, 1, (3, 3), (1, 1)),
        )
        for i, (cin, cout, kernel, stride) in enumerate(plan):
            spec = LayerSpec(LayerKind.CONV2D, cin, cout, kernel, stride, init_seed=seed + i)
            conv = Conv2d(spec, '{}.conv{}'.format(self.name, i))
            if i < len(plan) - 1:
                self.stack(conv)
            else:
                self.convs.append(self.add(conv))

    def score_shape(self, n_samples: int) -> Tuple[int, ...]:
        height, width = self.cfg.n_frames(n_samples), self.cfg.n_bins
        for conv in self.convs:
            height, width = conv.output_shape(height, width)  # type: ignore
        return 1, height, width

    def forward(self, samples: np.ndarray) -> DiscriminatorOutput:
        spec = complex_stft(samples, self.cfg)
        self._n_samples = samples.shape[0]
        return self.run(Tensor(np.stack([spec.real, spec.imag])))

    def backward(self, grad_score: np.ndarray, grad_features: Sequence[np.ndarray] = ()) -> np.ndarray:
        """Returns d(loss)/d(samples) of the last forward."""
        g = self.run_backward(grad_score, grad_features)
        return stft_backward(g[0], g[1], self._n_samples, self.cfg)


class LocalDiscriminator(_ConvStack):
    """Dilated 1-D conv stack over one group of PQMF sub-bands."""

    def __init__(self, group: str, bands: int, channels: int = 16, seed: int = 0) -> None:
        super().__init__('local_{}'.format(group))
        plan = ((bands, channels, 1), (channels, channels, 2), (channels, channels, 3), (channels, 1, 1))
        for i, (cin, cout, dilation) in enumerate(plan):
            spec = LayerSpec(LayerKind.CONV1D, cin, cout, 3, 1, dilation, init_seed=seed + i)
            conv = Conv1d(spec, '{}.conv{}'.format(self.name, i))
            if i < len(plan) - 1:
                self.stack(conv)
            else:
                self.convs.append(self.add(conv))

    def score_shape(self, n_frames: int) -> Tuple[int, ...]:
        for conv in self.convs:
            n_frames = conv.output_length(n_frames)  # type: ignore
        return 1, n_frames

    def forward(self, bands: np.ndarray) -> DiscriminatorOutput:
        return self.run(Tensor(bands))

    def backward(self, grad_score: np.ndarray, grad_features: Sequence[np.ndarray] = ()) -> np.ndarray:
        """Returns d(loss)/d(bands) of the last forward."""
        return self.run_backward(grad_score, grad_features)


class DiscriminatorBank(object):
    """Three global (STFT) and three local (PQMF group) sub-discriminators.

    Outputs are ordered global resolutions first (longest window first),
    then the low, mid and high sub-band groups.
    """

    def __init__(self, resolutions: Optional[Sequence[StftConfig]] = None,
                 pqmf: Optional[PqmfBank] = None,
                 grouping: Optional[Sequence[Tuple[int, int]]] = None,
                 global_channels: int = 8, local_channels: int = 16, seed: int = 0,
                 sample_rate: int = SAMPLE_RATE) -> None:
        self.sample_rate = sample_rate
        if resolutions is None:
            resolutions = [StftConfig(*r) for r in MR_RI_RESOLUTIONS]
        self.pqmf = pqmf or design_pqmf()
        if grouping is None:
            grouping = thirds_grouping(self.pqmf.num_bands)
        validate_grouping(grouping, self.pqmf.num_bands)
        self.grouping = tuple(tuple(g) for g in grouping)
        self.global_discs = [GlobalDiscriminator(cfg, global_channels, seed + 100 * i)
                             for i, cfg in enumerate(resolutions)]
        self.local_discs = [LocalDiscriminator(name, stop - start, local_channels, seed + 1000 + 100 * i)
                            for i, (name, (start, stop)) in enumerate(zip(GROUP_NAMES, self.grouping))]
        self._n_samples = 0

    def __repr__(self) -> str:
        return '<DiscriminatorBank {}>'.format([d.name for d in self.discriminators])

    @property
    def discriminators(self) -> List[_ConvStack]:
        return list(self.global_discs) + list(self.local_discs)

    @property
    def min_length(self) -> int:
        return max(d.cfg.window_size for d in self.global_discs)

    def parameters(self) -> Dict[str, Tensor]:
        params = OrderedDict()  # type: Dict[str, Tensor]
        for disc in self.discriminators:
            params.update(disc.parameters())
        return params

    def zero_grad(self) -> None:
        for disc in self.discriminators:
            disc.zero_grad()

    def get_state(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, t.data.copy()) for name, t in self.parameters().items())

    def score_shapes(self, n_samples: int) -> List[Tuple[int, ...]]:
        frames = -(-n_samples // self.pqmf.num_bands)
        return ([d.score_shape(n_samples) for d in self.global_discs]
                + [d.score_shape(frames) for d in self.local_discs])

    def forward(self, samples: np.ndarray) -> List[DiscriminatorOutput]:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape[0] < self.min_length:
            raise SignalTooShortError(self.min_length, samples.shape[0])
        self._n_samples = samples.shape[0]
        outputs = [d.forward(samples) for d in self.global_discs]
        bands = pqmf_analysis(AudioBuffer(samples, self.sample_rate), self.pqmf).bands
        for disc, (start, stop) in zip(self.local_discs, self.grouping):
            outputs.append(disc.forward(bands[start:stop]))
        return outputs

    def backward(self, grads: Sequence[Tuple[np.ndarray, Sequence[np.ndarray]]]) -> np.ndarray:
        """Backpropagates (score grad, feature grads) per sub-discriminator, in
        output order; returns d(loss)/d(samples) of the last forward."""
        if len(grads) != len(self.discriminators):
            raise ShapeMismatchError(len(self.discriminators), len(grads))
        n_global = len(self.global_discs)
        grad = np.zeros(self._n_samples)
        for disc, (g_score, g_feats) in zip(self.global_discs, grads[:n_global]):
            grad += disc.backward(g_score, g_feats)
        band_grad = np.zeros((self.pqmf.num_bands, -(-self._n_samples // self.pqmf.num_bands)))
        for disc, (start, stop), (g_score, g_feats) in zip(self.local_discs, self.grouping, grads[n_global:]):
            band_grad[start:stop] += disc.backward(g_score, g_feats)
        return grad + pqmf_analysis_backward(band_grad, self.pqmf, self._n_samples)


def discriminate(bank: DiscriminatorBank, x: SignalLike) -> List[DiscriminatorOutput]:
    """Scores x with every sub-discriminator of bank."""
    samples = x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)
    return bank.forward(samples)
