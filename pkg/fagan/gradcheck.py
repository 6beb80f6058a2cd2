"""Finite-difference verification of the analytic gradients"""
import abc
import logging
from collections import OrderedDict
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .const import GRAD_EPS, LayerKind, TwinMode
from .heads import mel_head, ri_head
from .layer_abc import LayerABC, LayerSpec
from .layers import AmpBlock, build_layer
from .models import ToyGenerator
from .spectral import StftConfig, complex_stft, log_mel, mel_filterbank
from .tensor import Tensor
from .utils import make_rng

logger = logging.getLogger(__name__)


class Objective(abc.ABC):
    """A scalar function of some Tensors that can fill their grad buffers."""

    @abc.abstractmethod
    def tensors(self) -> Dict[str, Tensor]:
        pass

    @abc.abstractmethod
    def loss(self) -> float:
        pass

    @abc.abstractmethod
    def backward(self) -> None:
        """Runs loss() and accumulates its gradient into every tensor's grad."""


class GradCheckResult(object):
    """Largest relative error overall and per checked tensor."""

    def __init__(self, name: str, errors: Dict[str, float]) -> None:
        self.name = name
        self.errors = errors

    def __repr__(self) -> str:
        return '<GradCheckResult {} max_error={:.3g}>'.format(self.name, self.max_error)

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1e-8, max |a| + max |n|) over one tensor."""
    scale = float(np.max(np.abs(analytic)) + np.max(np.abs(numeric))) if analytic.size else 0.0
    diff = float(np.max(np.abs(analytic - numeric))) if analytic.size else 0.0
    return diff / max(1e-8, scale)


def grad_check(objective: Objective, eps: float = GRAD_EPS, name: str = '') -> GradCheckResult:
    """Compares the analytic gradient of objective with central differences
    for every cell of every tensor it exposes."""
    tensors = objective.tensors()
    for tensor in tensors.values():
        tensor.zero_grad()
    objective.backward()
    analytic = OrderedDict((key, t.grad.copy()) for key, t in tensors.items())

    errors = OrderedDict()  # type: Dict[str, float]
    for key, tensor in tensors.items():
        numeric = np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        for i in range(flat.shape[0]):
            saved = flat[i]
            flat[i] = saved + eps
            upper = objective.loss()
            flat[i] = saved - eps
            lower = objective.loss()
            flat[i] = saved
            numeric.reshape(-1)[i] = (upper - lower) / (2.0 * eps)
        errors[key] = relative_error(analytic[key], numeric)
    result = GradCheckResult(name, errors)
    logger.debug('grad check %s: %.3g', name, result.max_error)
    return result


class LayerObjective(Objective):
    """sum(G * layer(x)) for a fixed seeded G; checks parameters and input."""

    def __init__(self, layer: LayerABC, x: Tensor, seed: int = 0) -> None:
        self.layer = layer
        self.x = x
        self.weights = make_rng(seed).standard_normal(layer.forward(x).shape)

    def tensors(self) -> Dict[str, Tensor]:
        tensors = OrderedDict(self.layer.parameters())  # type: Dict[str, Tensor]
        tensors['input'] = self.x
        return tensors

    def loss(self) -> float:
        return float(np.sum(self.weights * self.layer.forward(self.x).data))

    def backward(self) -> None:
        self.layer.forward(self.x)
        self.layer.backward(self.weights)


def kink_free_reference(gen: np.ndarray, seed: int, spread: float = 0.2) -> np.ndarray:
    """A complex reference near gen whose real, imaginary and magnitude
    differences to gen all stay clear of zero, so L1 terms are smooth
    around gen."""
    rng = make_rng(seed)
    scale = max(float(np.max(np.abs(gen))), 1e-3)
    ref = gen.copy()
    todo = np.flatnonzero(np.ones(gen.size, dtype=bool))
    flat_gen = gen.reshape(-1)
    flat_ref = ref.reshape(-1)
    while todo.size:
        offsets = rng.uniform(0.5, 1.5, (2, todo.size)) * spread * scale
        offsets *= rng.choice([-1.0, 1.0], (2, todo.size))
        candidate = flat_gen[todo] + offsets[0] + 1j * offsets[1]
        ok = np.abs(np.abs(candidate) - np.abs(flat_gen[todo])) > 0.25 * spread * scale
        flat_ref[todo[ok]] = candidate[ok]
        todo = todo[~ok]
    return ref


class GeneratorRiObjective(Objective):
    """RI head on the output of a ToyGenerator; checks every generator
    parameter and the conditioning input."""

    def __init__(self, generator: ToyGenerator, x: Tensor, cfg: StftConfig, seed: int = 0) -> None:
        self.generator = generator
        self.x = x
        self.cfg = cfg
        self.reference = kink_free_reference(complex_stft(generator.forward(x), cfg), seed)

    def tensors(self) -> Dict[str, Tensor]:
        tensors = OrderedDict(self.generator.parameters())  # type: Dict[str, Tensor]
        tensors['input'] = self.x
        return tensors

    def loss(self) -> float:
        return ri_head(self.reference, self.generator.forward(self.x), self.cfg)[0]

    def backward(self) -> None:
        _, grad = ri_head(self.reference, self.generator.forward(self.x), self.cfg)
        self.generator.backward(grad)


class SignalObjective(Objective):
    """A spectral head applied directly to a signal tensor."""

    def __init__(self, head: str, y: np.ndarray, cfg: StftConfig, sample_rate: int = 22050,
                 n_mels: int = 8, seed: int = 0) -> None:
        if head not in ('ri', 'mel'):
            raise ValueError("head must be 'ri' or 'mel', got {!r}".format(head))
        self.head = head
        self.y = Tensor(y)
        self.cfg = cfg
        self.filterbank = mel_filterbank(sample_rate, cfg.fft_size, n_mels)
        rng = make_rng(seed)
        if head == 'ri':
            self.reference = kink_free_reference(complex_stft(y, cfg), seed)
        else:
            current = log_mel(y, cfg, self.filterbank)
            offsets = rng.uniform(0.1, 0.3, current.shape) * rng.choice([-1.0, 1.0], current.shape)
            self.reference = current + offsets

    def tensors(self) -> Dict[str, Tensor]:
        return OrderedDict([('signal', self.y)])

    def _run(self) -> Tuple[float, np.ndarray]:
        if self.head == 'ri':
            return ri_head(self.reference, self.y.data, self.cfg)
        return mel_head(self.reference, self.y.data, self.cfg, self.filterbank)

    def loss(self) -> float:
        return self._run()[0]

    def backward(self) -> None:
        self.y.accumulate(self._run()[1])


def _away_from_zero(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * (0.1 + np.abs(values))


def layer_cases(seed: int) -> List[Tuple[str, LayerABC, Tensor]]:
    """(name, layer, input) per layer kind at sizes <= 32."""
    rng = make_rng(seed)
    cases = [
        ('conv1d', build_layer(LayerSpec(LayerKind.CONV1D, 3, 4, 5, dilation=2, init_seed=seed)),
         rng.standard_normal((3, 20))),
        ('tconv1d', build_layer(LayerSpec(LayerKind.TCONV1D, 3, 2, 6, 3, init_seed=seed)),
         rng.standard_normal((3, 8))),
        ('twin_tconv1d', build_layer(LayerSpec(LayerKind.TWIN_TCONV1D, 3, 2, 9, 4, init_seed=seed,
                                               twin_mode=TwinMode.ONES, crop=True)),
         rng.standard_normal((3, 6))),
        ('twin_tconv1d[abs_weight]', build_layer(LayerSpec(LayerKind.TWIN_TCONV1D, 3, 2, 6, 2, init_seed=seed,
                                                           twin_mode=TwinMode.ABS_WEIGHT)),
         rng.standard_normal((3, 7))),
        ('dense', build_layer(LayerSpec(LayerKind.DENSE, 6, 5, init_seed=seed)),
         rng.standard_normal((6, 4))),
        ('snake', build_layer(LayerSpec(LayerKind.SNAKE)), 3.0 * rng.standard_normal((4, 8))),
        ('leaky_relu', build_layer(LayerSpec(LayerKind.LEAKY_RELU)),
         _away_from_zero(rng.standard_normal((4, 8)))),
        ('tanh', build_layer(LayerSpec(LayerKind.TANH)), rng.standard_normal((4, 8))),
        ('conv2d', build_layer(LayerSpec(LayerKind.CONV2D, 2, 3, (3, 5), (1, 2), init_seed=seed)),
         rng.standard_normal((2, 5, 11))),
        ('amp_block', AmpBlock(3, 3, (1, 3), init_seed=seed), rng.standard_normal((3, 16))),
    ]
    return [(name, layer, Tensor(x)) for name, layer, x in cases]


def run_grad_suite(seeds: Iterable[int] = (0,), eps: float = GRAD_EPS,
                   include_generator: bool = True) -> List[GradCheckResult]:
    """Checks every layer kind, the spectral heads and the toy generator
    end to end with the RI head.

    Returns one result per case holding the worst error over all seeds.
    """
    worst = OrderedDict()  # type: Dict[str, Dict[str, float]]

    def record(result: GradCheckResult) -> None:
        merged = worst.setdefault(result.name, OrderedDict())
        for key, value in result.errors.items():
            merged[key] = max(merged.get(key, 0.0), value)

    for seed in seeds:
        for name, layer, x in layer_cases(seed):
            record(grad_check(LayerObjective(layer, x, seed), eps, name))
        rng = make_rng(seed + 1)
        record(grad_check(SignalObjective('ri', rng.standard_normal(96), StftConfig(32, 32, 8), seed=seed),
                          eps, 'ri_head'))
        record(grad_check(SignalObjective('mel', rng.standard_normal(128), StftConfig(64, 64, 16), seed=seed),
                          eps, 'mel_head'))
        if include_generator:
            record(grad_check(generator_objective(seed), eps, 'generator+ri_head'))
    return [GradCheckResult(name, errors) for name, errors in worst.items()]


def generator_objective(seed: int = 0, n_samples: int = 64) -> GeneratorRiObjective:
    """Reduced-width toy generator on an n_samples output with a 32-point RI head."""
    generator = ToyGenerator(widths=(8, 4, 4), seed=seed)
    x = Tensor(make_rng(seed + 2).standard_normal((16, n_samples // 16)))
    return GeneratorRiObjective(generator, x, StftConfig(32, 32, 8), seed)


def max_error(results: Iterable[GradCheckResult], kind: Optional[str] = None) -> float:
    values = [r.max_error for r in results if kind is None or r.name == kind]
    return max(values) if values else 0.0
