"""Training objectives: RI / multi-resolution RI, mel, LSGAN and feature matching"""
import math
import warnings
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .audio import AudioBuffer
from .const import (LAMBDA_G, LAMBDA_RI, LAMBDA_MEL, LAMBDA_FM, MR_RI_RESOLUTIONS, N_MELS,
                    MEL_FMIN, SAMPLE_RATE)
from .exceptions import ConfigError, ShapeMismatchError, SilentReferenceWarning
from .spectral import StftConfig, complex_stft, log_mel, mel_filterbank

SignalLike = Union[AudioBuffer, np.ndarray]


class RiLossBreakdown(object):
    """The four addends of the real/imaginary loss.

    spectral_convergence is NaN when the reference spectrogram is silent; the
    total then only sums the three L1 terms.
    """
    __slots__ = ('real_l1', 'imag_l1', 'magnitude_l1', 'spectral_convergence')

    def __init__(self, real_l1: float, imag_l1: float, magnitude_l1: float,
                 spectral_convergence: float) -> None:
        self.real_l1 = real_l1
        self.imag_l1 = imag_l1
        self.magnitude_l1 = magnitude_l1
        self.spectral_convergence = spectral_convergence

    def __repr__(self) -> str:
        return ('<RiLossBreakdown real_l1={:.6g} imag_l1={:.6g} magnitude_l1={:.6g} '
                'spectral_convergence={:.6g} total={:.6g}>').format(
                    self.real_l1, self.imag_l1, self.magnitude_l1, self.spectral_convergence, self.total)

    @property
    def silent_reference(self) -> bool:
        return math.isnan(self.spectral_convergence)

    @property
    def total(self) -> float:
        total = self.real_l1 + self.imag_l1 + self.magnitude_l1
        if not self.silent_reference:
            total += self.spectral_convergence
        return total

    def as_dict(self) -> Dict[str, float]:
        return {'real_l1': self.real_l1, 'imag_l1': self.imag_l1, 'magnitude_l1': self.magnitude_l1,
                'spectral_convergence': self.spectral_convergence, 'total': self.total}


class MultiResConfig(object):
    """STFT resolutions of the multi-resolution RI loss."""
    __slots__ = ('resolutions',)

    def __init__(self, resolutions: Optional[Sequence[StftConfig]] = None) -> None:
        if resolutions is None:
            resolutions = [StftConfig(fft, window, hop) for fft, window, hop in MR_RI_RESOLUTIONS]
        resolutions = list(resolutions)
        if not resolutions:
            raise ConfigError('resolutions', 'need at least one resolution')
        windows = [cfg.window_size for cfg in resolutions]
        if len(set(windows)) != len(windows):
            raise ConfigError('resolutions', 'window sizes must be distinct, got {}'.format(windows))
        self.resolutions = resolutions

    def __repr__(self) -> str:
        return '<MultiResConfig {}>'.format(self.resolutions)

    def __len__(self) -> int:
        return len(self.resolutions)

    @property
    def longest_window(self) -> int:
        return max(cfg.window_size for cfg in self.resolutions)


class LossWeights(object):
    """Scalar weights of the generator objective."""
    __slots__ = ('lambda_g', 'lambda_ri', 'lambda_mel', 'lambda_fm')

    def __init__(self, lambda_g: float = LAMBDA_G, lambda_ri: float = LAMBDA_RI,
                 lambda_mel: float = LAMBDA_MEL, lambda_fm: float = LAMBDA_FM) -> None:
        for name, value in (('lambda_g', lambda_g), ('lambda_ri', lambda_ri),
                            ('lambda_mel', lambda_mel), ('lambda_fm', lambda_fm)):
            if not math.isfinite(value) or value < 0:
                raise ConfigError('loss.' + name, 'weights must be finite and >= 0, got {}'.format(value))
        self.lambda_g = float(lambda_g)
        self.lambda_ri = float(lambda_ri)
        self.lambda_mel = float(lambda_mel)
        self.lambda_fm = float(lambda_fm)

    def __repr__(self) -> str:
        return '<LossWeights g={} ri={} mel={} fm={}>'.format(
            self.lambda_g, self.lambda_ri, self.lambda_mel, self.lambda_fm)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, LossWeights):
            return NotImplemented
        return (self.lambda_g, self.lambda_ri, self.lambda_mel, self.lambda_fm) == (
            other.lambda_g, other.lambda_ri, other.lambda_mel, other.lambda_fm)


class LossReport(object):
    """Weighted generator objective with its per-term values."""
    __slots__ = ('adv_g', 'mr_ri', 'mel', 'fm', 'weights')

    def __init__(self, adv_g: float, mr_ri: float, mel: float, fm: float, weights: LossWeights) -> None:
        self.adv_g = adv_g
        self.mr_ri = mr_ri
        self.mel = mel
        self.fm = fm
        self.weights = weights

    def __repr__(self) -> str:
        return '<LossReport total={:.6g} adv_g={:.6g} mr_ri={:.6g} mel={:.6g} fm={:.6g}>'.format(
            self.total, self.adv_g, self.mr_ri, self.mel, self.fm)

    @property
    def total(self) -> float:
        return total_generator_loss(self.adv_g, self.mr_ri, self.mel, self.fm, self.weights)

    def as_dict(self) -> Dict[str, float]:
        return {'total': self.total, 'adv_g': self.adv_g, 'mr_ri': self.mr_ri, 'mel': self.mel, 'fm': self.fm}


def _pair(x: SignalLike, xhat: SignalLike) -> Tuple[np.ndarray, np.ndarray, int]:
    rate = x.sample_rate if isinstance(x, AudioBuffer) else SAMPLE_RATE
    a = x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)
    b = xhat.samples if isinstance(xhat, AudioBuffer) else np.asarray(xhat, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatchError(a.shape, b.shape)
    return a, b, rate


def ri_loss(x: SignalLike, xhat: SignalLike, cfg: Optional[StftConfig] = None) -> RiLossBreakdown:
    """Real/imaginary spectral loss of xhat against the reference x.

    L1 terms are means over all time-frequency cells; the spectral
    convergence term is the complex Frobenius distance relative to the
    reference. A silent reference emits SilentReferenceWarning and leaves
    spectral_convergence undefined (NaN).
    """
    cfg = cfg or StftConfig()
    a, b, _ = _pair(x, xhat)
    ref = complex_stft(a, cfg)
    gen = complex_stft(b, cfg)

    real_l1 = float(np.mean(np.abs(gen.real - ref.real)))
    imag_l1 = float(np.mean(np.abs(gen.imag - ref.imag)))
    magnitude_l1 = float(np.mean(np.abs(np.abs(gen) - np.abs(ref))))

    norm = float(np.linalg.norm(ref))
    if norm == 0.0:
        warnings.warn('reference spectrogram is silent, spectral convergence is undefined',
                      SilentReferenceWarning)
        convergence = math.nan
    else:
        convergence = float(np.linalg.norm(ref - gen)) / norm
    return RiLossBreakdown(real_l1, imag_l1, magnitude_l1, convergence)


def mr_ri_loss(x: SignalLike, xhat: SignalLike,
               mrc: Optional[MultiResConfig] = None) -> Tuple[float, List[RiLossBreakdown]]:
    """Mean of the RI loss totals over the configured resolutions, plus the breakdowns."""
    mrc = mrc or MultiResConfig()
    breakdowns = [ri_loss(x, xhat, cfg) for cfg in mrc.resolutions]
    return sum(b.total for b in breakdowns) / len(breakdowns), breakdowns


def mel_loss(x: SignalLike, xhat: SignalLike, cfg: Optional[StftConfig] = None,
             n_mels: int = N_MELS, fmin: float = MEL_FMIN, fmax: Optional[float] = None) -> float:
    """Mean absolute difference of the log-mel spectrograms."""
    cfg = cfg or StftConfig()
    a, b, rate = _pair(x, xhat)
    filterbank = mel_filterbank(rate, cfg.fft_size, n_mels, fmin, fmax)
    return float(np.mean(np.abs(log_mel(b, cfg, filterbank) - log_mel(a, cfg, filterbank))))


def adversarial_losses(real_scores: Sequence[Any], fake_scores: Sequence[Any]) -> Tuple[float, float]:
    """Least-squares GAN losses summed over discriminators.

    Returns (d_loss, g_loss) with
    d_loss = sum_n mean (1 - D_n(x))^2 + mean D_n(y)^2 and
    g_loss = sum_n mean (1 - D_n(y))^2.
    """
    if not len(real_scores) or len(real_scores) != len(fake_scores):
        raise ValueError('need the same, non-zero number of real and fake score maps, got {} and {}'.format(
            len(real_scores), len(fake_scores)))
    d_loss = 0.0
    g_loss = 0.0
    for real, fake in zip(real_scores, fake_scores):
        real = np.asarray(real, dtype=np.float64)
        fake = np.asarray(fake, dtype=np.float64)
        d_loss += float(np.mean((1.0 - real) ** 2) + np.mean(fake ** 2))
        g_loss += float(np.mean((1.0 - fake) ** 2))
    return d_loss, g_loss


def feature_matching_loss(real_feats: Sequence[Sequence[Any]], fake_feats: Sequence[Sequence[Any]]) -> float:
    """L1 feature matching: per discriminator, the mean over layers of the mean
    absolute difference; summed over discriminators."""
    if len(real_feats) != len(fake_feats):
        raise ShapeMismatchError(len(real_feats), len(fake_feats))
    total = 0.0
    for real_layers, fake_layers in zip(real_feats, fake_feats):
        if len(real_layers) != len(fake_layers):
            raise ShapeMismatchError(len(real_layers), len(fake_layers))
        if not len(real_layers):
            continue
        diffs = []
        for real, fake in zip(real_layers, fake_layers):
            real = np.asarray(real, dtype=np.float64)
            fake = np.asarray(fake, dtype=np.float64)
            if real.shape != fake.shape:
                raise ShapeMismatchError(real.shape, fake.shape)
            diffs.append(float(np.mean(np.abs(real - fake))))
        total += sum(diffs) / len(diffs)
    return total


def total_generator_loss(adv_g: float, mr_ri: float, mel: float, fm: float,
                         w: Optional[LossWeights] = None) -> float:
    """lambda_g * adv_g + lambda_ri * mr_ri + lambda_mel * mel + lambda_fm * fm"""
    w = w or LossWeights()
    return w.lambda_g * adv_g + w.lambda_ri * mr_ri + w.lambda_mel * mel + w.lambda_fm * fm


def total_discriminator_loss(adv_d: float) -> float:
    return adv_d


def generator_loss_report(adv_g: float, mr_ri: float, mel: float, fm: float,
                          w: Optional[LossWeights] = None) -> LossReport:
    return LossReport(adv_g, mr_ri, mel, fm, w or LossWeights())
