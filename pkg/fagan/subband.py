"""Pseudo-QMF analysis/synthesis bank and the low/mid/high band grouping"""
import logging
import math
import warnings
from functools import lru_cache
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.signal.windows import kaiser

from .audio import AudioBuffer
from .const import PQMF_BANDS, PQMF_TAPS, PQMF_BETA, PQMF_GROUPS
from .exceptions import FilterDesignWarning, ShapeMismatchError
from .utils import check_finite, make_rng, power_db

logger = logging.getLogger(__name__)

GROUP_NAMES = ('low', 'mid', 'high')

# cutoff scan, as multiples of 1 / (2K) of the Nyquist frequency
_SCAN_COARSE = np.linspace(0.6, 1.6, 26)
_SCAN_FINE_STEPS = 21
_NOISE_LENGTH = 4096
_NOISE_SEED = 0


class PqmfBank(object):
    """Cosine-modulated filter bank built around one low-pass prototype.

    Attributes
    ----------
    num_bands : int
        Number of bands K
    prototype : ndarray
        Symmetric low-pass prototype of taps_per_filter taps, unit DC gain
    cutoff : float
        Prototype cutoff as a fraction of the Nyquist frequency
    analysis_filters, synthesis_filters : ndarray
        K x taps_per_filter arrays; synthesis filters are the time-reversed
        analysis filters scaled by K
    """
    __slots__ = ('num_bands', 'prototype', 'cutoff', 'beta', 'analysis_filters', 'synthesis_filters')

    def __init__(self, num_bands: int, prototype: np.ndarray, cutoff: float, beta: float) -> None:
        self.num_bands = num_bands
        self.prototype = prototype
        self.cutoff = cutoff
        self.beta = beta
        self.analysis_filters = _modulate(prototype, num_bands)
        self.synthesis_filters = num_bands * self.analysis_filters[:, ::-1]

    def __repr__(self) -> str:
        return '<PqmfBank K={} taps={} cutoff={:.5f}>'.format(
            self.num_bands, self.taps_per_filter, self.cutoff)

    @property
    def taps_per_filter(self) -> int:
        return int(self.prototype.shape[0])

    @property
    def delay(self) -> int:
        """Group delay of an analysis/synthesis round trip (compensated internally)."""
        return self.taps_per_filter - 1


class SubbandSignals(object):
    """Decimated band signals, K x ceil(source_len / K)."""
    __slots__ = ('bands', 'source_len', 'sample_rate', 'decimation', 'first_band')

    def __init__(self, bands: Any, source_len: int, sample_rate: int,
                 decimation: Optional[int] = None, first_band: int = 0) -> None:
        bands = np.atleast_2d(np.asarray(bands, dtype=np.float64))
        check_finite(bands, 'sub-band signals')
        self.bands = bands
        self.source_len = int(source_len)
        self.sample_rate = sample_rate
        self.decimation = int(decimation or bands.shape[0])
        # index of bands[0] within the full bank, non-zero for grouped subsets
        self.first_band = first_band

    def __repr__(self) -> str:
        return '<SubbandSignals bands={} length={} source_len={}>'.format(
            self.bands.shape[0], self.bands.shape[1], self.source_len)

    def __len__(self) -> int:
        return int(self.bands.shape[0])


def _prototype(taps: int, cutoff: float, beta: float) -> np.ndarray:
    n = np.arange(taps) - (taps - 1) / 2.0
    p = cutoff * np.sinc(cutoff * n) * kaiser(taps, beta, sym=True)
    return p / p.sum()


def _modulate(prototype: np.ndarray, num_bands: int) -> np.ndarray:
    taps = prototype.shape[0]
    n = np.arange(taps) - (taps - 1) / 2.0
    k = np.arange(num_bands)[:, None]
    phase = (2 * k + 1) * (math.pi / (2 * num_bands)) * n[None, :] + ((-1.0) ** k) * math.pi / 4
    return 2.0 * prototype[None, :] * np.cos(phase)


def _analyze(samples: np.ndarray, bank: PqmfBank) -> np.ndarray:
    K = bank.num_bands
    n_pad = -(-samples.shape[0] // K) * K
    padded = np.concatenate([samples, np.zeros(n_pad - samples.shape[0])])
    start = (bank.taps_per_filter - 1) // 2
    return np.stack([np.convolve(padded, h)[start:start + n_pad:K] for h in bank.analysis_filters])


def _synthesize(bands: np.ndarray, bank: PqmfBank) -> np.ndarray:
    K = bank.num_bands
    n_pad = bands.shape[1] * K
    start = bank.taps_per_filter - 1 - (bank.taps_per_filter - 1) // 2
    out = np.zeros(n_pad)
    up = np.zeros(n_pad)
    for band, g in zip(bands, bank.synthesis_filters):
        up[::K] = band
        out += np.convolve(up, g)[start:start + n_pad]
    return out


def reconstruction_error_db(x: Any, y: Any, margin: int = 0) -> float:
    """Relative L2 error of y against x in dB, ignoring margin samples at either end."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError(x.shape, y.shape)
    if 2 * margin >= x.shape[0]:
        raise ValueError('margin {} leaves no samples of {}'.format(margin, x.shape[0]))
    interior = slice(margin, x.shape[0] - margin)
    reference = float(np.sum(x[interior] ** 2))
    if reference == 0.0:
        return -math.inf if not np.any(y[interior]) else math.inf
    return power_db(float(np.sum((x[interior] - y[interior]) ** 2)) / reference)


def _noise_error(taps: int, num_bands: int, beta: float, cutoff: float, noise: np.ndarray) -> float:
    bank = PqmfBank(num_bands, _prototype(taps, cutoff, beta), cutoff, beta)
    y = _synthesize(_analyze(noise, bank), bank)[:noise.shape[0]]
    return reconstruction_error_db(noise, y, margin=taps)


@lru_cache(maxsize=16)
def design_pqmf(num_bands: int = PQMF_BANDS, taps: int = PQMF_TAPS,
                kaiser_beta: float = PQMF_BETA) -> PqmfBank:
    """Designs a near-perfect-reconstruction pseudo-QMF bank.

    The prototype is a Kaiser-windowed sinc whose cutoff is chosen by a
    coarse-then-fine scan minimizing the round-trip error on a fixed white
    noise signal. Banks are cached per argument tuple and must not be modified.

    Parameters
    ----------
    num_bands : int
        Number of bands K, at least 2
    taps : int
        Even filter length, at least 2K (8K or more recommended)
    kaiser_beta : float
        Kaiser window shape parameter
    """
    if int(num_bands) != num_bands or num_bands < 2:
        raise ValueError('num_bands must be an integer >= 2, got {}'.format(num_bands))
    if int(taps) != taps or taps % 2 or taps < 2 * num_bands:
        raise ValueError('taps must be even and >= 2 * num_bands, got {}'.format(taps))
    if taps < 8 * num_bands:
        warnings.warn('{} taps for {} bands is below the recommended 8K'.format(taps, num_bands),
                      FilterDesignWarning)

    noise = make_rng(_NOISE_SEED).standard_normal(max(_NOISE_LENGTH, 8 * taps))
    base = 1.0 / (2 * num_bands)

    def error(ratio: float) -> float:
        return _noise_error(taps, num_bands, kaiser_beta, ratio * base, noise)

    coarse = [error(r) for r in _SCAN_COARSE]
    best = int(np.argmin(coarse))
    step = _SCAN_COARSE[1] - _SCAN_COARSE[0]
    fine_grid = np.linspace(_SCAN_COARSE[best] - step, _SCAN_COARSE[best] + step, _SCAN_FINE_STEPS)
    fine = [error(r) for r in fine_grid]
    ratio = float(fine_grid[int(np.argmin(fine))])

    cutoff = ratio * base
    logger.debug('PQMF K=%d taps=%d beta=%s: cutoff %.6f (%.3f / 2K), noise error %.2f dB',
                 num_bands, taps, kaiser_beta, cutoff, ratio, min(fine))
    return PqmfBank(num_bands, _prototype(taps, cutoff, kaiser_beta), cutoff, kaiser_beta)


def pqmf_analysis(x: AudioBuffer, bank: PqmfBank) -> SubbandSignals:
    """Filters x with every analysis filter and decimates by K.

    The input is zero-padded to a multiple of K; each band holds
    ceil(len(x) / K) samples.
    """
    if len(x) == 0:
        raise ValueError('pqmf_analysis needs a non-empty input')
    return SubbandSignals(_analyze(x.samples, bank), len(x), x.sample_rate)


def pqmf_synthesis(sb: SubbandSignals, bank: PqmfBank) -> AudioBuffer:
    """Zero-stuffs, filters and sums the bands; the result is delay compensated
    and trimmed to sb.source_len."""
    if sb.bands.shape[0] != bank.num_bands:
        raise ShapeMismatchError((bank.num_bands, sb.bands.shape[1]), sb.bands.shape)
    if sb.bands.shape[1] * bank.num_bands < sb.source_len:
        raise ShapeMismatchError((bank.num_bands, -(-sb.source_len // bank.num_bands)), sb.bands.shape)
    return AudioBuffer(_synthesize(sb.bands, bank)[:sb.source_len], sb.sample_rate)


def pqmf_analysis_backward(grad_bands: Any, bank: PqmfBank, n_samples: int) -> np.ndarray:
    """Adjoint of pqmf_analysis: gradient w.r.t. the n_samples input samples."""
    grad_bands = np.asarray(grad_bands, dtype=np.float64)
    K = bank.num_bands
    n_pad = -(-n_samples // K) * K
    if grad_bands.shape != (K, n_pad // K):
        raise ShapeMismatchError((K, n_pad // K), grad_bands.shape)

    start = (bank.taps_per_filter - 1) // 2
    stuffed = np.zeros(n_pad + bank.taps_per_filter - 1)
    grad = np.zeros(n_pad)
    for g, h in zip(grad_bands, bank.analysis_filters):
        stuffed[start:start + n_pad:K] = g
        grad += np.correlate(stuffed, h, mode='valid')
    return grad[:n_samples]


def band_energies(sb: SubbandSignals) -> np.ndarray:
    """Duration-weighted energy per band (each band sample spans K input samples)."""
    return np.sum(sb.bands ** 2, axis=1) * sb.decimation


def thirds_grouping(num_bands: int) -> Tuple[Tuple[int, int], ...]:
    """Low, mid and high ranges of (near) equal size; (0, 4), (4, 8), (8, 12) for 12 bands."""
    if num_bands < len(GROUP_NAMES):
        raise ValueError('need at least {} bands for the grouping, got {}'.format(len(GROUP_NAMES), num_bands))
    edges = [int(round(num_bands * i / len(GROUP_NAMES))) for i in range(len(GROUP_NAMES) + 1)]
    return tuple(zip(edges[:-1], edges[1:]))


def validate_grouping(grouping: Sequence[Tuple[int, int]], num_bands: int) -> None:
    """Raises ValueError unless grouping is three contiguous ranges covering 0..num_bands-1."""
    if len(grouping) != len(GROUP_NAMES):
        raise ValueError('grouping needs {} ranges, got {}'.format(len(GROUP_NAMES), len(grouping)))
    covered = []
    for start, stop in grouping:
        if not 0 <= start < stop <= num_bands:
            raise ValueError('invalid band range {}..{} for {} bands'.format(start, stop, num_bands))
        covered.extend(range(start, stop))
    if sorted(covered) != list(range(num_bands)):
        raise ValueError('band ranges {} overlap or do not cover all {} bands'.format(
            list(grouping), num_bands))


def group_bands(sb: SubbandSignals,
                grouping: Sequence[Tuple[int, int]] = PQMF_GROUPS) -> Dict[str, SubbandSignals]:
    """Splits the bands into the low, mid and high groups fed to the local discriminators."""
    validate_grouping(grouping, sb.bands.shape[0])
    return {
        name: SubbandSignals(sb.bands[start:stop], sb.source_len, sb.sample_rate, sb.decimation, start)
        for name, (start, stop) in zip(GROUP_NAMES, grouping)
    }
