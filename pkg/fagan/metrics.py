"""Objective metrics: MCD, LSD, YIN F0 tracking and aliasing energy"""
import logging
import math
import os
import warnings
from collections import OrderedDict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.fft import dct
from scipy.signal import get_window
from tqdm import tqdm

from .audio import AudioBuffer, load_wav
from .const import F0_FRAME, F0_HOP, F0_MAX, F0_MIN, LSD_FLOOR, MCD_COEFFS, N_MELS, YIN_THRESHOLD
from .exceptions import ShapeMismatchError, UndefinedMetricWarning
from .spectral import StftConfig, complex_stft, log_mel, mel_filterbank
from .utils import power_db

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ('mcd', 'f0_rmse', 'lsd', 'lsd_L', 'lsd_M', 'lsd_H')

# 10 * sqrt(2) / ln(10)
MCD_SCALE = 10.0 * math.sqrt(2.0) / math.log(10.0)


def _pair(x: AudioBuffer, xhat: AudioBuffer) -> Tuple[np.ndarray, np.ndarray]:
    if x.samples.shape != xhat.samples.shape:
        raise ShapeMismatchError(x.samples.shape, xhat.samples.shape)
    return x.samples, xhat.samples


def mcd(x: AudioBuffer, xhat: AudioBuffer, cfg: Optional[StftConfig] = None,
        n_mels: int = N_MELS, n_coeffs: int = MCD_COEFFS) -> float:
    """Mel-cepstral distortion in dB.

    Cepstra are the orthonormal DCT-II of the log-mel frames; coefficients
    1..n_coeffs are compared (c0, the energy term, is left out).
    """
    cfg = cfg or StftConfig()
    a, b = _pair(x, xhat)
    filterbank = mel_filterbank(x.sample_rate, cfg.fft_size, n_mels)
    ceps_a = dct(log_mel(a, cfg, filterbank), type=2, norm='ortho', axis=1)[:, 1:n_coeffs + 1]
    ceps_b = dct(log_mel(b, cfg, filterbank), type=2, norm='ortho', axis=1)[:, 1:n_coeffs + 1]
    return float(MCD_SCALE * np.mean(np.linalg.norm(ceps_a - ceps_b, axis=1)))


def _log_magnitudes(a: np.ndarray, b: np.ndarray, cfg: StftConfig) -> Tuple[np.ndarray, np.ndarray]:
    return (np.log10(np.maximum(np.abs(complex_stft(a, cfg)), LSD_FLOOR)),
            np.log10(np.maximum(np.abs(complex_stft(b, cfg)), LSD_FLOOR)))


def lsd(x: AudioBuffer, xhat: AudioBuffer, cfg: Optional[StftConfig] = None) -> float:
    """Log-spectral distance: mean over frames of the RMS log10 magnitude difference."""
    cfg = cfg or StftConfig()
    la, lb = _log_magnitudes(*_pair(x, xhat), cfg)
    return float(np.mean(np.sqrt(np.mean((la - lb) ** 2, axis=1))))


def band_of_bins(fft_size: int, n_groups: int = 3) -> np.ndarray:
    """Group index per STFT bin, splitting 0..Nyquist into equal thirds (the
    frequency span of the low, mid and high PQMF groups)."""
    bins = np.arange(fft_size // 2 + 1)
    return np.minimum(bins * n_groups // (fft_size // 2), n_groups - 1)


def lsd_bands(x: AudioBuffer, xhat: AudioBuffer, cfg: Optional[StftConfig] = None) -> Tuple[float, float, float]:
    """LSD restricted to the low, mid and high thirds of the spectrum."""
    cfg = cfg or StftConfig()
    la, lb = _log_magnitudes(*_pair(x, xhat), cfg)
    groups = band_of_bins(cfg.fft_size)
    sq = (la - lb) ** 2
    values = [float(np.mean(np.sqrt(np.mean(sq[:, groups == g], axis=1)))) for g in range(3)]
    return values[0], values[1], values[2]


class F0Track(object):
    """Per-frame fundamental frequency; f0 is 0 on unvoiced frames."""
    __slots__ = ('frame_times', 'f0', 'voicing')

    def __init__(self, frame_times: np.ndarray, f0: np.ndarray) -> None:
        self.frame_times = np.asarray(frame_times, dtype=np.float64)
        self.f0 = np.asarray(f0, dtype=np.float64)
        self.voicing = self.f0 > 0

    def __repr__(self) -> str:
        return '<F0Track frames={} voiced={}>'.format(len(self), int(self.voicing.sum()))

    def __len__(self) -> int:
        return int(self.f0.shape[0])


def _difference(segment: np.ndarray, window: int, max_lag: int) -> np.ndarray:
    """YIN difference function d(tau) for tau = 0..max_lag of one frame."""
    head = segment[:window]
    n_fft = 1 << int(np.ceil(np.log2(segment.shape[0] + window)))
    cross = np.fft.irfft(np.conj(np.fft.rfft(head, n_fft)) * np.fft.rfft(segment, n_fft), n_fft)
    energy = np.concatenate([[0.0], np.cumsum(segment ** 2)])
    lags = np.arange(max_lag + 1)
    shifted = energy[lags + window] - energy[lags]
    return np.maximum(energy[window] + shifted - 2.0 * cross[:max_lag + 1], 0.0)


def _cumulative_mean_normalized(diff: np.ndarray) -> np.ndarray:
    out = np.ones_like(diff)
    running = np.cumsum(diff[1:])
    lags = np.arange(1, diff.shape[0])
    np.divide(diff[1:] * lags, running, out=out[1:], where=running > 0)
    return out


def estimate_f0(x: AudioBuffer, frame: float = F0_FRAME, hop: float = F0_HOP, fmin: float = F0_MIN,
                fmax: float = F0_MAX, threshold: float = YIN_THRESHOLD) -> F0Track:
    """YIN pitch track.

    Per frame: difference function, cumulative mean normalization, first
    lag under threshold (walked down to its local minimum), parabolic
    refinement. Frames with no lag under threshold, or an estimate outside
    [fmin, fmax], are unvoiced.
    """
    rate = x.sample_rate
    window = int(round(frame * rate))
    step = max(1, int(round(hop * rate)))
    min_lag = max(2, int(math.ceil(rate / fmax)))
    max_lag = int(math.floor(rate / fmin))
    samples = np.concatenate([x.samples, np.zeros(max_lag + 1)])
    n_frames = max(0, (len(x) - window) // step + 1)

    f0 = np.zeros(n_frames)
    for i in range(n_frames):
        segment = samples[i * step:i * step + window + max_lag + 1]
        if np.sum(segment[:window] ** 2) <= 1e-12 * window:
            continue
        diff = _difference(segment, window, max_lag + 1)
        cmnd = _cumulative_mean_normalized(diff)
        below = np.flatnonzero(cmnd[min_lag:max_lag + 1] < threshold)
        if not below.size:
            continue
        tau = int(below[0]) + min_lag
        while tau + 1 <= max_lag and cmnd[tau + 1] < cmnd[tau]:
            tau += 1
        a, b, c = diff[tau - 1], diff[tau], diff[tau + 1]
        curvature = a - 2.0 * b + c
        shift = 0.5 * (a - c) / curvature if curvature > 0 else 0.0
        estimate = rate / (tau + shift)
        if fmin <= estimate <= fmax:
            f0[i] = estimate
    times = (np.arange(n_frames) * step + window / 2.0) / rate
    return F0Track(times, f0)


def f0_rmse(x: AudioBuffer, xhat: AudioBuffer) -> float:
    """RMS F0 difference in Hz over frames voiced in both signals; NaN (with
    UndefinedMetricWarning) when there is no such frame."""
    _pair(x, xhat)
    a = estimate_f0(x)
    b = estimate_f0(xhat)
    common = a.voicing & b.voicing
    if not np.any(common):
        warnings.warn('no commonly voiced frames, F0 RMSE is undefined', UndefinedMetricWarning)
        return math.nan
    return float(np.sqrt(np.mean((a.f0[common] - b.f0[common]) ** 2)))


def aliasing_energy(x: AudioBuffer, fundamental: float, expected_images: Sequence[float],
                    neighborhood: int = 2) -> float:
    """Energy within +-neighborhood bins of the image frequencies relative to
    the energy around the fundamental, in dB (Hann-windowed spectrum)."""
    n = len(x)
    spectrum = np.abs(np.fft.rfft(x.samples * get_window('hann', n))) ** 2
    last = spectrum.shape[0] - 1

    def around(freq: float) -> set:
        center = int(round(freq * n / x.sample_rate))
        return set(range(max(0, center - neighborhood), min(last, center + neighborhood) + 1))

    fundamental_bins = around(fundamental)
    image_bins = set()  # type: set
    for freq in expected_images:
        image_bins |= around(freq)
    image_bins -= fundamental_bins
    reference = float(spectrum[sorted(fundamental_bins)].sum())
    if reference <= 0.0:
        return math.nan
    return power_db(float(spectrum[sorted(image_bins)].sum()) / reference) if image_bins else -math.inf


class MetricReport(object):
    """Objective metrics of one generated signal against its reference."""

    def __init__(self, mcd: float, f0_rmse: float, lsd: float, lsd_bands: Sequence[float]) -> None:
        self.mcd = mcd
        self.f0_rmse = f0_rmse
        self.lsd = lsd
        self.lsd_bands = tuple(lsd_bands)

    def __repr__(self) -> str:
        return '<MetricReport mcd={:.4g} f0_rmse={:.4g} lsd={:.4g}>'.format(self.mcd, self.f0_rmse, self.lsd)

    def as_dict(self) -> Dict[str, float]:
        values = (self.mcd, self.f0_rmse, self.lsd) + self.lsd_bands
        return OrderedDict(zip(METRIC_COLUMNS, values))

    def to_df(self, name: Optional[str] = None) -> Any:
        """One-row pandas DataFrame indexed by name (pandas is optional)."""
        try:
            import pandas as pd
        except ImportError as ex:
            raise ImportError('MetricReport.to_df needs pandas installed') from ex
        return pd.DataFrame([self.as_dict()], index=[name or 0])


def evaluate_pair(x: AudioBuffer, xhat: AudioBuffer, cfg: Optional[StftConfig] = None) -> MetricReport:
    """All metrics of xhat against the reference x."""
    return MetricReport(mcd(x, xhat, cfg), f0_rmse(x, xhat), lsd(x, xhat, cfg), lsd_bands(x, xhat, cfg))


def evaluate_directories(ref_dir: str, gen_dir: str, cfg: Optional[StftConfig] = None,
                         progress: bool = False) -> Tuple[List[Tuple[str, MetricReport]], List[str]]:
    """Evaluates every WAV present in both directories, matched by file name.

    Returns (name, report) pairs sorted by name, plus the names found in
    only one of the directories.
    """
    ref_names = {n for n in os.listdir(ref_dir) if n.lower().endswith('.wav')}
    gen_names = {n for n in os.listdir(gen_dir) if n.lower().endswith('.wav')}
    matched = sorted(ref_names & gen_names)
    unmatched = sorted(ref_names ^ gen_names)
    for name in unmatched:
        logger.warning('no counterpart for %s', name)

    rows = []
    for name in tqdm(matched, disable=not progress, desc='metrics'):
        report = evaluate_pair(load_wav(os.path.join(ref_dir, name)), load_wav(os.path.join(gen_dir, name)), cfg)
        rows.append((name, report))
    return rows, unmatched
