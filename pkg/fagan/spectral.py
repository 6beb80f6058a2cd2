"""STFT, inverse STFT, mel analysis and spectrogram exporters"""
from typing import Any, Optional, Tuple, Union

import numpy as np
from scipy.signal import get_window

from .audio import AudioBuffer
from .const import (FFT_SIZE, WINDOW_SIZE, HOP_SIZE, N_MELS, MEL_FMIN, LOG_FLOOR,
                    SAMPLE_RATE, Window)
from .exceptions import ConfigError, ShapeMismatchError, SignalTooShortError
from .utils import PathOrFile, check_finite, write_csv_grid

SignalLike = Union[AudioBuffer, np.ndarray]


class StftConfig(object):
    """Framing parameters of a short-time Fourier transform."""
    __slots__ = ('fft_size', 'window_size', 'hop_size', 'window', 'center')

    def __init__(self, fft_size: int = FFT_SIZE, window_size: int = WINDOW_SIZE,
                 hop_size: int = HOP_SIZE, window: Union[Window, str] = Window.HANN,
                 center: bool = True) -> None:
        """Initialize the StftConfig class.

        Parameters
        ----------
        fft_size : int
            DFT length; frames are zero-padded at the end to this size
        window_size : int
            Frame length in samples
        hop_size : int
            Distance between frame starts
        window : Window or str
            'hann' (periodic) or 'rectangular'
        center : bool
            Reflect-pad the signal by window_size // 2 on both ends
        """
        try:
            window = Window(window)
        except ValueError:
            raise ConfigError('stft.window', 'unknown window {!r}'.format(window)) from None
        for key, value in (('stft.fft_size', fft_size), ('stft.window_size', window_size),
                           ('stft.hop_size', hop_size)):
            if int(value) != value or value <= 0:
                raise ConfigError(key, 'must be a positive integer, got {}'.format(value))
        if not hop_size <= window_size <= fft_size:
            raise ConfigError(None, 'need hop_size <= window_size <= fft_size, got {}/{}/{}'.format(
                hop_size, window_size, fft_size))

        self.fft_size = int(fft_size)
        self.window_size = int(window_size)
        self.hop_size = int(hop_size)
        self.window = window
        self.center = bool(center)

    def __repr__(self) -> str:
        return '<StftConfig fft={} window={} hop={} {}{}>'.format(
            self.fft_size, self.window_size, self.hop_size, self.window.value,
            ' center' if self.center else '')

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, StftConfig):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def _key(self) -> Tuple[Any, ...]:
        return (self.fft_size, self.window_size, self.hop_size, self.window, self.center)

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.window_size // 2 if self.center else 0

    def window_array(self) -> np.ndarray:
        """Analysis window samples (periodic Hann or all ones)."""
        if self.window is Window.HANN:
            return get_window('hann', self.window_size, fftbins=True).astype(np.float64)
        return np.ones(self.window_size)

    def n_frames(self, n_samples: int) -> int:
        """Frame count for a signal of n_samples, raising SignalTooShortError if it has none."""
        padded = n_samples + 2 * self.pad
        if n_samples < 1 or padded < self.window_size:
            raise SignalTooShortError(self.window_size - 2 * self.pad, n_samples)
        return 1 + (padded - self.window_size) // self.hop_size


class ComplexSpectrogram(object):
    """Real and imaginary parts of an STFT, frames x bins."""
    __slots__ = ('real', 'imag', 'config', 'sample_rate', 'n_samples')

    def __init__(self, real: np.ndarray, imag: np.ndarray, config: StftConfig,
                 sample_rate: int = SAMPLE_RATE, n_samples: Optional[int] = None) -> None:
        real = np.asarray(real, dtype=np.float64)
        imag = np.asarray(imag, dtype=np.float64)
        if real.shape != imag.shape:
            raise ShapeMismatchError(real.shape, imag.shape)
        if real.ndim != 2 or real.shape[1] != config.n_bins:
            raise ShapeMismatchError(('frames', config.n_bins), real.shape)
        check_finite(real, 'real part')
        check_finite(imag, 'imaginary part')

        self.real = real
        self.imag = imag
        self.config = config
        self.sample_rate = sample_rate
        # source length, lets istft trim exactly
        self.n_samples = n_samples

    def __repr__(self) -> str:
        return '<ComplexSpectrogram frames={} bins={}>'.format(*self.real.shape)

    @property
    def n_frames(self) -> int:
        return int(self.real.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.real.shape[1])

    def to_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.real, self.imag)


class MelSpectrogram(object):
    """Natural-log mel energies, frames x n_mels, clamped at LOG_FLOOR before the log."""
    __slots__ = ('values', 'n_mels', 'fmin', 'fmax')

    def __init__(self, values: np.ndarray, fmin: float, fmax: float) -> None:
        self.values = np.asarray(values, dtype=np.float64)
        self.n_mels = int(self.values.shape[1])
        self.fmin = fmin
        self.fmax = fmax

    def __repr__(self) -> str:
        return '<MelSpectrogram frames={} n_mels={} fmin={} fmax={}>'.format(
            self.values.shape[0], self.n_mels, self.fmin, self.fmax)


def _samples_of(x: SignalLike) -> Tuple[np.ndarray, int]:
    if isinstance(x, AudioBuffer):
        return x.samples, x.sample_rate
    return np.asarray(x, dtype=np.float64), SAMPLE_RATE


def _pad_index(n_samples: int, pad: int) -> np.ndarray:
    """Index map of the reflect padding; padded = x[index]."""
    return np.pad(np.arange(n_samples), pad, mode='reflect')


def _frame_index(n_frames: int, cfg: StftConfig) -> np.ndarray:
    return np.arange(n_frames)[:, None] * cfg.hop_size + np.arange(cfg.window_size)[None, :]


def complex_stft(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """STFT of a raw sample array, returned as a complex frames x bins array."""
    samples = np.asarray(samples, dtype=np.float64)
    n_frames = cfg.n_frames(samples.shape[0])
    padded = samples[_pad_index(samples.shape[0], cfg.pad)] if cfg.pad else samples
    frames = padded[_frame_index(n_frames, cfg)] * cfg.window_array()
    return np.fft.rfft(frames, n=cfg.fft_size, axis=1)


def stft(x: SignalLike, cfg: Optional[StftConfig] = None) -> ComplexSpectrogram:
    """Short-time Fourier transform.

    Parameters
    ----------
    x : AudioBuffer or ndarray
        Input signal
    cfg : StftConfig, optional
        Framing, defaults to 1024/1024/256 with a periodic Hann window and
        center padding
    """
    cfg = cfg or StftConfig()
    samples, rate = _samples_of(x)
    spec = complex_stft(samples, cfg)
    return ComplexSpectrogram(spec.real, spec.imag, cfg, rate, samples.shape[0])


def stft_backward(grad_real: np.ndarray, grad_imag: np.ndarray, n_samples: int,
                  cfg: StftConfig) -> np.ndarray:
    """Adjoint of stft: maps gradients w.r.t. the real and imaginary grids to
    the gradient w.r.t. the n_samples input samples."""
    grad = np.asarray(grad_real, dtype=np.float64) + 1j * np.asarray(grad_imag, dtype=np.float64)
    n_frames = cfg.n_frames(n_samples)
    if grad.shape != (n_frames, cfg.n_bins):
        raise ShapeMismatchError((n_frames, cfg.n_bins), grad.shape)

    half = grad / 2.0
    half[:, 0] = grad[:, 0].real
    if cfg.fft_size % 2 == 0:
        half[:, -1] = grad[:, -1].real
    frame_grad = cfg.fft_size * np.fft.irfft(half, n=cfg.fft_size, axis=1)
    frame_grad = frame_grad[:, :cfg.window_size] * cfg.window_array()

    padded_len = n_samples + 2 * cfg.pad
    padded_grad = np.bincount(_frame_index(n_frames, cfg).ravel(), weights=frame_grad.ravel(),
                              minlength=padded_len)
    if not cfg.pad:
        return padded_grad[:n_samples]
    return np.bincount(_pad_index(n_samples, cfg.pad), weights=padded_grad, minlength=n_samples)


def istft(spec: ComplexSpectrogram) -> AudioBuffer:
    """Inverse STFT by overlap-add with window-squared normalization.

    Only Hann configurations with hop_size <= window_size / 2 are accepted.
    Samples not covered by any window (zero envelope) come back as 0.
    """
    cfg = spec.config
    if cfg.window is not Window.HANN or 2 * cfg.hop_size > cfg.window_size:
        raise ConfigError('stft.hop_size', 'istft needs a hann window with hop <= window/2, got {!r}'.format(cfg))

    win = cfg.window_array()
    frames = np.fft.irfft(spec.to_complex(), n=cfg.fft_size, axis=1)[:, :cfg.window_size] * win
    index = _frame_index(spec.n_frames, cfg).ravel()
    padded_len = (spec.n_frames - 1) * cfg.hop_size + cfg.window_size
    numerator = np.bincount(index, weights=frames.ravel(), minlength=padded_len)
    envelope = np.bincount(index, weights=np.tile(win * win, spec.n_frames), minlength=padded_len)

    out = np.zeros(padded_len)
    covered = envelope > 1e-11
    out[covered] = numerator[covered] / envelope[covered]

    out = out[cfg.pad:]
    length = spec.n_samples if spec.n_samples is not None else padded_len - 2 * cfg.pad
    if out.shape[0] < length:
        out = np.concatenate([out, np.zeros(length - out.shape[0])])
    return AudioBuffer(out[:length], spec.sample_rate)


def hz_to_mel(hz: Any) -> Any:
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel: Any) -> Any:
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int = SAMPLE_RATE, fft_size: int = FFT_SIZE, n_mels: int = N_MELS,
                   fmin: float = MEL_FMIN, fmax: Optional[float] = None) -> np.ndarray:
    """Triangular filters with unit peak, n_mels x (fft_size // 2 + 1).

    Band edges are equally spaced on the HTK mel scale between fmin and fmax
    (default: Nyquist).
    """
    fmax = sample_rate / 2.0 if fmax is None else float(fmax)
    if n_mels <= 0:
        raise ConfigError('mel.n_mels', 'must be positive, got {}'.format(n_mels))
    if not 0.0 <= fmin < fmax <= sample_rate / 2.0:
        raise ConfigError('mel.fmax', 'need 0 <= fmin < fmax <= {}, got {}..{}'.format(
            sample_rate / 2.0, fmin, fmax))

    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    left, center, right = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - left) / (center - left)
    falling = (right - freqs[None, :]) / (right - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def log_mel(samples: np.ndarray, cfg: StftConfig, filterbank: np.ndarray) -> np.ndarray:
    """log(max(mel energy, LOG_FLOOR)) of a raw sample array, frames x n_mels."""
    magnitude = np.abs(complex_stft(samples, cfg))
    return np.log(np.maximum(magnitude @ filterbank.T, LOG_FLOOR))


def mel_spectrogram(x: SignalLike, cfg: Optional[StftConfig] = None, n_mels: int = N_MELS,
                    fmin: float = MEL_FMIN, fmax: Optional[float] = None) -> MelSpectrogram:
    """Log-mel spectrogram of x.

    Parameters
    ----------
    x : AudioBuffer or ndarray
        Input signal
    cfg : StftConfig, optional
        Framing, 1024/1024/256 Hann by default
    n_mels : int, optional
        Number of triangular filters
    fmin, fmax : float, optional
        Band edges in Hz; fmax defaults to the Nyquist frequency
    """
    cfg = cfg or StftConfig()
    samples, rate = _samples_of(x)
    fmax = rate / 2.0 if fmax is None else fmax
    filterbank = mel_filterbank(rate, cfg.fft_size, n_mels, fmin, fmax)
    return MelSpectrogram(log_mel(samples, cfg, filterbank), fmin, fmax)


def spectrogram_to_csv(spec: ComplexSpectrogram, out: PathOrFile, part: str = 'magnitude') -> None:
    """Writes one row per frame with 9 significant digits.

    part selects 'magnitude', 'real' or 'imag'.
    """
    grids = {'magnitude': spec.magnitude, 'real': lambda: spec.real, 'imag': lambda: spec.imag}
    if part not in grids:
        raise ValueError('part must be one of {}, got {!r}'.format(sorted(grids), part))
    write_csv_grid(grids[part](), out)


def write_pgm(magnitude: np.ndarray, path: str, db_range: float = 80.0) -> None:
    """Writes a frames x bins magnitude grid as a binary grayscale PGM (P5).

    One column per frame, frequency ascending upward. The loudest cell maps
    to 255 and everything db_range below it (or quieter) to 0.
    """
    if db_range <= 0:
        raise ValueError('db_range must be positive, got {}'.format(db_range))
    magnitude = np.atleast_2d(np.asarray(magnitude, dtype=np.float64))
    peak = float(magnitude.max()) if magnitude.size else 0.0
    if peak > 0.0:
        level_db = 20.0 * np.log10(np.maximum(magnitude, peak * 1e-12) / peak)
        pixels = np.round(np.clip(1.0 + level_db / db_range, 0.0, 1.0) * 255.0)
    else:
        pixels = np.zeros_like(magnitude)

    image = pixels.T[::-1].astype(np.uint8)
    height, width = image.shape
    with open(path, 'wb') as handle:
        handle.write('P5\n{} {}\n255\n'.format(width, height).encode('ascii'))
        handle.write(np.ascontiguousarray(image).tobytes())
