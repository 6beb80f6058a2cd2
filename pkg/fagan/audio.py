"""AudioBuffer and WAV input/output"""
import warnings
from typing import Any, Union

import numpy as np
from scipy.io import wavfile

from .const import AudioFormat, PCM16_SCALE
from .exceptions import AudioFormatError
from .utils import as_signal


class AudioBuffer(object):
    """A mono signal with its sample rate.

    Samples are held as float64 with nominal range [-1, 1]. Instances are
    treated as immutable by the library; operations return new buffers.
    """
    __slots__ = ('samples', 'sample_rate')

    def __init__(self, samples: Any, sample_rate: int) -> None:
        """Initialize the AudioBuffer class.

        Parameters
        ----------
        samples : array_like
            One-dimensional sequence of finite real values
        sample_rate : int
            Sampling frequency in Hz, must be a positive integer
        """
        if int(sample_rate) != sample_rate or sample_rate <= 0:
            raise ValueError('sample_rate must be a positive integer, got {}'.format(sample_rate))
        self.samples = as_signal(samples, 'samples')
        self.sample_rate = int(sample_rate)

    def __repr__(self) -> str:
        return '<AudioBuffer samples={} sample_rate={}>'.format(len(self), self.sample_rate)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self) / self.sample_rate

    def with_samples(self, samples: Any) -> 'AudioBuffer':
        """Returns a new buffer with the same sample rate."""
        return AudioBuffer(samples, self.sample_rate)

    def scaled(self, gain: float) -> 'AudioBuffer':
        return AudioBuffer(self.samples * gain, self.sample_rate)


def load_wav(path: str) -> AudioBuffer:
    """Reads a RIFF/WAVE file holding PCM-16 or IEEE float-32 samples.

    Stereo (or any multi-channel) files are mixed down by averaging the
    channels. PCM-16 values are mapped to [-1, 1) by division by 32768.

    Parameters
    ----------
    path : str
        Path of the .wav file
    """
    try:
        with warnings.catch_warnings():
            # unknown chunks (LIST, fact, ...) are harmless
            warnings.simplefilter('ignore', wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except (ValueError, EOFError) as ex:
        raise AudioFormatError(path, 'malformed header ({})'.format(ex)) from None

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise AudioFormatError(path, 'unsupported codec {} (expected PCM-16 or float-32)'.format(data.dtype))

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.shape[0] == 0:
        raise AudioFormatError(path, 'file holds no samples')
    if not np.all(np.isfinite(samples)):
        raise AudioFormatError(path, 'file holds non-finite samples')

    return AudioBuffer(samples, rate)


def save_wav(buffer: AudioBuffer, path: str,
             format: Union[AudioFormat, str] = AudioFormat.FLOAT32) -> None:
    """Writes buffer to path.

    Parameters
    ----------
    buffer : AudioBuffer
        Signal to store
    path : str
        Target file
    format : AudioFormat or str, optional
        'float32' (default, bit-exact for float32-representable samples) or
        'pcm16' (samples are scaled by 32768, rounded and clipped)
    """
    format = AudioFormat(format)
    if format is AudioFormat.FLOAT32:
        data = buffer.samples.astype(np.float32)
    else:
        scaled = np.round(buffer.samples * PCM16_SCALE)
        data = np.clip(scaled, -PCM16_SCALE, PCM16_SCALE - 1).astype(np.int16)
    wavfile.write(path, buffer.sample_rate, data)
