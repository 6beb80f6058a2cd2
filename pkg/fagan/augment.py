"""Data augmentation: additive noise, resampling pitch shift and a lossy
codec proxy, plus the external codec hook"""
import logging
import math
import os
import shlex
import subprocess
import tempfile
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np
from scipy.signal import resample_poly

from .audio import AudioBuffer, load_wav, save_wav
from .const import CODEC_BITS, CODEC_CUTOFF, MU_LAW, NOISE_SNR_RANGE
from .exceptions import AudioFormatError, CodecError
from .upsample import PIPELINE_BETA, PIPELINE_TAPS, apply_fir, design_lowpass
from .utils import convert_string_type, format_value, make_rng

logger = logging.getLogger(__name__)


def _fit_length(samples: np.ndarray, length: int) -> np.ndarray:
    if samples.shape[0] >= length:
        return samples[:length]
    return np.concatenate([samples, np.zeros(length - samples.shape[0])])


def add_noise(x: AudioBuffer, snr_db: Optional[float] = None, seed: Optional[int] = 0) -> AudioBuffer:
    """Adds white Gaussian noise scaled to the requested signal-to-noise ratio.

    snr_db defaults to a uniform draw from the 28..40 dB range; math.inf
    returns the input unchanged. The noise is scaled against its own
    realized power, so the achieved SNR equals the request.
    """
    rng = make_rng(seed)
    if snr_db is None:
        snr_db = float(rng.uniform(*NOISE_SNR_RANGE))
    if math.isinf(snr_db) and snr_db > 0:
        return x.with_samples(x.samples.copy())
    if math.isnan(snr_db):
        raise ValueError('snr_db must be a number')

    noise = rng.standard_normal(len(x))
    signal_power = float(np.mean(x.samples ** 2))
    noise_power = float(np.mean(noise ** 2))
    if signal_power == 0.0 or noise_power == 0.0:
        return x.with_samples(x.samples.copy())
    noise *= math.sqrt(signal_power / (noise_power * 10.0 ** (snr_db / 10.0)))
    return x.with_samples(x.samples + noise)


def harmonic_shift(x: AudioBuffer, pitch_ratio: float, max_denominator: int = 1000) -> AudioBuffer:
    """Scales pitch and formants together by pitch_ratio.

    The signal is resampled by 1/pitch_ratio (rational approximation) and
    played back at the original rate, then trimmed or zero-padded to the
    input length.
    """
    if not pitch_ratio > 0:
        raise ValueError('pitch_ratio must be positive, got {}'.format(pitch_ratio))
    factor = Fraction(1.0 / pitch_ratio).limit_denominator(max_denominator)
    if factor == 1:
        return x.with_samples(x.samples.copy())
    shifted = resample_poly(x.samples, factor.numerator, factor.denominator)
    return x.with_samples(_fit_length(shifted, len(x)))


def mu_law_quantize(samples: np.ndarray, bits: int, mu: float = MU_LAW) -> np.ndarray:
    """Companding quantizer with 2**(bits-1) - 1 levels per polarity and a level at zero."""
    levels = 2 ** (bits - 1) - 1
    clipped = np.clip(samples, -1.0, 1.0)
    compressed = np.sign(clipped) * np.log1p(mu * np.abs(clipped)) / math.log1p(mu)
    quantized = np.round(compressed * levels) / levels
    return np.sign(quantized) * np.expm1(np.abs(quantized) * math.log1p(mu)) / mu


def lossy_compress_proxy(x: AudioBuffer, cutoff_hz: float = CODEC_CUTOFF, bits: int = CODEC_BITS) -> AudioBuffer:
    """Band limiting at cutoff_hz followed by mu-law quantization at bits.

    Stands in for a low-bitrate speech codec; a cutoff at or above Nyquist
    skips the filter.
    """
    if bits < 2:
        raise ValueError('bits must be at least 2, got {}'.format(bits))
    if cutoff_hz <= 0:
        raise ValueError('cutoff_hz must be positive, got {}'.format(cutoff_hz))
    samples = x.samples
    if cutoff_hz < x.sample_rate / 2.0:
        fir = design_lowpass(cutoff_hz / x.sample_rate, PIPELINE_TAPS, PIPELINE_BETA)
        samples = apply_fir(samples, fir)
    return x.with_samples(mu_law_quantize(samples, bits))


def external_codec(x: AudioBuffer, command: str, timeout: Optional[float] = None) -> AudioBuffer:
    """Round-trips x through an external program.

    command is a template with {input} and {output} placeholders naming
    WAV files, e.g. 'sh -c "opusenc --bitrate 32 {input} - | opusdec - {output}"'.
    The decoded result is trimmed or padded to the input length.
    """
    tokens = shlex.split(command)
    if not any('{output}' in t for t in tokens):
        raise ValueError('codec command needs an {output} placeholder')
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, 'input.wav')
        dst = os.path.join(tmp, 'output.wav')
        save_wav(x, src)
        argv = [t.format(input=src, output=dst) for t in tokens]
        logger.info('running codec: %s', ' '.join(argv))
        try:
            subprocess.run(argv, check=True, capture_output=True, timeout=timeout)
        except FileNotFoundError as ex:
            raise CodecError('codec command not found: {}'.format(argv[0])) from ex
        except subprocess.CalledProcessError as ex:
            stderr = ex.stderr.decode('utf-8', 'replace').strip() if ex.stderr else ''
            raise CodecError('codec exited with status {}: {}'.format(ex.returncode, stderr)) from ex
        except subprocess.TimeoutExpired as ex:
            raise CodecError('codec timed out after {} s'.format(timeout)) from ex
        if not os.path.exists(dst):
            raise CodecError('codec did not write {}'.format(dst))
        try:
            decoded = load_wav(dst)
        except AudioFormatError as ex:
            raise CodecError('codec output is unreadable: {}'.format(ex)) from ex
    if decoded.sample_rate != x.sample_rate:
        raise CodecError('codec changed the sample rate from {} to {}'.format(
            x.sample_rate, decoded.sample_rate))
    return x.with_samples(_fit_length(decoded.samples, len(x)))


def sidecar_path(wav_path: str) -> str:
    return os.path.splitext(wav_path)[0] + '.txt'


def write_sidecar(wav_path: str, params: Dict[str, Any]) -> str:
    """Writes params as sorted key=value lines next to wav_path; returns the sidecar path."""
    path = sidecar_path(wav_path)
    with open(path, 'w', encoding='utf-8') as fh:
        for key in sorted(params):
            fh.write('{}={}\n'.format(key, format_value(params[key])))
    return path


def read_sidecar(wav_path: str) -> Dict[str, Any]:
    """Reads the sidecar written by write_sidecar, converting numbers and booleans."""
    params = {}  # type: Dict[str, Any]
    with open(sidecar_path(wav_path), encoding='utf-8') as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise AudioFormatError(fh.name, 'malformed sidecar line {!r}'.format(line))
            params[key.strip()] = convert_string_type(value.strip())
    return params
