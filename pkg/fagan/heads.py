"""Loss heads: loss values together with their analytic gradients.

Spectral heads take precomputed reference grids and a generated waveform
and return d(loss)/d(waveform). Score and feature heads return gradients
w.r.t. discriminator outputs.
"""
from typing import List, Sequence, Tuple

import numpy as np

from .const import LOG_FLOOR
from .spectral import StftConfig, complex_stft, stft_backward


def _magnitude_backward(grad_mag: np.ndarray, spec: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Chains a magnitude gradient to the real and imaginary parts (0 at |S| = 0)."""
    mag = np.abs(spec)
    scale = np.divide(grad_mag, mag, out=np.zeros_like(mag), where=mag > 0)
    return scale * spec.real, scale * spec.imag


def ri_head(reference: np.ndarray, y: np.ndarray, cfg: StftConfig) -> Tuple[float, np.ndarray]:
    """RI loss of y against the reference complex spectrogram, and d(loss)/dy.

    L1 terms use sign subgradients (0 at exact ties); the spectral
    convergence term is skipped for a silent reference and has zero
    gradient when both spectrograms coincide.
    """
    gen = complex_stft(y, cfg)
    n_cells = gen.size
    diff = gen - reference
    mag_diff = np.abs(gen) - np.abs(reference)

    loss = (np.abs(diff.real).sum() + np.abs(diff.imag).sum() + np.abs(mag_diff).sum()) / n_cells
    grad_real = np.sign(diff.real) / n_cells
    grad_imag = np.sign(diff.imag) / n_cells
    mag_real, mag_imag = _magnitude_backward(np.sign(mag_diff) / n_cells, gen)
    grad_real += mag_real
    grad_imag += mag_imag

    ref_norm = float(np.linalg.norm(reference))
    if ref_norm > 0.0:
        dist = float(np.linalg.norm(diff))
        loss += dist / ref_norm
        if dist > 0.0:
            grad_real += diff.real / (dist * ref_norm)
            grad_imag += diff.imag / (dist * ref_norm)
    return float(loss), stft_backward(grad_real, grad_imag, y.shape[0], cfg)


def mr_ri_head(references: Sequence[np.ndarray], y: np.ndarray,
               resolutions: Sequence[StftConfig]) -> Tuple[float, np.ndarray]:
    """Mean RI head over the resolutions."""
    total = 0.0
    grad = np.zeros_like(y)
    for reference, cfg in zip(references, resolutions):
        loss, g = ri_head(reference, y, cfg)
        total += loss
        grad += g
    count = len(resolutions)
    return total / count, grad / count


def mel_head(reference: np.ndarray, y: np.ndarray, cfg: StftConfig,
             filterbank: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean |log-mel(y) - reference| and d(loss)/dy; clamped cells pass no gradient."""
    gen = complex_stft(y, cfg)
    energy = np.abs(gen) @ filterbank.T
    diff = np.log(np.maximum(energy, LOG_FLOOR)) - reference
    n_cells = diff.size

    grad_log = np.sign(diff) / n_cells
    grad_energy = np.divide(grad_log, energy, out=np.zeros_like(energy), where=energy > LOG_FLOOR)
    grad_real, grad_imag = _magnitude_backward(grad_energy @ filterbank, gen)
    return float(np.abs(diff).mean()), stft_backward(grad_real, grad_imag, y.shape[0], cfg)


def lsgan_discriminator_head(real: np.ndarray, fake: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """mean (1 - D(x))^2 + mean D(y)^2 with gradients w.r.t. both score maps."""
    loss = float(np.mean((1.0 - real) ** 2) + np.mean(fake ** 2))
    return loss, -2.0 * (1.0 - real) / real.size, 2.0 * fake / fake.size


def lsgan_generator_head(fake: np.ndarray) -> Tuple[float, np.ndarray]:
    """mean (1 - D(y))^2 and its gradient w.r.t. the fake score map."""
    return float(np.mean((1.0 - fake) ** 2)), -2.0 * (1.0 - fake) / fake.size


def feature_matching_head(real_feats: Sequence[np.ndarray],
                          fake_feats: Sequence[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    """Mean over layers of mean |real - fake| for one discriminator, with
    gradients w.r.t. the fake feature maps (real maps are constants)."""
    count = len(fake_feats)
    if not count:
        return 0.0, []
    loss = 0.0
    grads = []
    for real, fake in zip(real_feats, fake_feats):
        diff = fake - real
        loss += float(np.mean(np.abs(diff))) / count
        grads.append(np.sign(diff) / (diff.size * count))
    return loss, grads
