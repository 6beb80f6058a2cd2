import math
import os
import tempfile
import unittest
import warnings

import numpy as np

from fagan.audio import AudioBuffer, save_wav
from fagan.exceptions import ShapeMismatchError, UndefinedMetricWarning
from fagan.metrics import (METRIC_COLUMNS, MetricReport, aliasing_energy, band_of_bins, estimate_f0,
                           evaluate_directories, evaluate_pair, f0_rmse, lsd, lsd_bands, mcd)
from fagan.spectral import StftConfig
from fagan.upsample import DeconvSpec, image_frequencies, upsample_pipeline

RATE = 22050


def tone(freq: float, seconds: float = 1.0, amplitude: float = 0.5, rate: int = RATE) -> AudioBuffer:
    t = np.arange(int(seconds * rate)) / rate
    return AudioBuffer(amplitude * np.sin(2 * math.pi * freq * t), rate)


def noise(seed: int = 0, seconds: float = 0.5) -> AudioBuffer:
    return AudioBuffer(0.1 * np.random.default_rng(seed).standard_normal(int(seconds * RATE)), RATE)


class SpectralDistanceTestCase(unittest.TestCase):
    """MCD and LSD test suite"""
    def test_identity(self) -> None:
        x = noise()
        self.assertEqual(0.0, mcd(x, x))
        self.assertEqual(0.0, lsd(x, x))
        self.assertEqual((0.0, 0.0, 0.0), lsd_bands(x, x))

    def test_lsd_of_gain(self) -> None:
        """Test that doubling the signal gives log10(2) in every band."""
        x = noise(1)
        self.assertAlmostEqual(math.log10(2.0), lsd(x, x.scaled(2.0)), places=9)
        for value in lsd_bands(x, x.scaled(2.0)):
            self.assertAlmostEqual(math.log10(2.0), value, places=9)

    def test_mcd_ignores_gain(self) -> None:
        """A gain only shifts c0, which is left out."""
        x = noise(2)
        self.assertLess(mcd(x, x.scaled(2.0)), 1e-6)
        self.assertGreater(mcd(x, noise(3)), 0.1)

    def test_symmetric(self) -> None:
        a, b = noise(4), noise(5)
        self.assertAlmostEqual(lsd(a, b), lsd(b, a), places=12)
        self.assertAlmostEqual(mcd(a, b), mcd(b, a), places=12)

    def test_band_of_bins(self) -> None:
        groups = band_of_bins(12)
        np.testing.assert_array_equal([0, 0, 1, 1, 2, 2, 2], groups)
        self.assertEqual(513, band_of_bins(1024).shape[0])

    def test_lowpassed_copy_hits_high_band(self) -> None:
        x = noise(6)
        smooth = x.with_samples(np.convolve(x.samples, np.ones(8) / 8.0, mode='same'))
        low, mid, high = lsd_bands(x, smooth, StftConfig(512, 512, 128))
        self.assertLess(low, high)

    def test_length_mismatch(self) -> None:
        with self.assertRaises(ShapeMismatchError):
            lsd(noise(0, 0.5), noise(0, 0.4))


class PitchTestCase(unittest.TestCase):
    """YIN F0 tracking test suite"""
    def test_tone(self) -> None:
        track = estimate_f0(tone(220.0))
        self.assertGreaterEqual(track.voicing.mean(), 0.9)
        self.assertAlmostEqual(220.0, float(np.median(track.f0[track.voicing])), delta=1.0)
        self.assertEqual(len(track), track.frame_times.shape[0])

    def test_rmse_between_tones(self) -> None:
        self.assertAlmostEqual(5.0, f0_rmse(tone(220.0), tone(225.0)), delta=1.0)
        self.assertAlmostEqual(0.0, f0_rmse(tone(220.0), tone(220.0)), places=9)

    def test_noise_is_unvoiced(self) -> None:
        track = estimate_f0(noise(7, 1.0))
        self.assertGreaterEqual(1.0 - track.voicing.mean(), 0.9)

    def test_silence(self) -> None:
        silence = AudioBuffer(np.zeros(RATE // 2), RATE)
        self.assertFalse(np.any(estimate_f0(silence).voicing))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            self.assertTrue(math.isnan(f0_rmse(silence, silence)))
        self.assertTrue(any(issubclass(w.category, UndefinedMetricWarning) for w in caught))

    def test_short_signal(self) -> None:
        self.assertEqual(0, len(estimate_f0(AudioBuffer(np.ones(100), RATE))))


class AliasingTestCase(unittest.TestCase):
    """aliasing_energy test suite"""
    def test_clean_tone(self) -> None:
        images = image_frequencies(1000.0, RATE / 4, 4, RATE)
        self.assertLess(aliasing_energy(tone(1000.0, amplitude=1.0), 1000.0, images), -60.0)

    def test_known_image(self) -> None:
        x = tone(1000.0, amplitude=1.0).samples + tone(4512.5, amplitude=0.1).samples
        self.assertAlmostEqual(-20.0, aliasing_energy(AudioBuffer(x, RATE), 1000.0, [4512.5]), delta=1.0)

    def test_edge_cases(self) -> None:
        self.assertEqual(-math.inf, aliasing_energy(tone(1000.0), 1000.0, []))
        self.assertTrue(math.isnan(aliasing_energy(AudioBuffer(np.zeros(1024), RATE), 1000.0, [3000.0])))

    def test_twin_lowpass_suppresses_images(self) -> None:
        """Test that twin upsampling with the low-pass stage beats the plain
        transposed convolution by at least 20 dB."""
        stride = 4
        low_rate = RATE / stride
        x = 0.5 * np.sin(2 * math.pi * 1000.0 * np.arange(int(low_rate)) / low_rate)
        spec = DeconvSpec(np.full(2 * stride + 1, stride / (2 * stride + 1.0)), stride, 'ones')
        images = image_frequencies(1000.0, low_rate, stride, RATE)
        plain = aliasing_energy(AudioBuffer(upsample_pipeline(x, spec, 'plain'), RATE), 1000.0, images)
        twin = aliasing_energy(AudioBuffer(upsample_pipeline(x, spec, 'twin_lowpass'), RATE), 1000.0, images)
        self.assertGreaterEqual(plain - twin, 20.0)


class ReportTestCase(unittest.TestCase):
    """MetricReport and directory evaluation test suite"""
    def test_report(self) -> None:
        report = evaluate_pair(tone(220.0, 0.5), tone(225.0, 0.5))
        values = report.as_dict()
        self.assertEqual(list(METRIC_COLUMNS), list(values))
        self.assertGreater(values['lsd'], 0.0)
        self.assertEqual(report.lsd_bands[2], values['lsd_H'])

    def test_to_df(self) -> None:
        try:
            import pandas  # noqa: F401
        except ImportError:
            self.skipTest('pandas not installed')
        df = MetricReport(1.0, 2.0, 3.0, (4.0, 5.0, 6.0)).to_df('a.wav')
        self.assertEqual(list(METRIC_COLUMNS), list(df.columns))
        self.assertEqual(3.0, df.loc['a.wav', 'lsd'])

    def test_directories(self) -> None:
        with tempfile.TemporaryDirectory() as ref_dir, tempfile.TemporaryDirectory() as gen_dir:
            for name, seed in (('b.wav', 1), ('a.wav', 2)):
                save_wav(noise(seed, 0.3), os.path.join(ref_dir, name))
                save_wav(noise(seed, 0.3).scaled(0.5), os.path.join(gen_dir, name))
            save_wav(tone(440.0, 0.3), os.path.join(ref_dir, 'only_ref.wav'))
            with self.assertLogs('fagan.metrics', level='WARNING'):
                rows, unmatched = evaluate_directories(ref_dir, gen_dir)
        self.assertEqual(['a.wav', 'b.wav'], [name for name, _ in rows])
        self.assertEqual(['only_ref.wav'], unmatched)
        self.assertAlmostEqual(math.log10(2.0), rows[0][1].lsd, places=5)
