import os
import tempfile
import unittest

import numpy as np
from scipy.io import wavfile

from fagan.audio import AudioBuffer, load_wav, save_wav
from fagan.exceptions import AudioFormatError, NumericalError


class AudioTestCase(unittest.TestCase):
    """AudioBuffer and WAV i/o test suite"""
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = self._tmp.name

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def test_buffer_rejects_non_finite(self) -> None:
        """Test that NaN samples and non-positive rates are refused."""
        with self.assertRaises(NumericalError):
            AudioBuffer([0.0, float('nan')], 16000)
        with self.assertRaises(ValueError):
            AudioBuffer([0.0], 0)
        with self.assertRaises(ValueError):
            AudioBuffer(np.zeros((2, 2)), 16000)

    def test_buffer_properties(self) -> None:
        buffer = AudioBuffer(np.zeros(22050), 22050)
        self.assertEqual(22050, len(buffer))
        self.assertAlmostEqual(1.0, buffer.duration)
        self.assertEqual(np.float64, buffer.samples.dtype)
        self.assertEqual('<AudioBuffer samples=22050 sample_rate=22050>', repr(buffer))

    def test_pcm16_mapping(self) -> None:
        """Test that PCM-16 values are divided by 32768."""
        wavfile.write(self.path('a.wav'), 16000, np.array([0, 16384, -32768], dtype=np.int16))
        buffer = load_wav(self.path('a.wav'))
        np.testing.assert_array_equal([0.0, 0.5, -1.0], buffer.samples)
        self.assertEqual(16000, buffer.sample_rate)

    def test_float32_round_trip(self) -> None:
        """Test that save then load of float32 samples is bit-exact."""
        samples = np.random.default_rng(1).uniform(-1, 1, 1000).astype(np.float32).astype(np.float64)
        save_wav(AudioBuffer(samples, 22050), self.path('b.wav'))
        loaded = load_wav(self.path('b.wav'))
        np.testing.assert_array_equal(samples, loaded.samples)
        self.assertEqual(22050, loaded.sample_rate)

    def test_pcm16_save(self) -> None:
        """Test that pcm16 output rounds and clips."""
        save_wav(AudioBuffer([0.0, 0.5, -1.0, 1.5], 8000), self.path('c.wav'), format='pcm16')
        _, data = wavfile.read(self.path('c.wav'))
        self.assertEqual(np.int16, data.dtype)
        np.testing.assert_array_equal([0, 16384, -32768, 32767], data)

    def test_stereo_mixdown(self) -> None:
        """Test that a stereo file becomes the mean of its channels."""
        left = np.array([1000, -2000, 300, 0], dtype=np.int16)
        right = np.array([3000, 2000, -300, 32767], dtype=np.int16)
        wavfile.write(self.path('s.wav'), 44100, np.stack([left, right], axis=1))
        buffer = load_wav(self.path('s.wav'))
        expected = (left.astype(np.float64) + right.astype(np.float64)) / 2.0 / 32768.0
        self.assertEqual(44100, buffer.sample_rate)
        self.assertEqual(4, len(buffer))
        np.testing.assert_allclose(expected, buffer.samples, rtol=0, atol=1e-15)

    def test_load_errors(self) -> None:
        """Test that malformed, unsupported and empty files raise AudioFormatError."""
        with open(self.path('bad.wav'), 'wb') as handle:
            handle.write(b'this is not a riff file at all')
        with self.assertRaises(AudioFormatError):
            load_wav(self.path('bad.wav'))

        wavfile.write(self.path('u8.wav'), 8000, np.array([0, 128, 255], dtype=np.uint8))
        with self.assertRaises(AudioFormatError) as ctx:
            load_wav(self.path('u8.wav'))
        self.assertIn('unsupported codec', str(ctx.exception))

        wavfile.write(self.path('empty.wav'), 8000, np.zeros(0, dtype=np.int16))
        with self.assertRaises(AudioFormatError):
            load_wav(self.path('empty.wav'))
