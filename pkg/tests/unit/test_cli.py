import contextlib
import io
import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from fagan.audio import AudioBuffer, load_wav, save_wav
from fagan.augment import read_sidecar
from fagan.checkpoint import load_checkpoint
from fagan.cli import main
from fagan.gradcheck import GradCheckResult
from fagan.losses import MultiResConfig
from fagan.spectral import StftConfig
from fagan.training import TrainConfig, train_toy

RATE = 22050


class CliTestCase(unittest.TestCase):
    """command line interface test suite"""
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = self._tmp.name
        self.out = os.path.join(self.dir, 'out')
        self.wav = self.path('clip.wav')
        t = np.arange(RATE // 2) / RATE
        noise = 0.05 * np.random.default_rng(0).standard_normal(t.shape[0])
        save_wav(AudioBuffer(0.4 * np.sin(2 * math.pi * 220.0 * t) + noise, RATE), self.wav)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def run_cli(self, *argv: str) -> int:
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main(['--quiet', '--out-dir', self.out] + list(argv))
        self.stdout, self.stderr = stdout.getvalue(), stderr.getvalue()
        return code

    def read(self, name: str) -> str:
        with open(os.path.join(self.out, name), encoding='utf-8') as fh:
            return fh.read()

    def test_stft_and_config_echo(self) -> None:
        """Test that every run writes its effective configuration."""
        self.assertEqual(0, self.run_cli('--seed', '7', 'stft', '--input', self.wav))
        rows = self.read('clip.stft.csv').splitlines()
        self.assertEqual(1 + (RATE // 2) // 256, len(rows))
        self.assertEqual(513, len(rows[0].split(',')))
        self.assertIn('seed=7\n', self.read('config.txt'))

    def test_mel(self) -> None:
        self.assertEqual(0, self.run_cli('mel', '--input', self.wav))
        self.assertEqual(80, len(self.read('clip.mel.csv').splitlines()[0].split(',')))

    def test_spectrogram_image(self) -> None:
        self.assertEqual(0, self.run_cli('spectrogram-image', '--input', self.wav, '--db-range', '60'))
        with open(os.path.join(self.out, 'clip.pgm'), 'rb') as fh:
            self.assertEqual(b'P5', fh.read(2))

    def test_metrics_files(self) -> None:
        gen = self.path('gen.wav')
        save_wav(load_wav(self.wav).scaled(0.5), gen)
        self.assertEqual(0, self.run_cli('metrics', '--ref', self.wav, '--gen', gen))
        lines = self.read('metrics.csv').splitlines()
        self.assertEqual('file,mcd,f0_rmse,lsd,lsd_L,lsd_M,lsd_H', lines[0])
        self.assertTrue(lines[1].startswith('gen.wav,'))
        self.assertIn('gen.wav', self.stdout)

    def test_metrics_directories(self) -> None:
        ref_dir, gen_dir = self.path('ref'), self.path('gen')
        os.makedirs(ref_dir)
        os.makedirs(gen_dir)
        for name in ('b.wav', 'a.wav'):
            save_wav(load_wav(self.wav), os.path.join(ref_dir, name))
            save_wav(load_wav(self.wav), os.path.join(gen_dir, name))
        save_wav(load_wav(self.wav), os.path.join(gen_dir, 'extra.wav'))
        self.assertEqual(0, self.run_cli('metrics', '--ref', ref_dir, '--gen', gen_dir))
        names = [line.split(',')[0] for line in self.read('metrics.csv').splitlines()[1:]]
        self.assertEqual(['a.wav', 'b.wav'], names)
        self.assertIn('extra.wav', self.stderr)

    def test_metrics_mixed_arguments(self) -> None:
        self.assertEqual(2, self.run_cli('metrics', '--ref', self.dir, '--gen', self.wav))
        self.assertTrue(self.stderr.startswith('fagan: error:'))

    def test_loss(self) -> None:
        self.assertEqual(0, self.run_cli('loss', 'ri', '--ref', self.wav, '--gen', self.wav))
        values = dict(line.split(',') for line in self.read('loss_ri.csv').splitlines()[1:])
        self.assertEqual(['real_l1', 'imag_l1', 'magnitude_l1', 'spectral_convergence', 'total', 'mr_ri'],
                         list(values))
        self.assertEqual(0.0, float(values['total']))

    def test_pqmf_round_trip(self) -> None:
        self.assertEqual(0, self.run_cli('pqmf', 'split', '--input', self.wav))
        bands = [os.path.join(self.out, 'clip.band{:02d}.wav'.format(k)) for k in range(12)]
        self.assertEqual(round(RATE / 12), load_wav(bands[0]).sample_rate)
        params = read_sidecar(bands[3])
        self.assertEqual(3, params['band'])
        self.assertEqual(RATE // 2, params['source_len'])

        self.assertEqual(0, self.run_cli('pqmf', 'merge', '--bands', *bands))
        merged = load_wav(os.path.join(self.out, 'clip.merged.wav'))
        original = load_wav(self.wav)
        self.assertEqual((len(original), RATE), (len(merged), merged.sample_rate))
        inner = slice(200, -200)
        error = np.sum((merged.samples[inner] - original.samples[inner]) ** 2)
        self.assertLess(error / np.sum(original.samples[inner] ** 2), 1e-2)

    def test_pqmf_merge_needs_every_band(self) -> None:
        self.run_cli('pqmf', 'split', '--input', self.wav)
        band = os.path.join(self.out, 'clip.band00.wav')
        self.assertEqual(3, self.run_cli('pqmf', 'merge', '--bands', band))

    def test_augment_noise(self) -> None:
        self.assertEqual(0, self.run_cli('--seed', '3', 'augment', 'noise', '--input', self.wav, '--snr', '30'))
        path = os.path.join(self.out, 'clip.noise.wav')
        self.assertEqual(len(load_wav(self.wav)), len(load_wav(path)))
        params = read_sidecar(path)
        self.assertEqual(30, params['snr_db'])
        self.assertEqual(3, params['seed'])
        self.assertEqual('noise', params['kind'])

    def test_augment_codec_proxy(self) -> None:
        self.assertEqual(0, self.run_cli('augment', 'codec', '--input', self.wav, '--bits', '6'))
        self.assertEqual(6, read_sidecar(os.path.join(self.out, 'clip.codec.wav'))['bits'])

    def test_upsample_demo(self) -> None:
        self.assertEqual(0, self.run_cli('upsample-demo', '--tone', '1000', '--stride', '4'))
        rows = [line.split(',') for line in self.read('aliasing.csv').splitlines()]
        self.assertEqual(['tone_hz', 'mode', 'aliasing_db'], rows[0])
        levels = {row[1]: float(row[2]) for row in rows[1:]}
        self.assertEqual({'plain', 'twin', 'twin_lowpass'}, set(levels))
        self.assertGreaterEqual(levels['plain'] - levels['twin_lowpass'], 20.0)
        for name in ('plain.wav', 'twin_lowpass.wav', 'plain.pgm', 'twin_lowpass.pgm'):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)), name)

    def test_upsample_demo_bad_tone(self) -> None:
        self.assertEqual(2, self.run_cli('upsample-demo', '--tone', '4000', '--stride', '4'))

    def test_train_toy(self) -> None:
        cfg = TrainConfig(steps=2, batch=1, segment=256, widths=(8, 4, 4), held_out=1, eval_every=0,
                          stft=StftConfig(64, 64, 16), n_mels=16,
                          resolutions=MultiResConfig([StftConfig(64, 64, 16), StftConfig(32, 32, 8)]))
        result = train_toy(cfg=cfg, return_generator=True)
        with mock.patch('fagan.cli.train_toy', return_value=result) as train:
            self.assertEqual(0, self.run_cli('train-toy', '--steps', '2'))
        self.assertEqual(2, train.call_args[0][1].steps)
        self.assertEqual(3, len(self.read('history.csv').splitlines()))
        self.assertEqual(3, len(self.read('eval.csv').splitlines()))
        self.assertEqual(set(result[1].get_state()),
                         set(load_checkpoint(os.path.join(self.out, 'generator.fagn'))))

    def test_grad_check(self) -> None:
        passing = [GradCheckResult('conv1d', {'conv1d.weight': 1e-7})]
        with mock.patch('fagan.cli.run_grad_suite', return_value=passing):
            self.assertEqual(0, self.run_cli('grad-check'))
        self.assertIn('conv1d', self.read('grad_check.csv'))

        failing = passing + [GradCheckResult('tanh', {'input': 0.5})]
        with mock.patch('fagan.cli.run_grad_suite', return_value=failing):
            self.assertEqual(4, self.run_cli('grad-check'))
        self.assertIn('tanh', self.stderr)

    def test_input_errors(self) -> None:
        self.assertEqual(3, self.run_cli('stft', '--input', self.path('missing.wav')))
        with open(self.path('bad.wav'), 'wb') as fh:
            fh.write(b'RIFF0000WAVEjunk')
        self.assertEqual(3, self.run_cli('stft', '--input', self.path('bad.wav')))

    def test_bad_config(self) -> None:
        config = self.path('run.txt')
        with open(config, 'w', encoding='utf-8') as fh:
            fh.write('stft.hop_size=0\n')
        self.assertEqual(2, self.run_cli('--config', config, 'stft', '--input', self.wav))
        self.assertIn('stft.hop_size', self.stderr)

    def test_bad_arguments_exit_with_usage_code(self) -> None:
        """Argument values rejected by the library return 2 instead of a traceback."""
        cases = (
            ('augment', 'pitch', '--input', self.wav, '--ratio', '0'),
            ('augment', 'noise', '--input', self.wav, '--snr', 'nan'),
            ('augment', 'codec', '--input', self.wav, '--bits', '1'),
            ('upsample-demo', '--stride', '0'),
            ('upsample-demo', '--duration', '0'),
        )
        for argv in cases:
            with self.subTest(argv=argv):
                self.assertEqual(2, self.run_cli(*argv))
                self.assertTrue(self.stderr.startswith('fagan: error:'))

    def test_usage_errors(self) -> None:
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(['--out-dir', self.out])
        self.assertEqual(2, ctx.exception.code)
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit) as ctx:
                main(['augment', 'reverb', '--input', self.wav])
        self.assertEqual(2, ctx.exception.code)
