import os
import tempfile
import unittest
from unittest import mock

from fagan.config import DEFAULTS, RunConfig, load_run_config
from fagan.const import TrainMode
from fagan.exceptions import ConfigError
from fagan.spectral import StftConfig


class RunConfigTestCase(unittest.TestCase):
    """RunConfig test suite"""
    def test_defaults(self) -> None:
        cfg = RunConfig()
        self.assertEqual(22050, cfg['sample_rate'])
        self.assertEqual(StftConfig(1024, 1024, 256), cfg.stft_config())
        self.assertEqual((80, 0.0, None), cfg.mel_params())
        self.assertEqual(12, cfg.pqmf_bank().num_bands)
        self.assertEqual(45.0, cfg.loss_weights().lambda_mel)
        self.assertIs(TrainMode.REGRESSION, cfg.train_config().mode)
        self.assertEqual('<RunConfig defaults>', repr(cfg))

    def test_round_trip(self) -> None:
        """Test that dumps/loads reproduces every value, floats exactly."""
        cfg = RunConfig().replace(train__lr=1.0 / 3.0, mel__fmax=8000.0, stft__center=False, seed=9)
        text = cfg.dumps()
        self.assertEqual(sorted(DEFAULTS), [line.split('=')[0] for line in text.splitlines()])
        self.assertEqual(cfg, RunConfig.loads(text))
        self.assertIn('mel.fmax=none', RunConfig().dumps())

    def test_file_round_trip(self) -> None:
        cfg = RunConfig().replace(train__steps=10)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'config.txt')
            cfg.save(path)
            self.assertEqual(cfg, RunConfig.load(path))

    def test_parse(self) -> None:
        cfg = RunConfig.loads('# toy run\n\ntrain.steps = 50  # short\nstft.center=no\nmel.fmax=None\n')
        self.assertEqual(50, cfg['train.steps'])
        self.assertIs(False, cfg['stft.center'])
        self.assertIsNone(cfg['mel.fmax'])
        self.assertEqual(50, cfg.train_config().steps)

    def test_errors(self) -> None:
        bad = (
            'train.steps',            # no separator
            '=5',                     # no key
            'stft.fft=512',           # unknown key
            'seed=1\nseed=2',         # duplicate
            'train.steps=ten',        # not a number
            'stft.center=maybe',      # not a boolean
            'stft.hop_size=2048',     # hop > window
            'stft.window=kaiser',
            'pqmf.k=1',
            'pqmf.taps=95',
            'loss.lambda_mel=-1',
            'train.mode=supervised',
            'train.segment=100',
            'mel.fmax=20000',
            'sample_rate=0',
        )
        for text in bad:
            with self.subTest(text=text):
                with self.assertRaises(ConfigError):
                    RunConfig.loads(text)

    def test_error_names_key(self) -> None:
        with self.assertRaisesRegex(ConfigError, 'train.steps'):
            RunConfig.loads('train.steps=ten')

    def test_unknown_key_in_values(self) -> None:
        with self.assertRaises(ConfigError):
            RunConfig({'foo': 1})

    def test_train_config_overrides(self) -> None:
        cfg = RunConfig().train_config(steps=5, progress=True)
        self.assertEqual(5, cfg.steps)
        self.assertTrue(cfg.progress)

    def test_train_config_carries_mel_and_pqmf(self) -> None:
        cfg = RunConfig.loads('pqmf.k=8\npqmf.taps=64\npqmf.beta=8.0\nmel.fmin=300\nmel.fmax=4000\n').train_config()
        self.assertEqual((8, 64, 8.0), (cfg.pqmf_k, cfg.pqmf_taps, cfg.pqmf_beta))
        self.assertEqual((300.0, 4000.0), (cfg.fmin, cfg.fmax))

    def test_adversarial_needs_three_bands(self) -> None:
        with self.assertRaisesRegex(ConfigError, 'pqmf.k'):
            RunConfig.loads('train.mode=adversarial\npqmf.k=2\npqmf.taps=16\n')


class LoadRunConfigTestCase(unittest.TestCase):
    """load_run_config test suite"""
    def test_defaults_without_env(self) -> None:
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(RunConfig(), load_run_config())

    def test_env_fallback(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'run.txt')
            with open(path, 'w', encoding='utf-8') as fh:
                fh.write('seed=42\n')
            with mock.patch.dict(os.environ, {'FAGAN_CONFIG': path}):
                self.assertEqual(42, load_run_config()['seed'])
                self.assertEqual(0, load_run_config(os.devnull)['seed'])
