"""Long-running toy training acceptance suite

These runs take minutes each and are skipped unless FAGAN_LONG_TESTS is set.
"""
import contextlib
import io
import math
import os
import tempfile
import unittest

import numpy as np

from fagan.cli import main
from fagan.const import GRAD_TOLERANCE, LONG_TESTS_ENV
from fagan.gradcheck import run_grad_suite
from fagan.training import TrainConfig, run_ablation, train_toy
from fagan.utils import convert_string_type

LONG_TESTS = bool(os.getenv(LONG_TESTS_ENV))
FIXTURES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'fixtures')


def read_baseline(name: str) -> dict:
    """Reads a key=value fixture, skipping blank and comment lines."""
    values = {}
    with open(os.path.join(FIXTURES, name), encoding='utf-8') as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith('#'):
                key, _, value = line.partition('=')
                values[key.strip()] = convert_string_type(value.strip())
    return values


@unittest.skipUnless(LONG_TESTS, 'set {} to run the long acceptance runs'.format(LONG_TESTS_ENV))
class RegressionAcceptanceTestCase(unittest.TestCase):
    """regression training acceptance suite"""
    def test_lowers_held_out_mel_loss(self) -> None:
        baseline = read_baseline('regression_baseline.txt')
        report = train_toy(cfg=TrainConfig(seed=baseline['seed'], steps=baseline['steps']))
        window = baseline['window']
        self.assertLess(report.moving_average(baseline['steps'], window),
                        report.moving_average(baseline['early_step'], window))
        self.assertLessEqual(report.final_eval['mel'], baseline['max_mel_ratio'] * report.initial_eval['mel'])

    def test_bit_identical_rerun(self) -> None:
        cfg = TrainConfig(steps=200, seed=3, eval_every=0)
        a, b = train_toy(cfg=cfg), train_toy(cfg=cfg)
        np.testing.assert_array_equal(a.losses(), b.losses())
        self.assertEqual(a.final_eval, b.final_eval)


@unittest.skipUnless(LONG_TESTS, 'set {} to run the long acceptance runs'.format(LONG_TESTS_ENV))
class AblationAcceptanceTestCase(unittest.TestCase):
    """paired ablation direction suite"""
    def test_plain_upsampling_raises_high_band_lsd(self) -> None:
        report = run_ablation(TrainConfig(seed=0, eval_every=0), 'tdconv')
        self.assertGreaterEqual(report.ablated.final_eval['lsd_high'], report.baseline.final_eval['lsd_high'])

    def test_dropping_mr_ri_raises_lsd(self) -> None:
        report = run_ablation(TrainConfig(seed=0, eval_every=0), 'mrri')
        self.assertGreater(report.ablated.final_eval['lsd'], report.baseline.final_eval['lsd'])


@unittest.skipUnless(LONG_TESTS, 'set {} to run the long acceptance runs'.format(LONG_TESTS_ENV))
class AdversarialAcceptanceTestCase(unittest.TestCase):
    """adversarial training acceptance suite"""
    def test_runs_without_divergence(self) -> None:
        cfg = TrainConfig(mode='adversarial', steps=500, batch=2, segment=2048, eval_every=0)
        report = train_toy(cfg=cfg)
        self.assertEqual(500, len(report.history))
        self.assertTrue(np.all(np.isfinite(report.losses())))
        self.assertTrue(all(math.isfinite(value) for value in report.final_eval.values()))


@unittest.skipUnless(LONG_TESTS, 'set {} to run the long acceptance runs'.format(LONG_TESTS_ENV))
class GradSuiteAcceptanceTestCase(unittest.TestCase):
    """full gradient check suite"""
    def test_suite_over_seeds(self) -> None:
        for result in run_grad_suite(seeds=range(5)):
            with self.subTest(case=result.name):
                self.assertLessEqual(result.max_error, GRAD_TOLERANCE)

    def test_through_cli(self) -> None:
        with tempfile.TemporaryDirectory() as out:
            with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
                code = main(['--quiet', '--out-dir', out, 'grad-check', '--seeds', '3'])
            self.assertEqual(0, code)
            self.assertTrue(os.path.exists(os.path.join(out, 'grad_check.csv')))
