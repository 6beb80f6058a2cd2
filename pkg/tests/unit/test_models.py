import unittest
from collections import OrderedDict
from typing import Dict

import numpy as np

from fagan.audio import AudioBuffer
from fagan.exceptions import ShapeMismatchError, SignalTooShortError
from fagan.gradcheck import Objective, grad_check
from fagan.models import DiscriminatorBank, ToyGenerator, discriminate, polyphase_split
from fagan.spectral import StftConfig
from fagan.tensor import Tensor

SMALL_RESOLUTIONS = (StftConfig(64, 64, 16), StftConfig(32, 32, 8))


def small_bank(seed: int = 0) -> DiscriminatorBank:
    return DiscriminatorBank(SMALL_RESOLUTIONS, global_channels=3, local_channels=4, seed=seed)


class BankObjective(Objective):
    """sum of seeded weights times every score and feature map of the bank"""

    def __init__(self, bank: DiscriminatorBank, samples: np.ndarray, seed: int = 0) -> None:
        self.bank = bank
        self.signal = Tensor(samples)
        rng = np.random.default_rng(seed)
        self.weights = [(rng.standard_normal(out.score.shape), [rng.standard_normal(f.shape) for f in out.features])
                        for out in bank.forward(samples)]

    def tensors(self) -> Dict[str, Tensor]:
        return OrderedDict([('signal', self.signal)])

    def loss(self) -> float:
        total = 0.0
        for out, (g_score, g_feats) in zip(self.bank.forward(self.signal.data), self.weights):
            total += float(np.sum(g_score * out.score))
            total += sum(float(np.sum(g * f)) for g, f in zip(g_feats, out.features))
        return total

    def backward(self) -> None:
        self.bank.forward(self.signal.data)
        self.signal.accumulate(self.bank.backward(self.weights))


class PolyphaseTestCase(unittest.TestCase):
    """polyphase_split test suite"""
    def test_split(self) -> None:
        x = np.arange(32.0)
        split = polyphase_split(x)
        self.assertEqual((16, 2), split.shape)
        np.testing.assert_array_equal([0.0, 16.0], split[0])
        np.testing.assert_array_equal([15.0, 31.0], split[15])

    def test_bad_length(self) -> None:
        with self.assertRaises(ShapeMismatchError):
            polyphase_split(np.zeros(20))
        with self.assertRaises(ShapeMismatchError):
            polyphase_split(np.zeros((2, 16)))


class GeneratorTestCase(unittest.TestCase):
    """ToyGenerator test suite"""
    def setUp(self) -> None:
        self.x = np.random.default_rng(0).standard_normal(128) * 0.3

    def test_output_length_and_range(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4))
        y = gen.generate(self.x)
        self.assertEqual((128,), y.shape)
        self.assertTrue(np.all(np.abs(y) < 1.0))
        self.assertEqual(16, gen.upsample_factor)

    def test_zero_input(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4))
        np.testing.assert_array_equal(np.zeros(64), gen.generate(np.zeros(64)))

    def test_deterministic(self) -> None:
        a = ToyGenerator(widths=(8, 4, 4), seed=3).generate(AudioBuffer(self.x, 22050))
        b = ToyGenerator(widths=(8, 4, 4), seed=3).generate(self.x)
        c = ToyGenerator(widths=(8, 4, 4), seed=4).generate(self.x)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_plain_upsampler(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4), upsampler='plain')
        self.assertEqual((128,), gen.generate(self.x).shape)
        self.assertNotIn('twin', type(gen.layers[2]).__name__.lower())
        with self.assertRaises(ValueError):
            ToyGenerator(upsampler='nearest')
        with self.assertRaises(ValueError):
            ToyGenerator(widths=(8, 4))

    def test_state_round_trip(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4), seed=1)
        other = ToyGenerator(widths=(8, 4, 4), seed=2)
        other.load_state(gen.get_state())
        np.testing.assert_array_equal(gen.generate(self.x), other.generate(self.x))
        self.assertEqual(gen.num_parameters(), sum(v.size for v in gen.get_state().values()))

    def test_load_state_errors(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4))
        state = gen.get_state()
        state.pop('stem.bias')
        with self.assertRaises(KeyError):
            gen.load_state(state)
        state = gen.get_state()
        state['stem.bias'] = np.zeros(3)
        with self.assertRaises(ShapeMismatchError):
            gen.load_state(state)

    def test_backward_shape(self) -> None:
        gen = ToyGenerator(widths=(8, 4, 4))
        cond = Tensor(polyphase_split(self.x))
        y = gen.forward(cond)
        grad = gen.backward(np.ones_like(y))
        self.assertEqual(cond.shape, grad.shape)
        self.assertTrue(any(np.any(t.grad != 0) for t in gen.parameters().values()))
        gen.zero_grad()
        self.assertTrue(all(np.all(t.grad == 0) for t in gen.parameters().values()))


class DiscriminatorTestCase(unittest.TestCase):
    """DiscriminatorBank test suite"""
    def test_order_and_shapes(self) -> None:
        bank = small_bank()
        n = 200
        outputs = discriminate(bank, np.random.default_rng(1).standard_normal(n))
        self.assertEqual(['global_64', 'global_32', 'local_low', 'local_mid', 'local_high'],
                         [out.name for out in outputs])
        self.assertEqual(bank.score_shapes(n), [out.score.shape for out in outputs])
        self.assertEqual((1, 17), outputs[-1].score.shape)
        self.assertEqual([4, 4, 3, 3, 3], [len(out.features) for out in outputs])

    def test_zero_input_scores_zero(self) -> None:
        for out in small_bank().forward(np.zeros(128)):
            np.testing.assert_array_equal(np.zeros_like(out.score), out.score)

    def test_too_short(self) -> None:
        bank = small_bank()
        self.assertEqual(64, bank.min_length)
        with self.assertRaises(SignalTooShortError):
            bank.forward(np.zeros(63))

    def test_deterministic(self) -> None:
        a, b = small_bank(5).get_state(), small_bank(5).get_state()
        self.assertEqual(list(a), list(b))
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_backward_matches_numeric(self) -> None:
        """Test the signal gradient through the STFT and PQMF front ends.

        The activations are made linear so the check is free of kinks.
        """
        bank = small_bank(2)
        for disc in bank.discriminators:
            for act in disc.acts:
                act.slope = 1.0
        samples = np.random.default_rng(3).standard_normal(128)
        result = grad_check(BankObjective(bank, samples, 4), name='bank')
        self.assertLessEqual(result.max_error, 1e-4)

    def test_backward_needs_every_output(self) -> None:
        bank = small_bank()
        outputs = bank.forward(np.zeros(128))
        with self.assertRaises(ShapeMismatchError):
            bank.backward([(np.zeros_like(outputs[0].score), [])])
