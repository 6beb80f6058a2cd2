import unittest
from collections import OrderedDict

import numpy as np

from fagan.exceptions import ShapeMismatchError
from fagan.optim import Adam, AdamState, adam_step
from fagan.tensor import Tensor


class AdamTestCase(unittest.TestCase):
    """Adam optimizer test suite"""
    def test_first_step(self) -> None:
        """Test that the first bias-corrected step moves by lr against the gradient sign."""
        state = AdamState(lr=1e-3)
        params = {'w': np.array([1.0, -2.0])}
        out = adam_step(params, {'w': np.array([0.5, -0.25])}, state)
        np.testing.assert_allclose([1.0 - 1e-3, -2.0 + 1e-3], out['w'], rtol=0, atol=1e-10)
        np.testing.assert_array_equal([1.0, -2.0], params['w'])
        self.assertEqual(1, state.t)

    def test_zero_gradient(self) -> None:
        state = AdamState()
        params = {'w': np.array([0.3, 0.7])}
        for _ in range(3):
            params = adam_step(params, {'w': np.zeros(2)}, state)
        np.testing.assert_array_equal([0.3, 0.7], params['w'])
        self.assertEqual(3, state.t)

    def test_deterministic(self) -> None:
        def run() -> np.ndarray:
            rng = np.random.default_rng(0)
            state = AdamState(lr=1e-2)
            params = OrderedDict([('a', np.ones(3)), ('b', np.zeros((2, 2)))])
            for _ in range(100):
                grads = OrderedDict((k, rng.standard_normal(v.shape)) for k, v in params.items())
                params = adam_step(params, grads, state)
            return np.concatenate([v.ravel() for v in params.values()])
        np.testing.assert_array_equal(run(), run())

    def test_minimizes_quadratic(self) -> None:
        state = AdamState(lr=0.05)
        params = {'w': np.array([3.0, -4.0])}
        for _ in range(500):
            params = adam_step(params, {'w': 2.0 * params['w']}, state)
        self.assertLess(np.max(np.abs(params["w"])), 0.2)

    def test_validation(self) -> None:
        with self.assertRaises(ValueError):
            AdamState(lr=0.0)
        with self.assertRaises(ValueError):
            AdamState(beta1=1.0)
        with self.assertRaises(ShapeMismatchError):
            adam_step({'w': np.zeros(2)}, {'w': np.zeros(3)}, AdamState())

    def test_in_place_wrapper(self) -> None:
        tensor = Tensor([1.0])
        opt = Adam(OrderedDict([('w', tensor)]), lr=1e-3)
        tensor.accumulate(np.array([2.0]))
        opt.step()
        self.assertAlmostEqual(1.0 - 1e-3, float(tensor.data[0]), places=9)
        opt.zero_grad()
        self.assertEqual(0.0, float(tensor.grad[0]))
