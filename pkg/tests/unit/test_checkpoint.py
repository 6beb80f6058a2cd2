import os
import struct
import tempfile
import unittest
from collections import OrderedDict

import numpy as np

from fagan.checkpoint import load_checkpoint, save_checkpoint
from fagan.exceptions import CheckpointError
from fagan.models import ToyGenerator


class CheckpointTestCase(unittest.TestCase):
    """FAGN checkpoint test suite"""
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'params.fagn')

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def write(self, data: bytes) -> None:
        with open(self.path, 'wb') as fh:
            fh.write(data)

    def test_generator_state(self) -> None:
        """Test that a saved generator loads back bit-exact, order kept."""
        state = ToyGenerator(widths=(8, 4, 4), seed=3).get_state()
        save_checkpoint(state, self.path)
        loaded = load_checkpoint(self.path)
        self.assertEqual(list(state), list(loaded))
        for name in state:
            self.assertEqual(state[name].shape, loaded[name].shape)
            np.testing.assert_array_equal(state[name], loaded[name])

    def test_layout(self) -> None:
        save_checkpoint(OrderedDict([('w', np.array([[1.5, -2.0]]))]), self.path)
        with open(self.path, 'rb') as fh:
            data = fh.read()
        expected = (b'FAGN' + struct.pack('<III', 1, 1, 1) + b'w' + struct.pack('<III', 2, 1, 2)
                    + struct.pack('<2d', 1.5, -2.0))
        self.assertEqual(expected, data)

    def test_scalar_and_unicode(self) -> None:
        params = OrderedDict([('gainé', np.array(0.25)), ('empty', np.zeros((0, 3)))])
        save_checkpoint(params, self.path)
        loaded = load_checkpoint(self.path)
        self.assertEqual((), loaded['gainé'].shape)
        self.assertEqual(0.25, float(loaded['gainé']))
        self.assertEqual((0, 3), loaded['empty'].shape)

    def test_scalar_written_as_rank_zero(self) -> None:
        save_checkpoint(OrderedDict([('g', np.array(-1.5))]), self.path)
        with open(self.path, 'rb') as fh:
            data = fh.read()
        self.assertEqual(b'FAGN' + struct.pack('<III', 1, 1, 1) + b'g' + struct.pack('<Id', 0, -1.5), data)

    def test_bad_magic(self) -> None:
        self.write(b'NOPE' + struct.pack('<II', 1, 0))
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)

    def test_bad_version(self) -> None:
        self.write(b'FAGN' + struct.pack('<II', 2, 0))
        with self.assertRaisesRegex(CheckpointError, 'version'):
            load_checkpoint(self.path)

    def test_truncated(self) -> None:
        save_checkpoint({'w': np.ones(4)}, self.path)
        with open(self.path, 'rb') as fh:
            data = fh.read()
        self.write(data[:-3])
        with self.assertRaisesRegex(CheckpointError, 'truncated'):
            load_checkpoint(self.path)

    def test_trailing_bytes(self) -> None:
        save_checkpoint({'w': np.ones(2)}, self.path)
        with open(self.path, 'ab') as fh:
            fh.write(b'\x00')
        with self.assertRaisesRegex(CheckpointError, 'trailing'):
            load_checkpoint(self.path)

    def test_invalid_name(self) -> None:
        self.write(b'FAGN' + struct.pack('<III', 1, 1, 2) + b'\xff\xfe' + struct.pack('<I', 0)
                   + struct.pack('<d', 1.0))
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.path)
