"""FAGN checkpoint container.

Layout (little-endian): magic b'FAGN', version u32, record count u32, then
per parameter: name length u32, UTF-8 name, rank u32, rank x u32 dims and
the float64 data in C order.
"""
import struct
from collections import OrderedDict
from typing import BinaryIO, Dict, Tuple

import numpy as np

from .const import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from .exceptions import CheckpointError

_U32 = struct.Struct('<I')


def save_checkpoint(params: Dict[str, np.ndarray], path: str) -> None:
    """Writes params (name -> array, iteration order kept) to path."""
    with open(path, 'wb') as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack('<II', CHECKPOINT_VERSION, len(params)))
        for name, value in params.items():
            # ascontiguousarray would promote 0-d arrays to shape (1,)
            value = np.require(np.asarray(value, dtype='<f8'), requirements='C')
            encoded = name.encode('utf-8')
            fh.write(_U32.pack(len(encoded)))
            fh.write(encoded)
            fh.write(_U32.pack(value.ndim))
            fh.write(struct.pack('<{}I'.format(value.ndim), *value.shape))
            fh.write(value.tobytes())


def _read(fh: BinaryIO, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise CheckpointError('truncated checkpoint while reading {}'.format(what))
    return data


def _read_u32(fh: BinaryIO, what: str) -> int:
    return int(_U32.unpack(_read(fh, 4, what))[0])


def load_checkpoint(path: str) -> Dict[str, np.ndarray]:
    """Reads a checkpoint written by save_checkpoint.

    Raises CheckpointError for a wrong magic, an unknown version, a
    truncated file or trailing bytes.
    """
    with open(path, 'rb') as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError('not a checkpoint: bad magic {!r}'.format(magic))
        version = _read_u32(fh, 'version')
        if version != CHECKPOINT_VERSION:
            raise CheckpointError('unsupported checkpoint version {}'.format(version))
        count = _read_u32(fh, 'record count')

        params = OrderedDict()  # type: Dict[str, np.ndarray]
        for index in range(count):
            what = 'record {}'.format(index)
            name_len = _read_u32(fh, what)
            try:
                name = _read(fh, name_len, what).decode('utf-8')
            except UnicodeDecodeError as ex:
                raise CheckpointError('invalid parameter name in {}'.format(what)) from ex
            rank = _read_u32(fh, what)
            shape = struct.unpack('<{}I'.format(rank), _read(fh, 4 * rank, what))  # type: Tuple[int, ...]
            n_values = int(np.prod(shape, dtype=np.int64))
            data = _read(fh, 8 * n_values, what)
            params[name] = np.frombuffer(data, dtype='<f8').reshape(shape).astype(np.float64)
        if fh.read(1):
            raise CheckpointError('trailing bytes after {} records'.format(count))
    return params
