"""
Dense matrix files

Each block is a 16-byte header (8-byte magic ``UBMMAT01``, uint32 rows,
uint32 cols, little-endian) followed by rows*cols row-major float64 values.
A file may hold several blocks back to back.
"""

from pathlib import Path
from typing import BinaryIO, List, Sequence, Union

import numpy as np

from ..core.exceptions import InvalidArgumentError

MAGIC = b"UBMMAT01"
HEADER_DTYPE = np.dtype("<u4")
VALUE_DTYPE = np.dtype("<f8")


def write_matrix(f: BinaryIO, matrix: np.ndarray) -> None:
    """Append one header-prefixed block to an open binary file."""
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim == 1:
        array = array[None, :]
    if array.ndim != 2:
        raise InvalidArgumentError(f"only 2-D matrices can be written, got shape {array.shape}")
    f.write(MAGIC)
    f.write(np.array(array.shape, dtype=HEADER_DTYPE).tobytes())
    f.write(np.ascontiguousarray(array, dtype=VALUE_DTYPE).tobytes())


def read_matrix(f: BinaryIO) -> np.ndarray:
    """Read the next block from an open binary file."""
    magic = f.read(len(MAGIC))
    if magic != MAGIC:
        raise InvalidArgumentError(f"bad matrix header {magic!r}")
    rows, cols = np.frombuffer(f.read(8), dtype=HEADER_DTYPE)
    count = int(rows) * int(cols)
    payload = f.read(count * VALUE_DTYPE.itemsize)
    if len(payload) != count * VALUE_DTYPE.itemsize:
        raise InvalidArgumentError(f"truncated matrix block, expected {rows}x{cols} values")
    return np.frombuffer(payload, dtype=VALUE_DTYPE).reshape(int(rows), int(cols)).copy()


def save_matrices(path: Union[str, Path], matrices: Sequence[np.ndarray]) -> Path:
    path = Path(path)
    with open(path, "wb") as f:
        for matrix in matrices:
            write_matrix(f, matrix)
    return path


def load_matrices(path: Union[str, Path]) -> List[np.ndarray]:
    path = Path(path)
    size = path.stat().st_size
    blocks = []
    with open(path, "rb") as f:
        while f.tell() < size:
            blocks.append(read_matrix(f))
    return blocks


def save_matrix(path: Union[str, Path], matrix: np.ndarray) -> Path:
    return save_matrices(path, [matrix])


def load_matrix(path: Union[str, Path]) -> np.ndarray:
    blocks = load_matrices(path)
    if len(blocks) != 1:
        raise InvalidArgumentError(f"{path} holds {len(blocks)} matrices, expected 1")
    return blocks[0]
