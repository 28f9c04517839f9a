"""IDX (MNIST) container reader and writer.

Layout, big-endian: two zero bytes, a type code (0x08 = uint8), the number
of dimensions, one uint32 per dimension, then the raw data.
"""

import gzip
import struct

import numpy as np

from .errors import BadMagicError, CountMismatchError, TruncatedFileError
from .targets import LabeledDataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _open(path, mode="rb"):
    path = str(path)
    return gzip.open(path, mode) if path.endswith(".gz") else open(path, mode)


def read_idx(path, expected_magic: int) -> np.ndarray:
    with _open(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: missing IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise BadMagicError(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFileError(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header < count:
        raise TruncatedFileError(f"{path}: expected {count} data bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def write_idx(path, array) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x0800 | array.ndim
    with _open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{array.ndim}I", *array.shape))
        f.write(array.tobytes())


def load_mnist_idx(images_path, labels_path, num_classes: int = 10) -> LabeledDataset:
    """Pixels scaled to [0, 1], flattened, with a trailing bias feature of 1."""
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    n = images.shape[0]
    pixels = images.reshape(n, -1).astype(float) / 255.0
    features = np.hstack([pixels, np.ones((n, 1))])
    return LabeledDataset(features, labels.astype(np.int64), num_classes=num_classes)
