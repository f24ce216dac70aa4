# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Dataset containers and loaders for MNIST, CIFAR-10 and SVHN.

Images are float arrays of shape (N, w, h, c): axis 1 runs horizontally
(x, left to right) and axis 2 vertically (y, top to bottom). All three
on-disk formats store rows first, so the readers transpose.

Pixels are scaled to [0, 1] by dividing by 255.
"""

import gzip
import hashlib
import logging
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from renet.errors import FormatError, ShapeError
from renet.numerics import make_rng

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 1 + 32 * 32 * 3
SVHN_MAGIC = b"RNSV"
SVHN_VERSION = 1
SVHN_HEADER = struct.Struct("<4sIIIII")


@dataclass(frozen=True)
class DatasetMeta:
    """Static description of a dataset"""

    name: str
    width: int
    height: int
    channels: int
    num_classes: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.width, self.height, self.channels)


@dataclass
class Dataset:
    """Images (N, w, h, c), integer labels (N,) and metadata for one split"""

    images: np.ndarray
    labels: np.ndarray
    meta: DatasetMeta
    split: str = "train"

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.shape[1:] != self.meta.shape:
            raise ShapeError(
                f"{self.meta.name} images have shape {self.images.shape[1:]}, "
                f"expected {self.meta.shape}"
            )
        if self.images.shape[0] != self.labels.shape[0]:
            raise ShapeError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.meta.num_classes
        ):
            raise FormatError(
                f"{self.meta.name} labels outside [0, {self.meta.num_classes})", 0
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    def with_images(self, images: np.ndarray) -> "Dataset":
        return replace(self, images=images)

    def take(self, indices: np.ndarray) -> "Dataset":
        return replace(self, images=self.images[indices], labels=self.labels[indices])


class DatasetSplits(NamedTuple):
    train: Dataset
    valid: Dataset
    test: Dataset


MNIST_META = DatasetMeta("mnist", 28, 28, 1, 10)
CIFAR10_META = DatasetMeta("cifar10", 32, 32, 3, 10)
SVHN_META = DatasetMeta("svhn", 32, 32, 3, 10)


def fingerprint(array: np.ndarray) -> str:
    """sha256 of the array's shape, dtype and bytes"""
    digest = hashlib.sha256()
    digest.update(str((array.shape, str(array.dtype))).encode("ascii"))
    digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.exists() and Path(f"{path}.gz").exists():
        path = Path(f"{path}.gz")
    if not path.exists():
        raise FileNotFoundError(f"Dataset file '{path}' was not found.")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as handle:
            return handle.read()
    return path.read_bytes()


# IDX (MNIST)


def parse_idx(raw: bytes, expected_magic: int) -> np.ndarray:
    """Decode an IDX unsigned-byte array

    Args:
        raw (bytes): File contents
        expected_magic (int): 0x00000803 for images, 0x00000801 for labels

    Returns:
        np.ndarray: uint8 array with the dimensions stored in the header
    """
    if len(raw) < 4:
        raise FormatError("IDX file shorter than its magic number", len(raw))
    (magic,) = struct.unpack_from(">I", raw, 0)
    if magic != expected_magic:
        raise FormatError(
            f"Bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}", 0
        )
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError("IDX header truncated", len(raw))
    dims = struct.unpack_from(f">{ndim}I", raw, 4)
    count = int(np.prod(dims))
    if len(raw) != header_end + count:
        raise FormatError(
            f"IDX payload has {len(raw) - header_end} bytes, dims {dims} need {count}",
            min(len(raw), header_end + count),
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(dims)


def encode_idx(array: np.ndarray) -> bytes:
    """Encode a uint8 array as IDX (1 or 3 dimensions)"""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    header = struct.pack(f">I{array.ndim}I", magic, *array.shape)
    return header + array.tobytes()


def read_idx(path: PathLike, expected_magic: int) -> np.ndarray:
    return parse_idx(_read_bytes(path), expected_magic)


def write_idx(path: PathLike, array: np.ndarray) -> None:
    Path(path).write_bytes(encode_idx(array))


def load_mnist(
    path: PathLike, valid_size: int = 10000, dtype=np.float32
) -> DatasetSplits:
    """Load MNIST from the four IDX files in ``path``

    The last ``valid_size`` samples of the 60k training file form the
    validation split (50k/10k/10k for the standard files).
    """
    path = Path(path)
    splits = {}
    for prefix in ("train", "t10k"):
        images = read_idx(path / f"{prefix}-images-idx3-ubyte", IDX_IMAGES_MAGIC)
        labels = read_idx(path / f"{prefix}-labels-idx1-ubyte", IDX_LABELS_MAGIC)
        if images.shape[0] != labels.shape[0]:
            raise FormatError(
                f"{prefix}: {images.shape[0]} images but {labels.shape[0]} labels", 4
            )
        # (N, rows, cols) -> (N, w, h, 1)
        splits[prefix] = (images.transpose(0, 2, 1)[..., None], labels)
    train_images, train_labels = splits["train"]
    test_images, test_labels = splits["t10k"]
    meta = replace(MNIST_META, width=train_images.shape[1], height=train_images.shape[2])
    return _split_train_valid(
        meta, train_images, train_labels, test_images, test_labels, valid_size, dtype
    )


def _scale(images: np.ndarray, dtype) -> np.ndarray:
    return (images.astype(np.float64) / 255.0).astype(dtype)


def _split_train_valid(
    meta: DatasetMeta,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    test_images: np.ndarray,
    test_labels: np.ndarray,
    valid_size: int,
    dtype,
) -> DatasetSplits:
    if not 0 < valid_size < train_images.shape[0]:
        raise ShapeError(
            f"valid_size {valid_size} must be between 1 and {train_images.shape[0] - 1}"
        )
    cut = train_images.shape[0] - valid_size
    logger.info(
        "Loaded %s: %d train, %d valid, %d test", meta.name, cut, valid_size, len(test_labels)
    )
    return DatasetSplits(
        train=Dataset(_scale(train_images[:cut], dtype), train_labels[:cut], meta, "train"),
        valid=Dataset(_scale(train_images[cut:], dtype), train_labels[cut:], meta, "valid"),
        test=Dataset(_scale(test_images, dtype), test_labels, meta, "test"),
    )


# CIFAR-10 binary batches


def parse_cifar_batch(raw: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Decode 3073-byte records: label, then R, G, B planes of 32 x 32 rows

    Returns:
        tuple: uint8 images (N, w, h, 3) and labels (N,)
    """
    if len(raw) % CIFAR_RECORD_BYTES:
        offset = len(raw) - len(raw) % CIFAR_RECORD_BYTES
        raise FormatError(
            f"CIFAR batch length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}", offset
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.nonzero(labels >= 10)[0]
    if bad.size:
        raise FormatError(f"CIFAR label {labels[bad[0]]} out of range", int(bad[0]) * CIFAR_RECORD_BYTES)
    planes = records[:, 1:].reshape(-1, 3, 32, 32)
    return planes.transpose(0, 3, 2, 1), labels


def encode_cifar_batch(images: np.ndarray, labels: np.ndarray) -> bytes:
    planes = np.ascontiguousarray(np.asarray(images, dtype=np.uint8).transpose(0, 3, 2, 1))
    records = np.concatenate(
        [np.asarray(labels, dtype=np.uint8)[:, None], planes.reshape(len(labels), -1)], axis=1
    )
    return records.tobytes()


def read_cifar_batch(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    return parse_cifar_batch(_read_bytes(path))


def write_cifar_batch(path: PathLike, images: np.ndarray, labels: np.ndarray) -> None:
    Path(path).write_bytes(encode_cifar_batch(images, labels))


def load_cifar10(path: PathLike, dtype=np.float32) -> DatasetSplits:
    """Batches 1-4 train, batch 5 valid, test_batch test (40k/10k/10k)"""
    path = Path(path)
    train = [read_cifar_batch(path / f"data_batch_{index}.bin") for index in range(1, 5)]
    valid_images, valid_labels = read_cifar_batch(path / "data_batch_5.bin")
    test_images, test_labels = read_cifar_batch(path / "test_batch.bin")
    train_images = np.concatenate([images for images, _ in train])
    train_labels = np.concatenate([labels for _, labels in train])
    logger.info(
        "Loaded cifar10: %d train, %d valid, %d test",
        len(train_labels), len(valid_labels), len(test_labels),
    )
    return DatasetSplits(
        train=Dataset(_scale(train_images, dtype), train_labels, CIFAR10_META, "train"),
        valid=Dataset(_scale(valid_images, dtype), valid_labels, CIFAR10_META, "valid"),
        test=Dataset(_scale(test_images, dtype), test_labels, CIFAR10_META, "test"),
    )


# SVHN converted container


def encode_svhn_container(images: np.ndarray, labels: np.ndarray) -> bytes:
    """Header {"RNSV", version, N, w, h, c} then (label u8, RGB planes) records"""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels)
    n, w, h, c = images.shape
    if labels.shape != (n,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= 10:
        raise FormatError("SVHN labels must be n integers in [0, 10)", 0)
    header = SVHN_HEADER.pack(SVHN_MAGIC, SVHN_VERSION, n, w, h, c)
    planes = np.ascontiguousarray(images.transpose(0, 3, 2, 1)).reshape(n, -1)
    records = np.concatenate([labels.astype(np.uint8)[:, None], planes], axis=1)
    return header + records.tobytes()


def parse_svhn_container(raw: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(raw) < SVHN_HEADER.size:
        raise FormatError("SVHN container shorter than its header", len(raw))
    magic, version, n, w, h, c = SVHN_HEADER.unpack_from(raw, 0)
    if magic != SVHN_MAGIC:
        raise FormatError(f"Bad SVHN magic {magic!r}", 0)
    if version != SVHN_VERSION:
        raise FormatError(f"Unsupported SVHN container version {version}", 4)
    record = 1 + w * h * c
    expected = SVHN_HEADER.size + n * record
    if len(raw) != expected:
        raise FormatError(
            f"SVHN container has {len(raw)} bytes, header promises {expected}",
            min(len(raw), expected),
        )
    records = np.frombuffer(raw, dtype=np.uint8, offset=SVHN_HEADER.size).reshape(n, record)
    labels = records[:, 0].astype(np.int64)
    bad = np.nonzero(labels >= 10)[0]
    if bad.size:
        raise FormatError(
            f"SVHN label {labels[bad[0]]} out of range", SVHN_HEADER.size + int(bad[0]) * record
        )
    images = records[:, 1:].reshape(n, c, h, w).transpose(0, 3, 2, 1)
    return images, labels


def read_svhn_container(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    return parse_svhn_container(_read_bytes(path))


def write_svhn_container(path: PathLike, images: np.ndarray, labels: np.ndarray) -> None:
    Path(path).write_bytes(encode_svhn_container(images, labels))


def load_svhn(path: PathLike, dtype=np.float32) -> DatasetSplits:
    """Load svhn_{train,valid,test}.rnsv produced by tools/convert_svhn.py"""
    path = Path(path)
    splits = {}
    for split in ("train", "valid", "test"):
        images, labels = read_svhn_container(path / f"svhn_{split}.rnsv")
        splits[split] = Dataset(_scale(images, dtype), labels, SVHN_META, split)
    logger.info(
        "Loaded svhn: %d train, %d valid, %d test",
        len(splits["train"]), len(splits["valid"]), len(splits["test"]),
    )
    return DatasetSplits(**splits)


# Synthetic data


def make_bars_dataset(
    n: int = 50, size: int = 8, seed: int = 0, dtype=np.float32
) -> Dataset:
    """Vertical (label 0) versus horizontal (label 1) bars on a blank canvas

    Each image holds one full-length bar of intensity 1 at a random
    position; labels alternate so both classes are balanced.
    """
    rng = make_rng(seed)
    images = np.zeros((n, size, size, 1), dtype=dtype)
    labels = np.arange(n) % 2
    positions = rng.integers(0, size, size=n)
    for index, (label, position) in enumerate(zip(labels, positions)):
        if label == 0:
            images[index, position, :, 0] = 1.0
        else:
            images[index, :, position, 0] = 1.0
    return Dataset(images, labels, DatasetMeta("bars", size, size, 1, 2), "train")


def bars_splits(n: int = 50, size: int = 8, seed: int = 0, dtype=np.float32) -> DatasetSplits:
    """The bars set used for every split (the smoke run measures fitting)"""
    data = make_bars_dataset(n, size, seed, dtype)
    return DatasetSplits(
        train=data,
        valid=replace(data, split="valid"),
        test=replace(data, split="test"),
    )


def subsample(dataset: Dataset, n: Optional[int], seed: int = 0) -> Dataset:
    """Seeded random subset of n samples (the whole set when n is None)"""
    if n is None or n >= len(dataset):
        return dataset
    indices = np.sort(make_rng(seed).permutation(len(dataset))[:n])
    return dataset.take(indices)


def load_dataset(
    name: str,
    data_dir: Optional[PathLike] = None,
    dtype=np.float32,
    seed: int = 0,
) -> DatasetSplits:
    """Load a dataset by name: mnist, cifar10, svhn or bars"""
    name = name.lower()
    if name == "bars":
        return bars_splits(seed=seed, dtype=dtype)
    if data_dir is None:
        raise FileNotFoundError(f"Dataset '{name}' needs --data-dir")
    loaders = {"mnist": load_mnist, "cifar10": load_cifar10, "svhn": load_svhn}
    if name not in loaders:
        raise ValueError(f"Unsupported dataset '{name}'. Options are mnist, cifar10, svhn, bars")
    return loaders[name](Path(data_dir), dtype=dtype)
