# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

import gzip
import hashlib
import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from renet.data import (
    CIFAR_RECORD_BYTES,
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    Dataset,
    DatasetMeta,
    encode_svhn_container,
    fingerprint,
    load_cifar10,
    load_dataset,
    load_mnist,
    load_svhn,
    make_bars_dataset,
    parse_cifar_batch,
    parse_idx,
    parse_svhn_container,
    read_cifar_batch,
    read_idx,
    read_svhn_container,
    subsample,
    write_cifar_batch,
    write_idx,
    write_svhn_container,
)
from renet.errors import FormatError, ShapeError
from renet.numerics import make_rng
from tools.idx_checksum import first_image_digest


def write_mnist(directory, n_train=6, n_test=3, size=(5, 4), seed=0, compress=False):
    """Fake MNIST files; pictures are (rows, cols) as stored on disk"""
    rng = make_rng(seed)
    rows, cols = size
    data = {
        "train": rng.integers(0, 256, (n_train, rows, cols), dtype=np.uint8),
        "t10k": rng.integers(0, 256, (n_test, rows, cols), dtype=np.uint8),
    }
    data["train"][0, 0, 0], data["train"][0, 0, 1] = 255, 0
    for prefix, images in data.items():
        labels = rng.integers(0, 10, len(images), dtype=np.uint8)
        for kind, array in (("images-idx3", images), ("labels-idx1", labels)):
            path = directory / f"{prefix}-{kind}-ubyte"
            write_idx(path, array)
            if compress:
                path.with_name(path.name + ".gz").write_bytes(gzip.compress(path.read_bytes()))
                path.unlink()
    return data


def test_mnist_split_scaling_and_orientation(tmp_path):
    pictures = write_mnist(tmp_path)
    splits = load_mnist(tmp_path, valid_size=2)
    assert (len(splits.train), len(splits.valid), len(splits.test)) == (4, 2, 3)
    train = splits.train.images
    assert train.shape == (4, 4, 5, 1)
    assert train[0, 0, 0, 0] == 1.0
    assert train[0, 1, 0, 0] == 0.0
    # axis 1 runs along a picture row, axis 2 down a column
    assert train[0, 3, 2, 0] == np.float32(pictures["train"][0, 2, 3] / 255.0)
    assert_allclose(splits.valid.images[1, :, :, 0], pictures["train"][5].T / 255.0, rtol=1e-6)
    assert train.min() >= 0.0 and train.max() <= 1.0


def test_mnist_reads_gzip_files(tmp_path):
    write_mnist(tmp_path, compress=True)
    assert len(load_mnist(tmp_path, valid_size=1).train) == 5


def test_idx_checksum_tool_agrees_with_the_reader(tmp_path):
    write_mnist(tmp_path)
    path = tmp_path / "train-images-idx3-ubyte"
    first = read_idx(path, IDX_IMAGES_MAGIC)[0]
    assert first_image_digest(path) == hashlib.sha256(first.tobytes()).hexdigest()


def test_idx_format_errors():
    good = struct.pack(">II", IDX_LABELS_MAGIC, 3) + bytes([1, 2, 3])
    assert_array_equal(parse_idx(good, IDX_LABELS_MAGIC), [1, 2, 3])
    with pytest.raises(FormatError) as bad_magic:
        parse_idx(good, IDX_IMAGES_MAGIC)
    assert bad_magic.value.offset == 0
    with pytest.raises(FormatError) as short:
        parse_idx(good[:-1], IDX_LABELS_MAGIC)
    assert short.value.offset == len(good) - 1
    with pytest.raises(FormatError):
        parse_idx(good[:6], IDX_LABELS_MAGIC)


def test_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist(tmp_path)


def cifar_records(n, seed):
    rng = make_rng(seed)
    return rng.integers(0, 256, (n, 32, 32, 3), dtype=np.uint8), rng.integers(0, 10, n)


def test_cifar_record_layout():
    images, labels = cifar_records(2, 0)
    raw = bytearray(CIFAR_RECORD_BYTES * 2)
    raw[0] = 7
    raw[1] = 200  # red, row 0, column 0
    raw[2] = 100  # red, row 0, column 1
    raw[1 + 1024 + 32] = 50  # green, row 1, column 0
    parsed, parsed_labels = parse_cifar_batch(bytes(raw))
    assert parsed.shape == (2, 32, 32, 3)
    assert parsed_labels[0] == 7
    assert parsed[0, 0, 0, 0] == 200
    assert parsed[0, 1, 0, 0] == 100
    assert parsed[0, 0, 1, 1] == 50


def test_cifar_format_errors():
    with pytest.raises(FormatError) as short:
        parse_cifar_batch(bytes(CIFAR_RECORD_BYTES + 10))
    assert short.value.offset == CIFAR_RECORD_BYTES
    raw = bytearray(CIFAR_RECORD_BYTES * 2)
    raw[CIFAR_RECORD_BYTES] = 12
    with pytest.raises(FormatError) as label:
        parse_cifar_batch(bytes(raw))
    assert label.value.offset == CIFAR_RECORD_BYTES


def test_cifar_batches_make_the_splits(tmp_path):
    written = {}
    for index, name in enumerate(
        ["data_batch_1", "data_batch_2", "data_batch_3", "data_batch_4", "data_batch_5", "test_batch"]
    ):
        images, labels = cifar_records(3, index)
        write_cifar_batch(tmp_path / f"{name}.bin", images, labels)
        written[name] = (images, labels)
    first_images, first_labels = read_cifar_batch(tmp_path / "data_batch_1.bin")
    assert_array_equal(first_images, written["data_batch_1"][0])
    assert 0 <= first_labels[0] < 10
    splits = load_cifar10(tmp_path)
    assert (len(splits.train), len(splits.valid), len(splits.test)) == (12, 3, 3)
    assert_array_equal(splits.valid.labels, written["data_batch_5"][1])
    assert splits.train.images[3, 5, 6, 2] == np.float32(written["data_batch_2"][0][0, 5, 6, 2] / 255.0)


def test_svhn_container_round_trip(tmp_path):
    rng = make_rng(3)
    images = rng.integers(0, 256, (4, 32, 32, 3), dtype=np.uint8)
    labels = np.array([0, 9, 3, 3])
    path = tmp_path / "svhn_train.rnsv"
    write_svhn_container(path, images, labels)
    raw = path.read_bytes()
    read_images, read_labels = read_svhn_container(path)
    assert_array_equal(read_images, images)
    assert_array_equal(read_labels, labels)
    assert encode_svhn_container(read_images, read_labels) == raw


def test_svhn_container_errors():
    raw = encode_svhn_container(np.zeros((1, 2, 2, 3), np.uint8), np.array([1]))
    with pytest.raises(FormatError) as magic:
        parse_svhn_container(b"XXXX" + raw[4:])
    assert magic.value.offset == 0
    with pytest.raises(FormatError):
        parse_svhn_container(raw[:-1])
    with pytest.raises(FormatError):
        encode_svhn_container(np.zeros((1, 2, 2, 3), np.uint8), np.array([10]))


def test_load_svhn(tmp_path):
    for split, n in (("train", 3), ("valid", 2), ("test", 1)):
        images, labels = cifar_records(n, n)
        write_svhn_container(tmp_path / f"svhn_{split}.rnsv", images, labels)
    splits = load_svhn(tmp_path)
    assert (len(splits.train), len(splits.valid), len(splits.test)) == (3, 2, 1)
    assert splits.test.split == "test"


def test_dataset_validation():
    meta = DatasetMeta("toy", 2, 2, 1, 3)
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 3, 2, 1)), np.zeros(2), meta)
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 2, 2, 1)), np.zeros(3), meta)
    with pytest.raises(FormatError):
        Dataset(np.zeros((1, 2, 2, 1)), np.array([3]), meta)


def test_bars_dataset():
    data = make_bars_dataset(n=50, size=8, seed=0)
    assert data.images.shape == (50, 8, 8, 1)
    assert np.count_nonzero(data.labels == 0) == 25
    for image, label in zip(data.images[..., 0], data.labels):
        assert image.sum() == 8
        lines = image.any(axis=1) if label == 0 else image.any(axis=0)
        # a vertical bar occupies one x position, a horizontal one one y position
        assert np.count_nonzero(lines) == 1


def test_subsample_is_seeded_and_sorted():
    data = make_bars_dataset(n=40)
    first = subsample(data, 10, seed=1)
    assert len(first) == 10
    assert_array_equal(first.images, subsample(data, 10, seed=1).images)
    assert subsample(data, None) is data
    assert subsample(data, 100) is data


def test_fingerprint_tracks_contents():
    a = np.zeros((2, 2))
    b = a.copy()
    assert fingerprint(a) == fingerprint(b)
    b[0, 0] = 1.0
    assert fingerprint(a) != fingerprint(b)
    assert fingerprint(a) != fingerprint(a.astype(np.float32))


def test_load_dataset_dispatch():
    splits = load_dataset("bars", dtype=np.float64)
    assert splits.train.images.dtype == np.float64
    with pytest.raises(FileNotFoundError):
        load_dataset("mnist")
    with pytest.raises(ValueError):
        load_dataset("imagenet", data_dir=".")


@pytest.mark.slow
def test_real_mnist_split_sizes(data_dir):
    if not (data_dir / "mnist").is_dir():
        pytest.skip("no MNIST under RENET_DATA_DIR")
    splits = load_mnist(data_dir / "mnist")
    assert (len(splits.train), len(splits.valid), len(splits.test)) == (50000, 10000, 10000)
    assert first_image_digest(_idx_path(data_dir / "mnist")) == hashlib.sha256(
        read_idx(_idx_path(data_dir / "mnist"), IDX_IMAGES_MAGIC)[0].tobytes()
    ).hexdigest()


def _idx_path(directory):
    path = directory / "train-images-idx3-ubyte"
    return path if path.exists() else path.with_name(path.name + ".gz")


@pytest.mark.slow
def test_real_cifar10_split_sizes(data_dir):
    if not (data_dir / "cifar10").is_dir():
        pytest.skip("no CIFAR-10 under RENET_DATA_DIR")
    splits = load_cifar10(data_dir / "cifar10")
    assert (len(splits.train), len(splits.valid), len(splits.test)) == (40000, 10000, 10000)
