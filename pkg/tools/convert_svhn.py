# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Convert the SVHN "cropped digits" MATLAB files to RNSV containers.

Reads train_32x32.mat, extra_32x32.mat and test_32x32.mat from the source
directory. Train and extra are pooled (604,388 images) and a seeded random
subset of 60,439 becomes the validation split, leaving 543,949 for
training. Label 10 encodes the digit 0.

    python -m tools.convert_svhn --source ~/svhn --output data/svhn
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from renet.data import write_svhn_container
from renet.numerics import make_rng

logger = logging.getLogger("convert_svhn")

VALID_SIZE = 60439


def read_mat(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Images (N, w, h, 3) uint8 and labels (N,) in [0, 10)"""
    try:
        from scipy.io import loadmat
    except ImportError as exc:
        raise SystemExit("scipy is needed to read the SVHN .mat files: pip install scipy") from exc
    contents = loadmat(str(path))
    # X is (rows, cols, channels, N)
    images = np.ascontiguousarray(contents["X"].transpose(3, 1, 0, 2), dtype=np.uint8)
    labels = contents["y"].reshape(-1).astype(np.int64)
    labels[labels == 10] = 0
    logger.info("Read %d images from %s", len(labels), path.name)
    return images, labels


def convert(source: Path, output: Path, seed: int = 0, use_extra: bool = True) -> dict[str, int]:
    parts = [read_mat(source / "train_32x32.mat")]
    if use_extra:
        parts.append(read_mat(source / "extra_32x32.mat"))
    images = np.concatenate([images for images, _ in parts])
    labels = np.concatenate([labels for _, labels in parts])
    valid_size = VALID_SIZE if use_extra else len(labels) // 10

    order = make_rng(seed).permutation(len(labels))
    valid_idx, train_idx = np.sort(order[:valid_size]), np.sort(order[valid_size:])
    test_images, test_labels = read_mat(source / "test_32x32.mat")

    output.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for split, (split_images, split_labels) in {
        "train": (images[train_idx], labels[train_idx]),
        "valid": (images[valid_idx], labels[valid_idx]),
        "test": (test_images, test_labels),
    }.items():
        write_svhn_container(output / f"svhn_{split}.rnsv", split_images, split_labels)
        sizes[split] = len(split_labels)
        logger.info("Wrote %s: %d samples", split, len(split_labels))
    return sizes


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--source", type=Path, required=True, help="Directory with the .mat files")
    parser.add_argument("--output", type=Path, required=True, help="Directory for the .rnsv files")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the validation carve-out")
    parser.add_argument("--no-extra", action="store_true", help="Skip extra_32x32.mat")
    args = parser.parse_args()
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    convert(args.source, args.output, args.seed, use_extra=not args.no_extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())
