# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Print the sha256 of the first image of an IDX image file.

An independent reader (struct only, no numpy) used to cross-check
``renet.data.read_idx``. The digest covers the raw row-major pixel bytes
of image 0 as stored on disk.

    python -m tools.idx_checksum data/mnist/train-images-idx3-ubyte
"""

import gzip
import hashlib
import struct
import sys
from pathlib import Path


def first_image_digest(path: Path) -> str:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as handle:
        magic, count, rows, cols = struct.unpack(">IIII", handle.read(16))
        if magic != 0x00000803:
            raise ValueError(f"{path} is not an IDX image file (magic 0x{magic:08x})")
        if count == 0:
            raise ValueError(f"{path} holds no images")
        pixels = handle.read(rows * cols)
    if len(pixels) != rows * cols:
        raise ValueError(f"{path} is truncated")
    return hashlib.sha256(pixels).hexdigest()


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: idx_checksum.py IDX_IMAGE_FILE", file=sys.stderr)
        return 2
    print(first_image_digest(Path(argv[0])))
    return 0


if __name__ == "__main__":
    sys.exit(main())
