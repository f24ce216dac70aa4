# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""On-the-fly flip and shift augmentation.

Each sample draws three independent outcomes, each with probabilities
(.25, .25, .50):

* flip: horizontal, vertical or none
* horizontal shift: 2 pixels left, 2 pixels right or none
* vertical shift: 2 pixels up, 2 pixels down or none

Shifting left moves the content towards x = 0 and fills the right edge
with zeros; shifted-out pixels are dropped.
"""

from dataclasses import dataclass

import numpy as np

from renet.errors import ShapeError
from renet.numerics import child_rng

SHIFT_PIXELS = 2
FLIPS = ("horizontal", "vertical", "none", "none")


@dataclass(frozen=True)
class AugmentPlan:
    """flip in {"horizontal", "vertical", "none"}; shifts in pixels
    (negative is left / up)"""

    flip: str = "none"
    hshift: int = 0
    vshift: int = 0

    @property
    def is_identity(self) -> bool:
        return self.flip == "none" and self.hshift == 0 and self.vshift == 0


def _three_way(rng: np.random.Generator) -> int:
    # 0 and 1 each with probability .25, "none" (2 or 3) with .5
    return int(rng.integers(0, 4))


def draw_augmentation(rng: np.random.Generator) -> AugmentPlan:
    """Draw all three outcomes; disabled ones are ignored at apply time so
    the stream does not depend on the flags"""
    flip = FLIPS[_three_way(rng)]
    hshift = (-SHIFT_PIXELS, SHIFT_PIXELS, 0, 0)[_three_way(rng)]
    vshift = (-SHIFT_PIXELS, SHIFT_PIXELS, 0, 0)[_three_way(rng)]
    return AugmentPlan(flip, hshift, vshift)


def flip_image(image: np.ndarray, direction: str) -> np.ndarray:
    """Mirror a (w, h, c) image left-right ("horizontal") or top-bottom ("vertical")"""
    if direction == "horizontal":
        return image[::-1, :, :].copy()
    if direction == "vertical":
        return image[:, ::-1, :].copy()
    if direction == "none":
        return image.copy()
    raise ValueError(f"Unsupported flip '{direction}'. Options are horizontal, vertical, none")


def _shift_slices(offset: int, size: int) -> tuple[slice, slice]:
    if offset < 0:
        return slice(0, size + offset), slice(-offset, size)
    return slice(offset, size), slice(0, size - offset)


def shift_image(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Translate content by (dx, dy) pixels with zero fill, keeping the size"""
    w, h = image.shape[0], image.shape[1]
    out = np.zeros_like(image)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    dst_x, src_x = _shift_slices(dx, w)
    dst_y, src_y = _shift_slices(dy, h)
    out[dst_x, dst_y] = image[src_x, src_y]
    return out


def apply_augmentation(
    image: np.ndarray, plan: AugmentPlan, flip: bool = True, shift: bool = True
) -> np.ndarray:
    """Flip, then shift horizontally, then vertically (enabled steps only)"""
    if image.ndim != 3:
        raise ShapeError(f"augmentation expects a (w, h, c) image, got {image.shape}")
    out = flip_image(image, plan.flip if flip else "none")
    if shift and (plan.hshift or plan.vshift):
        out = shift_image(out, plan.hshift, plan.vshift)
    return out


def augment(
    image: np.ndarray, rng: np.random.Generator, flip: bool = True, shift: bool = True
) -> np.ndarray:
    return apply_augmentation(image, draw_augmentation(rng), flip, shift)


def augment_batch(
    images: np.ndarray,
    seed: int,
    epoch: int,
    indices: np.ndarray,
    flip: bool = True,
    shift: bool = True,
) -> np.ndarray:
    """Augment a batch; sample k uses the stream (seed, epoch, indices[k])

    Args:
        images (np.ndarray): Batch (B, w, h, c)
        seed (int): Run seed
        epoch (int): Epoch number
        indices (np.ndarray): Dataset index of each sample in the batch
        flip (bool): Enable flipping
        shift (bool): Enable shifting

    Returns:
        np.ndarray: Augmented copy of the batch
    """
    if not (flip or shift):
        return images
    return np.stack(
        [
            augment(image, child_rng(seed, epoch, int(index)), flip, shift)
            for image, index in zip(images, indices)
        ]
    )
