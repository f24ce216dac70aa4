# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Statistics fitted on the training split: ZCA whitening and per-pixel
standardization, plus explicit zero padding for non-divisible inputs.

Every fitted transform keeps the fingerprint of the images it was fitted
on, so callers can check that no validation or test pixel was used.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from renet.data import Dataset, DatasetSplits, fingerprint
from renet.errors import PreprocessingError, ShapeError

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8


@dataclass
class ZcaTransform:
    """x -> (x - mean) @ whitening over flattened images"""

    mean: np.ndarray
    whitening: np.ndarray
    regularizer: float
    fitted_on: str = ""

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _flat(images: np.ndarray) -> np.ndarray:
    return np.asarray(images, dtype=np.float64).reshape(images.shape[0], -1)


def fit_zca(
    images: np.ndarray, regularizer: float = 1e-2, relative: bool = True
) -> ZcaTransform:
    """Fit a ZCA whitening transform

    The whitening matrix is E diag(1 / sqrt(s + lam)) E^T where E, s is the
    eigendecomposition of the (population) covariance of the flattened
    images. With ``relative`` the regularizer is a fraction of the mean
    eigenvalue.

    Args:
        images (np.ndarray): Training images (N, w, h, c)
        regularizer (float): lam, absolute or relative to the mean eigenvalue
        relative (bool): Scale the regularizer by the mean eigenvalue

    Returns:
        ZcaTransform: Transform computed in float64
    """
    if regularizer < 0:
        raise PreprocessingError(f"ZCA regularizer must be >= 0, got {regularizer}")
    x = _flat(images)
    mean = x.mean(axis=0)
    centered = x - mean
    covariance = centered.T @ centered / x.shape[0]
    covariance = (covariance + covariance.T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    scale = max(float(eigenvalues.max()), np.finfo(np.float64).tiny)
    tolerance = 1e-10 * scale
    if eigenvalues.min() < -tolerance:
        raise PreprocessingError(
            f"Covariance is not positive semi-definite (eigenvalue {eigenvalues.min():.3g})"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    lam = regularizer * float(eigenvalues.mean()) if relative else regularizer
    shifted = eigenvalues + lam
    if shifted.min() <= tolerance:
        raise PreprocessingError(
            "Covariance is singular; use a positive ZCA regularizer or more samples"
        )
    whitening = (eigenvectors / np.sqrt(shifted)) @ eigenvectors.T
    whitening = (whitening + whitening.T) / 2
    logger.debug("Fitted ZCA on %d samples (dim %d, lambda %.3g)", *x.shape, lam)
    return ZcaTransform(mean, whitening, regularizer, fingerprint(images))


def apply_zca(transform: ZcaTransform, images: np.ndarray) -> np.ndarray:
    """Whiten images with a fitted transform; the result keeps the input dtype"""
    x = _flat(images)
    if x.shape[1] != transform.dim:
        raise ShapeError(
            f"ZCA fitted on dimension {transform.dim}, images have {x.shape[1]}"
        )
    white = (x - transform.mean) @ transform.whitening
    return white.reshape(images.shape).astype(images.dtype, copy=False)


@dataclass
class Standardizer:
    """Per-pixel (position and channel) mean and variance of the train split"""

    mean: np.ndarray
    variance: np.ndarray
    fitted_on: str = ""

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


def fit_standardizer(images: np.ndarray) -> Standardizer:
    """Fit per-pixel statistics; variances below 1e-8 are floored with a warning"""
    x = np.asarray(images, dtype=np.float64)
    mean = x.mean(axis=0)
    variance = x.var(axis=0)
    floored = variance < VARIANCE_FLOOR
    if floored.any():
        logger.warning(
            "%d of %d pixels have variance below %g; flooring",
            int(floored.sum()), floored.size, VARIANCE_FLOOR,
        )
        variance = np.where(floored, VARIANCE_FLOOR, variance)
    return Standardizer(mean, variance, fingerprint(images))


def standardize(stats: Standardizer, images: np.ndarray) -> np.ndarray:
    if images.shape[1:] != stats.mean.shape:
        raise ShapeError(
            f"Standardizer fitted on {stats.mean.shape}, images have {images.shape[1:]}"
        )
    x = (np.asarray(images, dtype=np.float64) - stats.mean) / stats.std
    return x.astype(images.dtype, copy=False)


def pad_to_multiple(images: np.ndarray, patch_w: int, patch_h: int) -> np.ndarray:
    """Zero-pad the right and bottom edges so w and h divide by the patch size"""
    _, w, h, _ = images.shape
    pad_w = -w % patch_w
    pad_h = -h % patch_h
    if not pad_w and not pad_h:
        return images
    return np.pad(images, ((0, 0), (0, pad_w), (0, pad_h), (0, 0)))


@dataclass
class Preprocessor:
    """ZCA (optional) then standardization (optional), fitted on train only"""

    zca: bool = False
    zca_regularizer: float = 1e-2
    standardize: bool = True
    pad_patch: Optional[tuple[int, int]] = None
    zca_transform: Optional[ZcaTransform] = field(default=None, repr=False)
    standardizer: Optional[Standardizer] = field(default=None, repr=False)
    fitted_on: Optional[str] = None

    @classmethod
    def from_config(cls, cfg) -> "Preprocessor":
        return cls(
            zca=cfg.zca,
            zca_regularizer=cfg.zca_regularizer,
            standardize=cfg.standardize,
            pad_patch=tuple(cfg.patch_sizes[0]) if cfg.pad_input else None,
        )

    def _pad(self, images: np.ndarray) -> np.ndarray:
        if self.pad_patch is None:
            return images
        return pad_to_multiple(images, *self.pad_patch)

    def fit(self, train: Dataset) -> "Preprocessor":
        if train.split != "train":
            raise PreprocessingError(f"Preprocessing must be fitted on train, not {train.split}")
        self.fitted_on = fingerprint(train.images)
        images = self._pad(train.images)
        if self.zca:
            self.zca_transform = fit_zca(images, self.zca_regularizer)
            images = apply_zca(self.zca_transform, images)
        if self.standardize:
            self.standardizer = fit_standardizer(images)
        logger.info(
            "Fitted preprocessing on %d training images (zca=%s, standardize=%s)",
            len(train), self.zca, self.standardize,
        )
        return self

    def transform(self, images: np.ndarray) -> np.ndarray:
        if self.fitted_on is None:
            raise PreprocessingError("Preprocessor used before fit()")
        images = self._pad(images)
        if self.zca_transform is not None:
            images = apply_zca(self.zca_transform, images)
        if self.standardizer is not None:
            images = standardize(self.standardizer, images)
        return images

    def apply(self, dataset: Dataset) -> Dataset:
        images = self.transform(dataset.images)
        meta = dataset.meta
        if images.shape[1:] != meta.shape:
            meta = replace(meta, width=images.shape[1], height=images.shape[2])
        return Dataset(images, dataset.labels, meta, dataset.split)

    def fit_apply(self, splits: DatasetSplits) -> DatasetSplits:
        """Fit on the train split, then transform all three"""
        self.fit(splits.train)
        return DatasetSplits(*(self.apply(split) for split in splits))
