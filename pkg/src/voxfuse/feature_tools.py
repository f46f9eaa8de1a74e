"""Stand-in feature extraction and PCA colorization.

rgb_feature_extractor turns plain color images into 3-channel feature
images, the fallback pathway for running the pipeline without a vision
foundation model. pca_colorize maps arbitrary-dimension features to RGB
for inspection exports.
"""

from __future__ import annotations

import numpy as np

from .camera import FeatureImage
from .errors import FrameError


def rgb_feature_extractor(image, normalize: bool = True) -> FeatureImage:
    """Use raw RGB triplets as the per-pixel feature vector (f = 3).

    With normalize, 8-bit inputs (uint8 arrays, or float arrays with values
    above 1) are mapped to [0, 1]; inputs already in [0, 1] pass through.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FrameError(f"color image must be (h, w, 3), got shape {arr.shape}")
    data = arr.astype(np.float32)
    if normalize and (arr.dtype == np.uint8 or (data.size and float(data.max()) > 1.0)):
        data = data / np.float32(255.0)
    return FeatureImage(data)


def pca_colorize(features) -> np.ndarray:
    """Project features onto their top-3 principal components as colors.

    Each returned channel is min-max rescaled to [0, 1]; components with
    zero variance (including everything past the feature dimension) render
    as the neutral 0.5. Eigenvector signs are canonicalized so the
    largest-magnitude loading is positive, which pins the output up to the
    per-channel flips inherent to PCA.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise FrameError(f"features must be (N>=1, f), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise FrameError("features contain non-finite values")

    n, f = x.shape
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]

    colors = np.full((n, 3), 0.5, dtype=np.float64)
    scale = max(float(eigvals.max(initial=0.0)), 1.0)
    tol = 1e-12 * scale
    for channel in range(3):
        if channel >= f:
            break
        comp = order[channel]
        if eigvals[comp] <= tol:
            continue
        vec = eigvecs[:, comp]
        pivot = int(np.argmax(np.abs(vec)))
        if vec[pivot] < 0:
            vec = -vec
        proj = centered @ vec
        lo, hi = float(proj.min()), float(proj.max())
        if hi - lo <= 0.0:
            continue
        colors[:, channel] = (proj - lo) / (hi - lo)
    return colors
