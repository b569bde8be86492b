"""Thresholding, binary morphology, and region statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from skimage.morphology import skeletonize as _skimage_skeletonize

from ..errors import EmptyCollectionError

_STRUCTURE_8 = np.ones((3, 3), dtype=bool)
_STRUCTURE_4 = ndi.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class OtsuResult:
    level: int
    degenerate: bool = False


def otsu_threshold(histogram: np.ndarray) -> OtsuResult:
    """Level maximizing between-class variance over a 256-bin histogram.

    Pixels <= level form the low class.  Ties resolve to the lowest
    maximizing level; a single-populated-bin histogram is degenerate and
    thresholds at that bin.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    if hist.ndim != 1 or len(hist) == 0:
        raise EmptyCollectionError("histogram must be a non-empty 1-D array")
    total = hist.sum()
    if total <= 0:
        raise EmptyCollectionError("histogram has no mass")
    populated = np.nonzero(hist)[0]
    if len(populated) == 1:
        return OtsuResult(int(populated[0]), degenerate=True)
    levels = np.arange(len(hist))
    p = hist / total
    omega = np.cumsum(p)
    mu = np.cumsum(p * levels)
    mu_total = mu[-1]
    valid = (omega > 0) & (omega < 1)
    sigma_b = np.zeros(len(hist))
    sigma_b[valid] = (mu_total * omega[valid] - mu[valid]) ** 2 / (
        omega[valid] * (1.0 - omega[valid])
    )
    return OtsuResult(int(np.argmax(sigma_b)), degenerate=False)


def local_mean(image: np.ndarray, window: int) -> np.ndarray:
    """Mean over a window clamped to the image bounds (exact, via an
    integral image), so edge pixels average only the in-bounds part."""
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    arr = np.asarray(image, dtype=np.float64)
    h, w = arr.shape
    k = window // 2
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = np.cumsum(np.cumsum(arr, axis=0), axis=1)
    rows = np.arange(h)
    cols = np.arange(w)
    r0 = np.clip(rows - k, 0, h)[:, None]
    r1 = np.clip(rows + k + 1, 0, h)[:, None]
    c0 = np.clip(cols - k, 0, w)[None, :]
    c1 = np.clip(cols + k + 1, 0, w)[None, :]
    window_sum = integral[r1, c1] - integral[r0, c1] - integral[r1, c0] + integral[r0, c0]
    area = (r1 - r0) * (c1 - c0)
    return window_sum / area


def adaptive_threshold(gray: np.ndarray, window: int = 31, offset: float = 10.0) -> np.ndarray:
    """Mark a pixel 1 iff its value exceeds the local window mean minus
    ``offset`` (bright = 1, so near-blank regions come out almost all ones)."""
    arr = np.asarray(gray, dtype=np.float64)
    return arr > local_mean(arr, window) - offset


@dataclass(frozen=True)
class RegionStats:
    """Area, centroid and second-moment eccentricity of one component."""

    label: int
    area: int
    eccentricity: float
    centroid: tuple  # (x, y)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[RegionStats]:
    """8-connected component statistics.

    Eccentricity is sqrt(1 - l2/l1) of the central second-moment ellipse
    (0 for a perfect disk, 1 for a zero-thickness line).
    """
    return label_regions(mask, connectivity)[1]


def label_regions(mask: np.ndarray, connectivity: int = 8):
    """Label components and compute their stats; returns (labels, regions)
    with ``regions[i].label`` indexing into the label image."""
    mask = np.asarray(mask, dtype=bool)
    structure = _STRUCTURE_8 if connectivity == 8 else _STRUCTURE_4
    labels, count = ndi.label(mask, structure=structure)
    if count == 0:
        return labels, []
    rows, cols = np.nonzero(labels)
    ids = labels[rows, cols]
    area = np.bincount(ids, minlength=count + 1)[1:]
    sum_r = np.bincount(ids, weights=rows, minlength=count + 1)[1:]
    sum_c = np.bincount(ids, weights=cols, minlength=count + 1)[1:]
    cr = sum_r / area
    cc = sum_c / area
    dr = rows - cr[ids - 1]
    dc = cols - cc[ids - 1]
    mrr = np.bincount(ids, weights=dr * dr, minlength=count + 1)[1:] / area
    mcc = np.bincount(ids, weights=dc * dc, minlength=count + 1)[1:] / area
    mrc = np.bincount(ids, weights=dr * dc, minlength=count + 1)[1:] / area
    half_trace = (mrr + mcc) / 2.0
    root = np.sqrt(((mrr - mcc) / 2.0) ** 2 + mrc**2)
    lam1 = half_trace + root
    lam2 = half_trace - root
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(lam1 > 0, np.clip(lam2 / np.where(lam1 > 0, lam1, 1.0), 0.0, 1.0), 1.0)
    ecc = np.sqrt(1.0 - ratio)
    regions = [
        RegionStats(i + 1, int(area[i]), float(ecc[i]), (float(cc[i]), float(cr[i])))
        for i in range(count)
    ]
    return labels, regions


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Thin to a 1-pixel-wide skeleton; iterated to a fixpoint so the
    operation is idempotent, and the result is a subset of the input."""
    current = np.asarray(mask, dtype=bool)
    for _ in range(8):
        thinned = _skimage_skeletonize(current)
        if np.array_equal(thinned, current):
            break
        current = thinned
    return current


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Turn background components not connected to the border into
    foreground (4-connected background, so diagonal gaps do not leak)."""
    mask = np.asarray(mask, dtype=bool)
    background = ~mask
    labels, count = ndi.label(background, structure=_STRUCTURE_4)
    if count == 0:
        return mask.copy()
    border = np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    open_labels = np.unique(border[border > 0])
    keep_open = np.zeros(count + 1, dtype=bool)
    keep_open[open_labels] = True
    return mask | (background & ~keep_open[labels])
