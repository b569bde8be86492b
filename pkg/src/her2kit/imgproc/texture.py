"""Texture descriptors: co-occurrence features, histogram moments,
differential box-counting fractal dimension, and bilinear pooling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyCollectionError, SizeError


@dataclass(frozen=True)
class GlcmFeatures:
    contrast: float
    energy: float
    homogeneity: float
    correlation: float


def glcm_features(
    gray: np.ndarray, offset: tuple = (0, 1), levels: int = 8
) -> GlcmFeatures:
    """Features of the symmetric, normalized co-occurrence matrix.

    ``gray`` is 8-bit (0..255) and gets uniformly quantized to ``levels``
    bins; ``offset`` is a (row, col) displacement.  Energy is the angular
    second moment; homogeneity the inverse difference moment; correlation
    defined as 1 for a constant patch.
    """
    arr = np.asarray(gray)
    dr, dc = offset
    h, w = arr.shape
    if h <= abs(dr) or w <= abs(dc):
        raise SizeError("patch smaller than the co-occurrence offset")
    q = np.clip(arr.astype(np.int64) // (256 // levels), 0, levels - 1)
    src = q[max(0, -dr) : h - max(0, dr), max(0, -dc) : w - max(0, dc)]
    dst = q[max(0, dr) : h + min(0, dr), max(0, dc) : w + min(0, dc)]
    counts = np.bincount((src * levels + dst).ravel(), minlength=levels * levels)
    matrix = counts.reshape(levels, levels).astype(np.float64)
    matrix = matrix + matrix.T
    p = matrix / matrix.sum()

    i, j = np.meshgrid(np.arange(levels), np.arange(levels), indexing="ij")
    contrast = float((p * (i - j) ** 2).sum())
    energy = float((p**2).sum())
    homogeneity = float((p / (1.0 + (i - j) ** 2)).sum())
    pi = p.sum(axis=1)
    pj = p.sum(axis=0)
    mi = float((np.arange(levels) * pi).sum())
    mj = float((np.arange(levels) * pj).sum())
    si = float(np.sqrt(((np.arange(levels) - mi) ** 2 * pi).sum()))
    sj = float(np.sqrt(((np.arange(levels) - mj) ** 2 * pj).sum()))
    if si * sj <= 1e-15:
        correlation = 1.0
    else:
        correlation = float(((i - mi) * (j - mj) * p).sum() / (si * sj))
    return GlcmFeatures(contrast, energy, homogeneity, correlation)


@dataclass(frozen=True)
class HistogramStats:
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    entropy: float  # bits, over the 256-bin normalized histogram


def histogram_stats(field: np.ndarray) -> HistogramStats:
    """Population moments plus Shannon entropy of the 256-bin histogram.

    Skewness and excess kurtosis are defined as 0 for constant input;
    entropy uses the 0*log0 := 0 convention.
    """
    values = np.asarray(field, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyCollectionError("empty field")
    mean = float(values.mean())
    centered = values - mean
    variance = float((centered**2).mean())
    if variance <= 1e-24:
        skewness = 0.0
        kurtosis = 0.0
    else:
        sigma = np.sqrt(variance)
        skewness = float((centered**3).mean() / sigma**3)
        kurtosis = float((centered**4).mean() / sigma**4 - 3.0)
    vmin, vmax = float(values.min()), float(values.max())
    if vmin == vmax:
        entropy = 0.0
    else:
        hist, _ = np.histogram(values, bins=256, range=(vmin, vmax))
        p = hist[hist > 0] / values.size
        entropy = float(-(p * np.log2(p)).sum())
    return HistogramStats(mean, variance, skewness, kurtosis, entropy)


def fractal_dimension_dbc(gray: np.ndarray, gray_levels: int = 256) -> float:
    """Differential box-counting fractal dimension of a square patch.

    Boxes of side s (s in {2, 4, ..., side/2}) partition the plane; each
    column contributes floor(max/h) - floor(min/h) + 1 boxes with
    h = gray_levels * s / side.  The estimate is the slope of the
    log-log least-squares fit against 1/r, clamped to [2, 3].
    """
    arr = np.asarray(gray, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SizeError("differential box counting expects a square patch")
    side = arr.shape[0]
    if side < 8:
        raise SizeError("patch side must be at least 8")
    sizes = []
    s = 2
    while s <= side // 2:
        sizes.append(s)
        s *= 2
    counts = []
    for s in sizes:
        usable = (side // s) * s
        block = arr[:usable, :usable].reshape(usable // s, s, usable // s, s)
        bmax = block.max(axis=(1, 3))
        bmin = block.min(axis=(1, 3))
        h = gray_levels * s / side
        n = np.floor(bmax / h) - np.floor(bmin / h) + 1.0
        counts.append(n.sum())
    x = np.log(side / np.array(sizes, dtype=np.float64))
    y = np.log(np.array(counts, dtype=np.float64))
    slope = np.polyfit(x, y, 1)[0]
    return float(np.clip(slope, 2.0, 3.0))


@dataclass(frozen=True)
class BilinearDescriptor:
    matrix: np.ndarray  # (d, d), symmetric
    degenerate: bool = False


def bilinear_pool(feature_map: np.ndarray) -> BilinearDescriptor:
    """Sum of dyadic products over the spatial grid, then element-wise
    signed square root and L2 normalization of the flattened matrix.

    An all-zero feature map yields a zero descriptor with the degenerate
    flag set (normalization skipped).
    """
    fm = np.asarray(feature_map, dtype=np.float64)
    if fm.ndim != 3 or fm.shape[2] < 1:
        raise SizeError("feature map must be (h, w, d) with d >= 1")
    gram = np.einsum("hwi,hwj->ij", fm, fm)
    rooted = np.sign(gram) * np.sqrt(np.abs(gram))
    norm = np.linalg.norm(rooted)
    if norm == 0:
        return BilinearDescriptor(rooted, degenerate=True)
    return BilinearDescriptor(rooted / norm, degenerate=False)
