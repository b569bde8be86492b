"""Patch-based slide scoring: tiling, background rejection, handcrafted
features, boosted patch classification, and the three published
slide-level aggregation rule sets with their PCMS and confidence pooling.

The patch classifier is handcrafted-features + multi-class boosting; the
aggregation cascades are implemented exactly as published, operating on
patch-share tallies regardless of patch size.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .charcurve import DEFAULT_HUE_WINDOW, stained_fraction
from .errors import CoverageError, EmptyCollectionError, SizeError
from .evalcore import Her2Score, Prediction
from .imgproc import (
    adaptive_threshold,
    deconvolve,
    fractal_dimension_dbc,
    glcm_features,
    histogram_stats,
    luminance,
    rgb_to_od,
)
from .imgproc.regions import local_mean
from .imgproc.stain import DEFAULT_STAIN_MODEL, StainModel
from .samme import SammeModel, feature_checksum, predict_samme

DEFAULT_PATCH_SIZE = 128

#: Concentration value mapped to gray level 255 when quantizing
#: concentration maps for co-occurrence features.
CONC_GRAY_SCALE = 3.0

#: Saturation cuts for the two stained-fraction features.
FEATURE_SATURATION_CUTS = (0.15, 0.35)

FEATURE_NAMES = tuple(
    [f"hema_{s}" for s in ("mean", "var", "skew", "kurt", "entropy")]
    + [f"dab_{s}" for s in ("mean", "var", "skew", "kurt", "entropy")]
    + [f"hema_glcm_{s}" for s in ("contrast", "energy", "homogeneity", "correlation")]
    + [f"dab_glcm_{s}" for s in ("contrast", "energy", "homogeneity", "correlation")]
    + ["fractal_dimension"]
    + [f"stained_frac_{c}" for c in FEATURE_SATURATION_CUTS]
)

FEATURE_CHECKSUM = feature_checksum(FEATURE_NAMES)


@dataclass(frozen=True)
class PatchGrid:
    patch_size: int
    stride: int
    origins: tuple  # ((x, y), ...) row-major
    image_size: tuple  # (width, height)


def tile_image(image: np.ndarray, patch_size: int = DEFAULT_PATCH_SIZE, stride: Optional[int] = None) -> PatchGrid:
    """Row-major grid of fully contained patches (partial edge tiles are
    dropped)."""
    if stride is None:
        stride = patch_size
    h, w = image.shape[:2]
    if h < patch_size or w < patch_size:
        raise SizeError(f"image {w}x{h} smaller than one {patch_size}px patch")
    origins = tuple(
        (x, y)
        for y in range(0, h - patch_size + 1, stride)
        for x in range(0, w - patch_size + 1, stride)
    )
    return PatchGrid(patch_size, stride, origins, (w, h))


def iter_patches(image: np.ndarray, grid: PatchGrid):
    for x, y in grid.origins:
        yield image[y : y + grid.patch_size, x : x + grid.patch_size]


def is_background_mucs(
    patch: np.ndarray, offset: float = 10.0, ones_ratio: float = 0.9, window: int = 31
) -> bool:
    """Adaptive-threshold background test: a patch whose binary image is
    at least ``ones_ratio`` ones is background (tissue pulls pixels below
    the local mean, blank glass does not)."""
    gray = luminance(patch) if patch.ndim == 3 else np.asarray(patch, dtype=np.float64)
    mask = adaptive_threshold(gray, window=window, offset=offset)
    return bool(mask.mean() >= ones_ratio)


def sample_patches_localmax(
    slide: np.ndarray,
    k: int,
    stain_model: StainModel = DEFAULT_STAIN_MODEL,
    patch_size: int = DEFAULT_PATCH_SIZE,
    mean_window: int = 33,
) -> list[tuple[int, int]]:
    """Origins of patches centered on the ``k`` strongest local maxima of
    the mean-filtered DAB concentration (the strongest over-expression
    signals), with non-maximum suppression of one patch size."""
    maps = deconvolve(rgb_to_od(slide, stain_model.background), stain_model)
    smooth = local_mean(maps.dab, mean_window)
    h, w = smooth.shape
    working = smooth.copy()
    origins = []
    yy, xx = np.mgrid[:h, :w]
    for _ in range(k):
        idx = int(np.argmax(working))
        r, c = divmod(idx, w)
        if working[r, c] <= 0:
            break
        x0 = int(np.clip(c - patch_size // 2, 0, w - patch_size))
        y0 = int(np.clip(r - patch_size // 2, 0, h - patch_size))
        origins.append((x0, y0))
        working[(np.abs(yy - r) <= patch_size) & (np.abs(xx - c) <= patch_size)] = -np.inf
    if len(origins) < k:
        warnings.warn(f"found only {len(origins)} of {k} requested maxima")
    return origins


def _conc_to_gray(conc: np.ndarray) -> np.ndarray:
    return np.clip(conc / CONC_GRAY_SCALE * 255.0, 0, 255).astype(np.uint8)


def extract_features(patch: np.ndarray, stain_model: StainModel = DEFAULT_STAIN_MODEL) -> np.ndarray:
    """Deterministic 21-component feature vector of one RGB patch."""
    maps = deconvolve(rgb_to_od(patch, stain_model.background), stain_model)
    values: list[float] = []
    for conc in (maps.hematoxylin, maps.dab):
        stats = histogram_stats(conc)
        values += [stats.mean, stats.variance, stats.skewness, stats.kurtosis, stats.entropy]
    for conc in (maps.hematoxylin, maps.dab):
        gray = _conc_to_gray(conc)
        feats = [glcm_features(gray, offset=o) for o in ((0, 1), (1, 0))]
        values += [
            float(np.mean([f.contrast for f in feats])),
            float(np.mean([f.energy for f in feats])),
            float(np.mean([f.homogeneity for f in feats])),
            float(np.mean([f.correlation for f in feats])),
        ]
    gray = np.clip(np.rint(luminance(patch)), 0, 255)
    values.append(fractal_dimension_dbc(gray))
    for cut in FEATURE_SATURATION_CUTS:
        values.append(stained_fraction(patch, DEFAULT_HUE_WINDOW, cut))
    return np.array(values, dtype=np.float64)


class PatchTally(NamedTuple):
    """Per-class patch counts; background tracked separately."""

    n0: int
    n1: int
    n2: int
    n3: int
    n_bg: int = 0

    @property
    def N(self) -> int:
        return self.n0 + self.n1 + self.n2 + self.n3


def tally(categories: Iterable[int], background: int = 0) -> PatchTally:
    counts = [0, 0, 0, 0]
    for c in categories:
        counts[int(c)] += 1
    return PatchTally(counts[0], counts[1], counts[2], counts[3], background)


def _require_patches(t: PatchTally) -> int:
    if t.N == 0:
        raise EmptyCollectionError("empty tally: no non-background patches")
    return t.N


def aggregate_indus(t: PatchTally) -> Her2Score:
    """Strict-threshold cascade: 3+ above 8% of class-3 patches, else 2+
    above 40% of class 2, else 1+ above 14% of class 1, else 0."""
    n = _require_patches(t)
    if t.n3 / n > 0.08:
        return Her2Score.THREE_PLUS
    if t.n2 / n > 0.4:
        return Her2Score.TWO_PLUS
    if t.n1 / n > 0.14:
        return Her2Score.ONE_PLUS
    return Her2Score.ZERO


def aggregate_mucs(t: PatchTally) -> Her2Score:
    """3+ at >= 10% class-3 share; 2+ at >= 10% class-2 share or a class-3
    share strictly between 1% and 10%; 1+ at >= 10% class-1 share; else 0."""
    n = _require_patches(t)
    r3 = t.n3 / n
    if r3 >= 0.10:
        return Her2Score.THREE_PLUS
    if t.n2 / n >= 0.10 or 0.01 < r3 < 0.10:
        return Her2Score.TWO_PLUS
    if t.n1 / n >= 0.10:
        return Her2Score.ONE_PLUS
    return Her2Score.ZERO


def aggregate_visilab(t: PatchTally) -> Her2Score:
    """Scan 3+, 2+, 1+ in order; the first class holding at least 10% of
    patches wins, else 0."""
    n = _require_patches(t)
    for share, score in (
        (t.n3, Her2Score.THREE_PLUS),
        (t.n2, Her2Score.TWO_PLUS),
        (t.n1, Her2Score.ONE_PLUS),
    ):
        if share / n >= 0.10:
            return score
    return Her2Score.ZERO


AGGREGATORS = {"indus": aggregate_indus, "mucs": aggregate_mucs, "visilab": aggregate_visilab}


def pcms_eq2(t: PatchTally) -> float:
    """PCMS as the 2+/3+ patch share of all non-background patches."""
    n = _require_patches(t)
    return 100.0 * (t.n2 + t.n3) / n


def slide_confidence(confidences: Sequence[float]) -> float:
    """Arithmetic mean of per-patch confidences (non-background only);
    fsum keeps the value independent of patch enumeration order."""
    values = [float(v) for v in confidences]
    if not values:
        raise EmptyCollectionError("no non-background patch confidences")
    return math.fsum(values) / len(values)


def score_slide_patchpipe(
    image: np.ndarray,
    model: SammeModel,
    rule: str = "mucs",
    pcms_mode: str = "eq2",
    stain_model: StainModel = DEFAULT_STAIN_MODEL,
    patch_size: int = DEFAULT_PATCH_SIZE,
    case_id: str = "slide",
    jobs: int = 1,
) -> tuple[Prediction, PatchTally]:
    """Full pipeline over one slide image: tile, reject background,
    classify patches, aggregate under the chosen rule.

    The result is independent of ``jobs``: patches are processed in grid
    order and the tally is a commutative reduction.
    """
    if rule not in AGGREGATORS:
        raise ValueError(f"unknown aggregation rule {rule!r}")
    grid = tile_image(image, patch_size)
    patches = list(iter_patches(image, grid))
    foreground = [p for p in patches if not is_background_mucs(p)]
    n_bg = len(patches) - len(foreground)
    if not foreground:
        raise CoverageError("every patch was classified as background")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            features = list(pool.map(lambda p: extract_features(p, stain_model), foreground))
    else:
        features = [extract_features(p, stain_model) for p in foreground]
    categories, confidences = predict_samme(model, np.stack(features))
    t = tally(categories, background=n_bg)
    score = AGGREGATORS[rule](t)
    if pcms_mode == "eq2":
        pcms = pcms_eq2(t)
    elif pcms_mode == "morphological":
        from .pcms_morph import membrane_extent, pcms_morphological, segment_tumor_nuclei

        maps = deconvolve(rgb_to_od(image, stain_model.background), stain_model)
        tumor = segment_tumor_nuclei(maps.hematoxylin)
        extent = membrane_extent(maps.dab)
        pcms = pcms_morphological(tumor, extent)
    else:
        raise ValueError(f"unknown pcms mode {pcms_mode!r}")
    confidence = slide_confidence(confidences.tolist())
    return Prediction(case_id, score, confidence, pcms), t
