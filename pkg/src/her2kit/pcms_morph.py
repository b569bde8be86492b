"""Morphological PCMS estimation plus the class-prior fallback.

Complete membrane staining forms a contiguous chicken-wire lattice whose
skeleton encloses cells; filling the skeleton's holes and comparing the
filled mask against the original binary staining measures how complete
the membranes are.  PCMS is the ratio of that membrane extent to the
nuclear tumor area.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import CoverageError
from .evalcore import GroundTruthRecord, Her2Score
from .imgproc import fill_holes, otsu_threshold, skeletonize
from .imgproc.regions import label_regions
from .ingest import GroundTruthFile

#: Concentration mapped to gray 255 when histogramming for the Otsu cut.
CONC_GRAY_SCALE = 3.0

#: Default nucleus filter (pixels at the synthetic working scale).
NUCLEUS_AREA_RANGE = (80, 2500)
NUCLEUS_ECC_MAX = 0.92

#: Default DAB concentration threshold for membrane binarization.
DAB_THRESHOLD = 0.2


@dataclass(frozen=True)
class TumorMask:
    """Accepted nucleus regions; ``is_empty`` flags a tile with no tumor."""

    mask: np.ndarray
    region_count: int
    area: int

    @property
    def is_empty(self) -> bool:
        return self.region_count == 0


@dataclass(frozen=True)
class MembraneExtent:
    extent: float  # pixels, similarity-weighted
    similarity: float  # Dice overlap in [0, 1]


def segment_tumor_nuclei(
    hematoxylin: np.ndarray,
    area_range: tuple = NUCLEUS_AREA_RANGE,
    ecc_max: float = NUCLEUS_ECC_MAX,
) -> TumorMask:
    """Otsu-binarize the hematoxylin concentration map and keep round,
    nucleus-sized components (area in range, eccentricity capped).

    Zero accepted regions is not an error: the empty-tumor flag lets
    slide scoring degrade gracefully on blank or necrotic tiles.
    """
    conc = np.asarray(hematoxylin, dtype=np.float64)
    gray = np.clip(conc / CONC_GRAY_SCALE * 255.0, 0, 255).astype(np.uint8)
    hist = np.bincount(gray.ravel(), minlength=256)
    result = otsu_threshold(hist)
    if result.degenerate:
        return TumorMask(np.zeros(conc.shape, dtype=bool), 0, 0)
    binary = gray > result.level
    labels, regions = label_regions(binary)
    keep = np.zeros(len(regions) + 1, dtype=bool)
    count = 0
    area = 0
    for region in regions:
        if area_range[0] <= region.area <= area_range[1] and region.eccentricity <= ecc_max:
            keep[region.label] = True
            count += 1
            area += region.area
    accepted = keep[labels] if regions else np.zeros(conc.shape, dtype=bool)
    return TumorMask(accepted, count, int(area))


def membrane_extent(dab: np.ndarray, dab_threshold: float = DAB_THRESHOLD) -> MembraneExtent:
    """Skeletonize the binarized DAB signal, fill the chicken-wire holes,
    and weight the filled area by its Dice similarity to the original
    binary image.  Complete lattices enclose area (large fill, decent
    similarity); scattered broken staining fills almost nothing."""
    binary = np.asarray(dab, dtype=np.float64) > dab_threshold
    if not binary.any():
        return MembraneExtent(0.0, 0.0)
    skeleton = skeletonize(binary)
    filled = fill_holes(skeleton)
    intersection = np.logical_and(filled, binary).sum()
    dice = 2.0 * intersection / (filled.sum() + binary.sum())
    return MembraneExtent(float(filled.sum() * dice), float(dice))


def pcms_morphological(tumor: TumorMask, extent: MembraneExtent) -> float:
    """100 x membrane extent / tumor area, clamped to [0, 100]; an empty
    tumor mask reads out 0 (callers can check ``tumor.is_empty``)."""
    if tumor.area == 0:
        return 0.0
    return float(np.clip(100.0 * extent.extent / tumor.area, 0.0, 100.0))


def pcms_class_prior(
    training: Union[GroundTruthFile, Iterable[GroundTruthRecord]], score: Her2Score
) -> float:
    """Mean reference PCMS over training cases of the given score."""
    records = training.rows if isinstance(training, GroundTruthFile) else training
    values = [r.pcms for r in records if r.score == score and r.pcms is not None]
    if not values:
        raise CoverageError(f"no training case with score {score.label} carries a PCMS value")
    return float(np.mean(values))
