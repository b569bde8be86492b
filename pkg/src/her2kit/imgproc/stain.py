"""Stain vectors and unmixing: optical-density plane estimation (the
singular-direction / angular-percentile construction of the classical
normalization method) and per-pixel least-squares deconvolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInputError
from .color import DEFAULT_I0, rgb_to_od


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise DegenerateInputError("zero stain vector")
    return v / n


@dataclass(frozen=True)
class StainModel:
    """Two unit-norm optical-density stain vectors plus background intensity."""

    hematoxylin: np.ndarray
    dab: np.ndarray
    background: np.ndarray = field(default_factory=lambda: np.full(3, DEFAULT_I0))

    def __post_init__(self):
        object.__setattr__(self, "hematoxylin", _unit(self.hematoxylin))
        object.__setattr__(self, "dab", _unit(self.dab))
        object.__setattr__(self, "background", np.asarray(self.background, dtype=np.float64))
        if np.any(self.hematoxylin < -1e-9) or np.any(self.dab < -1e-9):
            raise DegenerateInputError("stain vectors must have non-negative components")
        if np.linalg.norm(np.cross(self.hematoxylin, self.dab)) < 1e-9:
            raise DegenerateInputError("stain vectors are linearly dependent")

    @property
    def matrix(self) -> np.ndarray:
        """3x2 mixing matrix with stain vectors as columns."""
        return np.stack([self.hematoxylin, self.dab], axis=1)


# Hematoxylin from the classical H-DAB basis.  The DAB-like default is a
# slightly redder-balanced brown chosen so that rendered DAB keeps an HSB
# hue inside the default staining window across the whole concentration
# range used by the synthetic generator; both vectors are configurable.
DEFAULT_STAIN_MODEL = StainModel(
    hematoxylin=(0.650, 0.704, 0.286),
    dab=(0.350, 0.550, 0.850),
)


@dataclass(frozen=True)
class ConcentrationMaps:
    """Per-pixel stain concentrations unmixed from an OD field."""

    hematoxylin: np.ndarray
    dab: np.ndarray


def estimate_stain_vectors(
    od_pixels: np.ndarray,
    od_floor: float = 0.15,
    percentile: float = 1.0,
    min_pixels: int = 100,
    background=None,
) -> StainModel:
    """Estimate the two stain vectors from an (N, 3) cloud of OD pixels.

    Pixels with OD magnitude above ``od_floor`` are projected onto the
    plane of the two largest singular directions; the ``percentile`` and
    ``100 - percentile`` angular extremes give the stain vectors.
    """
    od = np.asarray(od_pixels, dtype=np.float64).reshape(-1, 3)
    tissue = od[np.linalg.norm(od, axis=1) > od_floor]
    if len(tissue) < min_pixels:
        raise DegenerateInputError(
            f"only {len(tissue)} tissue pixels above OD {od_floor}; need {min_pixels}"
        )
    _, svals, vt = np.linalg.svd(tissue, full_matrices=False)
    if svals[1] <= 1e-6 * svals[0]:
        raise DegenerateInputError("OD cloud is effectively rank 1")
    basis = vt[:2].copy()
    for i in range(2):
        if (tissue @ basis[i]).sum() < 0:
            basis[i] = -basis[i]
    coords = tissue @ basis.T
    angles = np.arctan2(coords[:, 1], coords[:, 0])
    lo, hi = np.percentile(angles, [percentile, 100.0 - percentile])
    vectors = []
    for phi in (lo, hi):
        v = np.cos(phi) * basis[0] + np.sin(phi) * basis[1]
        if v.sum() < 0:
            v = -v
        vectors.append(_unit(np.clip(v, 0.0, None)))
    # Hematoxylin absorbs red more strongly; order by first component.
    first, second = sorted(vectors, key=lambda v: -v[0])
    if background is None:
        background = np.full(3, DEFAULT_I0)
    return StainModel(first, second, background)


def deconvolve(od_field: np.ndarray, model: StainModel) -> ConcentrationMaps:
    """Least-squares unmixing of an (..., 3) OD field into two stains.

    Concentrations are clamped at zero (stains cannot be negative).
    """
    od = np.asarray(od_field, dtype=np.float64)
    matrix = model.matrix
    if np.linalg.cond(matrix) > 1e8:
        raise DegenerateInputError("stain matrix is singular")
    pinv = np.linalg.pinv(matrix)  # (2, 3)
    conc = od @ pinv.T
    conc = np.clip(conc, 0.0, None)
    return ConcentrationMaps(conc[..., 0], conc[..., 1])


def unmix_image(rgb: np.ndarray, model: StainModel = DEFAULT_STAIN_MODEL) -> ConcentrationMaps:
    """Convenience: RGB image -> OD -> concentration maps."""
    return deconvolve(rgb_to_od(rgb, model.background), model)
