"""Pixel-level primitives shared by every scorer: color conversions,
optical density and stain unmixing, thresholding, binary morphology,
region statistics, texture features, and bilinear pooling."""

from .color import (
    DEFAULT_I0,
    OD_EPSILON,
    luminance,
    od_to_rgb,
    rgb_to_hsb,
    rgb_to_lab,
    rgb_to_od,
)
from .io import load_image, save_image
from .regions import (
    OtsuResult,
    RegionStats,
    adaptive_threshold,
    connected_components,
    fill_holes,
    local_mean,
    otsu_threshold,
    skeletonize,
)
from .stain import (
    DEFAULT_STAIN_MODEL,
    ConcentrationMaps,
    StainModel,
    deconvolve,
    estimate_stain_vectors,
    unmix_image,
)
from .texture import (
    BilinearDescriptor,
    GlcmFeatures,
    HistogramStats,
    bilinear_pool,
    fractal_dimension_dbc,
    glcm_features,
    histogram_stats,
)
