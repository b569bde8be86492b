"""Characteristics-curve scorer: ROI selection, percentage-saturation
curves, cubic modelling, and rule-plus-centroid classification.

The curve samples the stained-pixel fraction while the saturation lower
limit sweeps from 0.10 to 0.50 in 20 steps with the hue window fixed;
its shape discriminates the four scores.  Two hard rules take precedence
over the centroid model: a curve lying entirely at or above the 30% mark
is 3+, and a curve starting at or below 2% is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CoverageError, FormatError
from .evalcore import Her2Score, Prediction
from .imgproc.color import rgb_to_hsb
from .ingest import fixture_path

#: ROI geometry at the reference working resolution.
ROI_SIZE = (1800, 1200)

#: Hue window (degrees) treated as DAB staining; the method fixes the hue
#: but its value is configuration, recorded in output metadata.
DEFAULT_HUE_WINDOW = (20.0, 70.0)

#: Background pixel rule for ROI selection.
BG_SATURATION = 0.08
BG_BRIGHTNESS = 0.85

#: Saturation lower limits of the 20 curve samples (both ends included).
CURVE_S_LO = np.linspace(0.10, 0.50, 20)

#: Hard-rule thresholds.
RULE_3PLUS_FLOOR = 0.30
RULE_ZERO_START = 0.02


@dataclass(frozen=True)
class RoiSpec:
    x: int
    y: int
    width: int
    height: int
    background_fraction: float


@dataclass(frozen=True)
class CharCurve:
    """20 (saturation lower limit, stained fraction) samples."""

    s_lo: np.ndarray
    pct: np.ndarray

    def __post_init__(self):
        if len(self.s_lo) != 20 or len(self.pct) != 20:
            raise ValueError("characteristics curve must hold exactly 20 samples")


@dataclass(frozen=True)
class CubicFit:
    coefficients: np.ndarray  # (a0, a1, a2, a3), ascending powers
    residual: float  # rms


def select_rois(
    slide: np.ndarray,
    count: int = 5,
    max_background: float = 0.30,
    roi_size: tuple = ROI_SIZE,
    bg_saturation: float = BG_SATURATION,
    bg_brightness: float = BG_BRIGHTNESS,
) -> list[RoiSpec]:
    """Up to ``count`` non-overlapping ROIs with background fraction at or
    below ``max_background`` (background = low saturation, high brightness),
    best candidates first."""
    rw, rh = roi_size
    h, w = slide.shape[:2]
    if w < rw or h < rh:
        raise CoverageError(f"slide {w}x{h} smaller than one {rw}x{rh} ROI")
    _, s, v = rgb_to_hsb(slide)
    background = (s < bg_saturation) & (v > bg_brightness)
    candidates = []
    for y in range(0, h - rh + 1, rh):
        for x in range(0, w - rw + 1, rw):
            frac = float(background[y : y + rh, x : x + rw].mean())
            if frac <= max_background:
                candidates.append(RoiSpec(x, y, rw, rh, frac))
    if not candidates:
        raise CoverageError("no ROI met the background limit")
    candidates.sort(key=lambda r: (r.background_fraction, r.y, r.x))
    return candidates[:count]


def extract_roi(slide: np.ndarray, roi: RoiSpec) -> np.ndarray:
    return slide[roi.y : roi.y + roi.height, roi.x : roi.x + roi.width]


def stained_fraction(roi: np.ndarray, hue_window: tuple = DEFAULT_HUE_WINDOW, s_lo: float = 0.1) -> float:
    """Fraction of ROI pixels with hue inside the window and saturation in
    [s_lo, 1]."""
    if not 0.0 <= s_lo <= 1.0:
        raise ValueError("saturation lower limit must be in [0, 1]")
    h, s, _ = rgb_to_hsb(roi)
    mask = (h >= hue_window[0]) & (h <= hue_window[1]) & (s >= s_lo)
    return float(mask.mean())


def characteristics_curve(roi: np.ndarray, hue_window: tuple = DEFAULT_HUE_WINDOW) -> CharCurve:
    """Sample the stained fraction at the 20 saturation lower limits."""
    h, s, _ = rgb_to_hsb(roi)
    in_window = (h >= hue_window[0]) & (h <= hue_window[1])
    sats = np.sort(s[in_window].ravel())
    total = h.size
    counts = len(sats) - np.searchsorted(sats, CURVE_S_LO, side="left")
    return CharCurve(CURVE_S_LO.copy(), counts / total)


def fit_cubic(curve: CharCurve) -> CubicFit:
    """Least-squares cubic over (s_lo, pct), with the rms residual."""
    coeffs = np.polynomial.polynomial.polyfit(curve.s_lo, curve.pct, 3)
    fitted = np.polynomial.polynomial.polyval(curve.s_lo, coeffs)
    residual = float(np.sqrt(np.mean((fitted - curve.pct) ** 2)))
    return CubicFit(coeffs, residual)


@dataclass(frozen=True)
class CentroidModel:
    """Per-score centroids in cubic-coefficient space, plus the hue window
    the curves were extracted with.

    Distance between a fit and a centroid is measured between the two
    cubics evaluated at the 20 curve sample points (coefficient vectors
    under the Vandermonde-induced metric), so curves that look alike are
    close regardless of how the polynomial distributes its terms."""

    centroids: np.ndarray  # (4, 4) rows ordered 0, 1+, 2+, 3+
    hue_window: tuple = DEFAULT_HUE_WINDOW


def save_centroid_model(model: CentroidModel, path) -> None:
    lines = [
        "# charcurve centroid model: rows are cubic coefficients (a0 a1 a2 a3)",
        "# for scores 0, 1+, 2+, 3+ in order",
        f"hue_window {model.hue_window[0]} {model.hue_window[1]}",
    ]
    for row in model.centroids:
        lines.append(" ".join(f"{v:.10g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_centroid_model(path) -> CentroidModel:
    hue_window = DEFAULT_HUE_WINDOW
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("hue_window"):
            parts = line.split()
            hue_window = (float(parts[1]), float(parts[2]))
            continue
        values = [float(tok) for tok in line.split()]
        if len(values) != 4:
            raise FormatError(f"centroid row must hold 4 coefficients: {line!r}")
        rows.append(values)
    if len(rows) != 4:
        raise FormatError(f"centroid model must hold 4 rows, found {len(rows)}")
    return CentroidModel(np.array(rows), hue_window)


@lru_cache(maxsize=1)
def default_centroid_model() -> CentroidModel:
    return load_centroid_model(fixture_path("charcurve_centroids.txt"))


def calibrate_centroids(
    coefficients_by_score: dict, hue_window: tuple = DEFAULT_HUE_WINDOW
) -> CentroidModel:
    """Fit a centroid model from per-score collections of cubic
    coefficient vectors (their means become the centroids)."""
    centroids = np.array(
        [np.mean(coefficients_by_score[Her2Score(k)], axis=0) for k in range(4)]
    )
    return CentroidModel(centroids, hue_window)


def classify_curve(
    curve: CharCurve, fit: CubicFit, model: Optional[CentroidModel] = None
) -> tuple[Her2Score, float]:
    """Hard rules first, nearest centroid on cubic coefficients otherwise.

    Confidence is 1 for a hard-rule decision, else the normalized margin
    (d2 - d1) / (d2 + d1) between the two nearest centroids.
    """
    if float(curve.pct.min()) >= RULE_3PLUS_FLOOR:
        return Her2Score.THREE_PLUS, 1.0
    if float(curve.pct[0]) <= RULE_ZERO_START:
        return Her2Score.ZERO, 1.0
    if model is None:
        model = default_centroid_model()
    vander = np.polynomial.polynomial.polyvander(CURVE_S_LO, 3)
    gap = vander @ (model.centroids - fit.coefficients).T  # (20, 4)
    distances = np.linalg.norm(gap, axis=0)
    order = np.argsort(distances)
    d1, d2 = distances[order[0]], distances[order[1]]
    confidence = 1.0 if d1 + d2 == 0 else float((d2 - d1) / (d2 + d1))
    return Her2Score(int(order[0])), confidence


@dataclass(frozen=True)
class RoiEvaluation:
    roi: RoiSpec
    curve: CharCurve
    fit: CubicFit
    score: Her2Score
    confidence: float


def score_slide_charcurve(
    slide: np.ndarray,
    count: int = 5,
    roi_size: tuple = ROI_SIZE,
    hue_window: tuple = DEFAULT_HUE_WINDOW,
    model: Optional[CentroidModel] = None,
    max_background: float = 0.30,
    case_id: str = "slide",
) -> tuple[Prediction, list[RoiEvaluation]]:
    """Per-ROI classification aggregated to a slide call.

    Slide score is the majority ROI vote (ties break toward the higher
    score, since escalation triggers FISH review rather than denying
    treatment); confidence is the mean ROI confidence; PCMS is the mean
    first-sample stained fraction x 100.
    """
    rois = select_rois(slide, count=count, max_background=max_background, roi_size=roi_size)
    evaluations = []
    for roi in rois:
        patch = extract_roi(slide, roi)
        curve = characteristics_curve(patch, hue_window)
        fit = fit_cubic(curve)
        score, confidence = classify_curve(curve, fit, model)
        evaluations.append(RoiEvaluation(roi, curve, fit, score, confidence))
    return aggregate_roi_votes(evaluations, case_id), evaluations


def aggregate_roi_votes(evaluations: Sequence[RoiEvaluation], case_id: str = "slide") -> Prediction:
    if not evaluations:
        raise CoverageError("no ROI evaluations to aggregate")
    votes = np.zeros(4, dtype=int)
    for ev in evaluations:
        votes[int(ev.score)] += 1
    best = max(range(4), key=lambda k: (votes[k], k))  # tie -> higher score
    # fsum keeps the aggregate independent of ROI enumeration order
    confidence = math.fsum(ev.confidence for ev in evaluations) / len(evaluations)
    pcms = math.fsum(float(ev.curve.pct[0]) for ev in evaluations) / len(evaluations) * 100.0
    return Prediction(case_id, Her2Score(best), confidence, min(pcms, 100.0))
