"""Characteristics curves for the four scores.

Extracts percentage-saturation curves from synthetic slides of each class
and plots them: flat and high for 3+, flat with a late drop for 2+, an
early smooth decay for 1+, and silence for 0.  The cubic fits behind the
shipped centroid model are drawn dashed.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from her2kit import charcurve as cc
from her2kit.evalcore import Her2Score
from her2kit.synthgen import generate_case

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

fig, ax = plt.subplots(figsize=(7, 4.5))
colors = {0: "#777777", 1: "#7fb3d5", 2: "#e59866", 3: "#922b21"}
model = cc.default_centroid_model()

for score in Her2Score:
    case = generate_case(score, seed=777 + int(score))
    image = case.tiles[0][0]
    rois = cc.select_rois(image, roi_size=(300, 200))
    curves = [cc.characteristics_curve(cc.extract_roi(image, r)) for r in rois]
    slide_pred, _ = cc.score_slide_charcurve(image, roi_size=(300, 200))
    for i, curve in enumerate(curves):
        ax.plot(curve.s_lo, 100 * curve.pct, color=colors[int(score)], alpha=0.6,
                label=f"{score.label} (called {slide_pred.score.label})" if i == 0 else None)
    centroid = np.polynomial.polynomial.polyval(cc.CURVE_S_LO, model.centroids[int(score)])
    ax.plot(cc.CURVE_S_LO, 100 * centroid, "--", color=colors[int(score)], linewidth=2)
    print(f"score {score.label}: slide call {slide_pred.score.label} "
          f"(confidence {slide_pred.confidence:.2f}), "
          f"first sample {100 * curves[0].pct[0]:.1f}%")

ax.set_xlabel("saturation lower limit")
ax.set_ylabel("stained pixels (%)")
ax.set_title("percentage-saturation characteristics curves (dashed: class centroids)")
ax.legend()
fig.tight_layout()
fig.savefig(out / "characteristics_curves.png", dpi=130)
print(f"plot -> {out / 'characteristics_curves.png'}")
