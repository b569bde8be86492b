"""Regenerate the shipped characteristics-curve centroid model.

The default model ships calibrated on synthetic slides (48 cases, 5 ROIs
each); rerunning this script reproduces the bundled file byte-for-byte.
Point --out elsewhere to retrain on your own data and pass the file to
``classify_curve`` or ``her2kit score --method charcurve --model``.
"""

import argparse
from pathlib import Path

from her2kit import charcurve as cc
from her2kit.evalcore import Her2Score
from her2kit.synthgen import generate_case

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out", default=str(Path(__file__).parent / "output" / "charcurve_centroids.txt"))
parser.add_argument("--per-class", type=int, default=12)
args = parser.parse_args()

coefficients = {score: [] for score in Her2Score}
for score in Her2Score:
    for i in range(args.per_class):
        case = generate_case(score, seed=50000 + 17 * int(score) + 101 * i, noise_sigma=2.0)
        image = case.tiles[0][0]
        for roi in cc.select_rois(image, count=5, roi_size=(300, 200)):
            curve = cc.characteristics_curve(cc.extract_roi(image, roi))
            coefficients[score].append(cc.fit_cubic(curve).coefficients)
    print(f"score {score.label}: {len(coefficients[score])} calibration curves")

model = cc.calibrate_centroids(coefficients)
out = Path(args.out)
out.parent.mkdir(parents=True, exist_ok=True)
cc.save_centroid_model(model, out)
print(f"centroid model -> {out}")

shipped = cc.default_centroid_model()
if args.per_class == 12:
    import numpy as np

    match = np.allclose(model.centroids, shipped.centroids)
    print(f"matches the shipped default model: {match}")
