"""Morphological PCMS: the chicken-wire pathway.

Complete membranes form a contiguous lattice; skeletonizing the DAB mask
and filling the enclosed holes recovers how much area complete membranes
enclose.  The estimate tracks the generator's planted completeness, and
the class-prior fallback reads its estimate straight off the training
ground truth.
"""

from her2kit.evalcore import Her2Score
from her2kit.imgproc import deconvolve, rgb_to_od
from her2kit.imgproc.stain import DEFAULT_STAIN_MODEL
from her2kit.ingest import load_fixtures
from her2kit.pcms_morph import (
    membrane_extent,
    pcms_class_prior,
    pcms_morphological,
    segment_tumor_nuclei,
)
from her2kit.synthgen import generate_tile, membrane_benchmark_spec

print("membrane completeness ladder (noise-free benchmark tiles):")
print(f"  {'planted':>8} {'estimate':>9} {'similarity':>11} {'nuclei':>7}")
for p in (0.25, 0.5, 0.75, 1.0):
    image, _ = generate_tile(membrane_benchmark_spec(p, seed=1))
    maps = deconvolve(rgb_to_od(image), DEFAULT_STAIN_MODEL)
    tumor = segment_tumor_nuclei(maps.hematoxylin)
    extent = membrane_extent(maps.dab)
    estimate = pcms_morphological(tumor, extent)
    print(f"  {100 * p:>7.0f}% {estimate:>8.1f}% {extent.similarity:>11.3f} "
          f"{tumor.region_count:>7}")

print()
print("class-prior PCMS from the bundled training ground truth:")
fixtures = load_fixtures()
for score in Her2Score:
    prior = pcms_class_prior(fixtures.training_gt, score)
    print(f"  score {score.label}: mean training PCMS {prior:.2f}%")
