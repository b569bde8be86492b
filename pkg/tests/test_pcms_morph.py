import numpy as np
import pytest

from her2kit.errors import CoverageError
from her2kit.evalcore import GroundTruthRecord, Her2Score
from her2kit.imgproc import deconvolve, rgb_to_od
from her2kit.imgproc.stain import DEFAULT_STAIN_MODEL
from her2kit.ingest import load_fixtures
from her2kit.pcms_morph import (
    MembraneExtent,
    TumorMask,
    membrane_extent,
    pcms_class_prior,
    pcms_morphological,
    segment_tumor_nuclei,
)
from her2kit.synthgen import TileSpec, generate_tile, membrane_benchmark_spec


def _unmix(image):
    return deconvolve(rgb_to_od(image), DEFAULT_STAIN_MODEL)


class TestSegmentTumorNuclei:
    def test_round_nuclei_all_accepted(self):
        spec = TileSpec(width=400, height=300, cell_count=30, seed=9,
                        membrane_completeness=0.0, noise_sigma=0.0)
        image, annotations = generate_tile(spec)
        tumor = segment_tumor_nuclei(_unmix(image).hematoxylin)
        assert tumor.region_count == len(annotations) == 30
        assert not tumor.is_empty

    def test_elongated_fibers_rejected(self):
        hema = np.full((200, 200), 0.1)
        hema[50:53, 20:180] = 0.9  # 3x160 fiber, eccentricity ~1
        tumor = segment_tumor_nuclei(hema)
        assert tumor.region_count == 0

    def test_area_filter(self):
        hema = np.full((200, 200), 0.1)
        hema[40:44, 40:44] = 0.9  # 16 px, below the minimum area
        yy, xx = np.mgrid[:200, :200]
        hema[(yy - 120) ** 2 + (xx - 120) ** 2 <= 60**2] = 0.9  # 11310 px, above max
        tumor = segment_tumor_nuclei(hema)
        assert tumor.region_count == 0

    def test_blank_map_empty_flag(self):
        tumor = segment_tumor_nuclei(np.zeros((100, 100)))
        assert tumor.is_empty and tumor.area == 0


class TestMembraneExtent:
    def test_complete_lattice_high_similarity(self):
        # thick grid lattice: the wire mesh covers most of the field, the
        # filled skeleton encloses everything
        dab = np.zeros((200, 200))
        for k in range(0, 200, 16):
            dab[max(0, k - 5) : k + 5, :] = 0.9
            dab[:, max(0, k - 5) : k + 5] = 0.9
        extent = membrane_extent(dab)
        assert extent.similarity >= 0.8
        binary = dab > 0.2
        assert extent.extent >= 0.5 * binary.sum()

    def test_scattered_dots_small_extent(self):
        rng = np.random.default_rng(3)
        dab = np.zeros((200, 200))
        rows = rng.integers(0, 200, size=120)
        cols = rng.integers(0, 200, size=120)
        dab[rows, cols] = 0.9  # single-pixel specks: broken membranes
        extent = membrane_extent(dab)
        assert extent.similarity >= 0.8  # skeleton == the dots themselves
        assert extent.extent <= 200  # but almost nothing fills

    def test_empty_map(self):
        extent = membrane_extent(np.zeros((50, 50)))
        assert extent.extent == 0.0 and extent.similarity == 0.0

    def test_similarity_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            dab = (rng.random((80, 80)) < 0.3) * 0.9
            extent = membrane_extent(dab)
            assert 0.0 <= extent.similarity <= 1.0


class TestPcmsMorphological:
    def test_extent_equals_tumor_area(self):
        tumor = TumorMask(np.ones((10, 10), dtype=bool), 1, 500)
        assert pcms_morphological(tumor, MembraneExtent(500.0, 1.0)) == 100.0

    def test_zero_extent(self):
        tumor = TumorMask(np.ones((10, 10), dtype=bool), 1, 500)
        assert pcms_morphological(tumor, MembraneExtent(0.0, 0.0)) == 0.0

    def test_empty_tumor_reads_zero(self):
        tumor = TumorMask(np.zeros((10, 10), dtype=bool), 0, 0)
        assert pcms_morphological(tumor, MembraneExtent(1000.0, 1.0)) == 0.0
        assert tumor.is_empty

    def test_clamped_and_monotone_in_extent(self):
        tumor = TumorMask(np.ones((10, 10), dtype=bool), 1, 100)
        values = [pcms_morphological(tumor, MembraneExtent(e, 1.0)) for e in (0, 30, 60, 90, 200)]
        assert values == sorted(values)
        assert values[-1] == 100.0

    def test_completeness_ladder_on_noise_free_tiles(self):
        for p in (0.25, 0.5, 0.75, 1.0):
            image, _ = generate_tile(membrane_benchmark_spec(p, seed=3))
            maps = _unmix(image)
            estimate = pcms_morphological(
                segment_tumor_nuclei(maps.hematoxylin), membrane_extent(maps.dab)
            )
            assert abs(estimate - 100.0 * p) <= 10.0, (p, estimate)


class TestPcmsClassPrior:
    def test_score_zero_over_training_fixture(self):
        fx = load_fixtures()
        assert pcms_class_prior(fx.training_gt, Her2Score.ZERO) == 0.0

    def test_score_one_plus_matches_direct_mean(self):
        fx = load_fixtures()
        values = [r.pcms for r in fx.training_gt.rows if r.score == Her2Score.ONE_PLUS]
        expected = sum(values) / len(values)
        assert pcms_class_prior(fx.training_gt, Her2Score.ONE_PLUS) == pytest.approx(expected)

    def test_single_case_class(self):
        records = [GroundTruthRecord("a", Her2Score.TWO_PLUS, 42.0)]
        assert pcms_class_prior(records, Her2Score.TWO_PLUS) == 42.0

    def test_missing_class_coverage_error(self):
        records = [GroundTruthRecord("a", Her2Score.TWO_PLUS, 42.0)]
        with pytest.raises(CoverageError):
            pcms_class_prior(records, Her2Score.THREE_PLUS)

    def test_permutation_invariance(self):
        import random

        rng = random.Random(5)
        records = [
            GroundTruthRecord(str(i), Her2Score.TWO_PLUS, float(rng.randrange(101)))
            for i in range(20)
        ]
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert pcms_class_prior(records, Her2Score.TWO_PLUS) == pytest.approx(
            pcms_class_prior(shuffled, Her2Score.TWO_PLUS)
        )
