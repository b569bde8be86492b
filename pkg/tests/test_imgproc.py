import colorsys
import math
import random

import numpy as np
import pytest

from her2kit.errors import DegenerateInputError, EmptyCollectionError, SizeError
from her2kit.imgproc import (
    DEFAULT_STAIN_MODEL,
    StainModel,
    adaptive_threshold,
    bilinear_pool,
    connected_components,
    deconvolve,
    estimate_stain_vectors,
    fill_holes,
    fractal_dimension_dbc,
    glcm_features,
    histogram_stats,
    local_mean,
    od_to_rgb,
    otsu_threshold,
    rgb_to_hsb,
    rgb_to_lab,
    rgb_to_od,
    skeletonize,
)


class TestRgbToHsb:
    def test_pure_red(self):
        h, s, v = rgb_to_hsb(np.array([255, 0, 0]))
        assert (h, s, v) == (0.0, 1.0, 1.0)

    def test_gray_is_achromatic(self):
        h, s, v = rgb_to_hsb(np.array([128, 128, 128]))
        assert s == 0.0 and h == 0.0

    def test_reference_pixel(self):
        # expected values frozen from the stdlib colorsys conversion
        h, s, v = rgb_to_hsb(np.array([128, 64, 32]))
        assert abs(h - 20.0) < 1e-9
        assert abs(s - 0.75) < 1e-9
        assert abs(v - 0.5019607843137255) < 1e-12

    def test_matches_colorsys_on_random_pixels(self):
        rng = random.Random(5)
        for _ in range(200):
            px = [rng.randrange(256) for _ in range(3)]
            h, s, v = rgb_to_hsb(np.array(px))
            eh, es, ev = colorsys.rgb_to_hsv(px[0] / 255, px[1] / 255, px[2] / 255)
            assert abs(h - eh * 360 % 360) < 1e-9
            assert abs(s - es) < 1e-12
            assert abs(v - ev) < 1e-12

    def test_vectorized_shape(self):
        img = np.zeros((4, 6, 3), dtype=np.uint8)
        h, s, v = rgb_to_hsb(img)
        assert h.shape == s.shape == v.shape == (4, 6)


class TestRgbToLab:
    def test_white_point(self):
        L, a, b = rgb_to_lab(np.array([255, 255, 255]))
        assert abs(L - 100.0) < 1e-6
        assert abs(a) < 0.01 and abs(b) < 0.01

    def test_black(self):
        L, _, _ = rgb_to_lab(np.array([0, 0, 0]))
        assert L == 0.0

    def test_mid_gray_reference(self):
        # frozen from an independent reference conversion (skimage.color)
        L, a, b = rgb_to_lab(np.array([128, 128, 128]))
        assert abs(L - 53.5850135) < 1e-3
        assert abs(a) < 0.01 and abs(b) < 0.01

    def test_chromatic_reference(self):
        L, a, b = rgb_to_lab(np.array([128, 64, 32]))
        assert abs(L - 34.72479591) < 1e-3
        assert abs(a - 24.99956773) < 1e-3
        assert abs(b - 31.37283973) < 1e-3


class TestRgbToOd:
    def test_blank_slide(self):
        assert rgb_to_od(np.array([255.0])) == pytest.approx(0.0)

    def test_one_decade(self):
        assert rgb_to_od(np.array([25.5]))[0] == pytest.approx(1.0)

    def test_black_clamped_finite(self):
        od = rgb_to_od(np.array([0.0]))[0]
        assert od == pytest.approx(-math.log10((1 / 255) / 255))
        assert np.isfinite(od)


def _mix(conc_h, conc_d, model=DEFAULT_STAIN_MODEL):
    od = conc_h[..., None] * model.hematoxylin + conc_d[..., None] * model.dab
    return od


class TestStainModel:
    def test_vectors_normalized(self):
        assert np.linalg.norm(DEFAULT_STAIN_MODEL.hematoxylin) == pytest.approx(1.0)
        assert np.linalg.norm(DEFAULT_STAIN_MODEL.dab) == pytest.approx(1.0)

    def test_dependent_vectors_rejected(self):
        with pytest.raises(DegenerateInputError):
            StainModel((0.5, 0.5, 0.5), (0.2, 0.2, 0.2))


class TestDeconvolve:
    def test_pure_stain(self):
        od = 2.0 * DEFAULT_STAIN_MODEL.hematoxylin
        maps = deconvolve(od[None, None, :], DEFAULT_STAIN_MODEL)
        assert maps.hematoxylin[0, 0] == pytest.approx(2.0, abs=1e-9)
        assert maps.dab[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_zero_od(self):
        maps = deconvolve(np.zeros((2, 2, 3)), DEFAULT_STAIN_MODEL)
        assert np.all(maps.hematoxylin == 0) and np.all(maps.dab == 0)

    def test_round_trip_random_concentrations(self):
        rng = np.random.default_rng(42)
        ch = rng.uniform(0, 2, size=(16, 16))
        cd = rng.uniform(0, 2, size=(16, 16))
        od = _mix(ch, cd)
        maps = deconvolve(od, DEFAULT_STAIN_MODEL)
        assert np.max(np.abs(maps.hematoxylin - ch)) <= 1e-6
        assert np.max(np.abs(maps.dab - cd)) <= 1e-6


class TestEstimateStainVectors:
    def _synthetic_od(self, rng, n=5000, noise=0.0):
        ch = rng.uniform(0.05, 1.5, size=n)
        cd = rng.uniform(0.05, 1.5, size=n)
        od = _mix(ch, cd)
        if noise:
            rgb = od_to_rgb(od)
            rgb = np.clip(np.rint(rgb + rng.normal(0, noise, rgb.shape)), 0, 255)
            od = rgb_to_od(rgb)
        return od.reshape(-1, 3)

    @staticmethod
    def _angle_deg(u, v):
        cosine = np.clip(np.dot(u, v), -1.0, 1.0)
        return math.degrees(math.acos(cosine))

    def test_recovery_within_five_degrees(self):
        rng = np.random.default_rng(7)
        model = estimate_stain_vectors(self._synthetic_od(rng, noise=2.0))
        assert self._angle_deg(model.hematoxylin, DEFAULT_STAIN_MODEL.hematoxylin) <= 5.0
        assert self._angle_deg(model.dab, DEFAULT_STAIN_MODEL.dab) <= 5.0

    def test_blank_image_degenerate(self):
        blank = np.zeros((500, 3))
        with pytest.raises(DegenerateInputError):
            estimate_stain_vectors(blank)

    def test_rank_one_cloud_degenerate(self):
        scales = np.linspace(0.5, 2.0, 500)[:, None]
        cloud = scales * DEFAULT_STAIN_MODEL.hematoxylin
        with pytest.raises(DegenerateInputError):
            estimate_stain_vectors(cloud)


class TestOtsu:
    def test_bimodal_deltas(self):
        hist = np.zeros(256)
        hist[50] = 100
        hist[200] = 100
        level = otsu_threshold(hist).level
        assert 50 <= level <= 199

    def test_constant_degenerate(self):
        hist = np.zeros(256)
        hist[77] = 1000
        res = otsu_threshold(hist)
        assert res.degenerate and res.level == 77

    def test_empty_histogram(self):
        with pytest.raises(EmptyCollectionError):
            otsu_threshold(np.zeros(256))

    @staticmethod
    def brute_force(hist):
        total = hist.sum()
        best_level, best_sigma = 0, -1.0
        for t in range(len(hist)):
            w0 = hist[: t + 1].sum()
            w1 = total - w0
            if w0 == 0 or w1 == 0:
                continue
            mu0 = sum(i * hist[i] for i in range(t + 1)) / w0
            mu1 = sum(i * hist[i] for i in range(t + 1, len(hist))) / w1
            sigma = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
            if sigma > best_sigma + 1e-12:
                best_sigma = sigma
                best_level = t
        return best_level

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            hist = rng.integers(0, 50, size=256).astype(float)
            hist[rng.integers(0, 256)] += rng.integers(100, 500)
            assert otsu_threshold(hist).level == self.brute_force(hist)


class TestAdaptiveThreshold:
    def test_constant_bright(self):
        img = np.full((20, 20), 200.0)
        assert adaptive_threshold(img, 31, 10).all()

    def test_zero_offset_constant_all_zero(self):
        img = np.full((20, 20), 200.0)
        assert not adaptive_threshold(img, 31, 0).any()

    def test_dark_disk_on_bright_field(self):
        h = w = 100
        yy, xx = np.mgrid[:h, :w]
        disk = (yy - 50) ** 2 + (xx - 50) ** 2 <= 20**2
        img = np.where(disk, 40.0, 230.0)
        mask = adaptive_threshold(img, 31, 10)
        field_fraction = 1.0 - disk.mean()
        assert abs(mask.mean() - field_fraction) < 0.02

    def test_offset_monotonicity(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(40, 40)).astype(float)
        counts = [adaptive_threshold(img, 9, off).sum() for off in range(-10, 40, 5)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_local_mean_is_clamped_window_mean(self):
        img = np.arange(25, dtype=float).reshape(5, 5)
        means = local_mean(img, 3)
        assert means[0, 0] == pytest.approx(np.mean([0, 1, 5, 6]))
        assert means[2, 2] == pytest.approx(np.mean(img[1:4, 1:4]))


class TestConnectedComponents:
    def test_filled_disk_near_circular(self):
        yy, xx = np.mgrid[:64, :64]
        mask = (yy - 32) ** 2 + (xx - 32) ** 2 <= 20**2
        regions = connected_components(mask)
        assert len(regions) == 1
        assert regions[0].eccentricity < 0.1
        assert regions[0].area == mask.sum()

    def test_thin_bar_eccentric(self):
        mask = np.zeros((10, 30), dtype=bool)
        mask[5, 5:25] = True
        regions = connected_components(mask)
        assert len(regions) == 1
        assert regions[0].eccentricity > 0.99

    def test_empty_mask(self):
        assert connected_components(np.zeros((5, 5), dtype=bool)) == []

    def test_diagonal_touching_is_one_component(self):
        mask = np.eye(6, dtype=bool)
        assert len(connected_components(mask)) == 1

    def test_centroid_xy_order(self):
        mask = np.zeros((10, 20), dtype=bool)
        mask[2, 15] = True
        region = connected_components(mask)[0]
        assert region.centroid == (15.0, 2.0)


class TestSkeletonize:
    def test_wide_bar_thins_to_centerline(self):
        mask = np.zeros((20, 60), dtype=bool)
        mask[8:13, 10:50] = True
        skel = skeletonize(mask)
        cols = np.nonzero(skel.any(axis=0))[0]
        assert abs(cols.min() - 10) <= 2 and abs(cols.max() - 49) <= 2
        # single-pixel wide along its length
        widths = skel[:, 15:45].sum(axis=0)
        assert np.all(widths == 1)

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        mask = rng.random((40, 40)) > 0.6
        once = skeletonize(mask)
        assert np.array_equal(skeletonize(once), once)

    def test_subset_of_input(self):
        rng = np.random.default_rng(8)
        mask = rng.random((40, 40)) > 0.4
        skel = skeletonize(mask)
        assert not np.any(skel & ~mask)

    def test_empty(self):
        assert not skeletonize(np.zeros((5, 5), dtype=bool)).any()


class TestFillHoles:
    @staticmethod
    def flood_fill_oracle(mask):
        # BFS from the border over 4-connected background
        h, w = mask.shape
        outside = np.zeros_like(mask, dtype=bool)
        stack = [(r, c) for r in range(h) for c in (0, w - 1) if not mask[r, c]]
        stack += [(r, c) for c in range(w) for r in (0, h - 1) if not mask[r, c]]
        for r, c in stack:
            outside[r, c] = True
        while stack:
            r, c = stack.pop()
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < h and 0 <= nc < w and not mask[nr, nc] and not outside[nr, nc]:
                    outside[nr, nc] = True
                    stack.append((nr, nc))
        return mask | ~outside

    def test_annulus_fills_to_disk(self):
        yy, xx = np.mgrid[:40, :40]
        r2 = (yy - 20) ** 2 + (xx - 20) ** 2
        ring = (r2 <= 15**2) & (r2 >= 10**2)
        filled = fill_holes(ring)
        assert np.array_equal(filled, r2 <= 15**2)

    def test_solid_disk_unchanged(self):
        yy, xx = np.mgrid[:30, :30]
        disk = (yy - 15) ** 2 + (xx - 15) ** 2 <= 10**2
        assert np.array_equal(fill_holes(disk), disk)

    def test_nested_rings_match_flood_fill_oracle(self):
        yy, xx = np.mgrid[:60, :60]
        r2 = (yy - 30) ** 2 + (xx - 30) ** 2
        nested = ((r2 <= 25**2) & (r2 >= 20**2)) | ((r2 <= 12**2) & (r2 >= 8**2))
        filled = fill_holes(nested)
        assert np.array_equal(filled, self.flood_fill_oracle(nested))
        assert np.array_equal(filled, r2 <= 25**2)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        mask = rng.random((30, 30)) > 0.5
        once = fill_holes(mask)
        assert np.array_equal(fill_holes(once), once)


class TestGlcm:
    def test_constant_patch(self):
        feats = glcm_features(np.full((16, 16), 90, dtype=np.uint8))
        assert feats.contrast == 0.0
        assert feats.energy == 1.0
        assert feats.homogeneity == 1.0
        assert feats.correlation == 1.0

    def test_checkerboard_contrast(self):
        board = np.indices((16, 16)).sum(axis=0) % 2 * 255
        feats = glcm_features(board.astype(np.uint8), offset=(1, 0))
        # levels 0 and 7 alternate: every pair differs by the full gap
        assert feats.contrast == pytest.approx(49.0)

    @staticmethod
    def brute_force(gray, offset, levels=8):
        q = np.clip(gray.astype(int) // (256 // levels), 0, levels - 1)
        h, w = q.shape
        dr, dc = offset
        counts = np.zeros((levels, levels))
        for r in range(h):
            for c in range(w):
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < h and 0 <= c2 < w:
                    counts[q[r, c], q[r2, c2]] += 1
                    counts[q[r2, c2], q[r, c]] += 1
        return counts / counts.sum()

    def test_matches_brute_force_counts(self):
        rng = np.random.default_rng(6)
        gray = rng.integers(0, 256, size=(12, 12)).astype(np.uint8)
        for offset in [(0, 1), (1, 0), (1, 1)]:
            feats = glcm_features(gray, offset=offset)
            p = self.brute_force(gray, offset)
            i, j = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
            assert feats.contrast == pytest.approx((p * (i - j) ** 2).sum())
            assert feats.energy == pytest.approx((p**2).sum())

    def test_energy_bounded(self):
        rng = np.random.default_rng(9)
        feats = glcm_features(rng.integers(0, 256, size=(20, 20)).astype(np.uint8))
        assert 0 < feats.energy <= 1


class TestHistogramStats:
    def test_constant_field(self):
        stats = histogram_stats(np.full((10, 10), 3.7))
        assert stats.variance == 0.0
        assert stats.entropy == 0.0
        assert stats.skewness == 0.0

    def test_uniform_256_levels_max_entropy(self):
        field = np.arange(256, dtype=float)
        assert histogram_stats(field).entropy == pytest.approx(8.0)

    def test_moments_match_direct_summation(self):
        rng = np.random.default_rng(10)
        field = rng.normal(5.0, 2.0, size=4000)
        stats = histogram_stats(field)
        n = field.size
        mean = math.fsum(field) / n
        var = math.fsum((x - mean) ** 2 for x in field) / n
        skew = (math.fsum((x - mean) ** 3 for x in field) / n) / var**1.5
        kurt = (math.fsum((x - mean) ** 4 for x in field) / n) / var**2 - 3.0
        assert stats.mean == pytest.approx(mean, abs=1e-9)
        assert stats.variance == pytest.approx(var, abs=1e-9)
        assert stats.skewness == pytest.approx(skew, abs=1e-9)
        assert stats.kurtosis == pytest.approx(kurt, abs=1e-9)


class TestFractalDimension:
    def test_constant_patch_is_flat(self):
        assert fractal_dimension_dbc(np.full((32, 32), 120.0)) == pytest.approx(2.0)

    def test_always_clamped(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            fd = fractal_dimension_dbc(rng.integers(0, 256, size=(16, 16)).astype(float))
            assert 2.0 <= fd <= 3.0

    @staticmethod
    def manual_dbc(arr, gray_levels=256):
        side = arr.shape[0]
        sizes, counts = [], []
        s = 2
        while s <= side // 2:
            h = gray_levels * s / side
            total = 0
            for r in range(0, side - side % s, s):
                for c in range(0, side - side % s, s):
                    block = arr[r : r + s, c : c + s]
                    total += math.floor(block.max() / h) - math.floor(block.min() / h) + 1
            sizes.append(s)
            counts.append(total)
            s *= 2
        x = [math.log(side / s) for s in sizes]
        y = [math.log(c) for c in counts]
        n = len(x)
        slope = (n * sum(a * b for a, b in zip(x, y)) - sum(x) * sum(y)) / (
            n * sum(a * a for a in x) - sum(x) ** 2
        )
        return min(max(slope, 2.0), 3.0)

    def test_two_level_patch_matches_manual_count(self):
        arr = np.zeros((8, 8))
        arr[::2, :] = 192.0
        assert fractal_dimension_dbc(arr) == pytest.approx(self.manual_dbc(arr))

    def test_requires_square(self):
        with pytest.raises(SizeError):
            fractal_dimension_dbc(np.zeros((8, 16)))


class TestBilinearPool:
    def test_single_basis_vector(self):
        fm = np.zeros((1, 1, 3))
        fm[0, 0, 0] = 1.0
        desc = bilinear_pool(fm)
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert np.allclose(desc.matrix, expected)

    def test_symmetry(self):
        rng = np.random.default_rng(12)
        desc = bilinear_pool(rng.normal(size=(4, 5, 6)))
        assert np.allclose(desc.matrix, desc.matrix.T)

    def test_hand_computed_two_cell_grid(self):
        fm = np.array([[[1.0, 0.0]], [[1.0, 1.0]]])  # 2x1 grid, d=2
        desc = bilinear_pool(fm)
        # G = [[2,1],[1,1]] -> signed sqrt -> L2 normalize (norm = sqrt(5))
        expected = np.array(
            [
                [math.sqrt(2) / math.sqrt(5), 1 / math.sqrt(5)],
                [1 / math.sqrt(5), 1 / math.sqrt(5)],
            ]
        )
        assert np.allclose(desc.matrix, expected, atol=1e-12)

    def test_unit_norm_when_nonzero(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            desc = bilinear_pool(rng.normal(size=(3, 3, 4)))
            assert np.linalg.norm(desc.matrix) == pytest.approx(1.0)

    def test_zero_map_degenerate(self):
        desc = bilinear_pool(np.zeros((2, 2, 3)))
        assert desc.degenerate and np.all(desc.matrix == 0)
