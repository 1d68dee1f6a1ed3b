import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from smsfp.domain import ScaleSet
from smsfp.exceptions import InvalidInputError
from smsfp.mfcp import (
    block_decompose,
    build_prior,
    convexity_weights,
    fuse_scales,
    gamma_range_map,
    implicit_azimuth_from_mask,
    implicit_normals,
    scale_weights,
)
from smsfp.polarimetry import wrap_full_period


def disk(grid, radius):
    rows, cols = np.mgrid[0:grid, 0:grid].astype(float)
    centre = (grid - 1) / 2
    x, y = cols - centre, rows - centre
    return np.hypot(x, y) < radius, x, y


class ImplicitAzimuthTest(SimpleTestCase):
    """
    Test suite for azimuths propagated in from the silhouette.
    """

    def test_disk_is_radial(self):
        """
        Ensure a disk mask yields outward radial azimuths within 5 degrees on average.
        """
        mask, x, y = disk(81, 35)
        phi = implicit_azimuth_from_mask(mask).phi_im
        scored = mask & (np.hypot(x, y) > 3)
        deviation = np.abs(wrap_full_period(phi - np.arctan2(y, x)))[scored]
        self.assertLess(math.degrees(float(deviation.mean())), 5.0)

    def test_half_plane_with_and_without_smoothing(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[:, :10] = True
        for smoothing in (0.0, 2.0):
            phi = implicit_azimuth_from_mask(mask, smoothing=smoothing).phi_im
            assert_allclose(phi[mask], 0.0, atol=1e-12)

    def test_empty_mask(self):
        with self.assertRaises(InvalidInputError):
            implicit_azimuth_from_mask(np.zeros((8, 8), dtype=bool))


class BlockDecomposeTest(SimpleTestCase):
    def test_even_tiling(self):
        self.assertEqual(len(block_decompose(np.zeros((16, 16)), 8, np.ones((16, 16), bool))), 4)

    def test_truncated_edges(self):
        blocks = block_decompose(np.zeros((17, 17)), 8, np.ones((17, 17), bool))
        self.assertEqual(len(blocks), 9)
        self.assertEqual(blocks[-1].mask.shape, (1, 1))

    def test_background_block_passes_through(self):
        mask = np.zeros((16, 16), dtype=bool)
        mask[:8, :8] = True
        blocks = block_decompose(np.zeros((16, 16)), 8, mask)
        self.assertEqual([b.pass_through for b in blocks], [False, True, True, True])


class GammaRangeMapTest(SimpleTestCase):
    """
    Test suite for the per-block power-law range mapping.
    """

    def test_power_law_on_unit_range(self):
        mapped = gamma_range_map(np.array([0.0, 0.25, 1.0]), np.array([0.0, 0.5, 1.0]), 0.5)
        assert_allclose(mapped, [0.0, 0.5, 1.0], atol=1e-12)

    def test_affine_target_range(self):
        quarter = math.pi / 4
        mapped = gamma_range_map(np.array([0.0, 0.25, 1.0]), np.array([-quarter, 0.0, quarter]), 0.5)
        assert_allclose(mapped, [-quarter, 0.0, quarter], atol=1e-12)

    def test_constant_block_maps_to_midpoint(self):
        quarter = math.pi / 4
        mapped = gamma_range_map(np.full(3, 0.4), np.array([-quarter, 0.1, quarter]), 0.5)
        assert_allclose(mapped, 0.0, atol=1e-12)

    def test_monotone_and_range_contained(self):
        """
        Ensure random blocks map monotonically into the range of their implicit azimuths.
        """
        rng = np.random.default_rng(21)
        for _ in range(200):
            azimuth = rng.uniform(-0.6, 0.6, 20)
            implicit = rng.uniform(-1.0, 1.0, 20)
            gamma = rng.uniform(0.1, 1.0)
            mapped = gamma_range_map(azimuth, implicit, gamma)
            order = np.argsort(azimuth)
            self.assertTrue(np.all(np.diff(mapped[order]) >= -1e-12))
            self.assertGreaterEqual(mapped.min(), implicit.min() - 1e-12)
            self.assertLessEqual(mapped.max(), implicit.max() + 1e-12)


class FuseScalesTest(SimpleTestCase):
    """
    Test suite for variance-weighted fusion across block scales.
    """

    def setUp(self):
        self.mask = np.ones((32, 32), dtype=bool)
        self.scales = ScaleSet(block_sizes=(4, 8, 16))
        rng = np.random.default_rng(2)
        self.rasters = [rng.uniform(-1.0, 1.0, (32, 32)) for _ in range(3)]
        self.azimuth = rng.uniform(-1.0, 1.0, (32, 32))

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            angles = rng.uniform(-math.pi / 2, math.pi / 2, (32, 32))
            weights = scale_weights(angles, self.scales, self.mask)
            self.assertAlmostEqual(float(weights.sum()), 1.0, delta=1e-12)
            self.assertTrue(np.all(weights >= 0))

    def test_identical_rasters(self):
        raster = self.rasters[0]
        fused = fuse_scales([raster] * 3, self.azimuth, self.scales, self.mask)
        assert_allclose(fused, raster, atol=1e-12)

    def test_degenerate_weights_select_one_scale(self):
        fused = fuse_scales(self.rasters, self.azimuth, self.scales, self.mask, weights=(1.0, 0.0, 0.0))
        assert_allclose(fused, self.rasters[0], atol=1e-12)

    def test_equal_weights_average(self):
        scales = ScaleSet(block_sizes=(4, 8))
        fused = fuse_scales(self.rasters[:2], self.azimuth, scales, self.mask, weights=(0.5, 0.5))
        assert_allclose(fused, (self.rasters[0] + self.rasters[1]) / 2, atol=1e-12)

    def test_mismatched_dimensions(self):
        with self.assertRaises(InvalidInputError):
            fuse_scales([np.zeros((8, 8))] * 3, self.azimuth, self.scales, self.mask)


class ImplicitNormalsTest(SimpleTestCase):
    def test_examples(self):
        mask = np.ones((1, 3), dtype=bool)
        phi = np.array([[1.3, 0.0, math.pi / 2]])
        zenith = np.array([[0.0, math.pi / 2 - 1e-6, math.pi / 4]])
        normals = implicit_normals(phi, zenith, mask)
        assert_allclose(normals[0, 0], [0.0, 0.0, 1.0], atol=1e-12)
        assert_allclose(normals[0, 1], [1.0, 0.0, 1e-6], atol=1e-9)
        assert_allclose(normals[0, 2], [0.0, math.sqrt(0.5), math.sqrt(0.5)], atol=1e-12)


class ConvexityWeightsTest(SimpleTestCase):
    """
    Test suite for the boundary-decaying prior confidence.
    """

    def test_boundary_and_decay_length(self):
        mask = np.ones((20, 20), dtype=bool)
        weights = convexity_weights(mask, decay_rate=0.25).w_con
        self.assertEqual(weights[0, 10], 1.0)
        self.assertAlmostEqual(weights[4, 10], math.exp(-1.0))

    def test_zero_off_mask(self):
        mask, _, _ = disk(21, 8)
        weights = convexity_weights(mask).w_con
        self.assertTrue(np.all(weights[~mask] == 0))
        self.assertTrue(np.all((weights[mask] > 0) & (weights[mask] <= 1)))


class BuildPriorTest(SimpleTestCase):
    def test_prior_follows_hemisphere_azimuth(self):
        """
        Ensure the fused prior of a disk region points outward near the silhouette.
        """
        mask, x, y = disk(65, 28)
        radial = np.arctan2(y, x)
        aop = np.where(mask, np.mod(radial + math.pi / 2, math.pi) - math.pi / 2, 0.0)
        prior = build_prior(aop, mask)
        rim = mask & (np.hypot(x, y) > 22)
        deviation = np.abs(wrap_full_period(prior.phi - radial))[rim]
        self.assertGreater(float(np.mean(deviation < math.radians(45))), 0.95)
        self.assertAlmostEqual(sum(w for _, w in prior.scale_weights), 1.0)
        self.assertEqual(prior.weights.w_con.shape, mask.shape)
