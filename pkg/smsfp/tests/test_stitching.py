import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from smsfp.domain import RegionLabels
from smsfp.exceptions import InvalidInputError
from smsfp.stitching import (
    align_offsets,
    boundary_band,
    fill_from_neighbours,
    guided_filter,
    stitch_regions,
)


def split_paraboloid(size=40):
    rows, cols = np.mgrid[0:size, 0:size].astype(float)
    truth = -0.01 * ((cols - size / 2) ** 2 + (rows - size / 2) ** 2)
    labels = np.where(cols < size // 2, 1, 2).astype(np.int64)
    return truth, labels


class AlignOffsetsTest(SimpleTestCase):
    """
    Test suite for per-region offset alignment.
    """

    def test_recovers_relative_offsets(self):
        """
        Ensure independently shifted halves of a paraboloid are brought back onto one surface.
        """
        truth, labels = split_paraboloid()
        heights = [truth + 5.0, truth - 3.0]
        offsets = align_offsets(heights, labels)
        composite = np.where(labels == 1, heights[0], heights[1]) + offsets[labels]
        self.assertLess(float(np.ptp(composite - truth)), 1e-9)

    def test_aligned_regions_are_a_fixed_point(self):
        truth, labels = split_paraboloid()
        offsets = align_offsets([truth, truth], labels)
        assert_allclose(offsets, 0.0, atol=1e-9)

    def test_disconnected_regions_keep_their_heights(self):
        labels = np.zeros((10, 10), dtype=np.int64)
        labels[:, :3] = 1
        labels[:, 6:] = 2
        offsets = align_offsets([np.ones((10, 10)), np.full((10, 10), 4.0)], labels)
        assert_allclose(offsets, 0.0)


class GuidedFilterTest(SimpleTestCase):
    def test_constant_guide_preserves_ramps(self):
        """
        Ensure a constant guide reduces to box smoothing, which keeps a linear ramp in the interior.
        """
        rows, cols = np.mgrid[0:30, 0:30].astype(float)
        ramp = 0.5 * cols - 0.2 * rows
        filtered = guided_filter(np.ones((30, 30)), ramp, radius=2, eps=1e-3)
        assert_allclose(filtered[5:-5, 5:-5], ramp[5:-5, 5:-5], atol=1e-9)

    def test_guide_edges_are_preserved(self):
        step = np.where(np.arange(30) < 15, 0.0, 1.0) * np.ones((30, 1))
        filtered = guided_filter(step, step, radius=3, eps=1e-6)
        self.assertLess(float(np.abs(filtered - step).max()), 1e-3)


class StitchRegionsTest(SimpleTestCase):
    """
    Test suite for joining per-region heights.
    """

    def test_single_region_is_unchanged(self):
        rng = np.random.default_rng(1)
        height = rng.normal(size=(16, 16))
        labels = np.ones((16, 16), dtype=np.int64)
        stitched = stitch_regions([height], RegionLabels(labels, 1), np.ones((16, 16)))
        np.testing.assert_array_equal(stitched, height)

    def test_aligned_seam_follows_the_surface(self):
        """
        Ensure the height step across the seam after alignment matches the true step to 1e-3 of the height range.
        """
        truth, labels = split_paraboloid()
        heights = [truth + 5.0, truth - 3.0]
        offsets = align_offsets(heights, labels)
        aligned = np.where(labels == 1, heights[0], heights[1]) + offsets[labels]
        mismatch = np.abs((aligned[:, 19] - aligned[:, 20]) - (truth[:, 19] - truth[:, 20]))
        self.assertLess(float(mismatch.max()), 1e-3 * float(np.ptp(truth)))

    def test_two_regions_meet(self):
        truth, labels = split_paraboloid()
        stitched = stitch_regions([truth + 5.0, truth - 3.0], labels, np.ones(truth.shape), radius=2)
        mismatch = np.abs((stitched[:, 19] - stitched[:, 20]) - (truth[:, 19] - truth[:, 20]))
        self.assertLess(float(mismatch.max()), 1e-3 * float(np.ptp(truth)))
        self.assertAlmostEqual(float(stitched.mean()), 0.0, delta=0.1)

    def test_failed_region_is_filled_from_neighbours(self):
        labels = np.ones((15, 15), dtype=np.int64)
        labels[5:10, 5:10] = 2
        stitched = stitch_regions(
            [np.full((15, 15), 3.0), None], labels, np.ones((15, 15)), radius=1, failed=[2]
        )
        self.assertTrue(np.all(np.isfinite(stitched)))
        assert_allclose(stitched[7, 7], stitched[0, 0], atol=1e-9)

    def test_missing_height_is_rejected(self):
        labels = np.ones((6, 6), dtype=np.int64)
        labels[:, 3:] = 2
        with self.assertRaises(InvalidInputError):
            stitch_regions([np.zeros((6, 6))], labels, np.ones((6, 6)))

    def test_fill_and_band_helpers(self):
        labels = np.ones((11, 11), dtype=np.int64)
        labels[4:7, 4:7] = 2
        height = np.where(labels == 1, 2.0, 0.0)
        filled = fill_from_neighbours(height, labels, 2)
        assert_allclose(filled[labels == 2], 2.0)
        band = boundary_band(labels, 1)
        self.assertTrue(band[5, 5] and band[3, 5])
        self.assertFalse(band[0, 0])
