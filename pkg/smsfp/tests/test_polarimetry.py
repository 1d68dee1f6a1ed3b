import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from smsfp.domain import PolarizedStack, PolarMaps
from smsfp.exceptions import InvalidInputError
from smsfp.polarimetry import (
    aop_gradient_magnitude,
    decompose_stack,
    stokes_from_stack,
    synthesize_intensity,
    synthesize_stack,
    wrap_half_period,
)


def pixel_stack(i0, i45, i90, i135):
    images = tuple(np.array([[v]], dtype=float) for v in (i0, i45, i90, i135))
    return PolarizedStack(images=images, mask=np.ones((1, 1), dtype=bool))


def pixel_maps(intensity, dop, aop):
    return PolarMaps(
        intensity=np.array([[intensity]]), dop=np.array([[dop]]), aop=np.array([[aop]])
    )


class DecomposeStackTest(SimpleTestCase):
    """
    Test suite for Stokes decomposition of four-angle stacks.
    """

    def test_fully_polarized_along_zero(self):
        """
        Ensure (1, 0.5, 0, 0.5) decomposes to I = 0.5, rho = 1, phi = 0.
        """
        polar = decompose_stack(pixel_stack(1.0, 0.5, 0.0, 0.5))
        self.assertAlmostEqual(polar.intensity[0, 0], 0.5)
        self.assertAlmostEqual(polar.dop[0, 0], 1.0)
        self.assertAlmostEqual(polar.aop[0, 0], 0.0)

    def test_unpolarized_light(self):
        """
        Ensure four equal intensities give I = c, rho = 0 and phi = 0.
        """
        for c in (0.1, 1.0, 7.5):
            polar = decompose_stack(pixel_stack(c, c, c, c))
            self.assertAlmostEqual(polar.intensity[0, 0], c)
            self.assertEqual(polar.dop[0, 0], 0.0)
            self.assertEqual(polar.aop[0, 0], 0.0)

    def test_partially_polarized_pixel(self):
        """
        Ensure (0.75, 0.75, 0.25, 0.25) gives the expected Stokes values and AOP of 22.5 degrees.
        """
        stack = pixel_stack(0.75, 0.75, 0.25, 0.25)
        stokes = stokes_from_stack(stack)
        self.assertAlmostEqual(stokes.s0[0, 0], 1.0)
        self.assertAlmostEqual(stokes.s1[0, 0], 0.5)
        self.assertAlmostEqual(stokes.s2[0, 0], 0.5)
        self.assertEqual(stokes.s3[0, 0], 0.0)

        polar = decompose_stack(stack)
        self.assertAlmostEqual(polar.intensity[0, 0], 0.5)
        self.assertAlmostEqual(polar.dop[0, 0], math.sqrt(0.5))
        self.assertAlmostEqual(polar.aop[0, 0], math.radians(22.5))

    def test_dark_pixel_maps_to_zero(self):
        polar = decompose_stack(pixel_stack(0.0, 0.0, 0.0, 0.0))
        self.assertEqual(
            (polar.intensity[0, 0], polar.dop[0, 0], polar.aop[0, 0]), (0.0, 0.0, 0.0)
        )

    def test_noisy_dop_is_clamped_and_counted(self):
        """
        Ensure an inconsistent stack pushing rho above 1 is clamped and reported.
        """
        polar = decompose_stack(pixel_stack(1.0, 1.0, 0.0, 0.0))
        self.assertEqual(polar.dop[0, 0], 1.0)
        self.assertEqual(polar.clamped, 1)

    def test_dimension_mismatch_is_rejected(self):
        images = (np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
        with self.assertRaises(InvalidInputError):
            decompose_stack(PolarizedStack(images=images, mask=np.ones((2, 2), dtype=bool)))

    def test_negative_intensity_is_rejected(self):
        with self.assertRaises(InvalidInputError):
            decompose_stack(pixel_stack(1.0, -0.1, 0.5, 0.5))

    def test_output_ranges_for_arbitrary_input(self):
        """
        Ensure decomposition of random non-negative stacks keeps rho in [0, 1] and phi in [-pi/2, pi/2).
        """
        rng = np.random.default_rng(3)
        images = tuple(rng.uniform(0.0, 2.0, (32, 32)) for _ in range(4))
        polar = decompose_stack(PolarizedStack(images=images, mask=np.ones((32, 32), dtype=bool)))
        self.assertTrue(np.all((polar.dop >= 0) & (polar.dop <= 1)))
        self.assertTrue(np.all((polar.aop >= -math.pi / 2) & (polar.aop < math.pi / 2)))
        self.assertTrue(np.all(polar.intensity >= 0))


class SynthesizeIntensityTest(SimpleTestCase):
    """
    Test suite for the polarizer transmission model.
    """

    def test_peak_and_crossed_polarizer(self):
        polar = pixel_maps(0.5, 1.0, 0.0)
        self.assertAlmostEqual(synthesize_intensity(polar, 0.0)[0, 0], 1.0)
        self.assertAlmostEqual(synthesize_intensity(polar, math.pi / 2)[0, 0], 0.0)

    def test_partially_polarized_at_45_degrees(self):
        polar = pixel_maps(0.5, math.sqrt(0.5), math.radians(22.5))
        self.assertAlmostEqual(synthesize_intensity(polar, math.pi / 4)[0, 0], 0.75)

    def test_extreme_ratio(self):
        """
        Ensure I0 / I90 equals (1 + rho) / (1 - rho) when phi = 0.
        """
        rho = 0.3
        polar = pixel_maps(1.0, rho, 0.0)
        ratio = synthesize_intensity(polar, 0.0)[0, 0] / synthesize_intensity(polar, math.pi / 2)[0, 0]
        self.assertAlmostEqual(ratio, (1 + rho) / (1 - rho))

    def test_round_trip_over_random_samples(self):
        """
        Ensure decompose(synthesize(P)) reproduces P over 100 000 random samples.
        """
        rng = np.random.default_rng(0)
        shape = (100, 1000)
        polar = PolarMaps(
            intensity=rng.uniform(0.01, 1.0, shape),
            dop=rng.uniform(0.0, 1.0, shape),
            aop=rng.uniform(-math.pi / 2, math.pi / 2, shape),
        )
        stack = synthesize_stack(polar)
        i0, i45, i90, i135 = stack.images
        assert_allclose(i0 + i90, i45 + i135, rtol=0, atol=1e-12)

        recovered = decompose_stack(stack)
        assert_allclose(recovered.intensity, polar.intensity, rtol=0, atol=1e-12)
        assert_allclose(recovered.dop, polar.dop, rtol=0, atol=1e-12)
        polarized = polar.dop > 1e-3
        phase = wrap_half_period(recovered.aop - polar.aop)[polarized]
        self.assertLessEqual(float(np.max(np.abs(phase))), 1e-12)


class AopGradientTest(SimpleTestCase):
    """
    Test suite for the AOP gradient on the pi-periodic circle.
    """

    def test_constant_field(self):
        self.assertEqual(float(aop_gradient_magnitude(np.full((8, 8), 0.3)).max()), 0.0)

    def test_linear_ramp(self):
        k = 0.01
        cols = np.arange(20, dtype=float)
        aop = np.tile(k * cols, (10, 1))
        magnitude = aop_gradient_magnitude(aop)
        assert_allclose(magnitude[1:-1, 1:-1], k, atol=1e-12)

    def test_ramp_across_the_wrap(self):
        """
        Ensure a ramp through +-pi/2 reports its slope, not a jump of pi.
        """
        k = 0.05
        cols = np.arange(30, dtype=float)
        aop = wrap_half_period(math.pi / 2 - 0.6 + k * cols)
        aop = np.tile(aop, (6, 1))
        magnitude = aop_gradient_magnitude(aop)
        assert_allclose(magnitude, k, atol=1e-9)

    def test_antipodal_neighbours_are_identical(self):
        aop = np.array([[math.pi / 2 - 1e-12, -math.pi / 2] * 4] * 4)
        self.assertLess(float(aop_gradient_magnitude(aop).max()), 1e-9)
