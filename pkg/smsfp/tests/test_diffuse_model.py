import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from smsfp.diffuse_model import (
    THETA_CAP,
    ClosedFormReport,
    count_capped,
    dop_from_zenith,
    estimate_illumination,
    max_dop,
    validate_closed_form_inverse,
    zenith_from_dop,
)
from smsfp.exceptions import InvalidInputError
from smsfp.renderer import make_scene


class DopFromZenithTest(SimpleTestCase):
    """
    Test suite for the forward diffuse polarization model.
    """

    def test_zero_zenith_is_unpolarized(self):
        for eta in (1.15, 1.5, 2.4):
            self.assertEqual(dop_from_zenith(0.0, eta), 0.0)

    def test_golden_value(self):
        """
        Ensure rho(30 deg, eta 1.5) matches the independently evaluated value.
        """
        self.assertAlmostEqual(dop_from_zenith(math.radians(30), 1.5), 0.016978470090605, places=12)

    def test_monotone_in_zenith(self):
        self.assertGreater(dop_from_zenith(math.radians(80), 1.15), dop_from_zenith(math.radians(10), 1.15))
        thetas = np.linspace(0.0, math.radians(89), 1000)
        self.assertTrue(np.all(np.diff(dop_from_zenith(thetas, 1.15)) > 0))

    def test_invalid_domain(self):
        with self.assertRaises(InvalidInputError):
            dop_from_zenith(math.pi / 2, 1.5)
        with self.assertRaises(InvalidInputError):
            dop_from_zenith(-0.1, 1.5)
        with self.assertRaises(InvalidInputError):
            dop_from_zenith(0.3, 1.0)


class ZenithFromDopTest(SimpleTestCase):
    """
    Test suite for the numerical inverse of the diffuse model.
    """

    def test_zero_dop(self):
        self.assertEqual(zenith_from_dop(0.0, 1.5), 0.0)

    def test_single_round_trip(self):
        theta = math.radians(30)
        self.assertAlmostEqual(zenith_from_dop(dop_from_zenith(theta, 1.5), 1.5), theta, delta=1e-8)

    def test_round_trip_and_monotonicity_over_grid(self):
        """
        Ensure the inverse recovers theta within 1e-6 rad over a 50 x 20 grid of (theta, eta).
        """
        thetas = np.radians(np.linspace(1.0, 85.0, 50))
        for eta in np.linspace(1.1, 2.0, 20):
            rho = dop_from_zenith(thetas, eta)
            self.assertTrue(np.all(np.diff(rho) > 0))
            assert_allclose(zenith_from_dop(rho, eta), thetas, rtol=0, atol=1e-6)

    def test_unreachable_dop_is_capped(self):
        """
        Ensure a DOP above the model maximum maps to the zenith cap and is counted.
        """
        rho = np.array([0.0, 0.5 * max_dop(1.15), 0.99])
        theta = zenith_from_dop(rho, 1.15)
        self.assertEqual(theta[-1], THETA_CAP)
        self.assertEqual(count_capped(rho, 1.15), 1)

    def test_out_of_range_dop(self):
        with self.assertRaises(InvalidInputError):
            zenith_from_dop(1.2, 1.5)
        with self.assertRaises(InvalidInputError):
            zenith_from_dop(-0.01, 1.5)


class ClosedFormInverseTest(SimpleTestCase):
    def test_sweep_table(self):
        report = validate_closed_form_inverse(1.5, samples=100)
        self.assertIsInstance(report, ClosedFormReport)
        self.assertEqual(len(report.rows), 100)
        self.assertEqual(set(report.rows[0]), set(ClosedFormReport.columns))
        self.assertAlmostEqual(report.rows[0]["theta_bisect"], 0.0)

    def test_negative_radicands_are_flagged(self):
        """
        Ensure the closed form reports negative radicands near rho = 0 for eta = 1.15.
        """
        report = validate_closed_form_inverse(1.15)
        self.assertGreater(report.negative_radicands, 0)
        self.assertTrue(math.isnan(report.rows[0]["theta_closed"]))

    def test_eta_outside_bounds(self):
        with self.assertRaises(InvalidInputError):
            validate_closed_form_inverse(3.5)


class EstimateIlluminationTest(SimpleTestCase):
    """
    Test suite for the Lambertian light estimate.
    """

    def test_exact_recovery(self):
        """
        Ensure the light direction is recovered to 1e-10 from exact Lambertian intensities.
        """
        scene = make_scene("hemisphere", grid=33)
        light = np.array([0.2, 0.1, 0.97])
        light /= np.linalg.norm(light)
        shading = scene.normals @ light
        mask = scene.mask & (shading > 0)
        intensity = np.where(mask, 0.8 * shading, 0.0)

        illum = estimate_illumination(intensity, scene.normals, 0.8, mask)
        self.assertTrue(illum.estimated)
        self.assertFalse(illum.fallback)
        assert_allclose(illum.direction, light, atol=1e-10)

    def test_degenerate_normals_fall_back_to_view(self):
        mask = np.ones((8, 8), dtype=bool)
        normals = np.zeros((8, 8, 3))
        normals[..., 2] = 1.0
        illum = estimate_illumination(np.full((8, 8), 0.5), normals, 0.8, mask)
        self.assertTrue(illum.fallback)
        self.assertEqual(illum.direction, illum.view)
        self.assertFalse(illum.distinct)

    def test_light_behind_the_surface_falls_back_to_view(self):
        scene = make_scene("hemisphere", grid=33)
        intensity = np.where(scene.mask, 0.8 * (scene.normals @ np.array([0.0, 0.0, -1.0])), 0.0)
        illum = estimate_illumination(intensity, scene.normals, 0.8, scene.mask)
        self.assertTrue(illum.fallback)
        self.assertEqual(illum.direction, illum.view)

    def test_intensity_scale_does_not_move_the_light(self):
        """
        Ensure scaling every intensity by a positive constant leaves the unit light direction unchanged.
        """
        scene = make_scene("hemisphere", grid=33)
        light = np.array([0.3, -0.2, 0.93])
        light /= np.linalg.norm(light)
        shading = scene.normals @ light
        mask = scene.mask & (shading > 0)
        intensity = np.where(mask, 0.8 * shading, 0.0)

        base = estimate_illumination(intensity, scene.normals, 0.8, mask)
        scaled = estimate_illumination(3.7 * intensity, scene.normals, 0.8, mask)
        assert_allclose(scaled.direction, base.direction, atol=1e-12)
