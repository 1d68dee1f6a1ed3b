"""
Analytic scenes and their polarized renderings under the diffuse model.

Scenes use an orthographic camera looking down -z; heights grow toward the
camera and normals are ``[-z_x, -z_y, 1] / sqrt(1 + |grad z|^2)``.
"""

import logging
import math

import numpy as np

from .diffuse_model import dop_from_zenith
from .domain import AnalyticScene, Illumination, MaterialParams, PolarMaps
from .exceptions import InvalidInputError
from .polarimetry import synthesize_stack, wrap_half_period

logger = logging.getLogger(__name__)

SCENE_KINDS = ("hemisphere", "paraboloid", "two-bump", "plane-ramp")
AMBIGUITY_MODES = ("parallel", "perpendicular")


def _grid(grid, center):
    rows, cols = np.mgrid[0:grid, 0:grid].astype(float)
    return cols - center[0], rows - center[1]


def _check_radius(radius, grid):
    if not 0 < radius <= grid / 2:
        raise InvalidInputError(f"radius must lie in (0, {grid / 2}], got {radius}")


def _sphere(x, y, radius):
    r2 = x**2 + y**2
    mask = r2 < radius**2
    z = np.where(mask, np.sqrt(np.maximum(radius**2 - r2, 0.0)), 0.0)
    normals = np.stack([x, y, z], axis=-1) / radius
    return z, normals, mask


def _hemisphere(grid, params):
    center = tuple(params.get("center", ((grid - 1) / 2, (grid - 1) / 2)))
    radius = float(params.get("radius", 0.45 * grid))
    _check_radius(radius, grid)
    x, y = _grid(grid, center)
    z, normals, mask = _sphere(x, y, radius)
    return {"center": list(center), "radius": radius}, z, normals, mask


def _paraboloid(grid, params):
    center = tuple(params.get("center", ((grid - 1) / 2, (grid - 1) / 2)))
    radius = float(params.get("radius", 0.45 * grid))
    a, b = (float(c) for c in params.get("curvature", (2.0 / grid, 2.0 / grid)))
    _check_radius(radius, grid)
    if a <= 0 or b <= 0:
        raise InvalidInputError("paraboloid curvatures must be positive")
    x, y = _grid(grid, center)
    mask = x**2 + y**2 < radius**2
    z = -(a * x**2 + b * y**2)
    normals = np.stack([2 * a * x, 2 * b * y, np.ones_like(x)], axis=-1)
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    return {"center": list(center), "radius": radius, "curvature": [a, b]}, z, normals, mask


def _two_bump(grid, params):
    middle = (grid - 1) / 2
    spacing = 0.2 * grid
    centers = params.get("centers", ((middle - spacing, middle), (middle + spacing, middle)))
    radii = params.get("radii", (0.28 * grid, 0.28 * grid))
    if len(centers) != 2 or len(radii) != 2:
        raise InvalidInputError("two-bump scenes take exactly two centers and two radii")
    z = np.full((grid, grid), -np.inf)
    normals = np.zeros((grid, grid, 3))
    mask = np.zeros((grid, grid), dtype=bool)
    for center, radius in zip(centers, radii):
        _check_radius(float(radius), grid)
        x, y = _grid(grid, center)
        zi, ni, mi = _sphere(x, y, float(radius))
        higher = mi & (zi > z)
        z = np.where(higher, zi, z)
        normals[higher] = ni[higher]
        mask |= mi
    z = np.where(mask, z, 0.0)
    resolved = {"centers": [list(c) for c in centers], "radii": [float(r) for r in radii]}
    return resolved, z, normals, mask


def _plane_ramp(grid, params):
    center = tuple(params.get("center", ((grid - 1) / 2, (grid - 1) / 2)))
    radius = float(params.get("radius", 0.45 * grid))
    a, b = (float(s) for s in params.get("slope", (0.5, 0.25)))
    _check_radius(radius, grid)
    x, y = _grid(grid, center)
    mask = x**2 + y**2 < radius**2
    z = a * x + b * y
    normal = np.array([-a, -b, 1.0]) / math.sqrt(1 + a * a + b * b)
    normals = np.broadcast_to(normal, (grid, grid, 3)).copy()
    return {"center": list(center), "radius": radius, "slope": [a, b]}, z, normals, mask


BUILDERS = {
    "hemisphere": _hemisphere,
    "paraboloid": _paraboloid,
    "two-bump": _two_bump,
    "plane-ramp": _plane_ramp,
}


def make_scene(kind, params=None, grid=256):
    """Analytic height, normals, zenith, azimuth and silhouette on a square grid."""
    if kind not in BUILDERS:
        raise InvalidInputError(f"unknown scene kind {kind!r}; choose from {', '.join(SCENE_KINDS)}")
    if grid < 4:
        raise InvalidInputError(f"grid must be at least 4 pixels, got {grid}")
    resolved, height, normals, mask = BUILDERS[kind](int(grid), dict(params or {}))
    normals = np.where(mask[..., None], normals, 0.0)
    zenith = np.where(mask, np.arccos(np.clip(normals[..., 2], -1.0, 1.0)), 0.0)
    azimuth = np.where(mask, np.arctan2(normals[..., 1], normals[..., 0]), 0.0)
    resolved["grid"] = int(grid)
    return AnalyticScene(
        kind=kind,
        params=resolved,
        height=np.where(mask, height, 0.0),
        normals=normals,
        zenith=zenith,
        azimuth=azimuth,
        mask=mask,
    )


def render_polar_maps(scene, material, illum, ambiguity="parallel"):
    """Noise-free intensity, DOP and AOP of a scene, plus the lit mask."""
    if ambiguity not in AMBIGUITY_MODES:
        raise InvalidInputError(f"ambiguity must be one of {AMBIGUITY_MODES}, got {ambiguity!r}")
    shading = scene.normals @ np.asarray(illum.direction)
    mask = scene.mask & (shading > 0)
    intensity = np.where(mask, material.albedo * np.maximum(shading, 0.0), 0.0)
    zenith = np.where(mask, scene.zenith, 0.0)
    dop = np.where(mask, dop_from_zenith(zenith, material.eta), 0.0)
    azimuth = scene.azimuth + (math.pi / 2 if ambiguity == "perpendicular" else 0.0)
    aop = np.where(mask, wrap_half_period(azimuth), 0.0)
    return PolarMaps(intensity=intensity, dop=dop, aop=aop), mask


def render_polarized(
    scene,
    material=None,
    illum=None,
    ambiguity="parallel",
    noise_sigma=0.0,
    seed=0,
):
    """Four-angle stack of a scene; shadowed pixels leave the mask.

    Noise is additive Gaussian with standard deviation ``noise_sigma`` times
    the peak intensity, drawn from a generator seeded with ``seed``.
    """
    material = material or MaterialParams()
    illum = illum or Illumination(direction=(0.0, 0.0, 1.0))
    if noise_sigma < 0:
        raise InvalidInputError("noise_sigma must be non-negative")
    polar, mask = render_polar_maps(scene, material, illum, ambiguity)
    stack = synthesize_stack(polar, mask)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        spread = noise_sigma * float(polar.intensity.max())
        images = tuple(
            np.clip(image + rng.normal(0.0, spread, image.shape), 0.0, None)
            for image in stack.images
        )
        stack = type(stack)(images=images, mask=mask)
        logger.debug("Added Gaussian noise with sigma %.4g", spread)
    return stack
