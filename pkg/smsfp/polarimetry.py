"""
Conversions between four-angle polarized stacks, Stokes maps and the
(intensity, DOP, AOP) triple.
"""

import logging
import math

import numpy as np

from .domain import POLARIZER_ANGLES, PolarizedStack, PolarMaps, StokesMaps
from .exceptions import InvalidInputError

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2


def wrap_half_period(angle):
    """Fold angles into the canonical AOP half-period [-pi/2, pi/2)."""
    a = np.asarray(angle, dtype=float)
    folded = np.mod(a + HALF_PI, math.pi) - HALF_PI
    folded = np.where(folded >= HALF_PI, folded - math.pi, folded)
    # Values already in range are returned bit-for-bit.
    return np.where((a >= -HALF_PI) & (a < HALF_PI), a, folded)


def wrap_full_period(angle):
    """Fold angles into [-pi, pi)."""
    a = np.asarray(angle, dtype=float)
    folded = np.mod(a + math.pi, 2 * math.pi) - math.pi
    folded = np.where(folded >= math.pi, folded - 2 * math.pi, folded)
    return np.where((a >= -math.pi) & (a < math.pi), a, folded)


def check_stack(stack):
    """Return the stack images as float arrays and the mask as bool, or raise."""
    if len(stack.images) != len(POLARIZER_ANGLES):
        raise InvalidInputError(
            f"a polarized stack needs {len(POLARIZER_ANGLES)} images, got {len(stack.images)}"
        )
    images = [np.asarray(image, dtype=float) for image in stack.images]
    mask = np.asarray(stack.mask, dtype=bool)
    shapes = {image.shape for image in images} | {mask.shape}
    if len(shapes) != 1:
        raise InvalidInputError(f"dimension mismatch between stack rasters: {sorted(shapes)}")
    if mask.ndim != 2:
        raise InvalidInputError(f"stack rasters must be 2-D, got shape {mask.shape}")
    for angle, image in zip(("0", "45", "90", "135"), images):
        if not np.all(np.isfinite(image)):
            raise InvalidInputError(f"non-finite intensities in the {angle} degree image")
        if np.any(image < 0):
            raise InvalidInputError(f"negative intensities in the {angle} degree image")
    return images, mask


def stokes_from_stack(stack):
    i0, i45, i90, i135 = check_stack(stack)[0]
    return StokesMaps(s0=i0 + i90, s1=i0 - i90, s2=i45 - i135)


def decompose_stack(stack):
    """Recover intensity, DOP and AOP from a four-angle stack.

    Pixels with zero total intensity map to (0, 0, 0). DOP values pushed above
    1 by noise are clamped and counted in ``PolarMaps.clamped``.
    """
    stokes = stokes_from_stack(stack)
    s0, s1, s2 = stokes.s0, stokes.s1, stokes.s2
    lit = s0 > 0
    safe_s0 = np.where(lit, s0, 1.0)

    intensity = np.where(lit, s0 / 2.0, 0.0)
    dop = np.where(lit, np.hypot(s1, s2) / safe_s0, 0.0)
    aop = np.where(lit, wrap_half_period(0.5 * np.arctan2(s2, s1)), 0.0)

    clamped = int(np.count_nonzero(dop > 1.0))
    if clamped:
        logger.info("Clamped DOP to 1 at %d pixels", clamped)
        dop = np.minimum(dop, 1.0)
    return PolarMaps(intensity=intensity, dop=dop, aop=aop, clamped=clamped)


def synthesize_intensity(polar, polarizer_angle):
    """Intensity seen through a linear polarizer at ``polarizer_angle`` radians."""
    value = polar.intensity * (1.0 + polar.dop * np.cos(2.0 * (polarizer_angle - polar.aop)))
    return np.clip(value, 0.0, None)


def synthesize_stack(polar, mask=None):
    images = tuple(synthesize_intensity(polar, angle) for angle in POLARIZER_ANGLES)
    if mask is None:
        mask = np.ones(polar.intensity.shape, dtype=bool)
    return PolarizedStack(images=images, mask=np.asarray(mask, dtype=bool))


def _wrapped_gradient_x(phi, mask):
    step = wrap_half_period(phi[:, 1:] - phi[:, :-1])
    pair = mask[:, 1:] & mask[:, :-1]

    forward = np.zeros_like(phi)
    backward = np.zeros_like(phi)
    has_forward = np.zeros(phi.shape, dtype=bool)
    has_backward = np.zeros(phi.shape, dtype=bool)
    forward[:, :-1] = np.where(pair, step, 0.0)
    has_forward[:, :-1] = pair
    backward[:, 1:] = np.where(pair, step, 0.0)
    has_backward[:, 1:] = pair

    count = has_forward.astype(int) + has_backward.astype(int)
    return np.where(count > 0, (forward + backward) / np.maximum(count, 1), 0.0)


def aop_gradient_magnitude(aop, mask=None):
    """Magnitude of the AOP gradient measured on the pi-periodic circle.

    Central differences where both neighbours are in the mask, one-sided where
    only one is, zero where neither is.
    """
    phi = np.asarray(aop, dtype=float)
    mask = np.ones(phi.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    gx = _wrapped_gradient_x(phi, mask)
    gy = _wrapped_gradient_x(phi.T, mask.T).T
    return np.where(mask, np.hypot(gx, gy), 0.0)
