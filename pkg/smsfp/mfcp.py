"""
Multi-scale fusion convexity prior.

Implicit azimuths point away from the silhouette; block-wise gamma range
mapping injects the measured AOP texture into them, and the per-scale maps
are fused with variance weights. Confidence decays with distance from the
silhouette.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import ConvexityWeights, ImplicitAzimuthMap, RegionPrior, ScaleSet
from .exceptions import InvalidInputError
from .polarimetry import wrap_full_period, wrap_half_period

logger = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)
MIN_BLOCK_PIXELS = 4


def boundary_pixels(mask):
    """Mask pixels with a 4-neighbour outside the mask.

    The image frame only counts when the mask has no other boundary (a mask
    that fills the frame).
    """
    mask = np.asarray(mask, dtype=bool)
    inner = ndimage.binary_erosion(mask, structure=FOUR_CONNECTED, border_value=1)
    boundary = mask & ~inner
    if not boundary.any():
        inner = ndimage.binary_erosion(mask, structure=FOUR_CONNECTED, border_value=0)
        boundary = mask & ~inner
    return boundary


def implicit_azimuth_from_mask(mask, sigma=2.0, smoothing=2.0):
    """Outward azimuth of the nearest silhouette pixel, for every mask pixel.

    Boundary orientation is the negated gradient of the Gaussian-smoothed mask
    indicator. ``smoothing`` averages the assigned unit vectors inside the mask
    to suppress the staircase of the pixel boundary; 0 disables it.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise InvalidInputError("implicit azimuth needs a non-empty mask")
    boundary = boundary_pixels(mask)
    if not boundary.any():
        raise InvalidInputError("mask has no boundary pixels")

    indicator = ndimage.gaussian_filter(mask.astype(float), sigma, mode="nearest")
    gy, gx = np.gradient(indicator)
    _, (near_r, near_c) = ndimage.distance_transform_edt(~boundary, return_indices=True)
    ux = -gx[near_r, near_c]
    uy = -gy[near_r, near_c]

    if smoothing > 0:
        weight = mask.astype(float)
        norm = np.hypot(ux, uy)
        norm[norm == 0] = 1.0
        ux = ndimage.gaussian_filter(ux / norm * weight, smoothing, mode="constant")
        uy = ndimage.gaussian_filter(uy / norm * weight, smoothing, mode="constant")

    phi = wrap_full_period(np.arctan2(uy, ux))
    return ImplicitAzimuthMap(phi_im=np.where(mask, phi, 0.0), valid=mask)


@dataclass(frozen=True)
class Block:
    rows: slice
    cols: slice
    mask: np.ndarray
    pass_through: bool


def block_decompose(raster, block, mask):
    """Tile into ``block`` x ``block`` views; edge tiles are truncated."""
    raster = np.asarray(raster)
    mask = np.asarray(mask, dtype=bool)
    if raster.shape != mask.shape:
        raise InvalidInputError("raster and mask dimensions differ")
    height, width = mask.shape
    if block < 1 or block > min(height, width):
        raise InvalidInputError(f"block size {block} does not fit a {height}x{width} raster")
    blocks = []
    for top in range(0, height, block):
        for left in range(0, width, block):
            rows, cols = slice(top, top + block), slice(left, left + block)
            tile_mask = mask[rows, cols]
            blocks.append(
                Block(rows, cols, tile_mask, int(tile_mask.sum()) < MIN_BLOCK_PIXELS)
            )
    return blocks


def _circular_mean(angles, period):
    scale = 2 * math.pi / period
    return math.atan2(np.mean(np.sin(scale * angles)), np.mean(np.cos(scale * angles))) / scale


def gamma_range_map(azimuth_block, implicit_block, gamma, mask=None):
    """Map AOP texture of one block onto the range of its implicit azimuths.

    Both blocks are centred on their circular means first (AOP on the
    pi-circle, implicit azimuths on the 2 pi-circle) so the linear
    normalization never straddles a wrap.
    """
    azimuth = np.asarray(azimuth_block, dtype=float)
    implicit = np.asarray(implicit_block, dtype=float)
    mask = np.ones(azimuth.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    out = implicit.copy()
    if not mask.any():
        return out

    a = azimuth[mask]
    a_dev = wrap_half_period(a - _circular_mean(a, math.pi))
    im = implicit[mask]
    im_centre = _circular_mean(im, 2 * math.pi)
    im_dev = wrap_full_period(im - im_centre)
    low, high = float(im_dev.min()), float(im_dev.max())

    span = float(a_dev.max() - a_dev.min())
    if span <= 1e-12:
        mapped = np.full(a.shape, 0.5 * (low + high))
    else:
        t = (a_dev - a_dev.min()) / span
        mapped = low + (high - low) * t**gamma
    out[mask] = wrap_full_period(im_centre + mapped)
    return out


def block_range_map(azimuth, implicit, block, gamma, mask):
    """Apply ``gamma_range_map`` tile by tile and reassemble one raster."""
    out = np.array(implicit, dtype=float)
    for tile in block_decompose(azimuth, block, mask):
        if tile.pass_through:
            continue
        out[tile.rows, tile.cols] = gamma_range_map(
            azimuth[tile.rows, tile.cols], implicit[tile.rows, tile.cols], gamma, tile.mask
        )
    return np.where(mask, out, 0.0)


def block_variance(angles, block, mask, period=math.pi):
    """Spread of block-mean orientations, on the unit-circle embedding."""
    scale = 2 * math.pi / period
    c = np.cos(scale * angles)
    s = np.sin(scale * angles)
    means, counts = [], []
    for tile in block_decompose(angles, block, mask):
        n = int(tile.mask.sum())
        if n == 0:
            continue
        means.append((c[tile.rows, tile.cols][tile.mask].mean(), s[tile.rows, tile.cols][tile.mask].mean()))
        counts.append(n)
    if not means:
        return 0.0
    means = np.asarray(means)
    counts = np.asarray(counts, dtype=float)
    centre = (means * counts[:, None]).sum(axis=0) / counts.sum()
    return float((counts * ((means - centre) ** 2).sum(axis=1)).sum() / counts.sum())


def scale_weights(angles, scales, mask, period=math.pi):
    """Variance weights per scale; uniform when every scale is flat."""
    variances = np.array([block_variance(angles, b, mask, period) for b in scales.block_sizes])
    total = variances.sum()
    if total <= 0:
        return np.full(len(variances), 1.0 / len(variances))
    return variances / total


def fuse_scales(mapped_per_scale, azimuth, scales, mask, weights=None):
    """Weighted circular blend of the per-scale azimuth rasters.

    Each raster is unwrapped against the first before averaging so the blend
    never crosses the +-pi seam.
    """
    rasters = [np.asarray(r, dtype=float) for r in mapped_per_scale]
    mask = np.asarray(mask, dtype=bool)
    if len(rasters) != len(scales.block_sizes):
        raise InvalidInputError("need one mapped raster per scale")
    if any(r.shape != mask.shape for r in rasters) or np.shape(azimuth) != mask.shape:
        raise InvalidInputError("mismatched raster dimensions in scale fusion")
    if weights is None:
        weights = scale_weights(np.asarray(azimuth, dtype=float), scales, mask)

    reference = rasters[0]
    fused = np.zeros(mask.shape)
    for weight, raster in zip(weights, rasters):
        fused += weight * (reference + wrap_full_period(raster - reference))
    return np.where(mask, wrap_full_period(fused), 0.0)


def implicit_normals(phi_im_out, zenith, mask):
    phi = np.asarray(phi_im_out, dtype=float)
    theta = np.asarray(zenith, dtype=float)
    sin_t = np.sin(theta)
    normals = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)], axis=-1)
    normals[~np.asarray(mask, dtype=bool)] = 0.0
    return normals


def convexity_weights(mask, decay_rate=0.15):
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise InvalidInputError("convexity weights need a non-empty mask")
    distance = ndimage.distance_transform_edt(~boundary_pixels(mask))
    w_con = np.where(mask, np.exp(-decay_rate * distance), 0.0)
    return ConvexityWeights(w_con=w_con, decay_rate=decay_rate)


def build_prior(aop, mask, scales=None, decay_rate=0.15, mask_sigma=2.0, prior_mask=None):
    """Fused prior azimuth and convexity weights for one region.

    ``prior_mask`` is the silhouette the implicit azimuths come from; it
    defaults to the region mask itself.
    """
    scales = scales or ScaleSet()
    mask = np.asarray(mask, dtype=bool)
    source = mask if prior_mask is None else np.asarray(prior_mask, dtype=bool)
    implicit = implicit_azimuth_from_mask(source, sigma=mask_sigma).phi_im
    implicit = np.where(mask, implicit, 0.0)
    aop = np.where(mask, aop, 0.0)

    usable = tuple(b for b in scales.block_sizes if b <= min(mask.shape)) or (min(mask.shape),)
    if usable != scales.block_sizes:
        scales = dataclasses.replace(scales, block_sizes=usable)

    if scales.variance_source == "implicit":
        weights = scale_weights(implicit, scales, mask, period=2 * math.pi)
    else:
        weights = scale_weights(aop, scales, mask)

    if scales.fuse == "implicit":
        phi = implicit
    else:
        mapped = [block_range_map(aop, implicit, b, scales.gamma, mask) for b in scales.block_sizes]
        phi = fuse_scales(mapped, aop, scales, mask, weights=weights)

    source_weights = convexity_weights(source, decay_rate)
    w_con = ConvexityWeights(w_con=np.where(mask, source_weights.w_con, 0.0), decay_rate=decay_rate)
    logger.debug(
        "Scale weights %s for a %d-pixel region",
        dict(zip(scales.block_sizes, np.round(weights, 4).tolist())),
        int(mask.sum()),
    )
    return RegionPrior(
        phi=phi,
        weights=w_con,
        scale_weights=tuple(zip(scales.block_sizes, (float(w) for w in weights))),
    )
